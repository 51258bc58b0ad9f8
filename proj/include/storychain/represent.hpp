#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "storychain/corpus.hpp"

namespace storychain {

// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class VectorKind { tfidf, word_avg, doc_embedding };

std::string_view to_string(VectorKind kind);
VectorKind parse_vector_kind(std::string_view name);

// Document-by-dimension matrix. Rows align with doc_ids; entries are finite.
struct VectorSpace {
    std::vector<std::string> doc_ids;
    DenseMatrix matrix;
    VectorKind kind = VectorKind::doc_embedding;
    // Column names (the sorted vocabulary) for tfidf; empty otherwise.
    std::vector<std::string> columns;

    std::size_t size() const noexcept { return doc_ids.size(); }
    std::size_t dim() const noexcept { return matrix.cols(); }
};

// Raw term counts times smoothed idf ln((1+N)/(1+df)) + 1, optionally L2-normalized.
struct TfidfConfig {
    bool normalize = true;
};

VectorSpace tfidf_vectorize(const Corpus& corpus, const TokenizerConfig& tokenizer, const TfidfConfig& config = {});

class WordVectorTable {
public:
    WordVectorTable() = default;
    explicit WordVectorTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return vectors_.size(); }
    bool empty() const noexcept { return vectors_.empty(); }

    // Throws ParameterError when the vector's size differs from dim().
    void insert(std::string word, std::vector<double> vector);
    const std::vector<double>* find(std::string_view word) const;

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Text format, one "word v1 ... vD" per line. A leading "count dim" header
// line (word2vec text format) is skipped.
WordVectorTable load_word_vectors(const std::filesystem::path& path);
WordVectorTable read_word_vectors(std::istream& in, std::string_view source_name = "<stream>");

struct CoverageReport {
    std::vector<std::size_t> tokens;            // per document
    std::vector<std::size_t> in_vocabulary;     // per document
    std::vector<std::string> zero_rows;         // documents with no in-vocabulary token
};

struct AveragedEmbeddings {
    VectorSpace space;
    CoverageReport coverage;
};

// Mean of the word vectors of each document's in-vocabulary tokens.
AveragedEmbeddings embed_average(const Corpus& corpus, const TokenizerConfig& tokenizer, const WordVectorTable& table);

// JSON-lines {"id": string, "vector": [floats]}. Rows come back in corpus order;
// records for ids outside the corpus are ignored.
VectorSpace load_doc_embeddings(const std::filesystem::path& path, const Corpus& corpus);
VectorSpace read_doc_embeddings(std::istream& in, const Corpus& corpus, std::string_view source_name = "<stream>");
void save_doc_embeddings(const VectorSpace& space, const std::filesystem::path& path);
void write_doc_embeddings(const VectorSpace& space, std::ostream& out);

enum class PairMetric { cosine_similarity, euclidean_distance };

std::string_view to_string(PairMetric metric);

// Symmetric n x n matrix of pairwise similarities or distances.
struct PairwiseMatrix {
    std::vector<std::string> doc_ids;
    PairMetric metric = PairMetric::euclidean_distance;
    std::vector<double> values;

    std::size_t size() const noexcept { return doc_ids.size(); }
    double operator()(std::size_t i, std::size_t j) const { return values[i * doc_ids.size() + j]; }
};

// Cosine with a zero vector is 0. Rows may be computed on several threads;
// the result does not depend on the thread count.
PairwiseMatrix pairwise_matrix(const VectorSpace& space, PairMetric metric, unsigned threads = 1);

double euclidean_distance(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace storychain
