#include "storychain/represent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "storychain/errors.hpp"
#include "storychain/parallel.hpp"

namespace storychain {

std::string_view to_string(VectorKind kind) {
    switch (kind) {
        case VectorKind::tfidf: return "tfidf";
        case VectorKind::word_avg: return "word-avg";
        case VectorKind::doc_embedding: return "doc-embedding";
    }
    return "unknown";
}

VectorKind parse_vector_kind(std::string_view name) {
    if (name == "tfidf") return VectorKind::tfidf;
    if (name == "word-avg") return VectorKind::word_avg;
    if (name == "doc-embedding") return VectorKind::doc_embedding;
    throw ParameterError(fmt::format("unknown representation \"{}\" (expected tfidf, word-avg or doc-embedding)", name));
}

std::string_view to_string(PairMetric metric) {
    return metric == PairMetric::cosine_similarity ? "cosine-similarity" : "euclidean-distance";
}

VectorSpace tfidf_vectorize(const Corpus& corpus, const TokenizerConfig& tokenizer, const TfidfConfig& config) {
    if (corpus.empty()) {
        throw DegenerateCorpusError("cannot vectorize an empty corpus");
    }
    std::vector<std::vector<std::string>> docs;
    docs.reserve(corpus.size());
    std::map<std::string, std::size_t> df;
    for (const Document& d : corpus.documents()) {
        docs.push_back(tokenize(d.text, tokenizer));
        std::vector<std::string> uniq = docs.back();
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (auto& t : uniq) ++df[t];
    }
    if (df.empty()) {
        throw DegenerateCorpusError("every document tokenizes to nothing");
    }

    VectorSpace space;
    space.kind = VectorKind::tfidf;
    space.doc_ids = corpus.ids();
    std::unordered_map<std::string, std::size_t> column;
    std::vector<double> idf;
    const double n = static_cast<double>(corpus.size());
    for (const auto& [term, count] : df) {
        column.emplace(term, space.columns.size());
        space.columns.push_back(term);
        idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }

    space.matrix = DenseMatrix(corpus.size(), space.columns.size());
    for (std::size_t r = 0; r < docs.size(); ++r) {
        auto row = space.matrix.row(r);
        for (const auto& t : docs[r]) row[column.at(t)] += 1.0;
        double norm2 = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] *= idf[c];
            norm2 += row[c] * row[c];
        }
        if (config.normalize && norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& v : row) v *= inv;
        }
    }
    return space;
}

void WordVectorTable::insert(std::string word, std::vector<double> vector) {
    if (dim_ == 0 && vectors_.empty()) {
        dim_ = vector.size();
    }
    if (vector.size() != dim_) {
        throw ParameterError(fmt::format("word vector for \"{}\" has dimension {}, expected {}", word, vector.size(), dim_));
    }
    vectors_.insert_or_assign(std::move(word), std::move(vector));
}

const std::vector<double>* WordVectorTable::find(std::string_view word) const {
    auto it = vectors_.find(std::string(word));
    return it == vectors_.end() ? nullptr : &it->second;
}

WordVectorTable read_word_vectors(std::istream& in, std::string_view source_name) {
    const std::string source(source_name);
    WordVectorTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream fields(line);
        std::string word;
        if (!(fields >> word)) continue;
        std::vector<double> values;
        std::string tok;
        while (fields >> tok) {
            try {
                std::size_t used = 0;
                double v = std::stod(tok, &used);
                if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
                values.push_back(v);
            } catch (const std::exception&) {
                throw ParseError(source, lineno, fmt::format("bad number \"{}\"", tok));
            }
        }
        if (lineno == 1 && values.size() == 1 && word.find_first_not_of("0123456789") == std::string::npos) {
            continue;  // "count dim" header
        }
        if (values.empty()) {
            throw ParseError(source, lineno, fmt::format("word \"{}\" has no vector", word));
        }
        if (!table.empty() && values.size() != table.dim()) {
            throw ParseError(source, lineno, fmt::format("dimension {} differs from {}", values.size(), table.dim()));
        }
        table.insert(std::move(word), std::move(values));
    }
    return table;
}

WordVectorTable load_word_vectors(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open word-vector file " + path.string());
    return read_word_vectors(in, path.string());
}

AveragedEmbeddings embed_average(const Corpus& corpus, const TokenizerConfig& tokenizer, const WordVectorTable& table) {
    if (table.empty()) {
        throw ParameterError("word-vector table is empty");
    }
    AveragedEmbeddings out;
    out.space.kind = VectorKind::word_avg;
    out.space.doc_ids = corpus.ids();
    out.space.matrix = DenseMatrix(corpus.size(), table.dim());
    for (std::size_t r = 0; r < corpus.size(); ++r) {
        const auto tokens = tokenize(corpus[r].text, tokenizer);
        auto row = out.space.matrix.row(r);
        std::size_t hits = 0;
        for (const auto& t : tokens) {
            if (const auto* v = table.find(t)) {
                for (std::size_t c = 0; c < row.size(); ++c) row[c] += (*v)[c];
                ++hits;
            }
        }
        if (hits > 0) {
            for (double& x : row) x /= static_cast<double>(hits);
        } else {
            out.coverage.zero_rows.push_back(corpus[r].id);
        }
        out.coverage.tokens.push_back(tokens.size());
        out.coverage.in_vocabulary.push_back(hits);
    }
    return out;
}

VectorSpace read_doc_embeddings(std::istream& in, const Corpus& corpus, std::string_view source_name) {
    const std::string source(source_name);
    std::vector<std::vector<double>> rows(corpus.size());
    std::vector<bool> seen(corpus.size(), false);
    std::optional<std::size_t> dim;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(source, lineno, e.what());
        }
        if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() || !obj.contains("vector") ||
            !obj["vector"].is_array()) {
            throw ParseError(source, lineno, "expected {\"id\": string, \"vector\": [numbers]}");
        }
        const auto id = obj["id"].get<std::string>();
        std::vector<double> vec;
        vec.reserve(obj["vector"].size());
        for (const auto& v : obj["vector"]) {
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
                throw ParseError(source, lineno, fmt::format("record \"{}\" has a non-finite or non-numeric entry", id));
            }
            vec.push_back(v.get<double>());
        }
        if (!dim) dim = vec.size();
        if (vec.size() != *dim) {
            throw ParseError(source, lineno,
                             fmt::format("record \"{}\" has dimension {}, expected {}", id, vec.size(), *dim));
        }
        auto idx = corpus.index_of(id);
        if (!idx) continue;
        if (seen[*idx]) {
            throw ParseError(source, lineno, fmt::format("duplicate embedding for \"{}\"", id));
        }
        seen[*idx] = true;
        rows[*idx] = std::move(vec);
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!seen[i]) throw MissingEmbeddingError(corpus[i].id);
    }

    VectorSpace space;
    space.kind = VectorKind::doc_embedding;
    space.doc_ids = corpus.ids();
    space.matrix = DenseMatrix(corpus.size(), dim.value_or(0));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), space.matrix.row(i).begin());
    }
    return space;
}

VectorSpace load_doc_embeddings(const std::filesystem::path& path, const Corpus& corpus) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open embedding file " + path.string());
    return read_doc_embeddings(in, corpus, path.string());
}

void write_doc_embeddings(const VectorSpace& space, std::ostream& out) {
    for (std::size_t i = 0; i < space.size(); ++i) {
        nlohmann::ordered_json obj;
        obj["id"] = space.doc_ids[i];
        auto row = space.matrix.row(i);
        obj["vector"] = std::vector<double>(row.begin(), row.end());
        out << obj.dump() << '\n';
    }
}

void save_doc_embeddings(const VectorSpace& space, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write embedding file " + path.string());
    write_doc_embeddings(space, out);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

PairwiseMatrix pairwise_matrix(const VectorSpace& space, PairMetric metric, unsigned threads) {
    const std::size_t n = space.size();
    PairwiseMatrix out;
    out.doc_ids = space.doc_ids;
    out.metric = metric;
    out.values.assign(n * n, 0.0);

    std::vector<double> norms(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : space.matrix.row(i)) s += v * v;
        norms[i] = std::sqrt(s);
    }

    // Row i fills the upper triangle (i, j>i); the mirror is written afterwards.
    parallel_for(n, threads, [&](std::size_t i) {
        const auto a = space.matrix.row(i);
        double* dst = out.values.data() + i * n;
        if (metric == PairMetric::euclidean_distance) {
            dst[i] = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) dst[j] = euclidean_distance(a, space.matrix.row(j));
        } else {
            dst[i] = norms[i] > 0.0 ? 1.0 : 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (norms[i] == 0.0 || norms[j] == 0.0) {
                    dst[j] = 0.0;
                    continue;
                }
                const auto b = space.matrix.row(j);
                double dot = 0.0;
                for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
                dst[j] = std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
            }
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) out.values[j * n + i] = out.values[i * n + j];
    }
    return out;
}

}  // namespace storychain
