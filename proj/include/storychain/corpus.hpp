#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace storychain {

struct Document {
    std::string id;
    std::string text;
    std::optional<std::string> gold_label;  // story-chain / timeline id
    std::optional<std::string> source;
    std::optional<std::string> date;        // ISO-8601 date

    bool operator==(const Document&) const = default;
};

// Ordered, immutable document collection. Construction validates ids.
class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::vector<Document> documents, bool allow_empty = false);

    const std::vector<Document>& documents() const noexcept { return documents_; }
    const Document& operator[](std::size_t i) const { return documents_[i]; }
    std::size_t size() const noexcept { return documents_.size(); }
    bool empty() const noexcept { return documents_.empty(); }

    // Sorted distinct gold labels.
    const std::vector<std::string>& label_set() const noexcept { return label_set_; }

    std::optional<std::size_t> index_of(std::string_view id) const;
    std::vector<std::string> ids() const;

    bool fully_labeled() const;
    // Gold labels in document order; throws ValidationError naming the first
    // unlabeled document.
    std::vector<std::string> gold_labels() const;

private:
    std::vector<Document> documents_;
    std::vector<std::string> label_set_;
    std::unordered_map<std::string, std::size_t> index_;
};

// JSON-lines, one {"id", "text", "gold_label"?, "source"?, "date"?} object per line.
Corpus load_corpus(const std::filesystem::path& path, bool allow_empty = false);
Corpus read_corpus(std::istream& in, bool allow_empty = false, std::string_view source_name = "<stream>");
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, std::ostream& out);

using StopwordSet = std::unordered_set<std::string>;

// The English list shipped in data/stopwords_en.txt.
const StopwordSet& english_stopwords();
// Plain text, one token per line; entries are lowercased, blank lines ignored.
StopwordSet load_stopwords(const std::filesystem::path& path);
StopwordSet parse_stopwords(std::string_view text);

struct TokenizerConfig {
    bool lowercase = true;
    bool strip_punctuation = true;
    StopwordSet stopwords = english_stopwords();
};

// Lowercase, drop every Unicode punctuation code point, split on whitespace,
// drop stopwords. Digits are kept.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config);

// (documents whose gold label is in dev_labels, every other document).
std::pair<Corpus, Corpus> split_dev_eval(const Corpus& corpus, const std::set<std::string>& dev_labels);

struct SyntheticCorpusSpec {
    std::size_t n_chains = 7;
    std::size_t docs_per_chain = 20;
    std::size_t vocab_per_chain = 50;
    std::size_t shared_vocab = 20;
    std::uint64_t seed = 0;
    std::size_t words_per_doc = 40;
    // Probability a token comes from the chain vocabulary (when shared_vocab > 0).
    double chain_word_rate = 0.8;
};

// Deterministic stand-in for a labeled news corpus: each chain draws most of
// its tokens from its own vocabulary plus a shared one.
Corpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec);

}  // namespace storychain
