#include "storychain/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "storychain/errors.hpp"
#include "storychain/rng.hpp"

namespace storychain {

namespace {

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key,
                                           std::string_view source, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (it->is_string()) {
        return it->get<std::string>();
    }
    // Timeline ids are often stored as integers.
    if (it->is_number_integer()) {
        return std::to_string(it->get<long long>());
    }
    throw ParseError(std::string(source), line, fmt::format("field \"{}\" must be a string", key));
}

}  // namespace

Corpus::Corpus(std::vector<Document> documents, bool allow_empty) : documents_(std::move(documents)) {
    std::set<std::string> labels;
    index_.reserve(documents_.size());
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        const Document& doc = documents_[i];
        if (doc.id.empty()) {
            throw ValidationError(fmt::format("document {} has an empty id", i));
        }
        if (!allow_empty && is_blank(doc.text)) {
            throw ValidationError(fmt::format("document \"{}\" has empty text", doc.id));
        }
        if (!index_.emplace(doc.id, i).second) {
            throw ValidationError(fmt::format("duplicate document id \"{}\"", doc.id));
        }
        if (doc.gold_label) {
            labels.insert(*doc.gold_label);
        }
    }
    label_set_.assign(labels.begin(), labels.end());
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::string> Corpus::ids() const {
    std::vector<std::string> out;
    out.reserve(documents_.size());
    for (const auto& d : documents_) {
        out.push_back(d.id);
    }
    return out;
}

bool Corpus::fully_labeled() const {
    return std::all_of(documents_.begin(), documents_.end(),
                       [](const Document& d) { return d.gold_label.has_value(); });
}

std::vector<std::string> Corpus::gold_labels() const {
    std::vector<std::string> out;
    out.reserve(documents_.size());
    for (const auto& d : documents_) {
        if (!d.gold_label) {
            throw ValidationError(fmt::format("document \"{}\" has no gold label", d.id));
        }
        out.push_back(*d.gold_label);
    }
    return out;
}

Corpus read_corpus(std::istream& in, bool allow_empty, std::string_view source_name) {
    static const std::regex iso_date(R"(^\d{4}-\d{2}-\d{2}([T ].*)?$)");
    const std::string source(source_name);
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> first_line;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(source, lineno, e.what());
        }
        if (!obj.is_object()) {
            throw ParseError(source, lineno, "expected a JSON object");
        }
        auto id = obj.find("id");
        auto text = obj.find("text");
        if (id == obj.end() || !(id->is_string() || id->is_number_integer())) {
            throw ParseError(source, lineno, "missing string field \"id\"");
        }
        if (text == obj.end() || !(text->is_string() || text->is_null())) {
            throw ParseError(source, lineno, "missing string field \"text\"");
        }
        Document doc;
        doc.id = id->is_string() ? id->get<std::string>() : std::to_string(id->get<long long>());
        doc.text = text->is_null() ? std::string() : text->get<std::string>();
        doc.gold_label = optional_string(obj, "gold_label", source, lineno);
        doc.source = optional_string(obj, "source", source, lineno);
        doc.date = optional_string(obj, "date", source, lineno);
        if (doc.date && !std::regex_match(*doc.date, iso_date)) {
            throw ParseError(source, lineno, fmt::format("date \"{}\" is not ISO-8601", *doc.date));
        }
        if (auto [it, inserted] = first_line.emplace(doc.id, lineno); !inserted) {
            throw ValidationError(fmt::format("{}:{}: duplicate document id \"{}\" (first seen on line {})",
                                              source, lineno, doc.id, it->second));
        }
        if (!allow_empty && is_blank(doc.text)) {
            throw ValidationError(fmt::format("{}:{}: document \"{}\" has empty text", source, lineno, doc.id));
        }
        docs.push_back(std::move(doc));
    }
    return Corpus(std::move(docs), allow_empty);
}

Corpus load_corpus(const std::filesystem::path& path, bool allow_empty) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError(fmt::format("cannot open corpus file {}", path.string()));
    }
    return read_corpus(in, allow_empty, path.string());
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
    for (const Document& d : corpus.documents()) {
        nlohmann::ordered_json obj;
        obj["id"] = d.id;
        obj["text"] = d.text;
        if (d.gold_label) obj["gold_label"] = *d.gold_label;
        if (d.source) obj["source"] = *d.source;
        if (d.date) obj["date"] = *d.date;
        out << obj.dump() << '\n';
    }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError(fmt::format("cannot write corpus file {}", path.string()));
    }
    write_corpus(corpus, out);
}

std::pair<Corpus, Corpus> split_dev_eval(const Corpus& corpus, const std::set<std::string>& dev_labels) {
    const auto& known = corpus.label_set();
    for (const auto& label : dev_labels) {
        if (!std::binary_search(known.begin(), known.end(), label)) {
            throw ValidationError(fmt::format("unknown dev label \"{}\"", label));
        }
    }
    std::vector<Document> dev;
    std::vector<Document> eval;
    for (const Document& d : corpus.documents()) {
        if (d.gold_label && dev_labels.count(*d.gold_label) != 0) {
            dev.push_back(d);
        } else {
            eval.push_back(d);
        }
    }
    // Inputs were already validated, empties included.
    return {Corpus(std::move(dev), true), Corpus(std::move(eval), true)};
}

Corpus generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
    if (spec.n_chains == 0 || spec.docs_per_chain == 0 || spec.vocab_per_chain == 0 || spec.words_per_doc == 0) {
        throw ParameterError("synthetic corpus counts must be >= 1");
    }
    if (spec.chain_word_rate < 0.0 || spec.chain_word_rate > 1.0) {
        throw ParameterError("chain_word_rate must lie in [0, 1]");
    }
    const int width = static_cast<int>(std::to_string(spec.n_chains - 1).size());
    const double keep_chain = spec.shared_vocab == 0 ? 1.0 : spec.chain_word_rate;
    std::vector<Document> docs;
    docs.reserve(spec.n_chains * spec.docs_per_chain);
    for (std::size_t c = 0; c < spec.n_chains; ++c) {
        for (std::size_t k = 0; k < spec.docs_per_chain; ++k) {
            Rng rng(derive_seed(spec.seed, "synthetic-doc", c * spec.docs_per_chain + k));
            std::string text;
            for (std::size_t w = 0; w < spec.words_per_doc; ++w) {
                if (w) text += ' ';
                // 53-bit uniform in [0, 1).
                const double u = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
                if (u < keep_chain) {
                    text += fmt::format("c{}w{}", c, rng.uniform_index(spec.vocab_per_chain));
                } else {
                    text += fmt::format("shared{}", rng.uniform_index(spec.shared_vocab));
                }
            }
            Document doc;
            doc.id = fmt::format("c{:0{}}_d{}", c, width, k);
            doc.text = std::move(text);
            doc.gold_label = fmt::format("chain_{:0{}}", c, width);
            docs.push_back(std::move(doc));
        }
    }
    return Corpus(std::move(docs));
}

}  // namespace storychain
