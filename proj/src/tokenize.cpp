#include <fstream>
#include <sstream>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "storychain/corpus.hpp"
#include "storychain/errors.hpp"

namespace storychain {

// Contents of data/stopwords_en.txt, embedded at build time.
extern const char* const kEnglishStopwordAsset;

namespace {

void append_utf8(std::string& out, UChar32 c) {
    char buf[U8_MAX_LENGTH];
    int32_t len = 0;
    U8_APPEND_UNSAFE(buf, len, c);
    out.append(buf, static_cast<std::size_t>(len));
}

std::string lowercase_utf8(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    const auto length = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(bytes, i, length, c);
        if (c >= 0) {
            append_utf8(out, u_tolower(c));
        }
    }
    return out;
}

}  // namespace

StopwordSet parse_stopwords(std::string_view text) {
    StopwordSet out;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) {
            continue;
        }
        out.insert(lowercase_utf8(line.substr(start)));
    }
    return out;
}

const StopwordSet& english_stopwords() {
    static const StopwordSet words = parse_stopwords(kEnglishStopwordAsset);
    return words;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open stopword file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_stopwords(buf.str());
}

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            if (config.stopwords.count(current) == 0) {
                tokens.push_back(std::move(current));
            }
            current.clear();
        }
    };

    const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 c;
        U8_NEXT(bytes, i, length, c);
        if (c < 0) {
            continue;  // ill-formed byte sequence
        }
        if (u_isUWhiteSpace(c)) {
            flush();
            continue;
        }
        if (config.strip_punctuation && u_ispunct(c)) {
            continue;
        }
        if (config.lowercase) {
            c = u_tolower(c);
        }
        append_utf8(current, c);
    }
    flush();
    return tokens;
}

}  // namespace storychain
