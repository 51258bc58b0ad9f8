#include "storychain/recommendation.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "storychain/errors.hpp"

namespace storychain {

RecommendationSet read_recommendations(std::istream& in, std::string_view source_name) {
    const std::string source(source_name);
    RecommendationSet out;
    std::set<std::string> seen;
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
        if (!obj.is_object() || !obj.contains("user_id") || !obj["user_id"].is_string() || !obj.contains("recs") ||
            !obj["recs"].is_array()) {
            throw ParseError(source, lineno, "expected {\"user_id\": string, \"recs\": [doc ids]}");
        }
        UserRecommendations user;
        user.user_id = obj["user_id"].get<std::string>();
        for (const auto& r : obj["recs"]) {
            if (!r.is_string()) throw ParseError(source, lineno, "recommended doc ids must be strings");
            user.recs.push_back(r.get<std::string>());
        }
        if (!seen.insert(user.user_id).second) {
            throw ValidationError(fmt::format("{}:{}: duplicate user id \"{}\"", source, lineno, user.user_id));
        }
        out.users.push_back(std::move(user));
    }
    return out;
}

RecommendationSet load_recommendations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open recommendation file " + path.string());
    return read_recommendations(in, path.string());
}

void write_recommendations(const RecommendationSet& set, std::ostream& out) {
    for (const auto& u : set.users) {
        nlohmann::ordered_json obj;
        obj["user_id"] = u.user_id;
        obj["recs"] = u.recs;
        out << obj.dump() << '\n';
    }
}

void save_recommendations(const RecommendationSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write recommendation file " + path.string());
    write_recommendations(set, out);
}

}  // namespace storychain
