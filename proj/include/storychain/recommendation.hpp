#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace storychain {

struct UserRecommendations {
    std::string user_id;
    std::vector<std::string> recs;  // document ids in rank order

    bool operator==(const UserRecommendations&) const = default;
};

struct RecommendationSet {
    std::vector<UserRecommendations> users;
    // Generator settings when the set was simulated; null for logged sets.
    nlohmann::ordered_json provenance;

    std::size_t size() const noexcept { return users.size(); }
};

// JSON-lines {"user_id": string, "recs": [doc ids]}.
RecommendationSet read_recommendations(std::istream& in, std::string_view source_name = "<stream>");
RecommendationSet load_recommendations(const std::filesystem::path& path);
void write_recommendations(const RecommendationSet& set, std::ostream& out);
void save_recommendations(const RecommendationSet& set, const std::filesystem::path& path);

}  // namespace storychain
