#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "storychain/corpus.hpp"
#include "storychain/fragmentation.hpp"
#include "storychain/recommendation.hpp"

namespace storychain {

enum class Scenario { low, high, balanced };

inline constexpr Scenario kAllScenarios[] = {Scenario::low, Scenario::high, Scenario::balanced};

std::string_view to_string(Scenario scenario);
Scenario parse_scenario(std::string_view name);

struct ScenarioConfig {
    Scenario scenario = Scenario::low;
    std::size_t n_users = 1000;
    std::size_t recs_per_user = 7;
    std::uint64_t seed = 0;
    // Balanced scenario only: shares of the broad, two-chain and low-recipe
    // profiles.
    std::array<double, 3> profile_mix{0.70, 0.15, 0.15};

    void validate() const;
};

nlohmann::ordered_json config_json(const ScenarioConfig& config);

// Simulated users over the corpus' gold chains:
//  low       every user gets one article from each of the first recs_per_user
//            chains, in sorted chain order, so all label lists coincide;
//  high      users split as evenly as possible over the chains (extras to the
//            lowest-indexed chains); each reads recs_per_user articles of one;
//  balanced  70% read recs-2 random chains plus 2 extra articles from 2 of
//            them, 15% read two random chains (4 + 3 at recs 7), 15% follow
//            the low recipe.
// Articles are drawn without replacement within a user. Each user has its own
// RNG stream derived from (seed, user index).
RecommendationSet simulate(const Corpus& corpus, const ScenarioConfig& config, unsigned threads = 1);

struct NamedLabeling {
    std::string name;
    LabelMapping mapping;
};

struct ScenarioRecommendations {
    Scenario scenario;
    RecommendationSet recommendations;
};

struct ExtrinsicRow {
    std::string name;
    std::vector<double> scores;            // aligned with ExtrinsicTable::scenarios
    std::optional<double> diff_low_high;   // |low - high| when both are present
};

struct ExtrinsicTable {
    std::vector<Scenario> scenarios;
    std::vector<ExtrinsicRow> rows;
};

// Scores each labeling on the same recommendation sets, gold first.
ExtrinsicTable extrinsic_table(const std::vector<ScenarioRecommendations>& recsets, const NamedLabeling& gold,
                               const std::vector<NamedLabeling>& labelings, const FragmentationParams& params = {},
                               unsigned threads = 1);

void write_extrinsic_csv(const ExtrinsicTable& table, std::ostream& out);
void write_extrinsic_text(const ExtrinsicTable& table, std::ostream& out);

}  // namespace storychain
