#include "storychain/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "storychain/errors.hpp"
#include "storychain/parallel.hpp"
#include "storychain/rng.hpp"

namespace storychain {

std::string_view to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::low: return "low";
        case Scenario::high: return "high";
        case Scenario::balanced: return "balanced";
    }
    return "unknown";
}

Scenario parse_scenario(std::string_view name) {
    for (Scenario s : kAllScenarios) {
        if (to_string(s) == name) return s;
    }
    throw ParameterError(fmt::format("unknown scenario \"{}\" (expected low, high or balanced)", name));
}

void ScenarioConfig::validate() const {
    if (n_users < 1) throw ParameterError("scenario needs at least one user");
    if (recs_per_user < 1) throw ParameterError("recs_per_user must be >= 1");
    if (scenario == Scenario::balanced) {
        if (recs_per_user < 3) throw ParameterError("the balanced scenario needs recs_per_user >= 3");
        double total = 0.0;
        for (double f : profile_mix) {
            if (f < 0.0) throw ParameterError("profile fractions must be non-negative");
            total += f;
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw ParameterError(fmt::format("profile fractions must sum to 1, got {}", total));
        }
    }
}

nlohmann::ordered_json config_json(const ScenarioConfig& config) {
    nlohmann::ordered_json j;
    j["scenario"] = std::string(to_string(config.scenario));
    j["n_users"] = config.n_users;
    j["recs_per_user"] = config.recs_per_user;
    j["seed"] = config.seed;
    if (config.scenario == Scenario::balanced) j["profile_mix"] = config.profile_mix;
    return j;
}

namespace {

struct ChainIndex {
    std::vector<std::string> names;               // sorted
    std::vector<std::vector<std::size_t>> docs;   // corpus indices per chain
};

ChainIndex index_chains(const Corpus& corpus) {
    ChainIndex index;
    index.names = corpus.label_set();
    index.docs.resize(index.names.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& label = corpus[i].gold_label;
        if (!label) continue;
        auto it = std::lower_bound(index.names.begin(), index.names.end(), *label);
        index.docs[static_cast<std::size_t>(it - index.names.begin())].push_back(i);
    }
    return index;
}

void require_chains(const ChainIndex& chains, std::size_t needed, Scenario scenario) {
    if (chains.names.size() < needed) {
        throw InfeasibleScenarioError(fmt::format("scenario {} needs at least {} gold chains, corpus has {}",
                                                  to_string(scenario), needed, chains.names.size()));
    }
}

void require_articles(const ChainIndex& chains, std::size_t first_n, std::size_t needed, Scenario scenario) {
    for (std::size_t c = 0; c < first_n; ++c) {
        if (chains.docs[c].size() < needed) {
            throw InfeasibleScenarioError(fmt::format("scenario {} needs {} articles per chain; chain \"{}\" has {}",
                                                      to_string(scenario), needed, chains.names[c],
                                                      chains.docs[c].size()));
        }
    }
}

// Profile sizes by rounding, the last profile taking the remainder.
std::array<std::size_t, 3> profile_sizes(std::size_t n, const std::array<double, 3>& mix) {
    const double nd = static_cast<double>(n);
    std::size_t first = std::min(n, static_cast<std::size_t>(std::llround(mix[0] * nd)));
    std::size_t second = std::min(n - first, static_cast<std::size_t>(std::llround(mix[1] * nd)));
    return {first, second, n - first - second};
}

class UserBuilder {
public:
    UserBuilder(const Corpus& corpus, const ChainIndex& chains, std::uint64_t seed)
        : corpus_(corpus), chains_(chains), rng_(seed) {}

    // k distinct articles of chain c, in sampling order.
    void draw(std::size_t c, std::size_t k) {
        const auto& pool = chains_.docs[c];
        for (std::size_t pick : rng_.sample_without_replacement(pool.size(), k)) {
            recs_.push_back(corpus_[pool[pick]].id);
        }
    }

    void low_recipe(std::size_t recs) {
        for (std::size_t c = 0; c < recs; ++c) draw(c, 1);
    }

    void broad_profile(std::size_t recs) {
        const std::size_t spread = recs - 2;
        const auto picked = rng_.sample_without_replacement(chains_.names.size(), spread);
        const auto extra = rng_.sample_without_replacement(spread, 2);
        for (std::size_t k = 0; k < spread; ++k) {
            const bool doubled = std::find(extra.begin(), extra.end(), k) != extra.end();
            draw(picked[k], doubled ? 2 : 1);
        }
        rng_.shuffle(recs_);
    }

    void two_chain_profile(std::size_t recs) {
        const auto picked = rng_.sample_without_replacement(chains_.names.size(), 2);
        draw(picked[0], (recs + 1) / 2);
        draw(picked[1], recs / 2);
        rng_.shuffle(recs_);
    }

    std::vector<std::string> take() { return std::move(recs_); }

private:
    const Corpus& corpus_;
    const ChainIndex& chains_;
    Rng rng_;
    std::vector<std::string> recs_;
};

}  // namespace

RecommendationSet simulate(const Corpus& corpus, const ScenarioConfig& config, unsigned threads) {
    config.validate();
    const ChainIndex chains = index_chains(corpus);
    const std::size_t recs = config.recs_per_user;
    const std::size_t n = config.n_users;
    const auto profiles = profile_sizes(n, config.profile_mix);

    switch (config.scenario) {
        case Scenario::low:
            require_chains(chains, recs, config.scenario);
            break;
        case Scenario::high:
            require_chains(chains, 2, config.scenario);
            require_articles(chains, chains.names.size(), recs, config.scenario);
            break;
        case Scenario::balanced: {
            require_chains(chains, profiles[2] > 0 ? recs : recs - 2, config.scenario);
            std::size_t per_chain = profiles[0] > 0 ? 2 : 1;
            if (profiles[1] > 0) per_chain = std::max(per_chain, (recs + 1) / 2);
            require_articles(chains, chains.names.size(), per_chain, config.scenario);
            break;
        }
    }

    const std::size_t groups = chains.names.size();
    const std::size_t base = n / groups;
    const std::size_t extra = n % groups;
    auto high_group = [&](std::size_t u) {
        // The first `extra` groups hold base + 1 users.
        const std::size_t big = extra * (base + 1);
        return u < big ? u / (base + 1) : extra + (u - big) / base;
    };

    RecommendationSet out;
    out.users.resize(n);
    out.provenance = config_json(config);
    const int width = static_cast<int>(std::to_string(n - 1).size());
    const std::string stream = fmt::format("scenario-{}", to_string(config.scenario));
    parallel_for(n, threads, [&](std::size_t u) {
        UserBuilder user(corpus, chains, derive_seed(config.seed, stream, u));
        switch (config.scenario) {
            case Scenario::low:
                user.low_recipe(recs);
                break;
            case Scenario::high:
                user.draw(high_group(u), recs);
                break;
            case Scenario::balanced:
                if (u < profiles[0]) {
                    user.broad_profile(recs);
                } else if (u < profiles[0] + profiles[1]) {
                    user.two_chain_profile(recs);
                } else {
                    user.low_recipe(recs);
                }
                break;
        }
        out.users[u].user_id = fmt::format("user_{:0{}}", u, width);
        out.users[u].recs = user.take();
    });
    return out;
}

ExtrinsicTable extrinsic_table(const std::vector<ScenarioRecommendations>& recsets, const NamedLabeling& gold,
                               const std::vector<NamedLabeling>& labelings, const FragmentationParams& params,
                               unsigned threads) {
    if (recsets.empty()) throw ParameterError("extrinsic table needs at least one scenario");
    ExtrinsicTable table;
    for (const auto& r : recsets) table.scenarios.push_back(r.scenario);

    auto score_row = [&](const NamedLabeling& labeling) {
        ExtrinsicRow row;
        row.name = labeling.name;
        std::optional<double> low, high;
        for (const auto& r : recsets) {
            double score;
            try {
                score = fragmentation_aggregate(r.recommendations, labeling.mapping, params, false, threads).aggregate;
            } catch (const ValidationError& e) {
                throw ValidationError(fmt::format("row \"{}\", scenario {}: {}", labeling.name, to_string(r.scenario),
                                                  e.what()));
            }
            row.scores.push_back(score);
            if (r.scenario == Scenario::low) low = score;
            if (r.scenario == Scenario::high) high = score;
        }
        if (low && high) row.diff_low_high = std::abs(*low - *high);
        return row;
    };

    table.rows.push_back(score_row(gold));
    for (const auto& l : labelings) table.rows.push_back(score_row(l));
    return table;
}

void write_extrinsic_csv(const ExtrinsicTable& table, std::ostream& out) {
    out << "labeling";
    for (Scenario s : table.scenarios) out << ',' << to_string(s);
    out << ",diff_low_high\n";
    for (const auto& row : table.rows) {
        out << row.name;
        for (double v : row.scores) out << fmt::format(",{:.6f}", v);
        out << ',' << (row.diff_low_high ? fmt::format("{:.6f}", *row.diff_low_high) : std::string("NA")) << '\n';
    }
}

void write_extrinsic_text(const ExtrinsicTable& table, std::ostream& out) {
    std::size_t width = std::string_view("Representation*Clustering").size();
    for (const auto& row : table.rows) width = std::max(width, row.name.size());
    out << fmt::format("{:<{}}", "Representation*Clustering", width);
    for (Scenario s : table.scenarios) out << fmt::format("  {:>8}", to_string(s));
    out << fmt::format("  {:>8}\n", "Diff 1-2");
    for (const auto& row : table.rows) {
        out << fmt::format("{:<{}}", row.name, width);
        for (double v : row.scores) out << fmt::format("  {:>8.2f}", v);
        out << fmt::format("  {:>8}\n", row.diff_low_high ? fmt::format("{:.2f}", *row.diff_low_high) : "NA");
    }
}

}  // namespace storychain
