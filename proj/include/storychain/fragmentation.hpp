#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "storychain/cluster.hpp"
#include "storychain/corpus.hpp"
#include "storychain/recommendation.hpp"

namespace storychain {

struct RboParams {
    double p = 0.9;  // persistence, 0 < p < 1

    void validate() const;
};

// Extrapolated rank-biased overlap (Webber, Moffat & Zobel 2010) of
// two duplicate-free lists. Lists may differ in length; the shorter one's
// overlap is extrapolated at constant agreement. Two empty lists score 1,
// one empty list scores 0. Throws ValidationError on a repeated element.
double rbo_extrapolated(std::span<const int> a, std::span<const int> b, const RboParams& params);

// Same series with repeated elements allowed: the overlap at depth d is the
// multiset intersection size of the two prefixes. Equals rbo_extrapolated on
// duplicate-free input.
double rbo_extrapolated_multiset(std::span<const int> a, std::span<const int> b, const RboParams& params);

// How DBSCAN noise documents are labeled for Fragmentation.
enum class NoiseLabeling {
    unique,  // each noise document is its own story
    shared,  // all noise documents share one label
};

// doc id -> interned story label.
class LabelMapping {
public:
    LabelMapping() = default;

    static LabelMapping from_pairs(const std::vector<std::pair<std::string, std::string>>& doc_labels);
    // Labeled documents only.
    static LabelMapping from_gold(const Corpus& corpus);
    static LabelMapping from_assignment(const ClusterAssignment& assignment,
                                        NoiseLabeling noise = NoiseLabeling::unique);

    // Throws ValidationError naming the id when it is unmapped.
    int label_of(std::string_view doc_id) const;
    bool contains(std::string_view doc_id) const;
    std::size_t label_count() const noexcept { return names_.size(); }
    const std::string& label_name(int label) const { return names_.at(static_cast<std::size_t>(label)); }

private:
    int intern(const std::string& name);

    std::unordered_map<std::string, int> by_doc_;
    std::unordered_map<std::string, int> by_name_;
    std::vector<std::string> names_;
};

enum class LabelListMode {
    keep_repeats,  // one entry per recommended article, multiset overlap
    dedupe,        // first occurrence of each label only
};

std::string_view to_string(LabelListMode mode);
LabelListMode parse_label_list_mode(std::string_view name);

struct FragmentationParams {
    RboParams rbo;
    LabelListMode mode = LabelListMode::keep_repeats;

    void validate() const { rbo.validate(); }
};

// Maps recommended doc ids to story labels in rank order, deduplicating
// (first occurrence wins) in dedupe mode.
std::vector<int> label_list(std::span<const std::string> recs, const LabelMapping& mapping, LabelListMode mode);

// 1 - RBO of the two users' label lists: 0 for identical lists, 1 for
// disjoint ones.
double fragmentation_pair(std::span<const std::string> recs_a, std::span<const std::string> recs_b,
                          const LabelMapping& mapping, const FragmentationParams& params = {});

struct FragmentationReport {
    double aggregate = 0.0;
    std::size_t n_users = 0;
    std::size_t n_pairs = 0;
    FragmentationParams params;
    // Filled when requested: scores of pairs (i, j), i < j, in row-major order.
    std::vector<double> pair_scores;
    std::vector<std::string> user_ids;
};

// Exact mean over all unordered user pairs. The pair scores are reduced by
// pairwise summation in pair order, so the thread count does not change the
// result.
FragmentationReport fragmentation_aggregate(const RecommendationSet& recset, const LabelMapping& mapping,
                                            const FragmentationParams& params = {}, bool keep_pairs = false,
                                            unsigned threads = 1);

nlohmann::ordered_json report_json(const FragmentationReport& report);
void write_pair_scores_csv(const FragmentationReport& report, std::ostream& out);

}  // namespace storychain
