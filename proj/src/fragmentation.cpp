#include "storychain/fragmentation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>

#include "storychain/errors.hpp"
#include "storychain/parallel.hpp"

namespace storychain {

void RboParams::validate() const {
    if (!(p > 0.0 && p < 1.0)) {
        throw ParameterError(fmt::format("RBO persistence p must lie in (0, 1), got {}", p));
    }
}

namespace {

struct LabelCount {
    int label;
    std::size_t in_short;
    std::size_t in_long;
};

LabelCount& slot_for(std::vector<LabelCount>& counts, int label) {
    for (auto& c : counts) {
        if (c.label == label) return c;
    }
    counts.push_back({label, 0, 0});
    return counts.back();
}

// Overlap X_d is maintained incrementally as sum over labels of
// min(count in short prefix, count in long prefix).
double rbo_series(std::span<const int> a, std::span<const int> b, double p) {
    std::span<const int> shorter = a.size() <= b.size() ? a : b;
    std::span<const int> longer = a.size() <= b.size() ? b : a;
    const std::size_t s = shorter.size();
    const std::size_t l = longer.size();
    if (l == 0) return 1.0;
    if (s == 0) return 0.0;

    thread_local std::vector<LabelCount> counts;
    counts.clear();
    std::size_t overlap = 0;
    std::size_t overlap_at_s = 0;
    double weight = 1.0;  // p^d
    double series = 0.0;
    for (std::size_t d = 1; d <= l; ++d) {
        if (d <= s) {
            auto& c = slot_for(counts, shorter[d - 1]);
            if (c.in_short < c.in_long) ++overlap;
            ++c.in_short;
        }
        auto& c = slot_for(counts, longer[d - 1]);
        if (c.in_long < c.in_short) ++overlap;
        ++c.in_long;

        weight *= p;
        const double depth = static_cast<double>(d);
        series += static_cast<double>(overlap) / depth * weight;
        if (d == s) overlap_at_s = overlap;
        if (d > s) {
            series += static_cast<double>(overlap_at_s) * (depth - static_cast<double>(s)) /
                      (static_cast<double>(s) * depth) * weight;
        }
    }
    const double tail = (static_cast<double>(overlap - overlap_at_s) / static_cast<double>(l) +
                         static_cast<double>(overlap_at_s) / static_cast<double>(s)) * weight;
    return std::clamp((1.0 - p) / p * series + tail, 0.0, 1.0);
}

void require_distinct(std::span<const int> list, const char* which) {
    std::unordered_set<int> seen;
    for (int x : list) {
        if (!seen.insert(x).second) {
            throw ValidationError(fmt::format("label {} repeats in list {}; rank lists must be deduplicated", x, which));
        }
    }
}

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace

double rbo_extrapolated(std::span<const int> a, std::span<const int> b, const RboParams& params) {
    params.validate();
    require_distinct(a, "a");
    require_distinct(b, "b");
    return rbo_series(a, b, params.p);
}

double rbo_extrapolated_multiset(std::span<const int> a, std::span<const int> b, const RboParams& params) {
    params.validate();
    return rbo_series(a, b, params.p);
}

int LabelMapping::intern(const std::string& name) {
    auto [it, inserted] = by_name_.emplace(name, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
}

LabelMapping LabelMapping::from_pairs(const std::vector<std::pair<std::string, std::string>>& doc_labels) {
    LabelMapping m;
    for (const auto& [doc, label] : doc_labels) {
        const int id = m.intern(label);
        if (!m.by_doc_.emplace(doc, id).second) {
            throw ValidationError(fmt::format("document \"{}\" is mapped twice", doc));
        }
    }
    return m;
}

LabelMapping LabelMapping::from_gold(const Corpus& corpus) {
    LabelMapping m;
    for (const auto& d : corpus.documents()) {
        if (d.gold_label) m.by_doc_.emplace(d.id, m.intern(*d.gold_label));
    }
    return m;
}

LabelMapping LabelMapping::from_assignment(const ClusterAssignment& assignment, NoiseLabeling noise) {
    LabelMapping m;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const int label = assignment.labels[i];
        std::string name;
        if (label != kNoiseLabel) {
            name = std::to_string(label);
        } else if (noise == NoiseLabeling::unique) {
            name = "noise:" + assignment.doc_ids[i];
        } else {
            name = "noise";
        }
        if (!m.by_doc_.emplace(assignment.doc_ids[i], m.intern(name)).second) {
            throw ValidationError(fmt::format("document \"{}\" is mapped twice", assignment.doc_ids[i]));
        }
    }
    return m;
}

int LabelMapping::label_of(std::string_view doc_id) const {
    auto it = by_doc_.find(std::string(doc_id));
    if (it == by_doc_.end()) {
        throw ValidationError(fmt::format("document \"{}\" has no story label", doc_id));
    }
    return it->second;
}

bool LabelMapping::contains(std::string_view doc_id) const {
    return by_doc_.count(std::string(doc_id)) != 0;
}

std::string_view to_string(LabelListMode mode) {
    return mode == LabelListMode::dedupe ? "dedupe" : "keep-repeats";
}

LabelListMode parse_label_list_mode(std::string_view name) {
    if (name == "keep-repeats") return LabelListMode::keep_repeats;
    if (name == "dedupe") return LabelListMode::dedupe;
    throw ParameterError(fmt::format("unknown label-list mode \"{}\" (expected keep-repeats or dedupe)", name));
}

std::vector<int> label_list(std::span<const std::string> recs, const LabelMapping& mapping, LabelListMode mode) {
    std::vector<int> out;
    out.reserve(recs.size());
    for (const auto& doc : recs) {
        const int label = mapping.label_of(doc);
        if (mode == LabelListMode::dedupe && std::find(out.begin(), out.end(), label) != out.end()) continue;
        out.push_back(label);
    }
    return out;
}

double fragmentation_pair(std::span<const std::string> recs_a, std::span<const std::string> recs_b,
                          const LabelMapping& mapping, const FragmentationParams& params) {
    params.validate();
    const auto a = label_list(recs_a, mapping, params.mode);
    const auto b = label_list(recs_b, mapping, params.mode);
    return 1.0 - rbo_series(a, b, params.rbo.p);
}

FragmentationReport fragmentation_aggregate(const RecommendationSet& recset, const LabelMapping& mapping,
                                            const FragmentationParams& params, bool keep_pairs, unsigned threads) {
    params.validate();
    const std::size_t n = recset.size();
    if (n < 2) {
        throw ValidationError(fmt::format("fragmentation needs at least 2 users, got {}", n));
    }
    std::vector<std::vector<int>> lists(n);
    for (std::size_t u = 0; u < n; ++u) {
        try {
            lists[u] = label_list(recset.users[u].recs, mapping, params.mode);
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("user \"{}\": {}", recset.users[u].user_id, e.what()));
        }
    }

    FragmentationReport report;
    report.params = params;
    report.n_users = n;
    report.n_pairs = n * (n - 1) / 2;
    if (keep_pairs) {
        report.pair_scores.assign(report.n_pairs, 0.0);
        for (const auto& u : recset.users) report.user_ids.push_back(u.user_id);
    }

    // Row i covers pairs (i, j > i); row sums are formed in j order.
    std::vector<double> row_sums(n, 0.0);
    parallel_for(n, threads, [&](std::size_t i) {
        const std::size_t offset = i * n - i * (i + 1) / 2;
        double sum = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double score = 1.0 - rbo_series(lists[i], lists[j], params.rbo.p);
            if (keep_pairs) report.pair_scores[offset + (j - i - 1)] = score;
            sum += score;
        }
        row_sums[i] = sum;
    });
    report.aggregate = pairwise_sum(row_sums) / static_cast<double>(report.n_pairs);
    return report;
}

nlohmann::ordered_json report_json(const FragmentationReport& report) {
    nlohmann::ordered_json j;
    j["aggregate"] = report.aggregate;
    j["n_users"] = report.n_users;
    j["n_pairs"] = report.n_pairs;
    j["params"] = {{"p", report.params.rbo.p}, {"label_lists", std::string(to_string(report.params.mode))}};
    return j;
}

void write_pair_scores_csv(const FragmentationReport& report, std::ostream& out) {
    out << "user_a,user_b,fragmentation\n";
    if (report.pair_scores.empty()) return;
    const std::size_t n = report.user_ids.size();
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            out << fmt::format("{},{},{:.17g}\n", report.user_ids[i], report.user_ids[j], report.pair_scores[k++]);
        }
    }
}

}  // namespace storychain
