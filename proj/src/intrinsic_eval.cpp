#include "storychain/intrinsic_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "storychain/errors.hpp"

namespace storychain {

std::vector<int> encode_labels(const std::vector<std::string>& labels) {
    std::unordered_map<std::string, int> ids;
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        auto [it, inserted] = ids.emplace(l, static_cast<int>(ids.size()));
        out.push_back(it->second);
    }
    return out;
}

namespace {

double entropy(const std::map<int, std::size_t>& counts, double n) {
    double h = 0.0;
    for (const auto& [label, c] : counts) {
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

void check_aligned(std::size_t a, std::size_t b) {
    if (a != b) throw ValidationError(fmt::format("label lists differ in length ({} vs {})", a, b));
}

// Indices kept after applying the noise policy, and their labels.
std::vector<std::size_t> kept_points(std::span<const int> pred, NoisePolicy noise) {
    std::vector<std::size_t> kept;
    kept.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (noise == NoisePolicy::as_label || pred[i] != kNoiseLabel) kept.push_back(i);
    }
    return kept;
}

}  // namespace

HcvScores homogeneity_completeness_v(std::span<const int> gold, std::span<const int> pred) {
    check_aligned(gold.size(), pred.size());
    if (gold.empty()) throw ValidationError("cannot score an empty labeling");
    const double n = static_cast<double>(gold.size());
    std::map<int, std::size_t> gold_counts;
    std::map<int, std::size_t> pred_counts;
    std::map<std::pair<int, int>, std::size_t> joint;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        ++gold_counts[gold[i]];
        ++pred_counts[pred[i]];
        ++joint[{gold[i], pred[i]}];
    }
    const double h_gold = entropy(gold_counts, n);
    const double h_pred = entropy(pred_counts, n);
    double h_gold_given_pred = 0.0;
    double h_pred_given_gold = 0.0;
    for (const auto& [key, c] : joint) {
        const double nc = static_cast<double>(c);
        h_gold_given_pred -= nc / n * std::log(nc / static_cast<double>(pred_counts[key.second]));
        h_pred_given_gold -= nc / n * std::log(nc / static_cast<double>(gold_counts[key.first]));
    }
    HcvScores s;
    s.homogeneity = h_gold == 0.0 ? 1.0 : 1.0 - h_gold_given_pred / h_gold;
    s.completeness = h_pred == 0.0 ? 1.0 : 1.0 - h_pred_given_gold / h_pred;
    s.homogeneity = std::clamp(s.homogeneity, 0.0, 1.0);
    s.completeness = std::clamp(s.completeness, 0.0, 1.0);
    const double denom = s.homogeneity + s.completeness;
    s.v_measure = denom > 0.0 ? 2.0 * s.homogeneity * s.completeness / denom : 0.0;
    return s;
}

HcvScores homogeneity_completeness_v(const std::vector<std::string>& gold, std::span<const int> pred) {
    const auto encoded = encode_labels(gold);
    return homogeneity_completeness_v(std::span<const int>(encoded), pred);
}

std::vector<std::optional<SilhouetteTerms>> silhouette_samples(const PairwiseMatrix& distances, std::span<const int> pred,
                                                               NoisePolicy noise) {
    check_aligned(distances.size(), pred.size());
    const auto kept = kept_points(pred, noise);
    std::map<int, std::size_t> sizes;
    for (std::size_t i : kept) ++sizes[pred[i]];
    if (sizes.size() < 2) {
        throw UndefinedMetricError(fmt::format("silhouette needs at least 2 clusters, got {}", sizes.size()));
    }
    std::map<int, std::size_t> slot;
    for (const auto& [label, count] : sizes) slot.emplace(label, slot.size());

    std::vector<std::optional<SilhouetteTerms>> out(pred.size());
    std::vector<double> sums(sizes.size());
    std::vector<double> counts(sizes.size());
    for (const auto& [label, count] : sizes) counts[slot[label]] = static_cast<double>(count);
    for (std::size_t i : kept) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j : kept) {
            if (j != i) sums[slot[pred[j]]] += distances(i, j);
        }
        const std::size_t own = slot[pred[i]];
        SilhouetteTerms t;
        if (counts[own] <= 1.0) {
            out[i] = t;  // singleton cluster: s = 0
            continue;
        }
        t.a = sums[own] / (counts[own] - 1.0);
        t.b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < sums.size(); ++c) {
            if (c != own) t.b = std::min(t.b, sums[c] / counts[c]);
        }
        const double scale = std::max(t.a, t.b);
        t.s = scale > 0.0 ? (t.b - t.a) / scale : 0.0;
        out[i] = t;
    }
    return out;
}

double silhouette(const PairwiseMatrix& distances, std::span<const int> pred, NoisePolicy noise) {
    const auto terms = silhouette_samples(distances, pred, noise);
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& t : terms) {
        if (!t) continue;
        total += t->s;
        ++n;
    }
    return total / static_cast<double>(n);
}

DaviesBouldinResult davies_bouldin(const VectorSpace& space, std::span<const int> pred, NoisePolicy noise) {
    check_aligned(space.size(), pred.size());
    const auto kept = kept_points(pred, noise);
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i : kept) members[pred[i]].push_back(i);
    if (members.size() < 2) {
        throw UndefinedMetricError(fmt::format("Davies-Bouldin needs at least 2 clusters, got {}", members.size()));
    }
    const std::size_t dim = space.dim();
    std::vector<int> labels;
    std::vector<std::vector<double>> centroid;
    std::vector<double> scatter;
    for (const auto& [label, idx] : members) {
        std::vector<double> mu(dim, 0.0);
        for (std::size_t i : idx) {
            const auto row = space.matrix.row(i);
            for (std::size_t d = 0; d < dim; ++d) mu[d] += row[d];
        }
        for (double& x : mu) x /= static_cast<double>(idx.size());
        double s = 0.0;
        for (std::size_t i : idx) s += euclidean_distance(space.matrix.row(i), mu);
        labels.push_back(label);
        scatter.push_back(s / static_cast<double>(idx.size()));
        centroid.push_back(std::move(mu));
    }

    DaviesBouldinResult out;
    const std::size_t k = centroid.size();
    double total = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        double worst = 0.0;
        for (std::size_t b = 0; b < k; ++b) {
            if (a == b) continue;
            const double gap = euclidean_distance(centroid[a], centroid[b]);
            double r;
            if (gap == 0.0) {
                r = std::numeric_limits<double>::infinity();
                if (a < b) {
                    out.warnings.push_back(
                        fmt::format("clusters {} and {} have coincident centroids", labels[a], labels[b]));
                }
            } else {
                r = (scatter[a] + scatter[b]) / gap;
            }
            worst = std::max(worst, r);
        }
        total += worst;
    }
    out.score = total / static_cast<double>(k);
    return out;
}

ErrorTable error_table(const std::vector<std::string>& gold, std::span<const int> pred,
                       std::optional<std::span<const int>> reference) {
    check_aligned(gold.size(), pred.size());
    if (reference) check_aligned(gold.size(), reference->size());
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < gold.size(); ++i) groups[gold[i]].push_back(i);

    auto majority = [](std::span<const int> labels, const std::vector<std::size_t>& idx) {
        std::map<int, std::size_t> counts;
        for (std::size_t i : idx) ++counts[labels[i]];
        int best = counts.begin()->first;
        for (const auto& [label, c] : counts) {
            if (c > counts[best]) best = label;  // std::map order keeps the smaller label on ties
        }
        return best;
    };

    ErrorTable table;
    for (const auto& [label, idx] : groups) {
        ErrorRow row;
        row.gold_label = label;
        row.size = idx.size();
        row.majority_label = majority(pred, idx);
        std::optional<int> ref_major;
        if (reference) {
            ref_major = majority(*reference, idx);
            row.overlap = 0;
        }
        for (std::size_t i : idx) {
            if (pred[i] == row.majority_label) continue;
            ++row.misclassified;
            if (reference && (*reference)[i] != *ref_major) ++*row.overlap;
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

MetricReport evaluate_assignment(const VectorSpace& space, const std::vector<std::string>& gold,
                                 const ClusterAssignment& assignment, const EvaluationOptions& options,
                                 unsigned threads) {
    check_aligned(space.size(), gold.size());
    std::unordered_map<std::string, int> by_id;
    for (std::size_t i = 0; i < assignment.size(); ++i) by_id.emplace(assignment.doc_ids[i], assignment.labels[i]);
    std::vector<int> pred;
    pred.reserve(space.size());
    for (const auto& id : space.doc_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw ValidationError(fmt::format("assignment has no label for document \"{}\"", id));
        pred.push_back(it->second);
    }

    MetricReport report;
    report.noise = static_cast<std::size_t>(std::count(pred.begin(), pred.end(), kNoiseLabel));
    report.clusters = ClusterAssignment{{}, pred, {}}.cluster_count();

    const auto gold_ids = encode_labels(gold);
    if (options.hcv_noise == NoisePolicy::as_label) {
        report.hcv = homogeneity_completeness_v(gold_ids, pred);
    } else {
        std::vector<int> g, p;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == kNoiseLabel) continue;
            g.push_back(gold_ids[i]);
            p.push_back(pred[i]);
        }
        if (p.empty()) throw ValidationError("every document is noise");
        report.hcv = homogeneity_completeness_v(g, p);
    }

    if (options.geometry) {
        try {
            const auto dist = pairwise_matrix(space, PairMetric::euclidean_distance, threads);
            report.silhouette = silhouette(dist, pred, options.geometry_noise);
            auto dbi = davies_bouldin(space, pred, options.geometry_noise);
            report.davies_bouldin = dbi.score;
            report.warnings = std::move(dbi.warnings);
        } catch (const UndefinedMetricError& e) {
            report.silhouette.reset();
            report.davies_bouldin.reset();
            report.warnings.emplace_back(e.what());
        }
    }
    return report;
}

namespace {

std::string optional_cell(const std::optional<double>& v, int precision) {
    return v ? fmt::format("{:.{}f}", *v, precision) : std::string("NA");
}

}  // namespace

void write_metrics_csv(const std::vector<NamedReport>& reports, std::ostream& out) {
    out << "name,homogeneity,completeness,v_measure,silhouette,davies_bouldin,clusters,noise\n";
    for (const auto& [name, r] : reports) {
        out << fmt::format("{},{:.6f},{:.6f},{:.6f},{},{},{},{}\n", name, r.hcv.homogeneity, r.hcv.completeness,
                           r.hcv.v_measure, optional_cell(r.silhouette, 6), optional_cell(r.davies_bouldin, 6),
                           r.clusters, r.noise);
    }
}

void write_metrics_text(const std::vector<NamedReport>& reports, std::ostream& out) {
    std::size_t width = std::string_view("Representation*Clustering").size();
    for (const auto& r : reports) width = std::max(width, r.name.size());
    out << fmt::format("{:<{}}  {:>6}  {:>6}  {:>6}  {:>6}  {:>6}  {:>8}\n", "Representation*Clustering", width, "H", "C",
                       "V", "S", "DBI", "clusters");
    for (const auto& [name, r] : reports) {
        out << fmt::format("{:<{}}  {:>6.3f}  {:>6.3f}  {:>6.3f}  {:>6}  {:>6}  {:>8}\n", name, width, r.hcv.homogeneity,
                           r.hcv.completeness, r.hcv.v_measure, optional_cell(r.silhouette, 3),
                           optional_cell(r.davies_bouldin, 3), r.clusters);
    }
}

void write_error_table_csv(const ErrorTable& table, std::ostream& out) {
    out << "gold_label,size,majority_label,misclassified,overlap\n";
    for (const auto& r : table.rows) {
        out << fmt::format("{},{},{},{},{}\n", r.gold_label, r.size, r.majority_label, r.misclassified,
                           r.overlap ? std::to_string(*r.overlap) : std::string());
    }
}

void write_error_table_text(const ErrorTable& table, std::ostream& out) {
    std::size_t width = std::string_view("Gold cluster").size();
    for (const auto& r : table.rows) width = std::max(width, r.gold_label.size());
    out << fmt::format("{:<{}}  {:>6}  {:>8}  {:>13}  {:>7}\n", "Gold cluster", width, "size", "majority", "misclassified",
                       "overlap");
    for (const auto& r : table.rows) {
        out << fmt::format("{:<{}}  {:>6}  {:>8}  {:>13}  {:>7}\n", r.gold_label, width, r.size, r.majority_label,
                           r.misclassified, r.overlap ? std::to_string(*r.overlap) : std::string("-"));
    }
}

}  // namespace storychain
