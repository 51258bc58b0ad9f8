#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "storychain/cluster.hpp"
#include "storychain/represent.hpp"

namespace storychain {

// Interns arbitrary labels as ints in order of first appearance.
std::vector<int> encode_labels(const std::vector<std::string>& labels);

struct HcvScores {
    double homogeneity = 0.0;
    double completeness = 0.0;
    double v_measure = 0.0;
};

// Entropy-based external scores with natural-log entropies over the joint
// count table. h = 1 when H(gold) = 0, c = 1 when H(pred) = 0.
HcvScores homogeneity_completeness_v(std::span<const int> gold, std::span<const int> pred);
HcvScores homogeneity_completeness_v(const std::vector<std::string>& gold, std::span<const int> pred);

enum class NoisePolicy {
    as_label,  // noise points form one ordinary cluster
    exclude,   // noise points are dropped before scoring
};

struct SilhouetteTerms {
    double a = 0.0;  // mean distance to the rest of the point's cluster
    double b = 0.0;  // mean distance to the nearest other cluster
    double s = 0.0;
};

// Per-point terms; excluded (noise) points get std::nullopt.
std::vector<std::optional<SilhouetteTerms>> silhouette_samples(const PairwiseMatrix& distances, std::span<const int> pred,
                                                               NoisePolicy noise = NoisePolicy::exclude);
// Mean of s(i) = (b - a) / max(a, b); singleton-cluster points contribute 0.
// Needs at least two clusters after noise handling.
double silhouette(const PairwiseMatrix& distances, std::span<const int> pred, NoisePolicy noise = NoisePolicy::exclude);

struct DaviesBouldinResult {
    double score = 0.0;
    std::vector<std::string> warnings;
};

// Euclidean DBI: mean over clusters of max_j (s_k + s_j) / |mu_k - mu_j|, with
// s_k the mean member-to-centroid distance. Coincident centroids give an
// infinite ratio and a warning.
DaviesBouldinResult davies_bouldin(const VectorSpace& space, std::span<const int> pred,
                                   NoisePolicy noise = NoisePolicy::exclude);

struct ErrorRow {
    std::string gold_label;
    std::size_t size = 0;
    int majority_label = 0;
    std::size_t misclassified = 0;
    std::optional<std::size_t> overlap;  // deviating under both pred and reference
};

struct ErrorTable {
    std::vector<ErrorRow> rows;  // sorted by gold label
};

// Per gold cluster: the majority predicted label (ties to the smaller label)
// and the members carrying any other label. With a reference assignment,
// overlap counts members that deviate under both.
ErrorTable error_table(const std::vector<std::string>& gold, std::span<const int> pred,
                       std::optional<std::span<const int>> reference = std::nullopt);

struct MetricReport {
    HcvScores hcv;
    std::optional<double> silhouette;
    std::optional<double> davies_bouldin;
    std::size_t clusters = 0;
    std::size_t noise = 0;
    std::vector<std::string> warnings;
};

struct EvaluationOptions {
    NoisePolicy hcv_noise = NoisePolicy::as_label;
    NoisePolicy geometry_noise = NoisePolicy::exclude;
    bool geometry = true;
};

// Scores an assignment against gold labels and, when geometry is on, the
// vector space. Undefined geometric metrics are left empty with a warning.
MetricReport evaluate_assignment(const VectorSpace& space, const std::vector<std::string>& gold,
                                 const ClusterAssignment& assignment, const EvaluationOptions& options = {},
                                 unsigned threads = 1);

struct NamedReport {
    std::string name;
    MetricReport report;
};

void write_metrics_csv(const std::vector<NamedReport>& reports, std::ostream& out);
void write_metrics_text(const std::vector<NamedReport>& reports, std::ostream& out);
void write_error_table_csv(const ErrorTable& table, std::ostream& out);
void write_error_table_text(const ErrorTable& table, std::ostream& out);

}  // namespace storychain
