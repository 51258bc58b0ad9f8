#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "storychain/represent.hpp"

namespace storychain {

inline constexpr int kNoiseLabel = -1;

// Provenance sidecar: which method produced an assignment, with what params.
struct ClusterProvenance {
    std::string method;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    std::optional<std::uint64_t> seed;
};

struct ClusterAssignment {
    std::vector<std::string> doc_ids;
    std::vector<int> labels;  // contiguous from 0; kNoiseLabel for DBSCAN noise
    ClusterProvenance provenance;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t cluster_count() const;  // excluding noise
    std::size_t noise_count() const;
};

// Renumbers non-noise labels 0, 1, ... in order of first appearance.
std::vector<int> canonical_labels(const std::vector<int>& labels);

// CSV with header "doc_id,label"; noise written as -1.
void write_assignment_csv(const ClusterAssignment& assignment, std::ostream& out);
ClusterAssignment read_assignment_csv(std::istream& in, std::string_view source_name = "<stream>");
void save_assignment(const ClusterAssignment& assignment, const std::filesystem::path& csv_path);
ClusterAssignment load_assignment(const std::filesystem::path& csv_path);
nlohmann::ordered_json provenance_json(const ClusterProvenance& provenance);

// ---------------------------------------------------------------------------
// Agglomerative hierarchical clustering

enum class Linkage { ward, average, complete, single };

std::string_view to_string(Linkage linkage);
Linkage parse_linkage(std::string_view name);
inline constexpr Linkage kAllLinkages[] = {Linkage::ward, Linkage::average, Linkage::complete, Linkage::single};

struct AhcParams {
    Linkage linkage = Linkage::ward;
    double distance_threshold = 1.0;

    void validate() const;
};

// Full merge sequence. Cluster ids are slots: a cluster is named by the
// smallest document index it contains, and a merge of slots (a, b), a < b,
// keeps slot a.
struct Dendrogram {
    struct Merge {
        std::size_t a;
        std::size_t b;
        double height;
    };
    std::vector<std::string> doc_ids;
    Linkage linkage = Linkage::ward;
    std::vector<Merge> merges;  // in merge order, n - 1 entries

    // Applies merges in order, stopping at the first whose height exceeds
    // the threshold.
    std::vector<int> cut(double threshold) const;
};

// Lance-Williams agglomeration over the precomputed matrix. Among equal
// pending distances, the lexicographically smallest (slot, slot) pair merges
// first. Ward needs a euclidean-distance matrix; the other linkages also take
// cosine similarity, read as distance 1 - s.
Dendrogram ahc_dendrogram(const PairwiseMatrix& matrix, Linkage linkage);
ClusterAssignment ahc_cluster(const PairwiseMatrix& matrix, const AhcParams& params);

// ---------------------------------------------------------------------------
// DBSCAN

struct DbscanParams {
    double epsilon = 0.5;
    std::size_t min_samples = 5;

    void validate() const;
};

// Core point: at least min_samples points (itself included) within epsilon.
// Border points join the lowest-numbered adjacent core cluster.
ClusterAssignment dbscan_cluster(const PairwiseMatrix& distances, const DbscanParams& params);

// ---------------------------------------------------------------------------
// Louvain over a thresholded similarity graph

struct GraphParams {
    double edge_threshold = 0.5;
    double resolution = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Undirected weighted graph without self-loops.
struct WeightedGraph {
    struct Edge {
        std::size_t to;
        double weight;
    };
    std::vector<std::vector<Edge>> adjacency;

    std::size_t node_count() const noexcept { return adjacency.size(); }
    double total_weight() const;  // sum over undirected edges, each once
};

// Edge (i, j) iff similarity > threshold, weighted by the similarity.
WeightedGraph similarity_graph(const PairwiseMatrix& similarities, double threshold);

// Newman-Girvan modularity with a resolution factor, using weighted degree.
double modularity(const WeightedGraph& graph, const std::vector<int>& communities, double resolution = 1.0);

// Modularity of the original graph's partition after every local-moving
// sweep, across all aggregation levels.
struct LouvainTrace {
    std::vector<double> modularity;
    std::size_t levels = 0;
};

ClusterAssignment louvain_cluster(const PairwiseMatrix& similarities, const GraphParams& params,
                                  LouvainTrace* trace = nullptr);
std::vector<int> louvain_communities(const WeightedGraph& graph, double resolution, std::uint64_t seed,
                                     LouvainTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Hyperparameter sweeps

struct AhcGrid {
    std::vector<Linkage> linkages{std::begin(kAllLinkages), std::end(kAllLinkages)};
    std::vector<double> thresholds;
};

struct DbscanGrid {
    std::vector<double> epsilons;
    std::vector<std::size_t> min_samples;
};

struct LouvainGrid {
    std::vector<double> edge_thresholds;
    std::vector<double> resolutions{1.0};
    std::uint64_t seed = 0;
};

using GridSpec = std::variant<AhcGrid, DbscanGrid, LouvainGrid>;
using ClusterParams = std::variant<AhcParams, DbscanParams, GraphParams>;

// start, start+step, ..., up to and including stop (within a small tolerance).
std::vector<double> arange(double start, double stop, double step);

struct SweepRow {
    ClusterParams params;
    double homogeneity = 0.0;
    double completeness = 0.0;
    double v_measure = 0.0;
    std::size_t clusters = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::size_t best_index = 0;

    const SweepRow& best() const { return rows.at(best_index); }
};

// Evaluates every grid point against gold labels. Best = highest V-measure;
// ties go to the smaller threshold (edge threshold, epsilon), then the
// earlier linkage / resolution / min_samples in declared order.
SweepResult hyperparam_sweep(const VectorSpace& space, const std::vector<std::string>& gold, const GridSpec& grid,
                             unsigned threads = 1);

ClusterAssignment run_clustering(const VectorSpace& space, const ClusterParams& params, unsigned threads = 1);
nlohmann::ordered_json params_json(const ClusterParams& params);
std::string_view method_name(const ClusterParams& params);

void write_sweep_csv(const SweepResult& result, std::ostream& out);

}  // namespace storychain
