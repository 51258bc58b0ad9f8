#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "storychain/cluster.hpp"
#include "storychain/errors.hpp"
#include "storychain/rng.hpp"

namespace storychain {

double WeightedGraph::total_weight() const {
    double s = 0.0;
    for (std::size_t i = 0; i < adjacency.size(); ++i) {
        for (const Edge& e : adjacency[i]) {
            if (e.to > i) s += e.weight;
        }
    }
    return s;
}

WeightedGraph similarity_graph(const PairwiseMatrix& similarities, double threshold) {
    if (similarities.metric != PairMetric::cosine_similarity) {
        throw ParameterError("the similarity graph needs a cosine-similarity matrix");
    }
    const std::size_t n = similarities.size();
    WeightedGraph g;
    g.adjacency.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = similarities(i, j);
            if (s > threshold) {
                g.adjacency[i].push_back({j, s});
                g.adjacency[j].push_back({i, s});
            }
        }
    }
    return g;
}

double modularity(const WeightedGraph& graph, const std::vector<int>& communities, double resolution) {
    const double m = graph.total_weight();
    if (m <= 0.0) return 0.0;
    const int k = communities.empty() ? 0 : *std::max_element(communities.begin(), communities.end()) + 1;
    std::vector<double> internal(static_cast<std::size_t>(k), 0.0);
    std::vector<double> degree(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < graph.node_count(); ++i) {
        const auto ci = static_cast<std::size_t>(communities[i]);
        for (const auto& e : graph.adjacency[i]) {
            degree[ci] += e.weight;
            if (communities[e.to] == communities[i]) internal[ci] += e.weight;  // counted from both ends
        }
    }
    double q = 0.0;
    for (std::size_t c = 0; c < internal.size(); ++c) {
        q += internal[c] / (2.0 * m) - resolution * (degree[c] / (2.0 * m)) * (degree[c] / (2.0 * m));
    }
    return q;
}

namespace {

// Graph of one aggregation level. self_loop[i] holds A_ii, i.e. twice the
// weight internal to the community node i stands for.
struct LevelGraph {
    std::vector<std::vector<WeightedGraph::Edge>> adjacency;
    std::vector<double> self_loop;

    std::size_t size() const { return adjacency.size(); }
};

LevelGraph aggregate(const LevelGraph& g, const std::vector<int>& community, std::size_t count) {
    LevelGraph out;
    out.adjacency.resize(count);
    out.self_loop.assign(count, 0.0);
    std::vector<std::vector<std::size_t>> members(count);
    for (std::size_t i = 0; i < g.size(); ++i) members[static_cast<std::size_t>(community[i])].push_back(i);

    std::vector<double> weight(count, 0.0);
    std::vector<bool> seen(count, false);
    std::vector<std::size_t> touched;
    for (std::size_t c = 0; c < count; ++c) {
        touched.clear();
        for (std::size_t i : members[c]) {
            out.self_loop[c] += g.self_loop[i];
            for (const auto& e : g.adjacency[i]) {
                const auto d = static_cast<std::size_t>(community[e.to]);
                if (d == c) {
                    out.self_loop[c] += e.weight;
                    continue;
                }
                if (!seen[d]) {
                    seen[d] = true;
                    touched.push_back(d);
                }
                weight[d] += e.weight;
            }
        }
        std::sort(touched.begin(), touched.end());
        for (std::size_t d : touched) {
            out.adjacency[c].push_back({d, weight[d]});
            weight[d] = 0.0;
            seen[d] = false;
        }
    }
    return out;
}

}  // namespace

std::vector<int> louvain_communities(const WeightedGraph& graph, double resolution, std::uint64_t seed,
                                     LouvainTrace* trace) {
    const std::size_t n = graph.node_count();
    std::vector<int> membership(n);
    std::iota(membership.begin(), membership.end(), 0);
    const double two_m = 2.0 * graph.total_weight();
    if (trace) {
        trace->modularity.assign(1, modularity(graph, membership, resolution));
        trace->levels = 0;
    }
    if (two_m <= 0.0) return membership;

    LevelGraph level{graph.adjacency, std::vector<double>(n, 0.0)};
    constexpr std::size_t kMaxPasses = 1000;
    for (std::size_t depth = 0;; ++depth) {
        const std::size_t size = level.size();
        std::vector<double> degree(size, 0.0);
        for (std::size_t i = 0; i < size; ++i) {
            degree[i] = level.self_loop[i];
            for (const auto& e : level.adjacency[i]) degree[i] += e.weight;
        }
        std::vector<int> community(size);
        std::iota(community.begin(), community.end(), 0);
        std::vector<double> total(degree);

        std::vector<double> link(size, 0.0);
        std::vector<bool> linked(size, false);
        std::vector<std::size_t> neighbours;
        bool moved_any = false;
        for (std::size_t pass = 0; pass < kMaxPasses; ++pass) {
            std::vector<std::size_t> order(size);
            std::iota(order.begin(), order.end(), std::size_t{0});
            Rng rng(derive_seed(seed, "louvain", depth * kMaxPasses + pass));
            rng.shuffle(order);

            std::size_t moves = 0;
            for (std::size_t node : order) {
                const auto home = static_cast<std::size_t>(community[node]);
                neighbours.clear();
                for (const auto& e : level.adjacency[node]) {
                    const auto c = static_cast<std::size_t>(community[e.to]);
                    if (!linked[c]) {
                        linked[c] = true;
                        neighbours.push_back(c);
                    }
                    link[c] += e.weight;
                }
                total[home] -= degree[node];
                // Gain of joining c, up to the common factor 1/m.
                auto gain = [&](std::size_t c) {
                    return link[c] - resolution * total[c] * degree[node] / two_m;
                };
                std::size_t best = home;
                double best_gain = gain(home);
                const double tolerance = 1e-12 * std::max(1.0, degree[node]);
                for (std::size_t c : neighbours) {
                    const double g = gain(c);
                    if (g > best_gain + tolerance) {
                        best = c;
                        best_gain = g;
                    }
                }
                total[best] += degree[node];
                community[node] = static_cast<int>(best);
                if (best != home) ++moves;
                for (std::size_t c : neighbours) {
                    link[c] = 0.0;
                    linked[c] = false;
                }
            }

            if (trace) {
                std::vector<int> projected(n);
                for (std::size_t o = 0; o < n; ++o) projected[o] = community[static_cast<std::size_t>(membership[o])];
                const double q = modularity(graph, projected, resolution);
                assert(q >= trace->modularity.back() - 1e-9);
                trace->modularity.push_back(q);
            }
            if (moves == 0) break;
            moved_any = true;
        }
        if (!moved_any) break;

        std::vector<int> renumber(size, -1);
        std::size_t count = 0;
        for (std::size_t i = 0; i < size; ++i) {
            auto& r = renumber[static_cast<std::size_t>(community[i])];
            if (r < 0) r = static_cast<int>(count++);
        }
        for (auto& c : community) c = renumber[static_cast<std::size_t>(c)];
        for (auto& m : membership) m = community[static_cast<std::size_t>(m)];
        if (trace) ++trace->levels;
        if (count == size) break;
        level = aggregate(level, community, count);
    }
    return canonical_labels(membership);
}

ClusterAssignment louvain_cluster(const PairwiseMatrix& similarities, const GraphParams& params, LouvainTrace* trace) {
    params.validate();
    const WeightedGraph graph = similarity_graph(similarities, params.edge_threshold);
    ClusterAssignment out;
    out.doc_ids = similarities.doc_ids;
    out.labels = louvain_communities(graph, params.resolution, params.seed, trace);
    out.provenance.method = "louvain";
    out.provenance.params = {{"edge_threshold", params.edge_threshold}, {"resolution", params.resolution}};
    out.provenance.seed = params.seed;
    return out;
}

}  // namespace storychain
