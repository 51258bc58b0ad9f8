#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "dbscan_internal.hpp"
#include "storychain/cluster.hpp"
#include "storychain/errors.hpp"
#include "storychain/intrinsic_eval.hpp"
#include "storychain/parallel.hpp"

namespace storychain {

std::vector<double> arange(double start, double stop, double step) {
    if (!(step > 0.0)) throw ParameterError("grid step must be positive");
    if (stop < start) throw ParameterError("grid stop must not be below start");
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(start + step * static_cast<double>(i));
    return out;
}

std::string_view method_name(const ClusterParams& params) {
    switch (params.index()) {
        case 0: return "ahc";
        case 1: return "dbscan";
        default: return "louvain";
    }
}

nlohmann::ordered_json params_json(const ClusterParams& params) {
    if (const auto* p = std::get_if<AhcParams>(&params)) {
        return {{"linkage", std::string(to_string(p->linkage))}, {"distance_threshold", p->distance_threshold}};
    }
    if (const auto* p = std::get_if<DbscanParams>(&params)) {
        return {{"epsilon", p->epsilon}, {"min_samples", p->min_samples}};
    }
    const auto& p = std::get<GraphParams>(params);
    return {{"edge_threshold", p.edge_threshold}, {"resolution", p.resolution}, {"seed", p.seed}};
}

ClusterAssignment run_clustering(const VectorSpace& space, const ClusterParams& params, unsigned threads) {
    if (const auto* p = std::get_if<AhcParams>(&params)) {
        return ahc_cluster(pairwise_matrix(space, PairMetric::euclidean_distance, threads), *p);
    }
    if (const auto* p = std::get_if<DbscanParams>(&params)) {
        return dbscan_cluster(pairwise_matrix(space, PairMetric::euclidean_distance, threads), *p);
    }
    return louvain_cluster(pairwise_matrix(space, PairMetric::cosine_similarity, threads), std::get<GraphParams>(params));
}

namespace {

// Declared-order tie-break key: (primary threshold, secondary grid position).
struct TieKey {
    double threshold;
    std::size_t position;
};

std::size_t pick_best(const std::vector<SweepRow>& rows, const std::vector<TieKey>& keys) {
    constexpr double kTie = 1e-12;
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double dv = rows[i].v_measure - rows[best].v_measure;
        if (dv > kTie) {
            best = i;
        } else if (dv >= -kTie) {
            if (keys[i].threshold < keys[best].threshold ||
                (keys[i].threshold == keys[best].threshold && keys[i].position < keys[best].position)) {
                best = i;
            }
        }
    }
    return best;
}

void score(SweepRow& row, const std::vector<int>& gold, const std::vector<int>& labels) {
    const HcvScores s = homogeneity_completeness_v(gold, labels);
    row.homogeneity = s.homogeneity;
    row.completeness = s.completeness;
    row.v_measure = s.v_measure;
    std::vector<int> distinct;
    for (int l : labels) {
        if (l != kNoiseLabel && static_cast<std::size_t>(l) >= distinct.size()) distinct.resize(static_cast<std::size_t>(l) + 1);
    }
    row.clusters = distinct.size();
}

}  // namespace

SweepResult hyperparam_sweep(const VectorSpace& space, const std::vector<std::string>& gold_labels, const GridSpec& grid,
                             unsigned threads) {
    if (gold_labels.size() != space.size()) {
        throw ValidationError(fmt::format("sweep needs one gold label per document ({} labels, {} documents)",
                                          gold_labels.size(), space.size()));
    }
    if (space.size() == 0) throw ParameterError("sweep over an empty vector space");
    const std::vector<int> gold = encode_labels(gold_labels);
    SweepResult result;
    std::vector<TieKey> keys;

    if (const auto* g = std::get_if<AhcGrid>(&grid)) {
        if (g->linkages.empty() || g->thresholds.empty()) throw ParameterError("empty AHC grid");
        for (double t : g->thresholds) AhcParams{Linkage::ward, t}.validate();
        const PairwiseMatrix dist = pairwise_matrix(space, PairMetric::euclidean_distance, threads);
        std::vector<Dendrogram> trees(g->linkages.size());
        parallel_for(trees.size(), threads, [&](std::size_t l) { trees[l] = ahc_dendrogram(dist, g->linkages[l]); });
        const std::size_t nt = g->thresholds.size();
        result.rows.resize(g->linkages.size() * nt);
        parallel_for(result.rows.size(), threads, [&](std::size_t i) {
            const std::size_t l = i / nt;
            const double t = g->thresholds[i % nt];
            result.rows[i].params = AhcParams{g->linkages[l], t};
            score(result.rows[i], gold, trees[l].cut(t));
        });
        for (std::size_t i = 0; i < result.rows.size(); ++i) keys.push_back({g->thresholds[i % nt], i / nt});
    } else if (const auto* g = std::get_if<DbscanGrid>(&grid)) {
        if (g->epsilons.empty() || g->min_samples.empty()) throw ParameterError("empty DBSCAN grid");
        for (double e : g->epsilons) {
            for (std::size_t m : g->min_samples) DbscanParams{e, m}.validate();
        }
        const PairwiseMatrix dist = pairwise_matrix(space, PairMetric::euclidean_distance, threads);
        const detail::NeighborIndex index(dist);
        const std::size_t nm = g->min_samples.size();
        result.rows.resize(g->epsilons.size() * nm);
        parallel_for(result.rows.size(), threads, [&](std::size_t i) {
            const double e = g->epsilons[i / nm];
            const std::size_t m = g->min_samples[i % nm];
            result.rows[i].params = DbscanParams{e, m};
            score(result.rows[i], gold, detail::dbscan_labels(index, e, m));
        });
        for (std::size_t i = 0; i < result.rows.size(); ++i) keys.push_back({g->epsilons[i / nm], i % nm});
    } else {
        const auto& lg = std::get<LouvainGrid>(grid);
        if (lg.edge_thresholds.empty() || lg.resolutions.empty()) throw ParameterError("empty Louvain grid");
        for (double t : lg.edge_thresholds) {
            for (double r : lg.resolutions) GraphParams{t, r, lg.seed}.validate();
        }
        const PairwiseMatrix sim = pairwise_matrix(space, PairMetric::cosine_similarity, threads);
        const std::size_t nr = lg.resolutions.size();
        result.rows.resize(lg.edge_thresholds.size() * nr);
        parallel_for(result.rows.size(), threads, [&](std::size_t i) {
            const GraphParams p{lg.edge_thresholds[i / nr], lg.resolutions[i % nr], lg.seed};
            result.rows[i].params = p;
            score(result.rows[i], gold, louvain_communities(similarity_graph(sim, p.edge_threshold), p.resolution, p.seed));
        });
        for (std::size_t i = 0; i < result.rows.size(); ++i) keys.push_back({lg.edge_thresholds[i / nr], i % nr});
    }
    result.best_index = pick_best(result.rows, keys);
    return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
    out << "method,params,homogeneity,completeness,v_measure,clusters,best\n";
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& r = result.rows[i];
        std::string params;
        const auto pj = params_json(r.params);
        for (const auto& [k, v] : pj.items()) {
            if (!params.empty()) params += ';';
            params += k + '=' + (v.is_string() ? v.get<std::string>() : v.dump());
        }
        out << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{},{}\n", method_name(r.params), params, r.homogeneity,
                           r.completeness, r.v_measure, r.clusters, i == result.best_index ? 1 : 0);
    }
}

}  // namespace storychain
