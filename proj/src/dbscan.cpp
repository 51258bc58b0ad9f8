#include <algorithm>
#include <deque>

#include "dbscan_internal.hpp"
#include "storychain/cluster.hpp"
#include "storychain/errors.hpp"

namespace storychain::detail {

NeighborIndex::NeighborIndex(const PairwiseMatrix& distances) : n_(distances.size()), rows_(n_) {
    if (distances.metric != PairMetric::euclidean_distance) {
        throw ParameterError("DBSCAN requires a euclidean-distance matrix");
    }
    for (std::size_t i = 0; i < n_; ++i) {
        auto& row = rows_[i];
        row.reserve(n_);
        for (std::size_t j = 0; j < n_; ++j) row.push_back({distances(i, j), j});
        std::sort(row.begin(), row.end(), [](const Entry& x, const Entry& y) {
            return x.distance < y.distance || (x.distance == y.distance && x.index < y.index);
        });
    }
}

std::size_t NeighborIndex::count_within(std::size_t i, double epsilon) const {
    const auto& row = rows_[i];
    auto it = std::upper_bound(row.begin(), row.end(), epsilon,
                               [](double eps, const Entry& e) { return eps < e.distance; });
    return static_cast<std::size_t>(it - row.begin());
}

std::vector<int> dbscan_labels(const NeighborIndex& index, double epsilon, std::size_t min_samples) {
    const std::size_t n = index.size();
    std::vector<std::size_t> reach(n);
    std::vector<bool> core(n);
    for (std::size_t i = 0; i < n; ++i) {
        reach[i] = index.count_within(i, epsilon);
        core[i] = reach[i] >= min_samples;
    }

    // Clusters are the connected components of core points, numbered by their
    // smallest core index.
    std::vector<int> labels(n, kNoiseLabel);
    int next = 0;
    std::deque<std::size_t> queue;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (!core[seed] || labels[seed] != kNoiseLabel) continue;
        labels[seed] = next;
        queue.push_back(seed);
        while (!queue.empty()) {
            const std::size_t p = queue.front();
            queue.pop_front();
            const auto& row = index.row(p);
            for (std::size_t k = 0; k < reach[p]; ++k) {
                const std::size_t q = row[k].index;
                if (core[q] && labels[q] == kNoiseLabel) {
                    labels[q] = next;
                    queue.push_back(q);
                }
            }
        }
        ++next;
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        int best = kNoiseLabel;
        const auto& row = index.row(i);
        for (std::size_t k = 0; k < reach[i]; ++k) {
            const std::size_t q = row[k].index;
            if (core[q] && (best == kNoiseLabel || labels[q] < best)) best = labels[q];
        }
        labels[i] = best;
    }
    return labels;
}

}  // namespace storychain::detail

namespace storychain {

ClusterAssignment dbscan_cluster(const PairwiseMatrix& distances, const DbscanParams& params) {
    params.validate();
    if (distances.size() == 0) throw ParameterError("DBSCAN needs at least one document");
    const detail::NeighborIndex index(distances);
    ClusterAssignment out;
    out.doc_ids = distances.doc_ids;
    out.labels = detail::dbscan_labels(index, params.epsilon, params.min_samples);
    out.provenance.method = "dbscan";
    out.provenance.params = {{"epsilon", params.epsilon}, {"min_samples", params.min_samples}};
    return out;
}

}  // namespace storychain
