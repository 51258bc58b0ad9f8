#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "storychain/cluster.hpp"
#include "storychain/errors.hpp"

namespace storychain {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr double kInf = std::numeric_limits<double>::infinity();

class LinkageState {
public:
    LinkageState(const PairwiseMatrix& m, Linkage linkage)
        : n_(m.size()), linkage_(linkage), dist_(n_ * n_), size_(n_, 1), active_(n_, true),
          nn_(n_, kNone), nn_dist_(n_, kInf) {
        const bool similarity = m.metric == PairMetric::cosine_similarity;
        for (std::size_t i = 0; i < n_ * n_; ++i) {
            double d = similarity ? 1.0 - m.values[i] : m.values[i];
            // Ward runs on squared distances.
            dist_[i] = linkage_ == Linkage::ward ? d * d : d;
        }
        for (std::size_t i = 0; i < n_; ++i) refresh(i);
    }

    // Smallest (distance, slot, slot) among pending merges.
    std::pair<std::size_t, std::size_t> closest_pair() const {
        std::size_t best = kNone;
        for (std::size_t i = 0; i < n_; ++i) {
            if (!active_[i] || nn_[i] == kNone) continue;
            if (best == kNone || nn_dist_[i] < nn_dist_[best]) best = i;
        }
        return {best, best == kNone ? kNone : nn_[best]};
    }

    double merge_height(std::size_t a, std::size_t b) const {
        const double d = at(a, b);
        return linkage_ == Linkage::ward ? std::sqrt(std::max(0.0, d)) : d;
    }

    void merge(std::size_t a, std::size_t b) {
        const double na = static_cast<double>(size_[a]);
        const double nb = static_cast<double>(size_[b]);
        const double dab = at(a, b);
        for (std::size_t k = 0; k < n_; ++k) {
            if (!active_[k] || k == a || k == b) continue;
            const double dak = at(a, k);
            const double dbk = at(b, k);
            double d = 0.0;
            switch (linkage_) {
                case Linkage::single: d = std::min(dak, dbk); break;
                case Linkage::complete: d = std::max(dak, dbk); break;
                case Linkage::average: d = (na * dak + nb * dbk) / (na + nb); break;
                case Linkage::ward: {
                    const double nk = static_cast<double>(size_[k]);
                    d = ((na + nk) * dak + (nb + nk) * dbk - nk * dab) / (na + nb + nk);
                    d = std::max(0.0, d);
                    break;
                }
            }
            set(a, k, d);
        }
        active_[b] = false;
        size_[a] += size_[b];

        // Only rows whose cached neighbour involved a or b, or that may now
        // prefer a, need attention. Rows i > a never look at a.
        for (std::size_t i = 0; i < n_; ++i) {
            if (!active_[i]) continue;
            if (i == a || nn_[i] == a || nn_[i] == b) {
                refresh(i);
            } else if (i < a) {
                const double d = at(i, a);
                if (d < nn_dist_[i] || (d == nn_dist_[i] && a < nn_[i])) {
                    nn_[i] = a;
                    nn_dist_[i] = d;
                }
            }
        }
    }

private:
    double at(std::size_t i, std::size_t j) const { return dist_[i * n_ + j]; }
    void set(std::size_t i, std::size_t j, double d) {
        dist_[i * n_ + j] = d;
        dist_[j * n_ + i] = d;
    }

    // Nearest active slot j > i, smallest j on ties.
    void refresh(std::size_t i) {
        nn_[i] = kNone;
        nn_dist_[i] = kInf;
        for (std::size_t j = i + 1; j < n_; ++j) {
            if (!active_[j]) continue;
            const double d = at(i, j);
            if (nn_[i] == kNone || d < nn_dist_[i]) {
                nn_[i] = j;
                nn_dist_[i] = d;
            }
        }
    }

    std::size_t n_;
    Linkage linkage_;
    std::vector<double> dist_;
    std::vector<std::size_t> size_;
    std::vector<bool> active_;
    std::vector<std::size_t> nn_;
    std::vector<double> nn_dist_;
};

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

}  // namespace

Dendrogram ahc_dendrogram(const PairwiseMatrix& matrix, Linkage linkage) {
    if (matrix.size() == 0) {
        throw ParameterError("AHC needs at least one document");
    }
    if (linkage == Linkage::ward && matrix.metric != PairMetric::euclidean_distance) {
        throw ParameterError("ward linkage requires a euclidean-distance matrix");
    }
    Dendrogram out;
    out.doc_ids = matrix.doc_ids;
    out.linkage = linkage;
    out.merges.reserve(matrix.size() - 1);
    LinkageState state(matrix, linkage);
    for (std::size_t step = 0; step + 1 < matrix.size(); ++step) {
        auto [a, b] = state.closest_pair();
        out.merges.push_back({a, b, state.merge_height(a, b)});
        state.merge(a, b);
    }
    return out;
}

std::vector<int> Dendrogram::cut(double threshold) const {
    const std::size_t n = doc_ids.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (const Merge& m : merges) {
        if (m.height > threshold) break;
        const std::size_t ra = find_root(parent, m.a);
        const std::size_t rb = find_root(parent, m.b);
        parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    std::vector<int> roots(n);
    for (std::size_t i = 0; i < n; ++i) roots[i] = static_cast<int>(find_root(parent, i));
    return canonical_labels(roots);
}

ClusterAssignment ahc_cluster(const PairwiseMatrix& matrix, const AhcParams& params) {
    params.validate();
    const Dendrogram tree = ahc_dendrogram(matrix, params.linkage);
    ClusterAssignment out;
    out.doc_ids = matrix.doc_ids;
    out.labels = tree.cut(params.distance_threshold);
    out.provenance.method = "ahc";
    out.provenance.params = {{"linkage", std::string(to_string(params.linkage))},
                             {"distance_threshold", params.distance_threshold}};
    return out;
}

}  // namespace storychain
