#pragma once

// Straight-from-the-definition reference implementations. Slow on purpose and
// written without the library's helpers so the two can disagree.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using Points = std::vector<std::vector<double>>;

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

// ---- rank-biased overlap ---------------------------------------------------

// |prefix_d(a) ∩ prefix_d(b)|, recomputed from scratch; shorter list saturates.
inline double overlap_at(const std::vector<int>& a, const std::vector<int>& b, std::size_t d, bool multiset) {
    const std::size_t da = std::min(d, a.size());
    const std::size_t db = std::min(d, b.size());
    if (!multiset) {
        std::set<int> sa(a.begin(), a.begin() + static_cast<long>(da));
        std::set<int> sb(b.begin(), b.begin() + static_cast<long>(db));
        std::vector<int> both;
        std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(both));
        return static_cast<double>(both.size());
    }
    std::map<int, int> ca, cb;
    for (std::size_t i = 0; i < da; ++i) ++ca[a[i]];
    for (std::size_t i = 0; i < db; ++i) ++cb[b[i]];
    double x = 0.0;
    for (const auto& [k, n] : ca) {
        auto it = cb.find(k);
        if (it != cb.end()) x += std::min(n, it->second);
    }
    return x;
}

// Extrapolated RBO, term by term with std::pow.
inline double rbo(const std::vector<int>& a, const std::vector<int>& b, double p, bool multiset = false) {
    const auto& S = a.size() <= b.size() ? a : b;
    const auto& L = a.size() <= b.size() ? b : a;
    const double s = static_cast<double>(S.size());
    const double l = static_cast<double>(L.size());
    if (L.empty()) return 1.0;
    if (S.empty()) return 0.0;
    const double xs = overlap_at(S, L, S.size(), multiset);
    const double xl = overlap_at(S, L, L.size(), multiset);
    double first = 0.0;
    for (std::size_t d = 1; d <= L.size(); ++d) {
        first += overlap_at(S, L, d, multiset) / static_cast<double>(d) * std::pow(p, static_cast<double>(d));
    }
    double second = 0.0;
    for (std::size_t d = S.size() + 1; d <= L.size(); ++d) {
        const double dd = static_cast<double>(d);
        second += xs * (dd - s) / (s * dd) * std::pow(p, dd);
    }
    return (1.0 - p) / p * (first + second) + ((xl - xs) / l + xs / s) * std::pow(p, l);
}

// ---- external cluster metrics ------------------------------------------------

struct Hcv {
    double h, c, v;
};

inline double entropy(const std::vector<int>& x) {
    std::map<int, double> n;
    for (int v : x) n[v] += 1.0;
    const double N = static_cast<double>(x.size());
    double H = 0.0;
    for (const auto& [k, c] : n) H -= c / N * std::log(c / N);
    return H;
}

// H(x | y)
inline double conditional_entropy(const std::vector<int>& x, const std::vector<int>& y) {
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ny;
    for (std::size_t i = 0; i < x.size(); ++i) {
        joint[{x[i], y[i]}] += 1.0;
        ny[y[i]] += 1.0;
    }
    const double N = static_cast<double>(x.size());
    double H = 0.0;
    for (const auto& [key, c] : joint) H -= c / N * std::log(c / ny[key.second]);
    return H;
}

inline Hcv hcv(const std::vector<int>& gold, const std::vector<int>& pred) {
    const double hg = entropy(gold), hp = entropy(pred);
    const double h = hg == 0.0 ? 1.0 : 1.0 - conditional_entropy(gold, pred) / hg;
    const double c = hp == 0.0 ? 1.0 : 1.0 - conditional_entropy(pred, gold) / hp;
    const double v = h + c == 0.0 ? 0.0 : 2.0 * h * c / (h + c);
    return {h, c, v};
}

inline double silhouette(const Points& x, const std::vector<int>& pred) {
    const std::size_t n = x.size();
    std::set<int> labels(pred.begin(), pred.end());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a_sum = 0.0;
        std::size_t a_n = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && pred[j] == pred[i]) {
                a_sum += dist(x[i], x[j]);
                ++a_n;
            }
        }
        if (a_n == 0) continue;  // singleton: s = 0
        const double a = a_sum / static_cast<double>(a_n);
        double b = std::numeric_limits<double>::infinity();
        for (int k : labels) {
            if (k == pred[i]) continue;
            double s = 0.0;
            std::size_t m = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (pred[j] == k) {
                    s += dist(x[i], x[j]);
                    ++m;
                }
            }
            b = std::min(b, s / static_cast<double>(m));
        }
        const double den = std::max(a, b);
        total += den == 0.0 ? 0.0 : (b - a) / den;
    }
    return total / static_cast<double>(n);
}

inline double davies_bouldin(const Points& x, const std::vector<int>& pred) {
    const std::set<int> distinct(pred.begin(), pred.end());
    const std::vector<int> labels(distinct.begin(), distinct.end());
    const std::size_t dim = x.front().size();
    std::vector<std::vector<double>> mu;
    std::vector<double> scatter;
    for (int k : labels) {
        std::vector<double> c(dim, 0.0);
        double m = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (pred[i] != k) continue;
            for (std::size_t t = 0; t < dim; ++t) c[t] += x[i][t];
            m += 1.0;
        }
        for (double& v : c) v /= m;
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (pred[i] == k) s += dist(x[i], c);
        }
        mu.push_back(c);
        scatter.push_back(s / m);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        double worst = 0.0;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (j != k) worst = std::max(worst, (scatter[k] + scatter[j]) / dist(mu[k], mu[j]));
        }
        total += worst;
    }
    return total / static_cast<double>(labels.size());
}

// ---- partitions ----------------------------------------------------------

// True when the two labelings induce the same partition.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto [x, fresh_x] = ab.emplace(a[i], b[i]);
        auto [y, fresh_y] = ba.emplace(b[i], a[i]);
        if (x->second != b[i] || y->second != a[i]) return false;
    }
    return true;
}

// Every block of `fine` lies inside one block of `coarse`.
inline bool refines(const std::vector<int>& fine, const std::vector<int>& coarse) {
    std::map<int, int> to;
    for (std::size_t i = 0; i < fine.size(); ++i) {
        auto [it, fresh] = to.emplace(fine[i], coarse[i]);
        if (it->second != coarse[i]) return false;
    }
    return true;
}

// Calls fn on every set partition of {0..n-1} as a restricted growth string.
inline void for_each_partition(std::size_t n, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> a(n, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int max_used) {
        if (i == n) {
            fn(a);
            return;
        }
        for (int v = 0; v <= max_used + 1; ++v) {
            a[i] = v;
            rec(i + 1, std::max(max_used, v));
        }
    };
    if (n == 0) {
        fn(a);
        return;
    }
    rec(1, 0);
}

// Components of the graph with an edge wherever connected(i, j).
inline std::vector<int> components(std::size_t n, const std::function<bool(std::size_t, std::size_t)>& connected) {
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t v) {
        return parent[v] == v ? v : parent[v] = find(parent[v]);
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (connected(i, j)) parent[find(i)] = find(j);
        }
    }
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<int>(find(i));
    return out;
}

// Dense modularity: Q = 1/2m * sum_ij (A_ij - gamma k_i k_j / 2m) delta(c_i, c_j).
inline double modularity(const std::vector<std::vector<double>>& A, const std::vector<int>& comm, double gamma = 1.0) {
    const std::size_t n = A.size();
    std::vector<double> k(n, 0.0);
    double two_m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) k[i] += A[i][j];
        two_m += k[i];
    }
    if (two_m == 0.0) return 0.0;
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (comm[i] == comm[j]) q += A[i][j] - gamma * k[i] * k[j] / two_m;
        }
    }
    return q / two_m;
}

// ---- agglomerative clustering ------------------------------------------

enum class Link { ward, average, complete, single };

struct MergeStep {
    double height;
    std::vector<std::size_t> a, b;  // merged member sets
};

// Naive agglomeration recomputing every cluster distance from its members.
inline std::vector<MergeStep> naive_ahc(const Points& x, Link link) {
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < x.size(); ++i) clusters.push_back({i});
    auto linkage = [&](const std::vector<std::size_t>& p, const std::vector<std::size_t>& q) {
        if (link == Link::ward) {
            const std::size_t dim = x.front().size();
            std::vector<double> cp(dim, 0.0), cq(dim, 0.0);
            for (auto i : p) for (std::size_t t = 0; t < dim; ++t) cp[t] += x[i][t] / static_cast<double>(p.size());
            for (auto i : q) for (std::size_t t = 0; t < dim; ++t) cq[t] += x[i][t] / static_cast<double>(q.size());
            const double np = static_cast<double>(p.size()), nq = static_cast<double>(q.size());
            return std::sqrt(2.0 * np * nq / (np + nq)) * dist(cp, cq);
        }
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
        for (auto i : p) {
            for (auto j : q) {
                const double d = dist(x[i], x[j]);
                lo = std::min(lo, d);
                hi = std::max(hi, d);
                sum += d;
            }
        }
        if (link == Link::single) return lo;
        if (link == Link::complete) return hi;
        return sum / static_cast<double>(p.size() * q.size());
    };
    std::vector<MergeStep> steps;
    while (clusters.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                const double d = linkage(clusters[i], clusters[j]);
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        steps.push_back({best, clusters[bi], clusters[bj]});
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        std::sort(clusters[bi].begin(), clusters[bi].end());
        clusters.erase(clusters.begin() + static_cast<long>(bj));
        // Keep clusters ordered by smallest member, like the slots they model.
        std::sort(clusters.begin(), clusters.end());
    }
    return steps;
}

// ---- scenario oracle --------------------------------------------------------

// Pairs falling in different groups over all pairs.
inline double disjoint_pair_fraction(const std::vector<std::size_t>& group_sizes) {
    double n = 0.0, same = 0.0;
    for (std::size_t g : group_sizes) {
        n += static_cast<double>(g);
        same += static_cast<double>(g) * static_cast<double>(g - 1) / 2.0;
    }
    return 1.0 - same / (n * (n - 1.0) / 2.0);
}

}  // namespace oracle
