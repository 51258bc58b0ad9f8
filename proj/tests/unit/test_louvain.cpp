#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "storychain/cluster.hpp"
#include "storychain/errors.hpp"

using namespace storychain;

namespace {

PairwiseMatrix similarity(const std::vector<std::vector<double>>& s) {
    PairwiseMatrix m;
    m.metric = PairMetric::cosine_similarity;
    for (std::size_t i = 0; i < s.size(); ++i) {
        m.doc_ids.push_back("n" + std::to_string(i));
        for (double v : s[i]) m.values.push_back(v);
    }
    return m;
}

std::vector<std::vector<double>> random_similarities(std::mt19937_64& gen, std::size_t n, std::size_t groups) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> s(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        s[i][i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same = i % groups == j % groups;
            const double v = same ? 0.4 + 0.6 * u(gen) : 0.7 * u(gen);
            s[i][j] = s[j][i] = v;
        }
    }
    return s;
}

// Dense adjacency of the thresholded graph, as the modularity oracle wants it.
std::vector<std::vector<double>> adjacency(const std::vector<std::vector<double>>& s, double threshold) {
    auto a = s;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) a[i][j] = (i != j && s[i][j] > threshold) ? s[i][j] : 0.0;
    return a;
}

double best_modularity(const std::vector<std::vector<double>>& a, std::vector<int>* best = nullptr) {
    double q_best = -1e300;
    oracle::for_each_partition(a.size(), [&](const std::vector<int>& p) {
        const double q = oracle::modularity(a, p);
        if (q > q_best + 1e-12) {
            q_best = q;
            if (best) *best = p;
        }
    });
    return q_best;
}

}  // namespace

TEST_CASE("two 3-cliques are found and are the exhaustive optimum") {
    std::vector<std::vector<double>> s(6, std::vector<double>(6, 0.0));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) s[i][j] = i == j ? 1.0 : (i / 3 == j / 3 ? 0.9 : 0.0);
    const auto a = louvain_cluster(similarity(s), {0.5, 1.0, 3});
    CHECK(a.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
    std::size_t partitions = 0;
    oracle::for_each_partition(6, [&](const std::vector<int>&) { ++partitions; });
    CHECK(partitions == 203);
    std::vector<int> opt;
    const double q = best_modularity(adjacency(s, 0.5), &opt);
    CHECK(oracle::same_partition(opt, a.labels));
    CHECK(modularity(similarity_graph(similarity(s), 0.5), a.labels) == doctest::Approx(q).epsilon(1e-12));
    CHECK(q == doctest::Approx(0.5));
}

TEST_CASE("no edges above threshold gives singletons") {
    std::vector<std::vector<double>> s(5, std::vector<double>(5, 0.3));
    for (std::size_t i = 0; i < 5; ++i) s[i][i] = 1.0;
    const auto a = louvain_cluster(similarity(s), {0.5, 1.0, 0});
    CHECK(a.cluster_count() == 5);
    CHECK(a.noise_count() == 0);
}

TEST_CASE("complete graph does not lose modularity versus singletons") {
    std::vector<std::vector<double>> s(8, std::vector<double>(8, 0.8));
    for (std::size_t i = 0; i < 8; ++i) s[i][i] = 1.0;
    const auto g = similarity_graph(similarity(s), 0.5);
    const auto a = louvain_cluster(similarity(s), {0.5, 1.0, 1});
    std::vector<int> singles(8);
    for (int i = 0; i < 8; ++i) singles[static_cast<std::size_t>(i)] = i;
    CHECK(modularity(g, a.labels) >= modularity(g, singles) - 1e-12);
}

TEST_CASE("modularity agrees with the dense formula") {
    std::mt19937_64 gen(21);
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t n = 3 + gen() % 15;
        const auto s = random_similarities(gen, n, 1 + gen() % 4);
        const double t = 0.2 + 0.1 * static_cast<double>(gen() % 5);
        const double res = 0.5 + 0.25 * static_cast<double>(gen() % 5);
        std::vector<int> comm(n);
        for (auto& c : comm) c = static_cast<int>(gen() % 4);
        const double q = modularity(similarity_graph(similarity(s), t), comm, res);
        CHECK(q == doctest::Approx(oracle::modularity(adjacency(s, t), comm, res)).epsilon(1e-12));
    }
}

TEST_CASE("small graphs: Louvain stays below the exhaustive optimum and above singletons") {
    std::mt19937_64 gen(22);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t n = 4 + gen() % 5;
        const auto s = random_similarities(gen, n, 2);
        const auto a = louvain_cluster(similarity(s), {0.45, 1.0, gen()});
        const auto adj = adjacency(s, 0.45);
        const double q = oracle::modularity(adj, a.labels);
        std::vector<int> singles(n);
        for (std::size_t i = 0; i < n; ++i) singles[i] = static_cast<int>(i);
        CHECK(q <= best_modularity(adj) + 1e-12);
        CHECK(q >= oracle::modularity(adj, singles) - 1e-12);
    }
}

TEST_CASE("modularity trace never decreases") {
    std::mt19937_64 gen(23);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 5 + gen() % 60;
        const auto s = random_similarities(gen, n, 1 + gen() % 6);
        LouvainTrace trace;
        const auto a = louvain_cluster(similarity(s), {0.3 + 0.05 * static_cast<double>(gen() % 6), 1.0, gen()}, &trace);
        REQUIRE_FALSE(trace.modularity.empty());
        for (std::size_t k = 1; k < trace.modularity.size(); ++k) {
            CHECK(trace.modularity[k] >= trace.modularity[k - 1] - 1e-12);
        }
        CHECK(trace.levels >= 1);
        CHECK(a.cluster_count() >= 1);
    }
}

TEST_CASE("deterministic given seed, labels contiguous, seed in provenance") {
    std::mt19937_64 gen(24);
    const auto s = random_similarities(gen, 40, 4);
    const auto a = louvain_cluster(similarity(s), {0.5, 1.0, 99});
    const auto b = louvain_cluster(similarity(s), {0.5, 1.0, 99});
    CHECK(a.labels == b.labels);
    CHECK(a.labels == canonical_labels(a.labels));
    CHECK(a.provenance.method == "louvain");
    CHECK(a.provenance.seed == std::optional<std::uint64_t>(99));
}

TEST_CASE("graph parameter validation") {
    CHECK_THROWS_AS((GraphParams{-0.1, 1.0, 0}.validate()), ParameterError);
    CHECK_THROWS_AS((GraphParams{0.5, 0.0, 0}.validate()), ParameterError);
}
