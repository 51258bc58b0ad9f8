#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "storychain/cluster.hpp"
#include "storychain/errors.hpp"
#include "storychain/intrinsic_eval.hpp"

using namespace storychain;

namespace {

const std::vector<std::string> kGold4{"a", "a", "b", "b"};

VectorSpace four_points() { return fixtures::space_of(fixtures::line({0, 1, 10, 11})); }

}  // namespace

TEST_CASE("arange includes the stop value") {
    CHECK(arange(1, 150, 1).size() == 150);
    CHECK(arange(1, 150, 1).back() == 150.0);
    const auto g = arange(0.1, 0.9, 0.1);
    CHECK(g.size() == 9);
    CHECK_THROWS_AS(arange(1, 2, 0), ParameterError);
}

TEST_CASE("two-point grid on the four-point example") {
    const auto r = hyperparam_sweep(four_points(), kGold4, AhcGrid{{Linkage::single}, {0.5, 100.0}});
    REQUIRE(r.rows.size() == 2);
    // Singletons: h = 1, c = ln2 / ln4 -> V = 2/3. One cluster: h = 0.
    CHECK(r.rows[0].v_measure == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.rows[1].v_measure == 0.0);
    CHECK(std::get<AhcParams>(r.best().params).distance_threshold == 0.5);
    CHECK(r.rows[0].clusters == 4);
    CHECK(r.rows[1].clusters == 1);
}

TEST_CASE("default AHC grid has 600 rows and finds the perfect cut") {
    const auto r = hyperparam_sweep(four_points(), kGold4, AhcGrid{{std::begin(kAllLinkages), std::end(kAllLinkages)}, arange(1, 150, 1)});
    CHECK(r.rows.size() == 600);
    CHECK(r.best().v_measure == doctest::Approx(1.0));
    const auto& best = std::get<AhcParams>(r.best().params);
    // Threshold 1 merges at height exactly 1 for single, average, complete;
    // ward also sits at 1 for the pairs. Ties go to the smallest threshold
    // and then the first linkage in declared order.
    CHECK(best.distance_threshold == 1.0);
    CHECK(best.linkage == Linkage::ward);
}

TEST_CASE("equal V goes to the smaller threshold regardless of grid order") {
    const auto r = hyperparam_sweep(four_points(), kGold4, AhcGrid{{Linkage::single}, {8.0, 5.0, 2.0}});
    for (const auto& row : r.rows) CHECK(row.v_measure == doctest::Approx(1.0));
    CHECK(std::get<AhcParams>(r.best().params).distance_threshold == 2.0);
}

TEST_CASE("every row matches a direct clustering") {
    std::mt19937_64 gen(31);
    const auto pts = fixtures::blobs(gen, 30, 2, 3, 1.5);
    std::vector<std::string> gold;
    for (std::size_t i = 0; i < pts.size(); ++i) gold.push_back("g" + std::to_string(i % 3));
    const auto space = fixtures::space_of(pts);
    const auto check = [&](const GridSpec& grid) {
        const auto r = hyperparam_sweep(space, gold, grid);
        for (const auto& row : r.rows) {
            const auto a = run_clustering(space, row.params);
            const auto s = homogeneity_completeness_v(gold, a.labels);
            CHECK(row.v_measure == doctest::Approx(s.v_measure).epsilon(1e-12));
            CHECK(row.homogeneity == doctest::Approx(s.homogeneity).epsilon(1e-12));
            CHECK(r.best().v_measure >= row.v_measure);
        }
    };
    check(AhcGrid{{Linkage::average, Linkage::ward}, {0.5, 2.0, 4.0, 8.0}});
    check(DbscanGrid{{0.5, 1.5, 3.0}, {1, 3, 5}});
    check(LouvainGrid{{0.1, 0.5, 0.9}, {1.0, 0.5}, 7});
}

TEST_CASE("empty grids and mismatched gold are rejected") {
    CHECK_THROWS_AS(hyperparam_sweep(four_points(), kGold4, AhcGrid{{Linkage::ward}, {}}), ParameterError);
    CHECK_THROWS_AS(hyperparam_sweep(four_points(), kGold4, DbscanGrid{{}, {1}}), ParameterError);
    CHECK_THROWS_AS(hyperparam_sweep(four_points(), kGold4, LouvainGrid{{}, {1.0}, 0}), ParameterError);
    CHECK_THROWS_AS(hyperparam_sweep(four_points(), kGold4, AhcGrid{{Linkage::ward}, {-1.0}}), ParameterError);
    CHECK_THROWS_AS(hyperparam_sweep(four_points(), {"a", "b"}, AhcGrid{{Linkage::ward}, {1.0}}), ValidationError);
}

TEST_CASE("sweep output does not depend on thread count") {
    const auto c = generate_synthetic_corpus({5, 12, 30, 10, 3});
    const auto space = tfidf_vectorize(c, {});
    const auto gold = c.gold_labels();
    const GridSpec grid = AhcGrid{{std::begin(kAllLinkages), std::end(kAllLinkages)}, arange(0.1, 2.0, 0.1)};
    std::ostringstream a, b;
    write_sweep_csv(hyperparam_sweep(space, gold, grid, 1), a);
    write_sweep_csv(hyperparam_sweep(space, gold, grid, 4), b);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("method,params,homogeneity,completeness,v_measure,clusters,best\n", 0) == 0);
}
