#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "popcache/errors.hpp"
#include "popcache/oracle.hpp"
#include "popcache/search.hpp"

using namespace popcache;

namespace {

SystemConfig scenario1(std::int64_t k) { return make_config(6000, k, 50, 0.1, 0.1, 100000, 40); }

// The small setting used across search tests: N=8, K=40, Lambda=4, K_T=4,
// gamma=1/4, gamma_T=1/2.
SystemConfig toy_config() { return make_config(8, 40, 4, 0.25, 0.5, 4, 4); }

SystemConfig random_config(std::mt19937_64& rng, std::int64_t max_n) {
    std::int64_t n = 6 + (std::int64_t)(rng() % (std::uint64_t)(max_n - 5));
    std::int64_t lambda = 2 + (std::int64_t)(rng() % 3);
    double gamma = 1.0 / (double)lambda;
    std::int64_t k = lambda * (2 + (std::int64_t)(rng() % 40));
    std::int64_t k_t = 2 + (std::int64_t)(rng() % 5);
    double gamma_t = (1.0 + (double)(rng() % 1000) / 1000.0 * (double)(k_t - 1)) / (double)k_t;
    return make_config(n, k, k_t, gamma, gamma_t, lambda, lambda);
}

}  // namespace

TEST_CASE("single sub-library gives the reference delay") {
    auto cfg = toy_config();
    auto model = build_popularity(8, 1.0);
    auto r = optimize_boundaries(cfg, model, 1);
    CHECK(r.seg.Q == 1);
    CHECK(r.seg.bounds == std::vector<std::int64_t>{8});
    CHECK(r.delay == doctest::Approx(uniform_delay(cfg)).epsilon(1e-15));
    CHECK_THROWS_AS(optimize_boundaries(cfg, model, 9), InvalidParameterError);
}

TEST_CASE("toy instance matches exhaustive enumeration") {
    auto cfg = toy_config();
    auto model = build_popularity(8, 1.0);
    auto searched = optimize_boundaries(cfg, model, 2);
    auto brute = brute_optimal(cfg, model, 2);
    CHECK(searched.delay == brute.best.expected_delay);
    CHECK(searched.seg.bounds == brute.best.seg.bounds);
}

TEST_CASE("search equals brute force on random small instances") {
    std::mt19937_64 rng(2024);
    int cases = 0;
    while (cases < 60) {
        auto cfg = random_config(rng, 14);
        auto model = build_popularity(cfg.N, (double)(rng() % 2001) / 1000.0);
        int q = 1 + (int)(rng() % 3);
        if ((std::int64_t)q > cfg.N) continue;
        ++cases;
        double searched = optimize_boundaries(cfg, model, q).delay;
        try {
            double brute = brute_optimal(cfg, model, q).best.expected_delay;
            CHECK(searched == brute);
        } catch (const InfeasibleError&) {
            CHECK(!std::isfinite(searched));
        }
    }
}

TEST_CASE("suffix decisions are globally consistent") {
    // Bellman check: with the prefix frozen at the returned optimum, no other
    // completion does better.
    std::mt19937_64 rng(555);
    int cases = 0;
    while (cases < 20) {
        auto cfg = random_config(rng, 13);
        auto model = build_popularity(cfg.N, 0.4 + (double)(rng() % 1400) / 1000.0);
        auto r = optimize_boundaries(cfg, model, 3);
        if (!std::isfinite(r.delay)) continue;
        ++cases;
        Segmentation seg = r.seg;
        for (std::int64_t n2 = seg.bounds[0] + 1; n2 < cfg.N; ++n2) {
            Segmentation alt{3, {seg.bounds[0], n2, cfg.N}};
            CHECK(optimized_delay_or_inf(cfg, model, alt) >= r.delay - 1e-12);
        }
    }
}

TEST_CASE("without the level cap, more sub-libraries never hurt") {
    auto cfg = make_config(12, 24, 3, 0.5, 2.0 / 3.0, 2, 2);
    auto model = build_popularity(12, 1.1);
    SolveOptions unbounded{true, false};

    double prev = uniform_delay(cfg);
    for (int q = 2; q <= 5; ++q) {
        double best = std::numeric_limits<double>::infinity();
        for_each_consecutive(cfg.N, q, [&](const Segmentation& seg) {
            auto blocks = coded_blocks(cfg, model, seg);
            auto lv = solve_levels(cfg, (double)seg.broadcast_files(), blocks, unbounded);
            best = std::min(best, delay_of_levels(cfg, (double)seg.broadcast_files(), blocks,
                                                  lv.levels));
        });
        CHECK(best <= prev + 1e-9);
        prev = best;
    }
}

TEST_CASE("splitting the last sub-library in two leaves the delay unchanged") {
    auto cfg = make_config(12, 24, 3, 0.5, 2.0 / 3.0, 2, 2);
    auto model = build_popularity(12, 0.9);
    Segmentation seg{3, {1, 6, 12}};
    auto blocks = coded_blocks(cfg, model, seg);
    std::vector<double> levels{2.0, 1.5};
    double before = delay_of_levels(cfg, 1.0, blocks, levels);

    Segmentation split{4, {1, 6, 9, 12}};
    auto blocks2 = coded_blocks(cfg, model, split);
    std::vector<double> levels2{2.0, 1.5, 1.5};
    double after = delay_of_levels(cfg, 1.0, blocks2, levels2);
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("evaluation counts stay within the bisection budget") {
    auto check_budget = [](const SystemConfig& cfg, const PopularityModel& model, int q) {
        SearchTrace trace;
        optimize_boundaries(cfg, model, q, &trace);
        double budget = 4.0 * std::pow(std::log2((double)cfg.N), q);
        CHECK((double)trace.evaluations <= budget);
    };
    auto toy = toy_config();
    auto toy_model = build_popularity(8, 1.0);
    check_budget(toy, toy_model, 2);
    check_budget(toy, toy_model, 3);

    auto cfg = scenario1(1000);
    auto model = build_popularity(6000, 0.6);
    check_budget(cfg, model, 2);
    check_budget(cfg, model, 3);
    check_budget(cfg, model, 4);
}

TEST_CASE("full optimization on published rows") {
    {
        auto cfg = scenario1(300);
        auto model = build_popularity(6000, 1.6);
        Solution sol = optimize_all(cfg, model);
        auto tf = table_form(cfg, sol);
        REQUIRE(tf.n_star.size() == 1);
        CHECK(tf.n_star[0] == 1);
        CHECK(tf.level_bar[0] == doctest::Approx(4.2058).epsilon(1e-2));
        CHECK(sol.gain > 1.0);
    }
    {
        auto cfg = scenario1(1000);
        auto model = build_popularity(6000, 0.6);
        SearchTrace tr;
        Solution sol = optimize_all(cfg, model, 8, &tr);
        auto tf = table_form(cfg, sol);
        REQUIRE(tf.n_star.size() == 3);
        CHECK(std::abs(tf.n_star[0] - 0) <= 5);
        CHECK(std::abs(tf.n_star[1] - 634) <= 5);
        CHECK(std::abs(tf.n_star[2] - 2262) <= 5);
        CHECK(tf.level_bar[0] == doctest::Approx(9.8119).epsilon(1e-2));
        CHECK(tf.level_bar[1] == doctest::Approx(5.4960).epsilon(1e-2));
        CHECK(tf.level_bar[2] == doctest::Approx(3.9679).epsilon(1e-2));
    }
}

TEST_CASE("flat popularity keeps the unsegmented scheme") {
    auto cfg = scenario1(300);
    auto model = build_popularity(6000, 0.0);
    SearchTrace tr;
    Solution sol = optimize_all(cfg, model, 8, &tr);
    CHECK(tr.q_star == 1);
    CHECK(sol.gain == doctest::Approx(1.0).epsilon(1e-12));
    auto tf = table_form(cfg, sol);
    CHECK(tf.n_star == std::vector<std::int64_t>{0});
    CHECK(tf.level_bar[0] == doctest::Approx(cfg.L).epsilon(1e-12));
}

TEST_CASE("optimizer output improves on the reference or matches it") {
    std::mt19937_64 rng(808);
    for (int rep = 0; rep < 25; ++rep) {
        auto cfg = random_config(rng, 40);
        double alpha = (double)(rng() % 2001) / 1000.0;
        auto model = build_popularity(cfg.N, alpha);
        SearchTrace tr;
        Solution sol = optimize_all(cfg, model, 6, &tr);
        CHECK(sol.gain >= 1.0 - 1e-9);
        if (alpha > 0.0 && tr.q_star > 1) CHECK(sol.gain > 1.0);
    }
}

TEST_CASE("search is deterministic") {
    auto cfg = scenario1(500);
    auto model = build_popularity(6000, 1.2);
    Solution a = optimize_all(cfg, model);
    Solution b = optimize_all(cfg, model);
    CHECK(a.seg.bounds == b.seg.bounds);
    CHECK(a.expected_delay == b.expected_delay);
    CHECK(a.alloc.levels == b.alloc.levels);
}
