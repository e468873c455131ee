#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "popcache/errors.hpp"
#include "popcache/kkt.hpp"
#include "popcache/placement.hpp"

using namespace popcache;

namespace {

// file -> total stored fraction per transmitter, and the transmitter count per
// distinct fraction (split parts land on distinct transmitter sets).
std::map<std::int64_t, std::map<std::int64_t, double>> tally(const TransmitterPlacement& p) {
    std::map<std::int64_t, std::map<std::int64_t, double>> by_file;
    for (std::size_t t = 0; t < p.per_tx.size(); ++t)
        for (const FileShare& s : p.per_tx[t]) by_file[s.file][(std::int64_t)t] += s.fraction;
    return by_file;
}

}  // namespace

TEST_CASE("worked six-file example") {
    // Three transmitters, half-library caches; broadcast block {1,2,3} at one
    // copy each, coded block {4,5,6} at two copies each.
    auto cfg = make_config(6, 6, 3, 0.5, 0.5, 2, 2);
    Segmentation seg{2, {3, 6}};
    RedundancyAllocation alloc;
    alloc.levels = {1.0, 2.0};
    alloc.labels = {ClampLabel::Broadcast, ClampLabel::Interior};
    alloc.splits = {{1, 2, 0.0}, {2, 3, 0.0}};

    auto p = place_transmitters(cfg, seg, alloc);
    auto files_of = [&](std::size_t t) {
        std::vector<std::int64_t> v;
        for (const FileShare& s : p.per_tx[t]) v.push_back(s.file);
        std::sort(v.begin(), v.end());
        return v;
    };
    CHECK(files_of(0) == std::vector<std::int64_t>{1, 4, 5});
    CHECK(files_of(1) == std::vector<std::int64_t>{2, 4, 6});
    CHECK(files_of(2) == std::vector<std::int64_t>{3, 5, 6});
    for (double load : p.loads) CHECK(load == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(p.capacity == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(p.cursor_trace == std::vector<std::int64_t>{1, 1});
}

TEST_CASE("unit redundancy walks the diagonal") {
    auto cfg = make_config(4, 4, 4, 0.5, 0.25, 2, 2);
    Segmentation seg{2, {0, 4}};
    RedundancyAllocation alloc;
    alloc.levels = {1.0, 1.0};
    alloc.labels = {ClampLabel::Broadcast, ClampLabel::Lower};
    alloc.splits = {{1, 2, 0.0}, {1, 2, 0.0}};
    auto p = place_transmitters(cfg, seg, alloc);
    for (std::size_t t = 0; t < 4; ++t) {
        REQUIRE(p.per_tx[t].size() == 1);
        CHECK(p.per_tx[t][0].file == (std::int64_t)t + 1);
        CHECK(p.per_tx[t][0].fraction == 1.0);
    }
}

TEST_CASE("full replication stores everything everywhere") {
    auto cfg = make_config(4, 4, 3, 0.5, 1.0, 2, 2);
    Segmentation seg{2, {0, 4}};
    RedundancyAllocation alloc;
    alloc.levels = {1.0, 3.0};
    alloc.labels = {ClampLabel::Broadcast, ClampLabel::Upper};
    alloc.splits = {{1, 2, 0.0}, {3, 4, 0.0}};
    auto p = place_transmitters(cfg, seg, alloc);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(p.per_tx[t].size() == 4);
        CHECK(p.loads[t] == doctest::Approx(4.0).epsilon(1e-12));
    }
}

TEST_CASE("fractional levels split files across two transmitter sets") {
    auto cfg = make_config(4, 4, 4, 0.5, 0.625, 2, 2);  // L = 2.5
    Segmentation seg{2, {0, 4}};
    RedundancyAllocation alloc;
    alloc.levels = {1.0, 2.5};
    alloc.labels = {ClampLabel::Broadcast, ClampLabel::Interior};
    alloc.splits = {{1, 2, 0.0}, {2, 3, 0.5}};
    auto p = place_transmitters(cfg, seg, alloc);

    auto by_file = tally(p);
    for (std::int64_t f = 1; f <= 4; ++f) {
        double total = 0.0;
        for (auto& [tx, frac] : by_file[f]) total += frac;
        CHECK(total == doctest::Approx(2.5).epsilon(1e-12));
    }
    double total_load = 0.0;
    for (double l : p.loads) {
        total_load += l;
        CHECK(l <= p.capacity + 1.0 + 1e-9);
    }
    CHECK(total_load == doctest::Approx(10.0).epsilon(1e-12));  // 4 files * 2.5
}

TEST_CASE("split-aware redundancy counts") {
    auto cfg = make_config(9, 4, 5, 0.5, 0.7, 2, 2);  // L = 3.5, budget 31.5
    Segmentation seg{2, {1, 9}};
    RedundancyAllocation alloc;
    alloc.levels = {1.0, 3.3};  // budget 1 + 8*3.3 = 27.4, slack
    alloc.labels = {ClampLabel::Broadcast, ClampLabel::Interior};
    alloc.splits = {{1, 2, 0.0}, {3, 4, 0.3}};
    auto p = place_transmitters(cfg, seg, alloc);
    auto by_file = tally(p);
    CHECK(by_file[1].size() == 1);  // broadcast file: one copy
    for (std::int64_t f = 2; f <= 9; ++f) {
        int hi = 0, lo = 0;
        for (auto& [tx, frac] : by_file[f]) {
            if (std::abs(frac - 0.3) < 1e-12) ++hi;
            else if (std::abs(frac - 0.7) < 1e-12) ++lo;
            else if (std::abs(frac - 1.0) < 1e-12) { ++hi; ++lo; }  // co-located parts
            else FAIL("unexpected fraction");
        }
        CHECK(hi == 4);  // ceil part
        CHECK(lo == 3);  // floor part
    }
}

TEST_CASE("integer tight allocations fill every transmitter exactly") {
    std::mt19937_64 rng(31415);
    for (int rep = 0; rep < 40; ++rep) {
        int blocks = 1 + (int)(rng() % 3);
        std::vector<std::int64_t> widths, levels;
        std::int64_t n1 = (std::int64_t)(rng() % 4);
        std::int64_t n = n1;
        double used = (double)n1;
        std::int64_t max_level = 0;
        for (int b = 0; b < blocks; ++b) {
            std::int64_t w = 1 + (std::int64_t)(rng() % 20);
            std::int64_t lv = 1 + (std::int64_t)(rng() % 5);
            widths.push_back(w);
            levels.push_back(lv);
            n += w;
            used += (double)(lv * w);
            max_level = std::max(max_level, lv);
        }
        // Pick K_T dividing the total so per-transmitter equality is possible.
        std::int64_t usage = (std::int64_t)used;
        std::int64_t k_t = 0;
        for (std::int64_t d = std::max<std::int64_t>(2, max_level); d <= usage; ++d)
            if (usage % d == 0 && d >= max_level && usage / d >= 1) { k_t = d; break; }
        if (k_t == 0 || usage / k_t < 1) continue;
        double gamma_t = used / ((double)n * (double)k_t);
        if (gamma_t > 1.0 || gamma_t < 1.0 / (double)k_t) continue;

        SystemConfig cfg;
        try {
            cfg = make_config(n, 4, k_t, 0.5, gamma_t, 2, 2);
        } catch (...) { continue; }
        Segmentation seg;
        seg.Q = blocks + 1;
        seg.bounds.resize(blocks + 1);
        seg.bounds[0] = n1;
        for (int b = 0; b < blocks; ++b) seg.bounds[b + 1] = seg.bounds[b] + widths[b];
        RedundancyAllocation alloc;
        alloc.levels.push_back(1.0);
        alloc.labels.push_back(ClampLabel::Broadcast);
        alloc.splits.push_back({1, 2, 0.0});
        for (int b = 0; b < blocks; ++b) {
            alloc.levels.push_back((double)levels[b]);
            alloc.labels.push_back(ClampLabel::Interior);
            alloc.splits.push_back({levels[b], levels[b] + 1, 0.0});
        }
        auto p = place_transmitters(cfg, seg, alloc);
        const double cap = cfg.gamma_T * (double)cfg.N;
        for (double load : p.loads) CHECK(load == doctest::Approx(cap).epsilon(1e-9));
        auto by_file = tally(p);
        for (std::int64_t f = 1; f <= n1; ++f) CHECK(by_file[f].size() == 1);
        std::int64_t f = n1 + 1;
        for (int b = 0; b < blocks; ++b)
            for (std::int64_t i = 0; i < widths[b]; ++i, ++f)
                CHECK((std::int64_t)by_file[f].size() == levels[b]);
    }
}

TEST_CASE("budget violations are rejected before placement") {
    auto cfg = make_config(6, 6, 3, 0.5, 0.5, 2, 2);  // budget 9
    Segmentation seg{2, {0, 6}};
    RedundancyAllocation alloc;
    alloc.levels = {1.0, 2.0};  // 12 > 9
    alloc.labels = {ClampLabel::Broadcast, ClampLabel::Interior};
    alloc.splits = {{1, 2, 0.0}, {2, 3, 0.0}};
    CHECK_THROWS_AS(place_transmitters(cfg, seg, alloc), ConstraintViolationError);
}

TEST_CASE("receiver placement: ten caches, ten groups") {
    auto cfg = make_config(20, 50, 5, 0.1, 0.4, 10, 10);
    auto r = place_receivers(cfg);
    CHECK(r.num_subfiles == 10);  // C(10,1)
    REQUIRE(r.tau_sets.size() == 10);
    CHECK(r.tau_sets[0] == std::vector<int>{1});
    CHECK(r.cache_subfiles[0] == std::vector<std::int64_t>{0});
    // Group 1 = users {1, 11, 21, 31, 41}.
    for (std::int64_t u : {0, 10, 20, 30, 40}) CHECK(r.user_to_cache[u] == 1);
    CHECK(r.user_to_cache[1] == 2);
}

TEST_CASE("receiver placement stores exactly a gamma fraction") {
    auto cfg = make_config(10, 50, 5, 0.1, 0.4, 100000, 40);
    auto r = place_receivers(cfg);
    CHECK(r.num_subfiles == 91390);  // C(40,4)
    for (const auto& cache : r.cache_subfiles) {
        CHECK((std::int64_t)cache.size() == 9139);  // C(39,3) = gamma * C(40,4)
    }
}

TEST_CASE("two-cache receiver placement") {
    auto cfg = make_config(4, 4, 2, 0.5, 0.5, 2, 2);
    auto r = place_receivers(cfg);
    CHECK(r.num_subfiles == 2);
    CHECK(r.tau_sets[0] == std::vector<int>{1});
    CHECK(r.tau_sets[1] == std::vector<int>{2});
    CHECK(r.cache_subfiles[0] == std::vector<std::int64_t>{0});
    CHECK(r.cache_subfiles[1] == std::vector<std::int64_t>{1});
}
