#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "popcache/kkt.hpp"
#include "popcache/popularity.hpp"
#include "popcache/system.hpp"
#include "popcache/types.hpp"

namespace popcache {

// Arbitrary (not necessarily consecutive) sub-library assignment:
// labels[f] in [0, Q) gives the sub-library of file f+1, label 0 being the
// broadcast one.
struct GeneralSegmentation {
    int Q = 1;
    std::vector<int> labels;
};

// Streams every boundary vector n_1 < ... < n_Q = N with n_1 >= 0, in
// lexicographic order.
void for_each_consecutive(std::int64_t n_files, int Q,
                          const std::function<void(const Segmentation&)>& fn);

// Closed-form count of what for_each_consecutive emits.
std::uint64_t consecutive_count(std::int64_t n_files, int Q);

// Streams all Q^N label assignments (empty sub-libraries included).
void for_each_general(std::int64_t n_files, int Q,
                      const std::function<void(const GeneralSegmentation&)>& fn);

std::uint64_t general_count(std::int64_t n_files, int Q);

struct BruteResult {
    Solution best;
    std::uint64_t count_checked = 0;
};

// Exact minimizer over all consecutive segmentations with Q sub-libraries,
// each scored under its optimal level vector. Small instances only.
BruteResult brute_optimal(const SystemConfig& cfg, const PopularityModel& model, int Q);

// Expected delay of a general segmentation under its optimal levels; +inf when
// some coded sub-library is empty or admits no feasible level.
double general_delay_or_inf(const SystemConfig& cfg, const PopularityModel& model,
                            const GeneralSegmentation& gseg);

struct DominanceReport {
    std::uint64_t checked = 0;
    std::uint64_t violations = 0;
    double worst_gap = 0.0;  // max of (best consecutive delay - general delay)
    std::uint64_t seed = 0;
    bool exhaustive = false;
    std::uint64_t swap_checked = 0;
    std::uint64_t swap_violations = 0;
};

// Checks that the best consecutive segmentation is never beaten by a general
// one (exhaustive when Q^N is small, else seeded sampling), and that moving a
// more popular file into the higher-redundancy sub-library of a pair never
// increases the delay, matching the closed-form difference.
DominanceReport verify_consecutive_dominance(const SystemConfig& cfg, const PopularityModel& model,
                                             int Q, std::uint64_t trials, std::uint64_t seed);

}  // namespace popcache
