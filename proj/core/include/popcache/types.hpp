#pragma once

#include <cstdint>
#include <vector>

namespace popcache {

// Which bound (if any) the solved redundancy level sits on.
enum class ClampLabel {
    Broadcast,  // sub-library 1, level pinned to 1 by construction
    Lower,      // clamped at level 1
    Upper,      // clamped at the per-sub-library cap
    Interior,   // water-filling stationary point
};

// Fractional level realized by caching one part of each file at `lo`
// transmitters and the complementary part at `lo + 1`.
struct MemoryShare {
    std::int64_t lo = 1;
    std::int64_t hi = 2;
    double frac_hi = 0.0;  // fraction of the file stored with redundancy `hi`
};

// Library split into Q sub-libraries of consecutive popularity ranks.
// bounds holds n_1..n_Q with n_Q = N; sub-library q covers files
// (n_{q-1}, n_q]. Q >= 2 makes sub-library 1 the plain-broadcast block
// (possibly empty when n_1 = 0). Q == 1 is the unsegmented reference scheme:
// the whole library cached with the aggregate redundancy.
struct Segmentation {
    int Q = 1;
    std::vector<std::int64_t> bounds;

    std::int64_t broadcast_files() const { return Q >= 2 ? bounds.front() : 0; }
    std::int64_t total_files() const { return bounds.back(); }
};

// Per-sub-library redundancy levels, aligned with Segmentation.bounds.
struct RedundancyAllocation {
    std::vector<double> levels;
    std::vector<ClampLabel> labels;
    std::vector<MemoryShare> splits;
    double budget_used = 0.0;
    bool budget_tight = false;  // some level sits at the water-filling interior
};

struct Solution {
    Segmentation seg;
    RedundancyAllocation alloc;
    double expected_delay = 0.0;
    double uniform_delay = 0.0;
    double gain = 1.0;  // uniform_delay / expected_delay
};

}  // namespace popcache
