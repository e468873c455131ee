#pragma once

#include <cstdint>
#include <vector>

#include "popcache/kkt.hpp"
#include "popcache/popularity.hpp"
#include "popcache/system.hpp"
#include "popcache/types.hpp"

namespace popcache {

struct QCandidate {
    int Q = 1;
    std::vector<std::int64_t> bounds;
    double delay = 0.0;
};

struct SearchTrace {
    std::uint64_t evaluations = 0;  // objective (level-solve) evaluations
    std::vector<QCandidate> best_per_q;
    int q_star = 1;
};

struct FixedQResult {
    Segmentation seg;
    double delay = 0.0;  // +inf when no candidate is feasible
};

// Best boundary vector for a fixed number of sub-libraries: recursive discrete
// bisection on each boundary, conditioned on the optimal completion of the
// later ones. Suffix solutions are memoized on (position, previous boundary).
FixedQResult optimize_boundaries(const SystemConfig& cfg, const PopularityModel& model, int Q,
                                 SearchTrace* trace = nullptr);

// Full optimization: scans Q upward, stopping at the first strict increase of
// the per-Q optimum (the objective decreases up to the best Q and increases
// after it), capped at q_max.
Solution optimize_all(const SystemConfig& cfg, const PopularityModel& model, int q_max = 8,
                      SearchTrace* trace = nullptr);

// Table-style rendering of a solution: boundaries without the trailing N, and
// the levels of the coded sub-libraries only. The unsegmented Q == 1 solution
// renders as an empty broadcast block plus one whole-library coded block.
struct TableForm {
    std::vector<std::int64_t> n_star;
    std::vector<double> level_bar;
};
TableForm table_form(const SystemConfig& cfg, const Solution& sol);

}  // namespace popcache
