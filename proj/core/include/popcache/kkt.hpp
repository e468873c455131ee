#pragma once

#include <span>
#include <vector>

#include "popcache/popularity.hpp"
#include "popcache/system.hpp"
#include "popcache/types.hpp"

namespace popcache {

// One coded sub-library as the solver sees it: cumulative request mass and
// file count. Consecutive and general (label-set) segmentations both reduce
// to this.
struct BlockStats {
    double mass = 0.0;
    double width = 0.0;
};

struct SolveOptions {
    bool enforce_lower = true;  // level >= 1
    bool enforce_upper = true;  // level <= min(K_T, K*mass/Lambda)
};

// Final clamp pattern of a solve: indices (into the block array) clamped low,
// clamped at the cap, and interior, plus the budget bookkeeping of the
// interior set.
struct ActiveSetState {
    std::vector<int> lower;
    std::vector<int> upper;
    std::vector<int> interior;
    double lower_files = 0.0;      // sum of widths clamped at level 1
    double upper_budget = 0.0;     // sum of cap*width over capped blocks
    double residual_budget = 0.0;  // budget left to the interior set
};

struct LevelSolveResult {
    std::vector<double> levels;
    std::vector<ClampLabel> labels;
    ActiveSetState active;
    double budget_used = 0.0;
    bool budget_tight = false;
};

// Per-block level cap from the multicast-rate constraint.
double level_cap(const SystemConfig& cfg, double mass);

// True when every block admits some level in [1, cap].
bool blocks_feasible(const SystemConfig& cfg, std::span<const BlockStats> blocks);

// Optimal levels for fixed sub-libraries: minimizes the expected delay subject
// to the aggregate budget and the per-block box constraints. Exact: finds the
// budget multiplier by a breakpoint sweep over the piecewise-linear usage
// curve, then reads the clamp pattern off it.
LevelSolveResult solve_levels(const SystemConfig& cfg, double broadcast_files,
                              std::span<const BlockStats> blocks,
                              const SolveOptions& opts = {});

// Expected delay of explicit levels (no feasibility checks).
double delay_of_levels(const SystemConfig& cfg, double broadcast_files,
                       std::span<const BlockStats> blocks, std::span<const double> levels);

// Optimal delay of explicit blocks, +inf when some block admits no feasible
// level. Allocation-free; meant for search inner loops.
double optimal_blocks_delay_or_inf(const SystemConfig& cfg, double broadcast_files,
                                   std::span<const BlockStats> blocks);

// Closed form of the optimized delay when no clamp is active:
// n1 + A * (sum sqrt(mass*width))^2 / (L*N - n1).
double interior_delay_formula(const SystemConfig& cfg, double broadcast_files,
                              std::span<const BlockStats> blocks);

// ---- segmentation-level wrappers ----

void validate_segmentation(const Segmentation& seg, std::int64_t n_files);

// Mass/width stats of the coded sub-libraries (q >= 2); for the unsegmented
// Q == 1 reference this is the single whole-library block.
std::vector<BlockStats> coded_blocks(const SystemConfig& cfg, const PopularityModel& model,
                                     const Segmentation& seg);

RedundancyAllocation solve_allocation(const SystemConfig& cfg, const PopularityModel& model,
                                      const Segmentation& seg);

// Expected delay of an explicit allocation; validates levels against the box
// constraints and the budget.
double expected_delay(const SystemConfig& cfg, const PopularityModel& model,
                      const Segmentation& seg, const RedundancyAllocation& alloc);

// Expected delay under the optimal allocation; +inf when some block admits no
// feasible level. The no-throw path the boundary search runs on.
double optimized_delay_or_inf(const SystemConfig& cfg, const PopularityModel& model,
                              const Segmentation& seg);

double optimized_delay(const SystemConfig& cfg, const PopularityModel& model,
                       const Segmentation& seg);

}  // namespace popcache
