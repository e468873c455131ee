#include "popcache/kkt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "popcache/errors.hpp"

namespace popcache {

namespace {

constexpr double kClampTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// K(1-gamma)/(1+Lambda*gamma): the per-unit-mass delay scale of a coded block.
double delay_scale(const SystemConfig& cfg) {
    return static_cast<double>(cfg.K) * (1.0 - cfg.gamma) / cfg.coded_speedup();
}

struct SweepScratch {
    std::vector<double> lo, hi, rate, breaks;
};

SweepScratch& scratch() {
    static thread_local SweepScratch s;
    return s;
}

// Finds the budget multiplier. The unconstrained stationary level of block q
// is s * rate_q with rate_q = sqrt(mass_q/width_q) and a shared factor s; the
// budget usage n1 + sum width_q * clamp(s*rate_q, lo_q, hi_q) is continuous,
// piecewise linear and non-decreasing in s, so the tight multiplier is found
// exactly by walking the breakpoints. s = +inf means the budget is slack and
// every block rides its cap.
double multiplier_sweep(const SystemConfig& cfg, double broadcast_files,
                        std::span<const BlockStats> blocks, const SolveOptions& opts,
                        SweepScratch& ws) {
    const std::size_t n = blocks.size();
    const double budget = cfg.L * static_cast<double>(cfg.N);

    ws.lo.resize(n);
    ws.hi.resize(n);
    ws.rate.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
        if (!(blocks[q].width >= 1.0))
            throw InvalidSegmentationError("solve_levels: empty coded sub-library");
        ws.lo[q] = opts.enforce_lower ? 1.0 : 0.0;
        ws.hi[q] = opts.enforce_upper ? level_cap(cfg, blocks[q].mass) : kInf;
        if (ws.hi[q] < ws.lo[q] - kClampTol)
            throw InfeasibleError("solve_levels: block cap below the minimum level");
        ws.hi[q] = std::max(ws.hi[q], ws.lo[q]);
        ws.rate[q] = std::sqrt(blocks[q].mass / blocks[q].width);
    }

    auto usage_at = [&](double s) {
        double u = broadcast_files;
        for (std::size_t q = 0; q < n; ++q)
            u += blocks[q].width * std::clamp(s * ws.rate[q], ws.lo[q], ws.hi[q]);
        return u;
    };

    double usage_max = broadcast_files;
    for (std::size_t q = 0; q < n; ++q) usage_max += blocks[q].width * ws.hi[q];
    if (usage_max <= budget * (1.0 + kClampTol)) return kInf;

    ws.breaks.clear();
    for (std::size_t q = 0; q < n; ++q) {
        if (ws.rate[q] <= 0.0) continue;  // zero-mass block, pinned low
        ws.breaks.push_back(ws.lo[q] / ws.rate[q]);
        if (std::isfinite(ws.hi[q])) ws.breaks.push_back(ws.hi[q] / ws.rate[q]);
    }
    std::sort(ws.breaks.begin(), ws.breaks.end());

    double s_base = 0.0;
    for (double b : ws.breaks) {
        if (usage_at(b) <= budget)
            s_base = b;
        else
            break;
    }
    // The crossing lies in the breakpoint-free segment just above s_base, so
    // the slope there is constant. Breakpoints are quotients, so compare with
    // a tolerance: a block within round-off of its cap is saturated, not
    // growing.
    double slope = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        double v = s_base * ws.rate[q];
        bool above_lo = v >= ws.lo[q] - kClampTol * std::max(1.0, ws.lo[q]);
        bool below_hi =
            !std::isfinite(ws.hi[q]) || v < ws.hi[q] - kClampTol * std::max(1.0, ws.hi[q]);
        if (ws.rate[q] > 0.0 && above_lo && below_hi) slope += blocks[q].width * ws.rate[q];
    }
    double used = usage_at(s_base);
    return slope > 0.0 ? s_base + (budget - used) / slope : s_base;
}

}  // namespace

double level_cap(const SystemConfig& cfg, double mass) {
    return std::min(static_cast<double>(cfg.K_T),
                    static_cast<double>(cfg.K) * mass / static_cast<double>(cfg.Lambda));
}

bool blocks_feasible(const SystemConfig& cfg, std::span<const BlockStats> blocks) {
    for (const BlockStats& b : blocks)
        if (level_cap(cfg, b.mass) < 1.0 - kClampTol) return false;
    return true;
}

LevelSolveResult solve_levels(const SystemConfig& cfg, double broadcast_files,
                              std::span<const BlockStats> blocks, const SolveOptions& opts) {
    SweepScratch& ws = scratch();
    const double s_star = multiplier_sweep(cfg, broadcast_files, blocks, opts, ws);
    const std::size_t n = blocks.size();
    const double budget = cfg.L * static_cast<double>(cfg.N);

    LevelSolveResult res;
    res.levels.resize(n);
    res.labels.resize(n);
    res.budget_tight = std::isfinite(s_star);
    for (std::size_t q = 0; q < n; ++q) {
        if (!std::isfinite(s_star)) {
            // Slack budget: every block rides its cap.
            res.levels[q] = ws.hi[q];
            res.labels[q] = ClampLabel::Upper;
            res.active.upper.push_back(static_cast<int>(q));
            res.active.upper_budget += ws.hi[q] * blocks[q].width;
            continue;
        }
        double v = s_star * ws.rate[q];
        double level = std::clamp(v, ws.lo[q], ws.hi[q]);
        res.levels[q] = level;
        double tol = kClampTol * std::max(1.0, level);
        if (v < ws.lo[q] - tol) {
            res.labels[q] = ClampLabel::Lower;
            res.active.lower.push_back(static_cast<int>(q));
            res.active.lower_files += blocks[q].width;
        } else if (v > ws.hi[q] + tol) {
            res.labels[q] = ClampLabel::Upper;
            res.active.upper.push_back(static_cast<int>(q));
            res.active.upper_budget += ws.hi[q] * blocks[q].width;
        } else {
            // Exact ties at a bound count as interior: same value, and the
            // budget identity stays tight.
            res.labels[q] = ClampLabel::Interior;
            res.active.interior.push_back(static_cast<int>(q));
        }
    }
    res.active.residual_budget =
        budget - broadcast_files - res.active.lower_files - res.active.upper_budget;

    res.budget_used = broadcast_files;
    for (std::size_t q = 0; q < n; ++q) res.budget_used += res.levels[q] * blocks[q].width;
    if (res.active.interior.empty()) res.budget_tight = false;
    return res;
}

double delay_of_levels(const SystemConfig& cfg, double broadcast_files,
                       std::span<const BlockStats> blocks, std::span<const double> levels) {
    const double scale = delay_scale(cfg);
    CompensatedSum acc;
    acc.add(broadcast_files);
    for (std::size_t q = 0; q < blocks.size(); ++q)
        if (blocks[q].mass > 0.0) acc.add(scale * blocks[q].mass / levels[q]);
    return acc.value();
}

double interior_delay_formula(const SystemConfig& cfg, double broadcast_files,
                              std::span<const BlockStats> blocks) {
    CompensatedSum root_sum;
    for (const BlockStats& b : blocks) root_sum.add(std::sqrt(b.mass * b.width));
    const double s = root_sum.value();
    return broadcast_files +
           delay_scale(cfg) * s * s / (cfg.L * static_cast<double>(cfg.N) - broadcast_files);
}

void validate_segmentation(const Segmentation& seg, std::int64_t n_files) {
    if (seg.Q < 1 || static_cast<std::size_t>(seg.Q) != seg.bounds.size())
        throw InvalidSegmentationError("segmentation: Q and bounds disagree");
    if (seg.bounds.back() != n_files)
        throw InvalidSegmentationError("segmentation: last boundary must equal N");
    if (seg.bounds.front() < 0)
        throw InvalidSegmentationError("segmentation: first boundary must be >= 0");
    for (std::size_t i = 1; i < seg.bounds.size(); ++i)
        if (seg.bounds[i] <= seg.bounds[i - 1])
            throw InvalidSegmentationError("segmentation: boundaries must strictly increase");
}

std::vector<BlockStats> coded_blocks(const SystemConfig& cfg, const PopularityModel& model,
                                     const Segmentation& seg) {
    validate_segmentation(seg, cfg.N);
    std::vector<BlockStats> blocks;
    if (seg.Q == 1) {
        blocks.push_back({1.0, static_cast<double>(cfg.N)});
        return blocks;
    }
    blocks.reserve(static_cast<std::size_t>(seg.Q) - 1);
    for (int q = 1; q < seg.Q; ++q) {
        std::int64_t a = seg.bounds[static_cast<std::size_t>(q) - 1];
        std::int64_t b = seg.bounds[static_cast<std::size_t>(q)];
        blocks.push_back({cumulative_mass(model, a, b), static_cast<double>(b - a)});
    }
    return blocks;
}

namespace {

MemoryShare split_of(double level) {
    MemorySharingSplit s = memory_sharing_split(level);
    return MemoryShare{s.floor_level, s.ceil_level, s.frac_hi};
}

}  // namespace

RedundancyAllocation solve_allocation(const SystemConfig& cfg, const PopularityModel& model,
                                      const Segmentation& seg) {
    RedundancyAllocation alloc;
    if (seg.Q == 1) {
        // Unsegmented reference: whole library at the aggregate redundancy.
        validate_segmentation(seg, cfg.N);
        alloc.levels = {cfg.L};
        alloc.labels = {ClampLabel::Interior};
        alloc.splits = {split_of(cfg.L)};
        alloc.budget_used = cfg.L * static_cast<double>(cfg.N);
        alloc.budget_tight = true;
        return alloc;
    }

    const std::vector<BlockStats> blocks = coded_blocks(cfg, model, seg);
    const LevelSolveResult r =
        solve_levels(cfg, static_cast<double>(seg.broadcast_files()), blocks);

    alloc.levels.reserve(blocks.size() + 1);
    alloc.labels.reserve(blocks.size() + 1);
    alloc.splits.reserve(blocks.size() + 1);
    alloc.levels.push_back(1.0);
    alloc.labels.push_back(ClampLabel::Broadcast);
    alloc.splits.push_back(split_of(1.0));
    for (std::size_t q = 0; q < blocks.size(); ++q) {
        alloc.levels.push_back(r.levels[q]);
        alloc.labels.push_back(r.labels[q]);
        alloc.splits.push_back(split_of(r.levels[q]));
    }
    alloc.budget_used = r.budget_used;
    alloc.budget_tight = r.budget_tight;
    return alloc;
}

double expected_delay(const SystemConfig& cfg, const PopularityModel& model,
                      const Segmentation& seg, const RedundancyAllocation& alloc) {
    validate_segmentation(seg, cfg.N);
    if (alloc.levels.size() != static_cast<std::size_t>(seg.Q))
        throw InvalidParameterError("expected_delay: allocation size does not match Q");

    if (seg.Q == 1) {
        const double level = alloc.levels[0];
        if (level < 1.0 - kClampTol || level > static_cast<double>(cfg.K_T) + kClampTol)
            throw ConstraintViolationError("level_box:1", "expected_delay: level out of [1, K_T]");
        return delay_scale(cfg) / level;
    }

    const std::vector<BlockStats> blocks = coded_blocks(cfg, model, seg);
    if (alloc.levels[0] != 1.0)
        throw ConstraintViolationError("broadcast_level",
                                       "expected_delay: sub-library 1 must have level 1");
    double used = static_cast<double>(seg.broadcast_files());
    for (std::size_t q = 0; q < blocks.size(); ++q) {
        const double level = alloc.levels[q + 1];
        const double cap = level_cap(cfg, blocks[q].mass);
        const double tol = 1e-9 * std::max(1.0, cap);
        if (level < 1.0 - tol || level > cap + tol)
            throw ConstraintViolationError("level_box:" + std::to_string(q + 2),
                                           "expected_delay: level outside [1, cap]");
        used += level * blocks[q].width;
    }
    const double budget = cfg.L * static_cast<double>(cfg.N);
    if (used > budget * (1.0 + 1e-9))
        throw ConstraintViolationError("budget", "expected_delay: aggregate cache budget exceeded");

    return delay_of_levels(cfg, static_cast<double>(seg.broadcast_files()), blocks,
                           std::span<const double>(alloc.levels).subspan(1));
}

double optimal_blocks_delay_or_inf(const SystemConfig& cfg, double broadcast_files,
                                   std::span<const BlockStats> blocks) {
    if (!blocks_feasible(cfg, blocks)) return kInf;

    // Lean path: compute the multiplier and fold the clamped levels straight
    // into the delay without materializing the solve result.
    SweepScratch& ws = scratch();
    const double s_star = multiplier_sweep(cfg, broadcast_files, blocks, {}, ws);
    const double scale = delay_scale(cfg);
    CompensatedSum acc;
    acc.add(broadcast_files);
    for (std::size_t q = 0; q < blocks.size(); ++q) {
        double v = std::isfinite(s_star) ? s_star * ws.rate[q] : ws.hi[q];
        double level = std::clamp(v, ws.lo[q], ws.hi[q]);
        if (blocks[q].mass > 0.0) acc.add(scale * blocks[q].mass / level);
    }
    return acc.value();
}

double optimized_delay_or_inf(const SystemConfig& cfg, const PopularityModel& model,
                              const Segmentation& seg) {
    if (seg.Q == 1) return uniform_delay(cfg);
    const std::vector<BlockStats> blocks = coded_blocks(cfg, model, seg);
    return optimal_blocks_delay_or_inf(cfg, static_cast<double>(seg.broadcast_files()), blocks);
}

double optimized_delay(const SystemConfig& cfg, const PopularityModel& model,
                       const Segmentation& seg) {
    const double d = optimized_delay_or_inf(cfg, model, seg);
    if (!std::isfinite(d))
        throw InfeasibleError("optimized_delay: a coded sub-library admits no feasible level");
    return d;
}

}  // namespace popcache
