#include "popcache/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace popcache {

CertifyReport certify_levels(const SystemConfig& cfg, std::span<const BlockStats> blocks,
                             const LevelSolveResult& result, bool consecutive) {
    CertifyReport rep;
    const double budget = cfg.L * static_cast<double>(cfg.N);
    const std::size_t n = blocks.size();

    // Shared multiplier over the interior set: mass/(level^2 * width).
    double lam_min = std::numeric_limits<double>::infinity();
    double lam_max = 0.0;
    for (int q : result.active.interior) {
        const BlockStats& b = blocks[static_cast<std::size_t>(q)];
        const double lv = result.levels[static_cast<std::size_t>(q)];
        const double lam = b.mass / (lv * lv * b.width);
        lam_min = std::min(lam_min, lam);
        lam_max = std::max(lam_max, lam);
    }
    const bool have_interior = !result.active.interior.empty();
    if (have_interior && lam_max > 0.0)
        rep.stationarity_spread = (lam_max - lam_min) / lam_max;

    if (have_interior)
        rep.budget_gap = std::abs(result.budget_used - budget) / budget;

    // Complementarity. With an interior multiplier: a low clamp requires the
    // unconstrained level below 1 (mass/width <= lambda), a cap clamp requires
    // it above the cap (mass/width >= lambda*cap^2). Without interior blocks:
    // slack budget admits no low clamp, and a low/cap pair must not profit
    // from shifting budget between them.
    const double tol = 1e-7;
    if (have_interior) {
        const double lam = 0.5 * (lam_min + lam_max);
        for (int q : result.active.lower) {
            const BlockStats& b = blocks[static_cast<std::size_t>(q)];
            if (b.mass / b.width > lam * (1.0 + tol)) rep.complementarity_ok = false;
        }
        for (int q : result.active.upper) {
            const BlockStats& b = blocks[static_cast<std::size_t>(q)];
            const double cap = result.levels[static_cast<std::size_t>(q)];
            if (b.mass / b.width < lam * cap * cap * (1.0 - tol)) rep.complementarity_ok = false;
        }
    } else {
        const bool slack = result.budget_used < budget * (1.0 - 1e-12);
        if (slack && !result.active.lower.empty()) rep.complementarity_ok = false;
        for (int ql : result.active.lower) {
            const BlockStats& bl = blocks[static_cast<std::size_t>(ql)];
            for (int qu : result.active.upper) {
                const BlockStats& bu = blocks[static_cast<std::size_t>(qu)];
                const double cap = result.levels[static_cast<std::size_t>(qu)];
                if (bl.mass / bl.width > bu.mass / (cap * cap * bu.width) * (1.0 + tol))
                    rep.complementarity_ok = false;
            }
        }
    }

    // Ordering across consecutive blocks holds for the unclamped stationary
    // levels (average popularity decreases with rank); mass-dependent caps can
    // invert the clamped ones, so restrict the check to interior blocks.
    if (consecutive) {
        double prev = std::numeric_limits<double>::infinity();
        for (int q : result.active.interior) {
            const double lv = result.levels[static_cast<std::size_t>(q)];
            if (lv > prev * (1.0 + 1e-9)) rep.ordering_ok = false;
            prev = lv;
        }
    }

    // Rate never exceeds the expected per-block demand (so the demand cap in
    // the per-block delivery time stays inactive) whenever Lambda >= 1/(1-gamma).
    if (static_cast<double>(cfg.Lambda) >= 1.0 / (1.0 - cfg.gamma)) {
        for (std::size_t q = 0; q < n; ++q) {
            const double rate = result.levels[q] * cfg.coded_speedup();
            if (rate > static_cast<double>(cfg.K) * blocks[q].mass * (1.0 + 1e-9))
                rep.min_inactive_ok = false;
        }
    }

    return rep;
}

}  // namespace popcache
