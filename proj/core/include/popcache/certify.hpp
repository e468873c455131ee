#pragma once

#include <span>
#include <string>

#include "popcache/kkt.hpp"
#include "popcache/system.hpp"

namespace popcache {

// First-order optimality certificate of a solved allocation.
struct CertifyReport {
    double stationarity_spread = 0.0;  // rel. spread of mass/(level^2*width) over interior blocks
    double budget_gap = 0.0;           // |used - L*N|/(L*N), meaningful when interior is non-empty
    bool complementarity_ok = true;    // clamped blocks would leave their box if released
    bool ordering_ok = true;           // levels non-increasing across consecutive blocks
    bool min_inactive_ok = true;       // level*(1+Lambda*gamma) <= K*mass for every coded block

    bool ok(double stationarity_tol = 1e-8, double budget_tol = 1e-9) const {
        return stationarity_spread <= stationarity_tol &&
               (budget_gap <= budget_tol) && complementarity_ok && ordering_ok &&
               min_inactive_ok;
    }
};

// Checks the KKT conditions on an explicit solve result. `consecutive` enables
// the positional level-ordering check (meaningful only when blocks follow
// decreasing popularity ranks).
CertifyReport certify_levels(const SystemConfig& cfg, std::span<const BlockStats> blocks,
                             const LevelSolveResult& result, bool consecutive = true);

}  // namespace popcache
