#include "popcache/placement.hpp"

#include <cmath>
#include <string>

#include "popcache/errors.hpp"
#include "popcache/kkt.hpp"

namespace popcache {

namespace {

// Ring writer: `place` stores one part of a file on `count` consecutive
// transmitters starting at the cursor, then advances the cursor past them.
struct RingCursor {
    std::int64_t pos = 0;
    std::int64_t k_t;

    void place(TransmitterPlacement& out, std::int64_t file, double fraction,
               std::int64_t count) {
        for (std::int64_t r = 0; r < count; ++r) {
            std::int64_t t = (pos + r) % k_t;
            out.per_tx[static_cast<std::size_t>(t)].push_back({file, fraction});
            out.loads[static_cast<std::size_t>(t)] += fraction;
        }
        pos = (pos + count) % k_t;
    }
};

}  // namespace

TransmitterPlacement place_transmitters(const SystemConfig& cfg, const Segmentation& seg,
                                        const RedundancyAllocation& alloc) {
    validate_segmentation(seg, cfg.N);
    if (alloc.levels.size() != static_cast<std::size_t>(seg.Q))
        throw InvalidParameterError("place_transmitters: allocation size does not match Q");

    if (seg.Q >= 2 && alloc.levels[0] != 1.0)
        throw ConstraintViolationError("broadcast_level",
                                       "place_transmitters: sub-library 1 must have level 1");
    double used = static_cast<double>(seg.broadcast_files());
    for (int q = seg.Q >= 2 ? 1 : 0; q < seg.Q; ++q) {
        const double level = alloc.levels[static_cast<std::size_t>(q)];
        if (level < 1.0 - 1e-9 || level > static_cast<double>(cfg.K_T) + 1e-9)
            throw ConstraintViolationError("level_box:" + std::to_string(q + 1),
                                           "place_transmitters: level outside [1, K_T]");
        std::int64_t a = q == 0 ? 0 : seg.bounds[static_cast<std::size_t>(q) - 1];
        used += level * static_cast<double>(seg.bounds[static_cast<std::size_t>(q)] - a);
    }
    const double budget = cfg.L * static_cast<double>(cfg.N);
    if (used > budget * (1.0 + 1e-9))
        throw ConstraintViolationError("budget",
                                       "place_transmitters: aggregate cache budget exceeded");

    TransmitterPlacement out;
    out.per_tx.resize(static_cast<std::size_t>(cfg.K_T));
    out.loads.assign(static_cast<std::size_t>(cfg.K_T), 0.0);
    out.capacity = cfg.gamma_T * static_cast<double>(cfg.N);

    RingCursor cur{0, cfg.K_T};
    for (int q = 0; q < seg.Q; ++q) {
        out.cursor_trace.push_back(cur.pos + 1);  // 1-based for the manifest
        std::int64_t first = q == 0 ? 1 : seg.bounds[static_cast<std::size_t>(q) - 1] + 1;
        std::int64_t last = seg.bounds[static_cast<std::size_t>(q)];
        const MemoryShare split =
            seg.Q >= 2 && q == 0 ? MemoryShare{1, 2, 0.0} : alloc.splits[static_cast<std::size_t>(q)];
        for (std::int64_t f = first; f <= last; ++f) {
            if (split.frac_hi > 0.0) {
                cur.place(out, f, split.frac_hi, split.hi);
                cur.place(out, f, 1.0 - split.frac_hi, split.lo);
            } else {
                cur.place(out, f, 1.0, split.lo);
            }
        }
    }

    // The sweep balances within one file-unit; anything past that means the
    // allocation itself was infeasible.
    for (double load : out.loads)
        if (load > out.capacity + 1.0 + 1e-9)
            throw CapacityError("place_transmitters: transmitter cache overflow");
    return out;
}

ReceiverPlacement place_receivers(const SystemConfig& cfg) {
    const std::int64_t t = cfg.lambda_gamma();
    const std::uint64_t count =
        binom_capped(cfg.Lambda, t, static_cast<std::uint64_t>(cfg.F));
    if (count > static_cast<std::uint64_t>(cfg.F))
        throw InfeasibleError("place_receivers: subpacketization exceeds the file-size cap");

    ReceiverPlacement out;
    out.num_subfiles = static_cast<std::int64_t>(count);
    out.tau_sets.reserve(count);
    out.cache_subfiles.resize(static_cast<std::size_t>(cfg.Lambda));

    // Lexicographic t-subsets of [Lambda].
    std::vector<int> tau(static_cast<std::size_t>(t));
    for (std::int64_t i = 0; i < t; ++i) tau[static_cast<std::size_t>(i)] = static_cast<int>(i + 1);
    std::int64_t id = 0;
    while (true) {
        out.tau_sets.push_back(tau);
        for (int l : tau) out.cache_subfiles[static_cast<std::size_t>(l - 1)].push_back(id);
        ++id;
        std::int64_t i = t - 1;
        while (i >= 0 &&
               tau[static_cast<std::size_t>(i)] == static_cast<int>(cfg.Lambda - (t - 1 - i)))
            --i;
        if (i < 0) break;
        ++tau[static_cast<std::size_t>(i)];
        for (std::int64_t j = i + 1; j < t; ++j)
            tau[static_cast<std::size_t>(j)] = tau[static_cast<std::size_t>(j - 1)] + 1;
    }

    out.user_to_cache.resize(static_cast<std::size_t>(cfg.K));
    for (std::int64_t k = 1; k <= cfg.K; ++k)
        out.user_to_cache[static_cast<std::size_t>(k - 1)] =
            static_cast<int>((k - 1) % cfg.Lambda + 1);
    return out;
}

}  // namespace popcache
