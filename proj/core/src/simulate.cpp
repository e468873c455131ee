#include "popcache/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "popcache/errors.hpp"
#include "popcache/kkt.hpp"

namespace popcache {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double next_unit(std::mt19937_64& rng) {
    // 53-bit mantissa draw; bit-stable across platforms.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trial) {
    return splitmix64(seed ^ splitmix64(trial + 1));
}

DemandSample sample_demand(const PopularityModel& model, const Segmentation& seg,
                           std::int64_t n_users, std::uint64_t seed) {
    if (n_users < 1) throw InvalidParameterError("sample_demand: need at least one user");
    validate_segmentation(seg, model.file_count());

    DemandSample s;
    s.requests.resize(static_cast<std::size_t>(n_users));
    s.per_q_count.assign(static_cast<std::size_t>(seg.Q), 0);
    const std::int64_t n1 = seg.broadcast_files();
    std::vector<char> seen_b1(static_cast<std::size_t>(n1), 0);

    std::mt19937_64 rng(splitmix64(seed));
    const std::int64_t n = model.file_count();
    for (std::int64_t k = 0; k < n_users; ++k) {
        double u = next_unit(rng);
        auto it = std::upper_bound(model.prefix.begin() + 1, model.prefix.end(), u);
        std::int64_t f = std::min<std::int64_t>(it - model.prefix.begin(), n);
        s.requests[static_cast<std::size_t>(k)] = f;

        if (seg.Q == 1) {
            ++s.per_q_count[0];
        } else if (f <= n1) {
            ++s.per_q_count[0];
            if (!seen_b1[static_cast<std::size_t>(f - 1)]) {
                seen_b1[static_cast<std::size_t>(f - 1)] = 1;
                ++s.distinct_b1;
            }
        } else {
            // First boundary >= f marks the file's sub-library.
            auto qit = std::upper_bound(seg.bounds.begin(), seg.bounds.end(), f - 1);
            ++s.per_q_count[static_cast<std::size_t>(qit - seg.bounds.begin())];
        }
    }
    return s;
}

double realized_delay(const SystemConfig& cfg, const Segmentation& seg,
                      const RedundancyAllocation& alloc, const DemandSample& sample,
                      bool strict_b1) {
    validate_segmentation(seg, cfg.N);
    if (alloc.levels.size() != static_cast<std::size_t>(seg.Q) ||
        sample.per_q_count.size() != static_cast<std::size_t>(seg.Q))
        throw InvalidParameterError("realized_delay: dimensions disagree");

    const double one_minus_gamma = 1.0 - cfg.gamma;
    double delay = 0.0;
    int first_coded = 0;
    if (seg.Q >= 2) {
        first_coded = 1;
        if (sample.per_q_count[0] > 0)
            delay += strict_b1 ? static_cast<double>(seg.broadcast_files())
                               : static_cast<double>(sample.distinct_b1);
    }
    for (int q = first_coded; q < seg.Q; ++q) {
        const std::int64_t kq = sample.per_q_count[static_cast<std::size_t>(q)];
        if (kq == 0) continue;
        const double rate = effective_rate(cfg, alloc.levels[static_cast<std::size_t>(q)]);
        delay += static_cast<double>(kq) * one_minus_gamma /
                 std::min(rate, static_cast<double>(kq));
    }
    return delay;
}

double analytic_mean_delay(const SystemConfig& cfg, const PopularityModel& model,
                           const Segmentation& seg, const RedundancyAllocation& alloc) {
    validate_segmentation(seg, cfg.N);
    if (alloc.levels.size() != static_cast<std::size_t>(seg.Q))
        throw InvalidParameterError("analytic_mean_delay: dimensions disagree");
    const double served = static_cast<double>(cfg.K) * (1.0 - cfg.gamma);
    if (seg.Q == 1) return served / effective_rate(cfg, alloc.levels[0]);
    double delay = static_cast<double>(seg.broadcast_files());
    for (int q = 1; q < seg.Q; ++q) {
        const double mass = cumulative_mass(model, seg.bounds[static_cast<std::size_t>(q) - 1],
                                            seg.bounds[static_cast<std::size_t>(q)]);
        delay += served * mass / effective_rate(cfg, alloc.levels[static_cast<std::size_t>(q)]);
    }
    return delay;
}

SimulationReport run_simulation(const SystemConfig& cfg, const PopularityModel& model,
                                const Solution& solution, std::int64_t trials,
                                std::uint64_t seed, bool strict_b1,
                                std::vector<TrialStat>* per_trial) {
    if (trials < 1) throw InvalidParameterError("run_simulation: need at least one trial");

    SimulationReport rep;
    rep.trials = trials;
    rep.seed = seed;
    rep.strict_b1 = strict_b1;
    rep.degenerate_std = trials == 1;

    const double served = static_cast<double>(cfg.K) * (1.0 - cfg.gamma);
    std::vector<double> delays(static_cast<std::size_t>(trials));
    CompensatedSum delay_sum, dof_sum;
    for (std::int64_t t = 0; t < trials; ++t) {
        DemandSample s = sample_demand(model, solution.seg, cfg.K, stream_seed(seed, t));
        double d = realized_delay(cfg, solution.seg, solution.alloc, s, strict_b1);
        delays[static_cast<std::size_t>(t)] = d;
        delay_sum.add(d);
        dof_sum.add(served / d);
        if (per_trial) per_trial->push_back({d, served / d});
    }
    rep.delay_mean = delay_sum.value() / static_cast<double>(trials);
    rep.dof_mean = dof_sum.value() / static_cast<double>(trials);

    if (trials > 1) {
        CompensatedSum d2, f2;
        for (double d : delays) {
            const double dd = d - rep.delay_mean;
            const double df = served / d - rep.dof_mean;
            d2.add(dd * dd);
            f2.add(df * df);
        }
        rep.delay_std = std::sqrt(d2.value() / static_cast<double>(trials - 1));
        rep.dof_std = std::sqrt(f2.value() / static_cast<double>(trials - 1));
    }
    return rep;
}

}  // namespace popcache
