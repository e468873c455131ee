#include "popcache/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "popcache/errors.hpp"

namespace popcache {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kExhaustiveCap = 1u << 22;

double delay_scale(const SystemConfig& cfg) {
    return static_cast<double>(cfg.K) * (1.0 - cfg.gamma) / cfg.coded_speedup();
}

}  // namespace

void for_each_consecutive(std::int64_t n_files, int Q,
                          const std::function<void(const Segmentation&)>& fn) {
    if (Q < 1 || static_cast<std::int64_t>(Q) > n_files)
        throw InvalidParameterError("for_each_consecutive: need 1 <= Q <= N");
    Segmentation seg;
    seg.Q = Q;
    seg.bounds.assign(static_cast<std::size_t>(Q), 0);
    seg.bounds.back() = n_files;
    if (Q == 1) {
        fn(seg);
        return;
    }
    // Odometer over n_1..n_{Q-1}; n_1 may be 0 (empty broadcast block).
    std::vector<std::int64_t>& b = seg.bounds;
    int top = Q - 2;
    for (int i = 0; i <= top; ++i) b[static_cast<std::size_t>(i)] = i == 0 ? 0 : i;
    while (true) {
        fn(seg);
        int i = top;
        while (i >= 0) {
            ++b[static_cast<std::size_t>(i)];
            if (b[static_cast<std::size_t>(i)] <= n_files - (Q - 1 - i)) {
                for (int j = i + 1; j <= top; ++j)
                    b[static_cast<std::size_t>(j)] = b[static_cast<std::size_t>(j - 1)] + 1;
                break;
            }
            --i;
        }
        if (i < 0) break;
    }
}

std::uint64_t consecutive_count(std::int64_t n_files, int Q) {
    // Strictly increasing vectors with n_1 >= 1 plus the n_1 = 0 variants.
    const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max() / 2;
    return binom_capped(n_files - 1, Q - 1, cap) + binom_capped(n_files - 1, Q - 2, cap);
}

void for_each_general(std::int64_t n_files, int Q,
                      const std::function<void(const GeneralSegmentation&)>& fn) {
    if (Q < 1 || n_files < 1)
        throw InvalidParameterError("for_each_general: need Q >= 1, N >= 1");
    if (general_count(n_files, Q) > kExhaustiveCap)
        throw OracleScaleError("for_each_general: Q^N too large to enumerate");
    GeneralSegmentation g;
    g.Q = Q;
    g.labels.assign(static_cast<std::size_t>(n_files), 0);
    while (true) {
        fn(g);
        std::size_t i = 0;
        while (i < g.labels.size()) {
            if (++g.labels[i] < Q) break;
            g.labels[i] = 0;
            ++i;
        }
        if (i == g.labels.size()) break;
    }
}

std::uint64_t general_count(std::int64_t n_files, int Q) {
    unsigned __int128 r = 1;
    for (std::int64_t i = 0; i < n_files; ++i) {
        r *= static_cast<unsigned>(Q);
        if (r > std::numeric_limits<std::uint64_t>::max() / 2)
            return std::numeric_limits<std::uint64_t>::max() / 2;
    }
    return static_cast<std::uint64_t>(r);
}

BruteResult brute_optimal(const SystemConfig& cfg, const PopularityModel& model, int Q) {
    if (cfg.N > 20)
        throw OracleScaleError("brute_optimal: guarded to N <= 20, got N=" +
                               std::to_string(cfg.N));
    BruteResult res;
    double best_delay = kInf;
    Segmentation best_seg{1, {cfg.N}};
    for_each_consecutive(cfg.N, Q, [&](const Segmentation& seg) {
        ++res.count_checked;
        double d = optimized_delay_or_inf(cfg, model, seg);
        if (d < best_delay) {
            best_delay = d;
            best_seg = seg;
        }
    });
    if (!std::isfinite(best_delay))
        throw InfeasibleError("brute_optimal: no feasible segmentation at this Q");
    res.best.seg = best_seg;
    res.best.alloc = solve_allocation(cfg, model, best_seg);
    res.best.expected_delay = expected_delay(cfg, model, best_seg, res.best.alloc);
    res.best.uniform_delay = uniform_delay(cfg);
    res.best.gain = res.best.uniform_delay / res.best.expected_delay;
    return res;
}

namespace {

struct GeneralStats {
    double broadcast_files = 0.0;
    std::vector<BlockStats> blocks;  // classes 1..Q-1
    bool has_empty_coded = false;
};

GeneralStats general_stats(const PopularityModel& model, const GeneralSegmentation& g) {
    GeneralStats s;
    s.blocks.assign(static_cast<std::size_t>(g.Q) - 1, BlockStats{0.0, 0.0});
    for (std::size_t f = 0; f < g.labels.size(); ++f) {
        int lab = g.labels[f];
        if (lab == 0) {
            s.broadcast_files += 1.0;
        } else {
            BlockStats& b = s.blocks[static_cast<std::size_t>(lab) - 1];
            b.mass += model.p[f];
            b.width += 1.0;
        }
    }
    for (const BlockStats& b : s.blocks)
        if (b.width == 0.0) s.has_empty_coded = true;
    return s;
}

}  // namespace

double general_delay_or_inf(const SystemConfig& cfg, const PopularityModel& model,
                            const GeneralSegmentation& gseg) {
    if (gseg.Q < 1 || gseg.labels.size() != static_cast<std::size_t>(cfg.N))
        throw InvalidParameterError("general_delay: labels do not match N");
    if (gseg.Q == 1) return static_cast<double>(cfg.N);  // broadcast everything
    GeneralStats s = general_stats(model, gseg);
    if (s.has_empty_coded) return kInf;
    return optimal_blocks_delay_or_inf(cfg, s.broadcast_files, s.blocks);
}

DominanceReport verify_consecutive_dominance(const SystemConfig& cfg, const PopularityModel& model,
                                             int Q, std::uint64_t trials, std::uint64_t seed) {
    DominanceReport rep;
    rep.seed = seed;
    rep.worst_gap = -kInf;

    const double best_consecutive = brute_optimal(cfg, model, Q).best.expected_delay;
    const double scale = delay_scale(cfg);

    auto check_one = [&](const GeneralSegmentation& g) {
        GeneralStats s = general_stats(model, g);
        if (s.has_empty_coded) return;
        const double d = optimal_blocks_delay_or_inf(cfg, s.broadcast_files, s.blocks);
        if (!std::isfinite(d)) return;
        ++rep.checked;
        rep.worst_gap = std::max(rep.worst_gap, best_consecutive - d);
        if (best_consecutive > d * (1.0 + 1e-9)) ++rep.violations;

        // Swap argument: take the most popular file of a low-redundancy class
        // and the least popular of a higher-redundancy one; exchanging them
        // must cut the delay by exactly scale*(dp)(dL)/(L_a*L_b). One pair per
        // segmentation is enough.
        const LevelSolveResult lv = solve_levels(cfg, s.broadcast_files, s.blocks);
        bool swap_done = false;
        for (int a = 1; a < g.Q && !swap_done; ++a) {
            for (int b = 1; b < g.Q; ++b) {
                if (a == b) continue;
                const double La = lv.levels[static_cast<std::size_t>(a) - 1];
                const double Lb = lv.levels[static_cast<std::size_t>(b) - 1];
                if (!(La < Lb)) continue;
                int fa = -1, fb = -1;  // fa: most popular in class a; fb: least popular in b
                for (std::size_t f = 0; f < g.labels.size(); ++f) {
                    if (g.labels[f] == a && fa < 0) fa = static_cast<int>(f);
                    if (g.labels[f] == b) fb = static_cast<int>(f);
                }
                if (fa < 0 || fb < 0 || !(model.p[static_cast<std::size_t>(fa)] >
                                          model.p[static_cast<std::size_t>(fb)]))
                    continue;
                std::vector<BlockStats> swapped = s.blocks;
                const double dp = model.p[static_cast<std::size_t>(fa)] -
                                  model.p[static_cast<std::size_t>(fb)];
                swapped[static_cast<std::size_t>(a) - 1].mass -= dp;
                swapped[static_cast<std::size_t>(b) - 1].mass += dp;
                const double before = delay_of_levels(cfg, s.broadcast_files, s.blocks, lv.levels);
                const double after = delay_of_levels(cfg, s.broadcast_files, swapped, lv.levels);
                const double predicted = scale * dp * (Lb - La) / (La * Lb);
                ++rep.swap_checked;
                if (std::abs((before - after) - predicted) >
                        1e-12 * std::max(1.0, std::abs(before)) ||
                    after > before + 1e-12 * std::max(1.0, before))
                    ++rep.swap_violations;
                swap_done = true;
                break;
            }
        }
    };

    if (general_count(cfg.N, Q) <= kExhaustiveCap) {
        rep.exhaustive = true;
        for_each_general(cfg.N, Q, check_one);
    } else {
        std::mt19937_64 rng(seed);
        GeneralSegmentation g;
        g.Q = Q;
        g.labels.assign(static_cast<std::size_t>(cfg.N), 0);
        for (std::uint64_t t = 0; t < trials; ++t) {
            for (auto& lab : g.labels)
                lab = static_cast<int>(rng() % static_cast<std::uint64_t>(Q));
            check_one(g);
        }
    }
    if (rep.checked == 0) rep.worst_gap = 0.0;
    return rep;
}

}  // namespace popcache
