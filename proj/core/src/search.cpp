#include "popcache/search.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "popcache/errors.hpp"

namespace popcache {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool strictly_less(double a, double b) { return a < b - 1e-12 * std::max(1.0, std::abs(b)); }

// One fixed-Q search. Boundary j (1-based, value n_j) ranges over
// [n_{j-1}+1, N-Q+j], except n_1 which may be 0 (empty broadcast block).
// Each candidate value is scored with the later boundaries re-optimized
// conditional on it; suffix optima are memoized keyed on (position, previous
// boundary), which the small-instance oracle cross-checks.
//
// The inner step is a bisection on the forward difference of the candidate
// score (leftmost minimizer of a discrete-convex sequence), run inside the
// exact feasibility window: a coded block needs mass >= Lambda/K for its level
// interval to be non-empty, and the window endpoints follow from prefix-sum
// thresholds.
class BoundarySearch {
public:
    BoundarySearch(const SystemConfig& cfg, const PopularityModel& model, int q)
        : cfg_(cfg), model_(model), q_(q), n_(cfg.N) {
        bounds_.assign(static_cast<std::size_t>(q_), 0);
        bounds_.back() = n_;
        blocks_.resize(static_cast<std::size_t>(q_) - 1);
        mass_floor_ = static_cast<double>(cfg.Lambda) / static_cast<double>(cfg.K) *
                      (1.0 - 1e-12);
        // max_cut_[r]: largest boundary value that still leaves room for r
        // feasible coded blocks after it (-1 when even 0 does not).
        max_cut_.assign(static_cast<std::size_t>(q_), -1);
        for (int r = 1; r <= q_ - 1; ++r) {
            std::int64_t lo = 0, hi = n_ - r;
            if (!can_split(0, r)) {
                max_cut_[static_cast<std::size_t>(r)] = -1;
                continue;
            }
            while (lo < hi) {
                std::int64_t mid = lo + (hi - lo + 1) / 2;
                if (can_split(mid, r))
                    lo = mid;
                else
                    hi = mid - 1;
            }
            max_cut_[static_cast<std::size_t>(r)] = lo;
        }
    }

    double run() { return solve_from(0); }

    const std::vector<std::int64_t>& bounds() const { return bounds_; }
    std::uint64_t evaluations() const { return evals_; }

private:
    static std::uint64_t key_of(int qi, std::int64_t prev) {
        return (static_cast<std::uint64_t>(qi) << 40) | static_cast<std::uint64_t>(prev);
    }

    // Smallest c > from with mass(from, c] >= mass_floor_, or N+1 if none.
    std::int64_t first_feasible_cut(std::int64_t from) const {
        const double target = model_.prefix[static_cast<std::size_t>(from)] + mass_floor_;
        auto it = std::lower_bound(model_.prefix.begin() + from + 1, model_.prefix.end(), target);
        if (it == model_.prefix.end()) return n_ + 1;
        return it - model_.prefix.begin();
    }

    // Can (from, N] be cut into r consecutive blocks, each of mass
    // >= mass_floor_? Greedy shortest-first cuts.
    bool can_split(std::int64_t from, int r) const {
        std::int64_t cur = from;
        for (int i = 0; i < r - 1; ++i) {
            cur = first_feasible_cut(cur);
            if (cur > n_) return false;
        }
        if (cur >= n_) return false;
        return cumulative_mass(model_, cur, n_) >= mass_floor_;
    }

    double eval_full() {
        ++evals_;
        for (int j = 1; j < q_; ++j) {
            std::int64_t a = bounds_[static_cast<std::size_t>(j) - 1];
            std::int64_t b = bounds_[static_cast<std::size_t>(j)];
            blocks_[static_cast<std::size_t>(j) - 1] = {cumulative_mass(model_, a, b),
                                                        static_cast<double>(b - a)};
        }
        return optimal_blocks_delay_or_inf(cfg_, static_cast<double>(bounds_[0]), blocks_);
    }

    double solve_from(int qi) {
        const std::int64_t prev = qi == 0 ? 0 : bounds_[static_cast<std::size_t>(qi) - 1];
        if (auto it = memo_.find(key_of(qi, prev)); it != memo_.end()) {
            if (it->second < 0) return kInf;
            std::int64_t pv = prev;
            for (int j = qi; j <= q_ - 2; ++j) {
                auto jt = memo_.find(key_of(j, pv));
                assert(jt != memo_.end() && jt->second >= 0);
                bounds_[static_cast<std::size_t>(j)] = jt->second;
                pv = jt->second;
            }
            return eval_full();
        }

        const int blocks_after = q_ - qi - 1;
        std::int64_t lo = qi == 0 ? 0 : std::max(prev + 1, first_feasible_cut(prev));
        std::int64_t hi = std::min(n_ - q_ + qi + 1, max_cut_[static_cast<std::size_t>(blocks_after)]);
        if (lo > hi) {
            memo_.emplace(key_of(qi, prev), -1);
            return kInf;
        }

        // Candidate scores already computed at this level (endpoints repeat).
        std::vector<std::pair<std::int64_t, double>> seen;
        auto eval_at = [&](std::int64_t v) {
            for (const auto& [cv, cd] : seen)
                if (cv == v) return cd;
            bounds_[static_cast<std::size_t>(qi)] = v;
            double d = qi == q_ - 2 ? eval_full() : solve_from(qi + 1);
            seen.emplace_back(v, d);
            return d;
        };

        while (lo < hi) {
            std::int64_t mid = lo + (hi - lo) / 2;
            if (eval_at(mid + 1) < eval_at(mid))
                lo = mid + 1;  // still descending
            else
                hi = mid;  // minimizer at or left of mid (ties keep the smaller index)
        }

        bounds_[static_cast<std::size_t>(qi)] = lo;
        double d = qi == q_ - 2 ? eval_full() : solve_from(qi + 1);
        memo_.emplace(key_of(qi, prev), lo);
        return d;
    }

    const SystemConfig& cfg_;
    const PopularityModel& model_;
    const int q_;
    const std::int64_t n_;
    double mass_floor_ = 0.0;
    std::vector<std::int64_t> max_cut_;
    std::vector<std::int64_t> bounds_;
    std::vector<BlockStats> blocks_;
    std::unordered_map<std::uint64_t, std::int64_t> memo_;
    std::uint64_t evals_ = 0;
};

Segmentation ladder_fallback(std::int64_t n_files, int q) {
    Segmentation seg;
    seg.Q = q;
    seg.bounds.resize(static_cast<std::size_t>(q));
    for (int j = 0; j < q - 1; ++j) seg.bounds[static_cast<std::size_t>(j)] = j;
    seg.bounds.back() = n_files;
    return seg;
}

}  // namespace

FixedQResult optimize_boundaries(const SystemConfig& cfg, const PopularityModel& model, int Q,
                                 SearchTrace* trace) {
    if (Q < 1 || static_cast<std::int64_t>(Q) > cfg.N)
        throw InvalidParameterError("optimize_boundaries: need 1 <= Q <= N");
    if (model.file_count() != cfg.N)
        throw InvalidParameterError("optimize_boundaries: model size does not match config");

    FixedQResult res;
    if (Q == 1) {
        res.seg = Segmentation{1, {cfg.N}};
        res.delay = uniform_delay(cfg);
        if (trace) {
            trace->evaluations += 1;
            trace->best_per_q.push_back({1, res.seg.bounds, res.delay});
        }
        return res;
    }

    BoundarySearch search(cfg, model, Q);
    res.delay = search.run();
    res.seg = std::isfinite(res.delay) ? Segmentation{Q, search.bounds()}
                                       : ladder_fallback(cfg.N, Q);
    if (trace) {
        trace->evaluations += search.evaluations();
        trace->best_per_q.push_back({Q, res.seg.bounds, res.delay});
    }
    return res;
}

Solution optimize_all(const SystemConfig& cfg, const PopularityModel& model, int q_max,
                      SearchTrace* trace) {
    if (q_max < 1) throw InvalidParameterError("optimize_all: q_max must be >= 1");
    q_max = static_cast<int>(std::min<std::int64_t>(q_max, cfg.N));

    FixedQResult best = optimize_boundaries(cfg, model, 1, trace);
    int q_star = 1;

    // Uniform popularity: every feasible split scores at best the reference
    // delay, so the scan would only walk a plateau to the cap.
    const bool flat = model.is_uniform();

    double prev_delay = best.delay;
    for (int q = 2; !flat && q <= q_max; ++q) {
        FixedQResult r = optimize_boundaries(cfg, model, q, trace);
        if (strictly_less(r.delay, best.delay)) {
            best = r;
            q_star = q;
        }
        if (strictly_less(prev_delay, r.delay)) break;  // past the valley
        prev_delay = r.delay;
    }
    if (trace) trace->q_star = q_star;

    Solution sol;
    sol.seg = best.seg;
    sol.alloc = solve_allocation(cfg, model, best.seg);
    sol.expected_delay = expected_delay(cfg, model, best.seg, sol.alloc);
    sol.uniform_delay = uniform_delay(cfg);
    sol.gain = sol.uniform_delay / sol.expected_delay;
    return sol;
}

TableForm table_form(const SystemConfig& cfg, const Solution& sol) {
    TableForm t;
    if (sol.seg.Q == 1) {
        t.n_star = {0};
        t.level_bar = {cfg.L};
        return t;
    }
    t.n_star.assign(sol.seg.bounds.begin(), sol.seg.bounds.end() - 1);
    t.level_bar.assign(sol.alloc.levels.begin() + 1, sol.alloc.levels.end());
    return t;
}

}  // namespace popcache
