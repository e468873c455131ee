// popcache: popularity-aware transmitter cache placement.
//
// Subcommands: optimize, sweep, simulate, bound, verify, place.
// Exit codes: 0 ok, 1 usage/config error, 2 verification failure.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "popcache/certify.hpp"
#include "popcache/errors.hpp"
#include "popcache/oracle.hpp"
#include "popcache/placement.hpp"
#include "popcache/search.hpp"
#include "popcache/serde.hpp"
#include "popcache/simulate.hpp"

using nlohmann::json;
using namespace popcache;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string join_i64(const std::vector<std::int64_t>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(v[i]);
    }
    return s + "]";
}

std::string join_d(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt4(v[i]);
    }
    return s + "]";
}

// Grid argument: "lo:hi:step" or a comma-separated list.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double lo, hi, step;
        char c1, c2;
        std::istringstream is(text);
        if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
            throw InvalidParameterError("bad grid '" + text + "', want lo:hi:step");
        for (double v = lo; v <= hi + 1e-12; v += step) out.push_back(v);
        return out;
    }
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw InvalidParameterError("empty grid '" + text + "'");
    return out;
}

RunSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameterError("cannot open config file '" + path + "'");
    json j = json::parse(in);
    return parse_run_spec(j);
}

void write_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        if (!content.empty() && content.back() != '\n') std::cout << '\n';
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw InvalidParameterError("cannot write '" + out_path + "'");
        out << content;
    }
}

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::string alpha_grid;
    std::string k_grid;
    std::optional<double> alpha;
    std::optional<std::int64_t> k;
    std::optional<std::int64_t> trials;
    std::optional<std::uint64_t> seed;
    int qmax = 8;
    bool strict_b1 = false;
    int jobs = 0;
};

struct GridPoint {
    std::int64_t K;
    double alpha;
};

std::vector<GridPoint> make_grid(const RunSpec& spec, const CommonArgs& args) {
    std::vector<double> alphas = args.alpha_grid.empty()
                                     ? std::vector<double>{args.alpha.value_or(spec.alpha)}
                                     : parse_grid(args.alpha_grid);
    std::vector<double> ks;
    if (args.k_grid.empty())
        ks = {static_cast<double>(args.k.value_or(spec.K))};
    else
        ks = parse_grid(args.k_grid);

    std::vector<GridPoint> grid;
    for (double kv : ks)
        for (double av : alphas) grid.push_back({static_cast<std::int64_t>(std::llround(kv)), av});
    std::sort(grid.begin(), grid.end(), [](const GridPoint& a, const GridPoint& b) {
        return a.K != b.K ? a.K < b.K : a.alpha < b.alpha;
    });
    return grid;
}

SystemConfig config_at(const RunSpec& spec, std::int64_t k_users) {
    RunSpec s = spec;
    s.K = k_users;
    return to_config(s);
}

// Runs fn(i) for i in [0, n) on a small pool; results land in caller arrays.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                   : std::max<std::size_t>(1, hw ? hw : 1);
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

int cmd_optimize(const CommonArgs& args, bool with_trace) {
    RunSpec spec = load_spec(args.config_path);
    if (args.alpha) spec.alpha = *args.alpha;
    if (args.k) spec.K = *args.k;
    SystemConfig cfg = to_config(spec);
    PopularityModel model = build_popularity(cfg.N, spec.alpha);

    SearchTrace trace;
    Solution sol = optimize_all(cfg, model, args.qmax, &trace);
    DelayBound bound = delay_bound(cfg, model);
    TableForm tf = table_form(cfg, sol);

    std::cout << "K=" << cfg.K << " alpha=" << fmt(spec.alpha) << " Q*=" << trace.q_star
              << " n*=" << join_i64(tf.n_star) << " L*=" << join_d(tf.level_bar)
              << " delay=" << fmt4(sol.expected_delay) << " uniform=" << fmt4(sol.uniform_delay)
              << " gain=" << fmt4(sol.gain) << " budget=" << fmt4(sol.alloc.budget_used)
              << (sol.alloc.budget_tight ? " (tight)" : " (slack)") << "\n";

    json doc{{"config", cfg},
             {"alpha", spec.alpha},
             {"solution", sol},
             {"table_form", json{{"n_star", tf.n_star}, {"L_bar", tf.level_bar}}},
             {"bound",
              json{{"delay_lower_bound", bound.delay_lower_bound}, {"gain_max", bound.gain_max}}}};
    if (with_trace) doc["trace"] = trace;
    if (!args.out_path.empty()) write_output(args.out_path, doc.dump(2));
    return 0;
}

int cmd_sweep(const CommonArgs& args) {
    RunSpec spec = load_spec(args.config_path);
    std::vector<GridPoint> grid = make_grid(spec, args);

    struct Row {
        GridPoint p;
        double gain = 0.0, bound = 0.0;
        std::string status = "ok";
    };
    std::vector<Row> rows(grid.size());
    parallel_for(grid.size(), args.jobs, [&](std::size_t i) {
        Row& row = rows[i];
        row.p = grid[i];
        try {
            SystemConfig cfg = config_at(spec, grid[i].K);
            PopularityModel model = build_popularity(cfg.N, grid[i].alpha);
            Solution sol = optimize_all(cfg, model, args.qmax);
            row.gain = sol.gain;
            row.bound = delay_bound(cfg, model).gain_max;
        } catch (const std::exception& e) {
            row.gain = std::nan("");
            row.bound = std::nan("");
            row.status = std::string("error: ") + e.what();
        }
    });

    std::string csv = "K,alpha,gain_achieved,gain_bound,status\n";
    for (const Row& r : rows)
        csv += std::to_string(r.p.K) + "," + fmt(r.p.alpha) + "," + fmt(r.gain) + "," +
               fmt(r.bound) + "," + r.status + "\n";
    write_output(args.out_path, csv);
    return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& per_trial_path) {
    RunSpec spec = load_spec(args.config_path);
    if (args.trials) spec.trials = *args.trials;
    if (args.seed) spec.seed = *args.seed;
    std::vector<GridPoint> grid = make_grid(spec, args);
    if (!per_trial_path.empty() && grid.size() != 1)
        throw InvalidParameterError("--per-trial needs a single grid point");

    struct Row {
        GridPoint p;
        SimulationReport rep;
        std::string status = "ok";
    };
    std::vector<Row> rows(grid.size());
    parallel_for(grid.size(), args.jobs, [&](std::size_t i) {
        Row& row = rows[i];
        row.p = grid[i];
        try {
            SystemConfig cfg = config_at(spec, grid[i].K);
            PopularityModel model = build_popularity(cfg.N, grid[i].alpha);
            Solution sol = optimize_all(cfg, model, args.qmax);
            std::vector<TrialStat> stats;
            row.rep = run_simulation(cfg, model, sol, spec.trials, spec.seed, args.strict_b1,
                                     per_trial_path.empty() ? nullptr : &stats);
            if (!per_trial_path.empty()) {
                std::string csv = "trial,delay,dof\n";
                for (std::size_t t = 0; t < stats.size(); ++t)
                    csv += std::to_string(t) + "," + fmt(stats[t].delay) + "," +
                           fmt(stats[t].dof) + "\n";
                write_output(per_trial_path, csv);
            }
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
    });

    std::string csv = "K,alpha,trials,seed,dof_mean,dof_std,delay_mean,delay_std,status\n";
    for (const Row& r : rows)
        csv += std::to_string(r.p.K) + "," + fmt(r.p.alpha) + "," + std::to_string(r.rep.trials) +
               "," + std::to_string(r.rep.seed) + "," + fmt(r.rep.dof_mean) + "," +
               fmt(r.rep.dof_std) + "," + fmt(r.rep.delay_mean) + "," + fmt(r.rep.delay_std) +
               "," + r.status + "\n";
    write_output(args.out_path, csv);
    return 0;
}

int cmd_bound(const CommonArgs& args) {
    RunSpec spec = load_spec(args.config_path);
    std::vector<GridPoint> grid = make_grid(spec, args);

    std::string csv = "K,alpha,gain_max,delay_lower_bound,uniform_delay,status\n";
    for (const GridPoint& p : grid) {
        try {
            SystemConfig cfg = config_at(spec, p.K);
            PopularityModel model = build_popularity(cfg.N, p.alpha);
            DelayBound b = delay_bound(cfg, model);
            csv += std::to_string(p.K) + "," + fmt(p.alpha) + "," + fmt(b.gain_max) + "," +
                   fmt(b.delay_lower_bound) + "," + fmt(uniform_delay(cfg)) + ",ok\n";
        } catch (const std::exception& e) {
            csv += std::to_string(p.K) + "," + fmt(p.alpha) + ",nan,nan,nan,error: " +
                   e.what() + "\n";
        }
    }
    write_output(args.out_path, csv);
    return 0;
}

int cmd_place(const CommonArgs& args) {
    RunSpec spec = load_spec(args.config_path);
    if (args.alpha) spec.alpha = *args.alpha;
    if (args.k) spec.K = *args.k;
    SystemConfig cfg = to_config(spec);
    PopularityModel model = build_popularity(cfg.N, spec.alpha);
    Solution sol = optimize_all(cfg, model, args.qmax);

    TransmitterPlacement tx = place_transmitters(cfg, sol.seg, sol.alloc);
    ReceiverPlacement rx = place_receivers(cfg);
    json doc{{"config", cfg},
             {"alpha", spec.alpha},
             {"solution", sol},
             {"transmitters", tx},
             {"receivers", rx}};
    write_output(args.out_path, doc.dump());
    std::cerr << "placed " << cfg.N << " files on " << cfg.K_T << " transmitters, max load "
              << fmt(*std::max_element(tx.loads.begin(), tx.loads.end())) << " / capacity "
              << fmt(tx.capacity) << "\n";
    return 0;
}

// Desk-scale self-checks; exit 2 on any violation. --inject-perturb pushes one
// solved level off its stationary point to prove the checker catches it.
int cmd_verify(std::uint64_t seed, bool inject_perturb, const std::string& out_path) {
    struct Check {
        std::string name;
        bool ok;
        std::string detail;
    };
    std::vector<Check> checks;
    std::mt19937_64 rng(seed);

    auto rand_small_setup = [&](std::int64_t max_n) {
        std::int64_t n = 6 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(max_n - 5));
        std::int64_t lambda = 2 + static_cast<std::int64_t>(rng() % 3);
        double gamma = 1.0 / static_cast<double>(lambda);
        std::int64_t k = lambda * (2 + static_cast<std::int64_t>(rng() % 40));
        std::int64_t k_t = 2 + static_cast<std::int64_t>(rng() % 5);
        double gamma_t =
            (1.0 + static_cast<double>(rng() % 1000) / 1000.0 * static_cast<double>(k_t - 1)) /
            static_cast<double>(k_t);
        std::int64_t f = static_cast<std::int64_t>(binom_capped(lambda, 1, 1u << 30));
        double alpha = static_cast<double>(rng() % 2001) / 1000.0;
        SystemConfig cfg = make_config(n, k, k_t, gamma, gamma_t, f, lambda);
        PopularityModel model = build_popularity(n, alpha);
        return std::pair{cfg, model};
    };

    // Search agrees with exhaustive enumeration on small instances.
    {
        std::uint64_t mismatches = 0, cases = 0;
        for (int rep = 0; rep < 40; ++rep) {
            auto [cfg, model] = rand_small_setup(14);
            for (int q = 1; q <= 3 && q <= cfg.N; ++q) {
                ++cases;
                double a = optimize_boundaries(cfg, model, q).delay;
                try {
                    double b = brute_optimal(cfg, model, q).best.expected_delay;
                    if (!(a == b || std::abs(a - b) <= 1e-12 * std::max(1.0, b))) ++mismatches;
                } catch (const InfeasibleError&) {
                    if (std::isfinite(a)) ++mismatches;  // search must agree nothing fits
                }
            }
        }
        checks.push_back({"search_matches_oracle",
                          mismatches == 0,
                          std::to_string(cases) + " cases, " + std::to_string(mismatches) +
                              " mismatches"});
    }

    // Consecutive segmentations dominate general ones; swaps behave.
    {
        auto cfg = make_config(6, 12, 3, 0.5, 0.5, 2, 2);
        auto model = build_popularity(6, 1.1);
        DominanceReport r1 = verify_consecutive_dominance(cfg, model, 2, 0, seed);
        auto cfg2 = make_config(10, 20, 3, 0.5, 2.0 / 3.0, 2, 2);
        auto model2 = build_popularity(10, 0.9);
        DominanceReport r2 = verify_consecutive_dominance(cfg2, model2, 3, 1000, seed);
        bool ok = r1.violations == 0 && r2.violations == 0 && r1.swap_violations == 0 &&
                  r2.swap_violations == 0;
        checks.push_back({"consecutive_dominance", ok,
                          "checked " + std::to_string(r1.checked + r2.checked) + ", violations " +
                              std::to_string(r1.violations + r2.violations)});
    }

    // KKT certificate on random segmentations (optionally with an injected
    // perturbation that must be flagged).
    {
        bool all_ok = true;
        std::string detail;
        for (int rep = 0; rep < 60; ++rep) {
            auto [cfg, model] = rand_small_setup(40);
            int q = 2 + static_cast<int>(rng() % 3);
            if (static_cast<std::int64_t>(q) > cfg.N) continue;
            Segmentation seg;
            seg.Q = q;
            seg.bounds.assign(static_cast<std::size_t>(q), 0);
            std::set<std::int64_t> cuts;
            while (static_cast<int>(cuts.size()) < q - 1)
                cuts.insert(1 + static_cast<std::int64_t>(
                                    rng() % static_cast<std::uint64_t>(cfg.N - 1)));
            std::size_t i = 0;
            for (std::int64_t c : cuts) seg.bounds[i++] = c;
            seg.bounds.back() = cfg.N;
            auto blocks = coded_blocks(cfg, model, seg);
            if (!blocks_feasible(cfg, blocks)) continue;
            auto lv = solve_levels(cfg, static_cast<double>(seg.broadcast_files()), blocks);
            // Negative-test hook: a level pushed off its stationary point must
            // be flagged below, failing the whole verification.
            if (inject_perturb && rep == 0 && !lv.levels.empty()) lv.levels[0] += 0.1;
            auto cert = certify_levels(cfg, blocks, lv);
            if (!cert.ok()) {
                all_ok = false;
                detail = "instance rep=" + std::to_string(rep) +
                         " spread=" + fmt(cert.stationarity_spread);
            }
        }
        checks.push_back({"kkt_certificate", all_ok, detail.empty() ? "60 instances" : detail});
    }

    // Bound dominance and gain >= 1 on optimizer output. The analytic ceiling
    // covers coded-only delivery, so it binds solutions with an empty
    // broadcast block; broadcasting head files can legitimately pass it.
    {
        bool ok = true;
        std::string detail;
        for (int rep = 0; rep < 20; ++rep) {
            auto [cfg, model] = rand_small_setup(30);
            Solution sol = optimize_all(cfg, model, 6);
            DelayBound b = delay_bound(cfg, model);
            bool coded_only = sol.seg.broadcast_files() == 0;
            if (sol.gain < 1.0 - 1e-9 ||
                (coded_only && (sol.expected_delay < b.delay_lower_bound * (1.0 - 1e-9) ||
                                sol.gain > b.gain_max * (1.0 + 1e-9)))) {
                ok = false;
                detail = "gain=" + fmt(sol.gain) + " gmax=" + fmt(b.gain_max);
            }
        }
        checks.push_back({"bound_dominance", ok, detail.empty() ? "20 instances" : detail});
    }

    bool all_ok = true;
    json report = json::array();
    for (const Check& c : checks) {
        all_ok = all_ok && c.ok;
        std::cout << (c.ok ? "ok " : "VIOLATION ") << c.name << ": " << c.detail << "\n";
        report.push_back(json{{"check", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    }
    if (!out_path.empty()) write_output(out_path, report.dump(2));
    return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"popularity-aware transmitter cache placement"};
    app.require_subcommand(1);

    CommonArgs args;
    bool with_trace = false;
    std::string per_trial_path;
    bool inject_perturb = false;
    std::uint64_t verify_seed = 1;
    std::string verify_out;

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* opt = sub->add_option("--config", args.config_path, "JSON configuration file");
        if (needs_config) opt->required();
        sub->add_option("--out", args.out_path, "output file (default stdout)");
        sub->add_option("--alpha", args.alpha, "popularity exponent override");
        sub->add_option("--k", args.k, "user-count override");
        sub->add_option("--alpha-grid", args.alpha_grid, "alpha grid: lo:hi:step or list");
        sub->add_option("--k-grid", args.k_grid, "K grid: lo:hi:step or list");
        sub->add_option("--qmax", args.qmax, "sub-library count cap")->check(CLI::Range(1, 32));
        sub->add_option("--jobs", args.jobs, "worker threads (0 = hardware)");
    };

    CLI::App* optimize = app.add_subcommand("optimize", "optimal segmentation and levels");
    add_common(optimize);
    optimize->add_flag("--trace", with_trace, "include search trace in the JSON output");

    CLI::App* sweep = app.add_subcommand("sweep", "gain vs bound over a (K, alpha) grid");
    add_common(sweep);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo demand simulation");
    add_common(simulate);
    simulate->add_option("--trials", args.trials, "trials per grid point");
    simulate->add_option("--seed", args.seed, "simulation seed");
    simulate->add_flag("--strict-b1", args.strict_b1,
                       "charge the whole broadcast block when any of its files is requested");
    simulate->add_option("--per-trial", per_trial_path, "per-trial CSV (single grid point)");

    CLI::App* bound = app.add_subcommand("bound", "analytic gain ceiling per grid point");
    add_common(bound);

    CLI::App* place = app.add_subcommand("place", "emit transmitter/receiver cache manifests");
    add_common(place);

    CLI::App* verify = app.add_subcommand("verify", "desk-scale oracle and property checks");
    verify->add_option("--seed", verify_seed, "randomization seed");
    verify->add_option("--out", verify_out, "JSON report path");
    verify->add_flag("--inject-perturb", inject_perturb,
                     "perturb one solved level; verification must fail");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (optimize->parsed()) return cmd_optimize(args, with_trace);
        if (sweep->parsed()) return cmd_sweep(args);
        if (simulate->parsed()) return cmd_simulate(args, per_trial_path);
        if (bound->parsed()) return cmd_bound(args);
        if (place->parsed()) return cmd_place(args);
        if (verify->parsed()) return cmd_verify(verify_seed, inject_perturb, verify_out);
    } catch (const std::exception& e) {
        json err{{"error", e.what()}};
        std::cout << err.dump() << "\n";
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
