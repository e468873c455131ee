#include "popcache/system.hpp"

#include <cmath>
#include <string>

#include "popcache/errors.hpp"

namespace popcache {

namespace {

constexpr double kIntegralTol = 1e-9;

bool near_integer(double x, std::int64_t& out) {
    double r = std::round(x);
    if (std::abs(x - r) > kIntegralTol * std::max(1.0, std::abs(x))) return false;
    out = static_cast<std::int64_t>(r);
    return true;
}

}  // namespace

std::int64_t SystemConfig::lambda_gamma() const {
    std::int64_t t = 0;
    if (!near_integer(static_cast<double>(Lambda) * gamma, t))
        throw InvalidParameterError("config: Lambda*gamma must be an integer");
    return t;
}

std::uint64_t binom_capped(std::int64_t n, std::int64_t k, std::uint64_t cap) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    unsigned __int128 r = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
        r = r * static_cast<unsigned __int128>(n - k + i);
        r /= static_cast<unsigned __int128>(i);
        if (r > cap) return cap + 1;
    }
    return static_cast<std::uint64_t>(r);
}

void validate_config(const SystemConfig& cfg) {
    if (cfg.N < 1) throw InvalidParameterError("config: N must be >= 1");
    if (cfg.K < 1) throw InvalidParameterError("config: K must be >= 1");
    if (cfg.K_T < 1) throw InvalidParameterError("config: K_T must be >= 1");
    if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0))
        throw InvalidParameterError("config: gamma must lie in (0,1)");
    if (!(cfg.gamma_T >= 1.0 / static_cast<double>(cfg.K_T) - kIntegralTol && cfg.gamma_T <= 1.0 + kIntegralTol))
        throw InvalidParameterError("config: gamma_T must lie in [1/K_T, 1]");
    if (cfg.Lambda < 1 || cfg.Lambda > cfg.K)
        throw InvalidParameterError("config: need 1 <= Lambda <= K");
    if (cfg.F < 1) throw InvalidParameterError("config: F must be >= 1");

    std::int64_t t = 0;
    if (!near_integer(static_cast<double>(cfg.Lambda) * cfg.gamma, t) || t < 1)
        throw InvalidParameterError("config: Lambda*gamma must be a positive integer");
    if (binom_capped(cfg.Lambda, t, static_cast<std::uint64_t>(cfg.F)) >
        static_cast<std::uint64_t>(cfg.F))
        throw InfeasibleError("config: subpacketization C(Lambda, Lambda*gamma) exceeds F");

    const double L = static_cast<double>(cfg.K_T) * cfg.gamma_T;
    if (!(L >= 1.0 - kIntegralTol && L <= static_cast<double>(cfg.K_T) + kIntegralTol))
        throw InvalidParameterError("config: aggregate redundancy L must lie in [1, K_T]");
}

SystemConfig make_config(std::int64_t N, std::int64_t K, std::int64_t K_T, double gamma,
                         double gamma_T, std::int64_t F, std::int64_t Lambda) {
    SystemConfig cfg;
    cfg.N = N;
    cfg.K = K;
    cfg.K_T = K_T;
    cfg.gamma = gamma;
    cfg.gamma_T = gamma_T;
    cfg.F = F;
    cfg.Lambda = Lambda;
    cfg.L = static_cast<double>(K_T) * gamma_T;
    validate_config(cfg);
    return cfg;
}

std::int64_t choose_lambda(double gamma, std::int64_t F, std::int64_t K) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw InvalidParameterError("choose_lambda: gamma must lie in (0,1)");
    if (F < 1) throw InvalidParameterError("choose_lambda: F must be >= 1");
    for (std::int64_t lam = K; lam >= 1; --lam) {
        std::int64_t t = 0;
        if (!near_integer(static_cast<double>(lam) * gamma, t) || t < 1) continue;
        if (binom_capped(lam, t, static_cast<std::uint64_t>(F)) <= static_cast<std::uint64_t>(F))
            return lam;
    }
    throw InfeasibleError("choose_lambda: no Lambda <= K satisfies the subpacketization cap");
}

double uniform_delay(const SystemConfig& cfg) {
    return static_cast<double>(cfg.K) * (1.0 - cfg.gamma) / (cfg.L * cfg.coded_speedup());
}

DelayBound delay_bound(const SystemConfig& cfg, const PopularityModel& model) {
    // Sums over ranks of q^-alpha and q^-(alpha/2); at alpha = 0 both reduce to
    // N exactly, so gain_max is exactly 1.
    const std::int64_t n = model.file_count();
    CompensatedSum full, half;
    for (std::int64_t q = 1; q <= n; ++q) {
        full.add(std::pow(static_cast<double>(q), -model.alpha));
        half.add(std::pow(static_cast<double>(q), -model.alpha / 2.0));
    }
    const double s_full = full.value();
    const double s_half = half.value();

    DelayBound b;
    b.gain_max = static_cast<double>(n) * s_full / (s_half * s_half);
    b.delay_lower_bound = uniform_delay(cfg) / b.gain_max;
    return b;
}

MemorySharingSplit memory_sharing_split(double level) {
    if (!(level >= 1.0))
        throw InvalidParameterError("memory_sharing_split: level must be >= 1");
    MemorySharingSplit s;
    s.floor_level = static_cast<std::int64_t>(std::floor(level));
    double r = level - static_cast<double>(s.floor_level);
    // Snap levels that are integral up to solver round-off.
    if (r < 1e-9) r = 0.0;
    if (r > 1.0 - 1e-9) {
        s.floor_level += 1;
        r = 0.0;
    }
    s.ceil_level = s.floor_level + 1;
    s.frac_hi = r;
    s.loss_ratio = 1.0 + r * (1.0 - r) / (static_cast<double>(s.floor_level) *
                                          static_cast<double>(s.floor_level + 1));
    return s;
}

double effective_rate(const SystemConfig& cfg, double level) {
    const MemorySharingSplit s = memory_sharing_split(level);
    const double speedup = cfg.coded_speedup();
    if (s.frac_hi == 0.0) return static_cast<double>(s.floor_level) * speedup;
    const double inv = s.frac_hi / (static_cast<double>(s.ceil_level) * speedup) +
                       (1.0 - s.frac_hi) / (static_cast<double>(s.floor_level) * speedup);
    return 1.0 / inv;
}

}  // namespace popcache
