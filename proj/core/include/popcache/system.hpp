#pragma once

#include <cstdint>

#include "popcache/popularity.hpp"
#include "popcache/types.hpp"

namespace popcache {

// Network parameters. K_T transmitters (cache fraction gamma_T each) serve K
// receivers (cache fraction gamma each) split over Lambda distinct cache
// layouts. L = K_T * gamma_T is the aggregate transmitter-side redundancy
// budget per file.
struct SystemConfig {
    std::int64_t N = 0;        // library size
    std::int64_t K = 0;        // users
    std::int64_t K_T = 0;      // transmitters
    double gamma = 0.0;        // receiver cache fraction, in (0,1)
    double gamma_T = 0.0;      // transmitter cache fraction, in [1/K_T, 1]
    std::int64_t Lambda = 0;   // distinct receiver caches
    std::int64_t F = 0;        // subpacketization cap
    double L = 0.0;            // derived: K_T * gamma_T

    std::int64_t lambda_gamma() const;  // Lambda * gamma, validated integral
    double coded_speedup() const { return 1.0 + static_cast<double>(lambda_gamma()); }
};

// Builds and validates a configuration. Throws InvalidParameterError /
// InfeasibleError when an invariant fails.
SystemConfig make_config(std::int64_t N, std::int64_t K, std::int64_t K_T, double gamma,
                         double gamma_T, std::int64_t F, std::int64_t Lambda);

void validate_config(const SystemConfig& cfg);

// Largest Lambda <= K with Lambda*gamma integral (>= 1) and
// C(Lambda, Lambda*gamma) <= F.
std::int64_t choose_lambda(double gamma, std::int64_t F, std::int64_t K);

// C(n, k) saturated at `cap` (never overflows).
std::uint64_t binom_capped(std::int64_t n, std::int64_t k, std::uint64_t cap);

// Delivery time of the popularity-oblivious scheme: K(1-gamma) / (L(1+Lambda*gamma)).
double uniform_delay(const SystemConfig& cfg);

struct DelayBound {
    double delay_lower_bound = 0.0;  // no segmentation can beat this expected delay
    double gain_max = 1.0;           // ceiling on uniform_delay / expected_delay
};

// Analytic bound obtained by relaxing the level constraints and splitting down
// to one file per sub-library.
DelayBound delay_bound(const SystemConfig& cfg, const PopularityModel& model);

struct MemorySharingSplit {
    std::int64_t floor_level = 1;
    std::int64_t ceil_level = 2;
    double frac_hi = 0.0;
    double loss_ratio = 1.0;  // delivery-time penalty of realizing the fractional level
};

// Split realizing a fractional redundancy level; loss_ratio <= 1.125 with the
// worst case at level 1.5.
MemorySharingSplit memory_sharing_split(double level);

// Delivery rate (users per transmission) of a coded sub-library at the given
// level; fractional levels combine the two split parts harmonically.
double effective_rate(const SystemConfig& cfg, double level);

}  // namespace popcache
