#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace popcache {

// Running sum with Neumaier compensation. Prefix sums over thousands of
// near-equal probabilities would otherwise drift past the 1e-12 budget the
// delay identities rely on.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            carry += (sum - t) + x;
        else
            carry += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

// Zipf request popularity over N ranked files: p_n proportional to n^(-alpha),
// plus prefix sums so any contiguous mass is a single difference.
struct PopularityModel {
    double alpha = 0.0;
    std::vector<double> p;       // p[n-1] = probability of file n
    std::vector<double> prefix;  // prefix[i] = p_1 + ... + p_i, prefix[0] = 0

    std::int64_t file_count() const { return static_cast<std::int64_t>(p.size()); }
    bool is_uniform() const { return alpha == 0.0; }
};

PopularityModel build_popularity(std::int64_t n_files, double alpha);

// Mass of files lo+1 .. hi (prefix difference). Zero for lo == hi.
double cumulative_mass(const PopularityModel& model, std::int64_t lo, std::int64_t hi);

}  // namespace popcache
