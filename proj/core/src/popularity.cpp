#include "popcache/popularity.hpp"

#include <cmath>
#include <string>

#include "popcache/errors.hpp"

namespace popcache {

PopularityModel build_popularity(std::int64_t n_files, double alpha) {
    if (n_files < 1)
        throw InvalidParameterError("popularity: need at least one file, got " +
                                    std::to_string(n_files));
    if (!(alpha >= 0.0))
        throw InvalidParameterError("popularity: alpha must be >= 0, got " +
                                    std::to_string(alpha));

    PopularityModel model;
    model.alpha = alpha;
    model.p.resize(static_cast<std::size_t>(n_files));

    CompensatedSum norm;
    for (std::int64_t n = 1; n <= n_files; ++n) {
        double w = std::pow(static_cast<double>(n), -alpha);
        model.p[static_cast<std::size_t>(n - 1)] = w;
        norm.add(w);
    }
    const double total = norm.value();

    model.prefix.resize(static_cast<std::size_t>(n_files) + 1);
    model.prefix[0] = 0.0;
    CompensatedSum run;
    for (std::int64_t n = 1; n <= n_files; ++n) {
        double& pn = model.p[static_cast<std::size_t>(n - 1)];
        pn /= total;
        run.add(pn);
        model.prefix[static_cast<std::size_t>(n)] = run.value();
    }
    return model;
}

double cumulative_mass(const PopularityModel& model, std::int64_t lo, std::int64_t hi) {
    const std::int64_t n = model.file_count();
    if (lo < 0 || hi < lo || hi > n)
        throw InvalidParameterError("cumulative_mass: bad range [" + std::to_string(lo) +
                                    ", " + std::to_string(hi) + "] for N=" + std::to_string(n));
    return model.prefix[static_cast<std::size_t>(hi)] - model.prefix[static_cast<std::size_t>(lo)];
}

}  // namespace popcache
