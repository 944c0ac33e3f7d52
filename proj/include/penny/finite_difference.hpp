// Second-order finite differences on a uniform grid.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "penny/error.hpp"

namespace penny {

/// d/dt of uniformly sampled values: central differences inside, one-sided
/// second-order stencils at both ends. Needs at least 3 samples.
inline std::vector<double> time_derivative(std::span<const double> values, double dt) {
    const std::size_t n = values.size();
    if (n < 3) throw InvalidArgument("time_derivative: need at least 3 samples");
    if (!(dt > 0.0)) throw InvalidArgument("time_derivative: dt must be > 0");
    std::vector<double> d(n);
    const double inv2h = 1.0 / (2.0 * dt);
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) * inv2h;
    for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (values[k + 1] - values[k - 1]) * inv2h;
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) * inv2h;
    return d;
}

} // namespace penny
