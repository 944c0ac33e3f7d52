// Shared randomized inputs for the property tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "penny/core.hpp"
#include "penny/groups.hpp"
#include "penny/rng.hpp"

namespace penny::testkit {

inline PennyParams random_params(Rng& rng) {
    return {rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0),
            rng.uniform(0.1, 3.0)};
}

inline Config random_config(Rng& rng, double span = 10.0) {
    return {rng.uniform(-span, span), rng.uniform(-span, span), rng.uniform(-span, span),
            rng.uniform(-span, span)};
}

inline Velocity random_velocity(Rng& rng, double span = 5.0) {
    return {rng.uniform(-span, span), rng.uniform(-span, span), rng.uniform(-span, span),
            rng.uniform(-span, span)};
}

inline State random_state(Rng& rng) { return {random_config(rng), random_velocity(rng)}; }

inline GroupElement random_element(Rng& rng) {
    return {rng.uniform(-std::numbers::pi, std::numbers::pi), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
}

/// |a - b| measured in units in the last place of the larger magnitude.
inline double ulps_apart(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale == 0.0) return 0.0;
    return std::abs(a - b) / (std::nextafter(scale, INFINITY) - scale);
}

} // namespace penny::testkit
