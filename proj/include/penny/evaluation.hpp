// Evaluation grids and error metrics for a trained field.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "penny/core.hpp"
#include "penny/groups.hpp"
#include "penny/learner.hpp"

namespace penny {

/// n configurations with phi = 2 pi k / n, other coordinates fixed.
inline std::vector<Config> phi_grid(std::size_t n, double theta = 0.0, double x = 0.0,
                                    double y = 0.0) {
    std::vector<Config> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back({theta, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n),
                       x, y});
    }
    return out;
}

/// n_side x n_side points spanning [lo, hi]^2 (endpoints included), repeated
/// for every heading in `phis`. A single point sits at lo.
inline std::vector<Config> xy_grid(std::size_t n_side, double lo, double hi,
                                   std::span<const double> phis, double theta = 0.0) {
    std::vector<Config> out;
    out.reserve(n_side * n_side * phis.size());
    const double step = n_side > 1 ? (hi - lo) / static_cast<double>(n_side - 1) : 0.0;
    for (double phi : phis) {
        for (std::size_t i = 0; i < n_side; ++i) {
            for (std::size_t j = 0; j < n_side; ++j) {
                out.push_back({theta, phi, lo + step * static_cast<double>(i),
                               lo + step * static_cast<double>(j)});
            }
        }
    }
    return out;
}

/// Lie algebra element whose generator is the reference section:
/// SE2 -> (1, y, -x); S1R2 -> (1, R cos(phi), R sin(phi)) / sqrt(1 + R^2).
inline LieAlgebraElement expected_lie_algebra(GroupAction group, const PennyParams& p,
                                              const Config& q) {
    return pullback(group, q, reference_section(group, p, q));
}

/// sqrt of the mean squared difference over all points and components.
inline double rms_component_error(std::span<const Vec3> got, std::span<const Vec3> want) {
    if (got.size() != want.size() || got.empty()) {
        throw InvalidArgument("rms_component_error: size mismatch or empty");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            const double d = got[i][c] - want[i][c];
            acc += d * d;
        }
    }
    return std::sqrt(acc / (3.0 * static_cast<double>(got.size())));
}

inline Vec3 normalized(const Vec3& v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (!(n > 0.0)) throw DegenerateVector("normalized: zero vector");
    return {v[0] / n, v[1] / n, v[2] / n};
}

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

/// +1 or -1: the sign s for which s * got agrees with want at the majority
/// of points.
inline double majority_sign(std::span<const Vec3> got, std::span<const Vec3> want) {
    std::ptrdiff_t votes = 0;
    for (std::size_t i = 0; i < got.size(); ++i) votes += dot(got[i], want[i]) >= 0.0 ? 1 : -1;
    return votes >= 0 ? 1.0 : -1.0;
}

/// RMS component error between unit directions, after resolving one global
/// sign by majority.
inline double direction_rms_error(std::span<const Vec3> got, std::span<const Vec3> want) {
    std::vector<Vec3> a, b;
    a.reserve(got.size());
    b.reserve(want.size());
    for (const Vec3& v : got) a.push_back(normalized(v));
    for (const Vec3& v : want) b.push_back(normalized(v));
    const double s = majority_sign(a, b);
    for (Vec3& v : a) v = {s * v[0], s * v[1], s * v[2]};
    return rms_component_error(a, b);
}

/// Angle (rad) between each got[i] and s * want[i] with the global majority
/// sign s.
inline std::vector<double> angle_errors(std::span<const Vec3> got, std::span<const Vec3> want) {
    const double s = majority_sign(got, want);
    std::vector<double> out;
    out.reserve(got.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        const Vec3 a = normalized(got[i]);
        const Vec3 b = normalized(want[i]);
        const double c = std::clamp(s * dot(a, b), -1.0, 1.0);
        out.push_back(std::acos(c));
    }
    return out;
}

inline double mean_abs_component(std::span<const Vec3> v, std::size_t component) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (const Vec3& x : v) acc += std::abs(x[component]);
    return acc / static_cast<double>(v.size());
}

/// Field values f(q) over a grid.
inline std::vector<Vec3> field_on(const ModelWeights& w, std::span<const Config> qs) {
    std::vector<Vec3> out;
    out.reserve(qs.size());
    MlpWorkspace ws(w);
    for (const Config& q : qs) out.push_back(forward(w, q, ws));
    return out;
}

inline std::vector<Vec3> as_vectors(std::span<const LieAlgebraElement> xs) {
    std::vector<Vec3> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(x.xi);
    return out;
}

/// Summary numbers for one trained field on one grid.
struct FieldMetrics {
    double mean_abs_f2 = 0.0;
    double mean_abs_f3 = 0.0;
    double lie_rms_error = 0.0;       ///< S1R2: raw components; SE2: directions
    double max_section_angle = 0.0;   ///< rad
    double mean_section_angle = 0.0;  ///< rad
    double vertical_residual = 0.0;
};

inline FieldMetrics evaluate_field(const ModelWeights& w, const PennyParams& p,
                                   GroupAction group, std::span<const Config> qs) {
    FieldMetrics m;
    const std::vector<Vec3> f = field_on(w, qs);
    std::vector<Vec3> section, expected;
    section.reserve(qs.size());
    expected.reserve(qs.size());
    for (const Config& q : qs) {
        section.push_back(reference_section(group, p, q));
        expected.push_back(expected_lie_algebra(group, p, q).xi);
    }
    const std::vector<Vec3> xi = as_vectors(recover_lie_algebra(w, group, qs));
    m.mean_abs_f2 = mean_abs_component(f, 1);
    m.mean_abs_f3 = mean_abs_component(f, 2);
    if (group == GroupAction::s1r2) {
        const double s = majority_sign(xi, expected);
        std::vector<Vec3> signed_xi = xi;
        for (Vec3& v : signed_xi) v = {s * v[0], s * v[1], s * v[2]};
        m.lie_rms_error = rms_component_error(signed_xi, expected);
    } else {
        m.lie_rms_error = direction_rms_error(xi, expected);
    }
    const std::vector<double> angles = angle_errors(f, section);
    double sum = 0.0;
    for (double a : angles) {
        m.max_section_angle = std::max(m.max_section_angle, a);
        sum += a;
    }
    m.mean_section_angle = angles.empty() ? 0.0 : sum / static_cast<double>(angles.size());
    m.vertical_residual = vertical_residual(w, p, group, qs);
    return m;
}

} // namespace penny
