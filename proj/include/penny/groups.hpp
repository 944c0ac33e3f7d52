// The two symmetry actions on the penny's configuration space.
//
//   SE2:  (alpha, a, b)     . (theta, phi, x, y)
//           = (theta, phi + alpha, x cos(alpha) - y sin(alpha) + a,
//                                  x sin(alpha) + y cos(alpha) + b)
//   S1R2: (beta, lam, mu)   . (theta, phi, x, y) = (theta + beta, phi, x + lam, y + mu)
//
// Orbit-tangent coordinates (the 3-vectors the learner works with):
//   SE2  -> (d/dphi,   d/dx, d/dy)
//   S1R2 -> (d/dtheta, d/dx, d/dy)
#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "penny/core.hpp"

namespace penny {

enum class GroupAction { se2, s1r2 };

inline std::string_view to_string(GroupAction g) {
    return g == GroupAction::se2 ? "se2" : "s1r2";
}

inline GroupAction parse_group(std::string_view name) {
    if (name == "se2" || name == "SE2") return GroupAction::se2;
    if (name == "s1r2" || name == "S1R2") return GroupAction::s1r2;
    throw InvalidArgument("unknown group '" + std::string(name) + "' (expected se2 or s1r2)");
}

/// (alpha, a, b) for SE2; (beta, lambda, mu) for S1R2.
struct GroupElement {
    double a1 = 0.0;
    double a2 = 0.0;
    double a3 = 0.0;
};

/// Coordinates in the generator basis of the chosen action.
struct LieAlgebraElement {
    Vec3 xi{};

    double& operator[](std::size_t i) { return xi[i]; }
    double operator[](std::size_t i) const { return xi[i]; }
    friend bool operator==(const LieAlgebraElement&, const LieAlgebraElement&) = default;
};

/// Row-major 3x3.
using Mat3 = std::array<Vec3, 3>;

inline Vec3 mat_vec(const Mat3& m, const Vec3& v) {
    Vec3 out{};
    for (std::size_t r = 0; r < 3; ++r) {
        out[r] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2];
    }
    return out;
}

inline Config act(GroupAction group, const GroupElement& g, const Config& q) {
    if (group == GroupAction::se2) {
        const double c = std::cos(g.a1);
        const double s = std::sin(g.a1);
        return {q.theta, q.phi + g.a1, q.x * c - q.y * s + g.a2, q.x * s + q.y * c + g.a3};
    }
    return {q.theta + g.a1, q.phi, q.x + g.a2, q.y + g.a3};
}

/// Tangent lift of the action on velocities. SE2 rotates (x', y'); S1R2 is
/// the identity on velocities.
inline Velocity act(GroupAction group, const GroupElement& g, const Velocity& v) {
    if (group == GroupAction::se2) {
        const double c = std::cos(g.a1);
        const double s = std::sin(g.a1);
        return {v.theta_dot, v.phi_dot, v.x_dot * c - v.y_dot * s, v.x_dot * s + v.y_dot * c};
    }
    return v;
}

inline State act(GroupAction group, const GroupElement& g, const State& s) {
    return {act(group, g, s.q), act(group, g, s.v)};
}

/// Element whose action equals acting by `first`, then by `second`.
inline GroupElement compose(GroupAction group, const GroupElement& first,
                            const GroupElement& second) {
    if (group == GroupAction::se2) {
        const double c = std::cos(second.a1);
        const double s = std::sin(second.a1);
        return {first.a1 + second.a1, c * first.a2 - s * first.a3 + second.a2,
                s * first.a2 + c * first.a3 + second.a3};
    }
    return {first.a1 + second.a1, first.a2 + second.a2, first.a3 + second.a3};
}

/// Maps Lie algebra coordinates to orbit-tangent coordinates at q.
///
/// SE2 follows from the generators (1,0,0)_Q = d/dphi - y d/dx + x d/dy,
/// (0,1,0)_Q = d/dx, (0,0,1)_Q = d/dy. S1R2 generators are the coordinate
/// fields, so its matrix is the identity.
inline Mat3 pushforward_matrix(GroupAction group, const Config& q) {
    if (group == GroupAction::se2) {
        return {Vec3{1.0, 0.0, 0.0}, Vec3{-q.y, 1.0, 0.0}, Vec3{q.x, 0.0, 1.0}};
    }
    return {Vec3{1.0, 0.0, 0.0}, Vec3{0.0, 1.0, 0.0}, Vec3{0.0, 0.0, 1.0}};
}

/// Inverse of pushforward_matrix.
inline Mat3 pullback_matrix(GroupAction group, const Config& q) {
    if (group == GroupAction::se2) {
        return {Vec3{1.0, 0.0, 0.0}, Vec3{q.y, 1.0, 0.0}, Vec3{-q.x, 0.0, 1.0}};
    }
    return pushforward_matrix(group, q);
}

inline Vec3 pushforward(GroupAction group, const Config& q, const LieAlgebraElement& xi) {
    return mat_vec(pushforward_matrix(group, q), xi.xi);
}

inline LieAlgebraElement pullback(GroupAction group, const Config& q, const Vec3& f) {
    return {mat_vec(pullback_matrix(group, q), f)};
}

/// Places an orbit-tangent 3-vector into (theta, phi, x, y) slots; the
/// coordinate not spanned by the orbit is set to zero.
inline Vec4 embed(GroupAction group, const Vec3& f) {
    if (group == GroupAction::se2) return {0.0, f[0], f[1], f[2]};
    return {f[0], 0.0, f[1], f[2]};
}

/// The part of a velocity tangent to the orbits, in orbit coordinates.
inline Vec3 restrict_velocity(GroupAction group, const Velocity& v) {
    if (group == GroupAction::se2) return {v.phi_dot, v.x_dot, v.y_dot};
    return {v.theta_dot, v.x_dot, v.y_dot};
}

/// Infinitesimal generator xi_Q(q) as a full 4-vector.
inline Vec4 generator(GroupAction group, const Config& q, const LieAlgebraElement& xi) {
    return embed(group, pushforward(group, q, xi));
}

/// Unit spanning vector of D_q intersected with the orbit tangent space,
/// first component positive. SE2 gives d/dphi; S1R2 gives
/// (1, R cos(phi), R sin(phi)) / sqrt(1 + R^2).
inline Vec3 reference_section(GroupAction group, const PennyParams& p, const Config& q) {
    if (group == GroupAction::se2) return {1.0, 0.0, 0.0};
    // Scaling by 1/n (rather than dividing) keeps the embedded vector exactly
    // in ker A: x' - (R cos(phi)) th' cancels to zero in floating point.
    const double inv = 1.0 / std::sqrt(1.0 + p.radius * p.radius);
    return {inv, p.radius * std::cos(q.phi) * inv, p.radius * std::sin(q.phi) * inv};
}

} // namespace penny
