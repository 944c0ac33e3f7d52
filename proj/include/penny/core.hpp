// Vertically rolling penny: configuration space, Lagrangian, non-slip
// constraints, Ehresmann connection and horizontal lift.
//
// Coordinate ordering is (theta, phi, x, y) everywhere in this library:
//   theta  rolling angle of a material point on the rim      [rad]
//   phi    heading of the rolling direction w.r.t. the x axis [rad]
//   x, y   contact point in the plane                         [m]
// Angles are stored unwrapped so time histories stay continuous.
#pragma once

#include <array>
#include <cmath>
#include <string>

#include "penny/error.hpp"

namespace penny {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>;

/// Physical constants of the penny.
struct PennyParams {
    double mass = 1.0;         ///< m [kg]
    double inertia_roll = 0.5; ///< I, about the rolling (symmetry) axis [kg m^2]
    double inertia_yaw = 0.25; ///< J, about the vertical axis [kg m^2]
    double radius = 1.0;       ///< R [m]

    void validate() const {
        auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
        if (!positive(mass) || !positive(inertia_roll) || !positive(inertia_yaw) ||
            !positive(radius)) {
            throw InvalidArgument("PennyParams: m, I, J, R must be finite and > 0");
        }
    }

    friend bool operator==(const PennyParams&, const PennyParams&) = default;
};

struct Config {
    double theta = 0.0;
    double phi = 0.0;
    double x = 0.0;
    double y = 0.0;

    [[nodiscard]] Vec4 as_array() const { return {theta, phi, x, y}; }
    static Config from_array(const Vec4& a) { return {a[0], a[1], a[2], a[3]}; }
    friend bool operator==(const Config&, const Config&) = default;
};

struct Velocity {
    double theta_dot = 0.0;
    double phi_dot = 0.0;
    double x_dot = 0.0;
    double y_dot = 0.0;

    [[nodiscard]] Vec4 as_array() const { return {theta_dot, phi_dot, x_dot, y_dot}; }
    static Velocity from_array(const Vec4& a) { return {a[0], a[1], a[2], a[3]}; }
    friend bool operator==(const Velocity&, const Velocity&) = default;
};

/// A point of TQ. Need not satisfy the constraints.
struct State {
    Config q;
    Velocity v;
    friend bool operator==(const State&, const State&) = default;
};

/// Value of the connection, which for the penny lives in span{d/dx, d/dy}.
struct VerticalPart {
    double cx = 0.0; ///< coefficient of d/dx [m/s]
    double cy = 0.0; ///< coefficient of d/dy [m/s]

    [[nodiscard]] double squared_norm() const { return cx * cx + cy * cy; }
    friend bool operator==(const VerticalPart&, const VerticalPart&) = default;
};

/// Kinetic energy 1/2 I th'^2 + 1/2 J ph'^2 + 1/2 m (x'^2 + y'^2).
inline double lagrangian(const PennyParams& p, const Velocity& v) {
    return 0.5 * p.inertia_roll * v.theta_dot * v.theta_dot +
           0.5 * p.inertia_yaw * v.phi_dot * v.phi_dot +
           0.5 * p.mass * (v.x_dot * v.x_dot + v.y_dot * v.y_dot);
}

/// dL/dq'.
inline Vec4 momentum(const PennyParams& p, const Velocity& v) {
    return {p.inertia_roll * v.theta_dot, p.inertia_yaw * v.phi_dot, p.mass * v.x_dot,
            p.mass * v.y_dot};
}

/// A(v) = (x' - R cos(phi) th') d/dx + (y' - R sin(phi) th') d/dy.
///
/// Zero exactly when the state satisfies the non-slip constraints.
inline VerticalPart connection_apply(const PennyParams& p, const State& s) {
    const double c = std::cos(s.q.phi);
    const double sn = std::sin(s.q.phi);
    return {s.v.x_dot - p.radius * c * s.v.theta_dot, s.v.y_dot - p.radius * sn * s.v.theta_dot};
}

/// hor v = v - A(v).
///
/// Written as a direct replacement of (x', y') rather than a subtraction so
/// that connection_apply of the result is exactly zero in floating point.
inline Velocity horizontal_lift(const PennyParams& p, const State& s) {
    Velocity out = s.v;
    out.x_dot = p.radius * std::cos(s.q.phi) * s.v.theta_dot;
    out.y_dot = p.radius * std::sin(s.q.phi) * s.v.theta_dot;
    return out;
}

/// Basis {d/dphi, d/dtheta + R cos(phi) d/dx + R sin(phi) d/dy} of ker A.
inline std::array<Vec4, 2> distribution_basis(const PennyParams& p, const Config& q) {
    return {Vec4{0.0, 1.0, 0.0, 0.0},
            Vec4{1.0, 0.0, p.radius * std::cos(q.phi), p.radius * std::sin(q.phi)}};
}

inline bool satisfies_constraints(const PennyParams& p, const State& s, double tol) {
    const VerticalPart a = connection_apply(p, s);
    return std::abs(a.cx) <= tol && std::abs(a.cy) <= tol;
}

} // namespace penny
