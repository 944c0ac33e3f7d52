// Nonholonomic momentum map, momentum-equation residuals and conserved
// quantities along trajectories.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "penny/core.hpp"
#include "penny/dynamics.hpp"
#include "penny/finite_difference.hpp"
#include "penny/groups.hpp"

namespace penny {

/// A scalar time series aligned with a trajectory's time stamps.
struct MomentumSeries {
    std::vector<double> times;
    std::vector<double> values;

    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

/// <J_nhc(v_q), xi> = sum_i dL/dq'^i (xi_Q)^i.
inline double nhc_momentum(const PennyParams& p, const State& s, const Vec4& xi_q) {
    const Vec4 pm = momentum(p, s.v);
    return pm[0] * xi_q[0] + pm[1] * xi_q[1] + pm[2] * xi_q[2] + pm[3] * xi_q[3];
}

using LieAlgebraField = std::function<LieAlgebraElement(const Config&)>;

/// |LHS - RHS| of the momentum equation
///
///   d/dt <J_nhc, xi^{q(t)}> = dL/dq'^i [ d/dt xi^{q(t)} ]_Q^i
///
/// at each interior sample. Both time derivatives are second-order finite
/// differences; d/dt xi is taken on the Lie algebra coordinates and then
/// mapped through the generators at q(t).
inline MomentumSeries momentum_equation_residual(const PennyParams& p, const Trajectory& traj,
                                                 const LieAlgebraField& xi_of_q,
                                                 GroupAction group) {
    if (traj.size() < 3) throw InvalidArgument("momentum_equation_residual: need >= 3 samples");
    traj.validate();
    const std::size_t n = traj.size();
    const double dt = traj.dt();

    std::vector<double> pairing(n);
    std::array<std::vector<double>, 3> xi_components;
    for (auto& c : xi_components) c.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const State& s = traj.states[k];
        const LieAlgebraElement xi = xi_of_q(s.q);
        pairing[k] = nhc_momentum(p, s, generator(group, s.q, xi));
        for (std::size_t c = 0; c < 3; ++c) xi_components[c][k] = xi[c];
    }

    const std::vector<double> lhs = time_derivative(pairing, dt);
    std::array<std::vector<double>, 3> xi_rate;
    for (std::size_t c = 0; c < 3; ++c) xi_rate[c] = time_derivative(xi_components[c], dt);

    MomentumSeries out;
    out.times.reserve(n - 2);
    out.values.reserve(n - 2);
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const State& s = traj.states[k];
        const LieAlgebraElement dxi{{xi_rate[0][k], xi_rate[1][k], xi_rate[2][k]}};
        const double rhs = nhc_momentum(p, s, generator(group, s.q, dxi));
        out.times.push_back(traj.times[k]);
        out.values.push_back(std::abs(lhs[k] - rhs));
    }
    return out;
}

struct Deviation {
    double absolute = 0.0; ///< max |v(t) - v(0)|
    double relative = 0.0; ///< absolute / |v(0)|, or absolute when v(0) == 0
};

inline Deviation deviation_from_initial(const MomentumSeries& s) {
    Deviation d;
    if (s.values.empty()) return d;
    const double v0 = s.values.front();
    for (double v : s.values) d.absolute = std::max(d.absolute, std::abs(v - v0));
    d.relative = v0 != 0.0 ? d.absolute / std::abs(v0) : d.absolute;
    return d;
}

struct ConservedQuantities {
    MomentumSeries spin;    ///< J phi'
    MomentumSeries rolling; ///< (I + m R^2) theta'
    Deviation spin_deviation;
    Deviation rolling_deviation;
};

inline ConservedQuantities conserved_quantities(const PennyParams& p, const Trajectory& traj) {
    ConservedQuantities out;
    const double rolling_inertia = p.inertia_roll + p.mass * p.radius * p.radius;
    out.spin.times = traj.times;
    out.rolling.times = traj.times;
    out.spin.values.reserve(traj.size());
    out.rolling.values.reserve(traj.size());
    for (const State& s : traj.states) {
        out.spin.values.push_back(p.inertia_yaw * s.v.phi_dot);
        out.rolling.values.push_back(rolling_inertia * s.v.theta_dot);
    }
    out.spin_deviation = deviation_from_initial(out.spin);
    out.rolling_deviation = deviation_from_initial(out.rolling);
    return out;
}

} // namespace penny
