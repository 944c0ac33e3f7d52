// Closed-form rolling motion, an RK4 integrator for the constrained
// equations of motion, and seeded dataset generation.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <thread>
#include <vector>

#include "penny/core.hpp"
#include "penny/groups.hpp"
#include "penny/rng.hpp"

namespace penny {

/// Integration constants of the explicit solution.
struct TrajectoryParams {
    double rolling_rate = 1.0; ///< Omega = theta' [rad/s]
    double spin_rate = 1.0;    ///< omega = phi' [rad/s], nonzero
    double theta0 = 0.0;
    double phi0 = 0.0;
    double x0 = 0.0;
    double y0 = 0.0;

    void validate() const {
        if (!(std::isfinite(rolling_rate) && std::isfinite(spin_rate) && std::isfinite(theta0) &&
              std::isfinite(phi0) && std::isfinite(x0) && std::isfinite(y0))) {
            throw InvalidArgument("TrajectoryParams: all constants must be finite");
        }
        if (spin_rate == 0.0) throw InvalidArgument("TrajectoryParams: spin rate omega must be nonzero");
    }

    friend bool operator==(const TrajectoryParams&, const TrajectoryParams&) = default;
};

/// Uniformly sampled states; times[k] = k * dt.
struct Trajectory {
    PennyParams params;
    std::vector<double> times;
    std::vector<State> states;
    std::optional<TrajectoryParams> constants; ///< set when produced from the closed form

    [[nodiscard]] std::size_t size() const { return states.size(); }
    [[nodiscard]] double dt() const { return times.size() >= 2 ? times[1] - times[0] : 0.0; }

    void validate() const {
        if (times.size() != states.size() || times.size() < 2) {
            throw InvalidArgument("Trajectory: need >= 2 samples with matching times");
        }
        const double step = dt();
        if (!(step > 0.0)) throw InvalidArgument("Trajectory: times must be strictly increasing");
        for (std::size_t k = 1; k < times.size(); ++k) {
            const double d = times[k] - times[k - 1];
            if (!(d > 0.0) || std::abs(d - step) > 1e-9 * std::max(1.0, std::abs(times[k]))) {
                throw InvalidArgument("Trajectory: time grid must be uniform and increasing");
            }
        }
    }
};

/// Exact state at time t:
///   theta = Omega t + theta0,  phi = omega t + phi0,
///   x = (Omega/omega) R sin(phi) + x0,  y = -(Omega/omega) R cos(phi) + y0,
///   x' = Omega R cos(phi),             y' = Omega R sin(phi).
inline State explicit_state(const PennyParams& p, const TrajectoryParams& tp, double t) {
    tp.validate();
    const double phi = tp.spin_rate * t + tp.phi0;
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double ratio = tp.rolling_rate / tp.spin_rate * p.radius;
    State out;
    out.q = {tp.rolling_rate * t + tp.theta0, phi, ratio * s + tp.x0, -ratio * c + tp.y0};
    out.v = {tp.rolling_rate, tp.spin_rate, p.radius * c * tp.rolling_rate,
             p.radius * s * tp.rolling_rate};
    return out;
}

/// Samples the closed form on times k * dt, k = 0..n_steps.
inline Trajectory sample_explicit(const PennyParams& p, const TrajectoryParams& tp, double dt,
                                  std::size_t n_steps) {
    if (!(dt > 0.0)) throw InvalidArgument("sample_explicit: dt must be > 0");
    Trajectory traj;
    traj.params = p;
    traj.constants = tp;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        traj.times.push_back(t);
        traj.states.push_back(explicit_state(p, tp, t));
    }
    return traj;
}

namespace detail {

// Reduced state (theta, phi, x, y, theta', phi'); x', y' follow from the
// constraint.
using Reduced = std::array<double, 6>;

inline Reduced rolling_rhs(const PennyParams& p, const Reduced& z) {
    return {z[4], z[5], p.radius * std::cos(z[1]) * z[4], p.radius * std::sin(z[1]) * z[4], 0.0,
            0.0};
}

inline State to_state(const PennyParams& p, const Reduced& z) {
    State s;
    s.q = {z[0], z[1], z[2], z[3]};
    s.v = {z[4], z[5], 0.0, 0.0};
    s.v = horizontal_lift(p, s);
    return s;
}

} // namespace detail

/// Classic RK4 on theta'' = 0, phi'' = 0, x' = R cos(phi) theta',
/// y' = R sin(phi) theta'. Returns n_steps + 1 samples starting at t = 0.
inline Trajectory integrate_rk4(const PennyParams& p, const State& s0, double dt,
                                std::size_t n_steps) {
    p.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("integrate_rk4: dt must be > 0");
    if (!satisfies_constraints(p, s0, 1e-9)) {
        throw InvalidArgument("integrate_rk4: initial state violates the non-slip constraints");
    }

    using detail::Reduced;
    Reduced z{s0.q.theta, s0.q.phi, s0.q.x, s0.q.y, s0.v.theta_dot, s0.v.phi_dot};
    auto axpy = [](const Reduced& a, double h, const Reduced& b) {
        Reduced r{};
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] + h * b[i];
        return r;
    };

    Trajectory traj;
    traj.params = p;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(detail::to_state(p, z));
    for (std::size_t k = 1; k <= n_steps; ++k) {
        const Reduced k1 = detail::rolling_rhs(p, z);
        const Reduced k2 = detail::rolling_rhs(p, axpy(z, 0.5 * dt, k1));
        const Reduced k3 = detail::rolling_rhs(p, axpy(z, 0.5 * dt, k2));
        const Reduced k4 = detail::rolling_rhs(p, axpy(z, dt, k3));
        for (std::size_t i = 0; i < z.size(); ++i) {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        traj.times.push_back(static_cast<double>(k) * dt);
        traj.states.push_back(detail::to_state(p, z));
    }
    return traj;
}

/// Closed interval [lo, hi] a constant is drawn from.
struct Range {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const Range&, const Range&) = default;
};

/// Dataset recipe. Rates are drawn as sign * magnitude with a fair sign, so
/// their distributions are symmetric about zero.
struct DatasetConfig {
    std::size_t n_trajectories = 32;
    double t_end = 20.0;
    double dt = 0.01;
    double radius = 1.0; ///< R_fixed; overrides PennyParams::radius
    Range rolling_rate_magnitude{0.5, 2.0};
    Range spin_rate_magnitude{0.5, 2.0};
    Range theta0{0.0, 2.0 * std::numbers::pi};
    Range phi0{0.0, 2.0 * std::numbers::pi};
    Range x0{-6.0, 6.0};
    Range y0{-6.0, 6.0};
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t steps() const {
        return static_cast<std::size_t>(std::llround(t_end / dt));
    }

    void validate() const {
        if (n_trajectories < 1) throw InvalidArgument("DatasetConfig: n_trajectories must be >= 1");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("DatasetConfig: dt must be > 0");
        if (!(t_end > dt) || !std::isfinite(t_end)) {
            throw InvalidArgument("DatasetConfig: t_end must exceed dt");
        }
        if (!(radius > 0.0) || !std::isfinite(radius)) {
            throw InvalidArgument("DatasetConfig: radius must be > 0");
        }
        for (const Range* r : {&rolling_rate_magnitude, &spin_rate_magnitude}) {
            if (!(r->lo > 0.0) || !(r->hi >= r->lo) || !std::isfinite(r->hi)) {
                throw InvalidArgument("DatasetConfig: rate magnitude ranges need 0 < lo <= hi");
            }
        }
        for (const Range* r : {&theta0, &phi0, &x0, &y0}) {
            if (!(r->hi >= r->lo) || !std::isfinite(r->lo) || !std::isfinite(r->hi)) {
                throw InvalidArgument("DatasetConfig: ranges need finite lo <= hi");
            }
        }
    }
};

/// Constants of trajectory `index`, drawn from substream `index` of cfg.seed
/// in the order |Omega|, sign(Omega), |omega|, sign(omega), theta0, phi0, x0, y0.
inline TrajectoryParams sample_trajectory_params(const DatasetConfig& cfg, std::size_t index) {
    Rng rng(cfg.seed, index);
    auto draw = [&rng](const Range& r) { return rng.uniform(r.lo, r.hi); };
    TrajectoryParams tp;
    const double rolling = draw(cfg.rolling_rate_magnitude);
    tp.rolling_rate = rng.sign() * rolling;
    const double spin = draw(cfg.spin_rate_magnitude);
    tp.spin_rate = rng.sign() * spin;
    tp.theta0 = draw(cfg.theta0);
    tp.phi0 = draw(cfg.phi0);
    tp.x0 = draw(cfg.x0);
    tp.y0 = draw(cfg.y0);
    return tp;
}

/// Trajectories sampled from the closed form. The output depends only on
/// (cfg, p); `workers` only changes how the work is split.
inline std::vector<Trajectory> generate_dataset(const DatasetConfig& cfg, PennyParams p,
                                                unsigned workers = 1) {
    cfg.validate();
    p.radius = cfg.radius;
    p.validate();

    std::vector<Trajectory> out(cfg.n_trajectories);
    auto build = [&](std::size_t i) {
        out[i] = sample_explicit(p, sample_trajectory_params(cfg, i), cfg.dt, cfg.steps());
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(out.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < out.size(); ++i) build(i);
        return out;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < out.size(); i += workers) build(i);
        });
    }
    pool.clear();
    return out;
}

/// Normalized orbit-tangent part of the velocity: (phi', x', y') for SE2,
/// (theta', x', y') for S1R2.
inline Vec3 orbit_velocity(GroupAction group, const State& s) {
    const Vec3 r = restrict_velocity(group, s.v);
    const double n = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    if (!(n >= 1e-9) || !std::isfinite(n)) {
        throw DegenerateVector("orbit_velocity: restricted velocity is zero");
    }
    return {r[0] / n, r[1] / n, r[2] / n};
}

} // namespace penny
