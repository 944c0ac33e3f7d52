#include <gtest/gtest.h>

#include <cmath>

#include "penny/diagnostics.hpp"
#include "penny/evaluation.hpp"
#include "support.hpp"

using namespace penny;

namespace {

const PennyParams kPenny{1.3, 0.5, 0.25, 1.2};
const TrajectoryParams kRoll{1.4, -0.9, 0.1, 0.6, 0.5, -0.3};

LieAlgebraField se2_exact() {
    return [](const Config& q) { return LieAlgebraElement{{1.0, q.y, -q.x}}; };
}

LieAlgebraField s1r2_exact(double radius) {
    return [radius](const Config& q) {
        return LieAlgebraElement{{1.0, radius * std::cos(q.phi), radius * std::sin(q.phi)}};
    };
}

// The same directions rescaled by a smooth nonconstant factor. Still a valid
// choice of xi (any multiple spans the same section), but now neither side
// of the momentum equation is trivially constant.
LieAlgebraField scaled(LieAlgebraField f) {
    return [f](const Config& q) {
        LieAlgebraElement xi = f(q);
        const double c = 1.0 + 0.5 * std::sin(q.phi);
        for (double& v : xi.xi) v *= c;
        return xi;
    };
}

double residual_max(const TrajectoryParams& tp, double dt, const LieAlgebraField& xi,
                    GroupAction g) {
    const auto steps = static_cast<std::size_t>(std::llround(20.0 / dt));
    return momentum_equation_residual(kPenny, sample_explicit(kPenny, tp, dt, steps), xi, g)
        .max_abs();
}

} // namespace

TEST(NhcMomentum, Examples) {
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
        const PennyParams p = testkit::random_params(rng);
        const State s = testkit::random_state(rng);
        EXPECT_DOUBLE_EQ(nhc_momentum(p, s, {0.0, 1.0, 0.0, 0.0}), p.inertia_yaw * s.v.phi_dot);
        EXPECT_EQ(nhc_momentum(p, s, {0.0, 0.0, 0.0, 0.0}), 0.0);

        State h = s;
        h.v = horizontal_lift(p, s);
        const Vec4 roll = distribution_basis(p, h.q)[1];
        const double expected =
            (p.inertia_roll + p.mass * p.radius * p.radius) * h.v.theta_dot;
        EXPECT_NEAR(nhc_momentum(p, h, roll), expected, 1e-12 * (1.0 + std::abs(expected)));
    }
}

TEST(NhcMomentum, LinearInXi) {
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        const PennyParams p = testkit::random_params(rng);
        const State s = testkit::random_state(rng);
        const Vec4 a = testkit::random_velocity(rng).as_array();
        const Vec4 b = testkit::random_velocity(rng).as_array();
        const double ca = rng.uniform(-2, 2), cb = rng.uniform(-2, 2);
        Vec4 mix{};
        for (std::size_t k = 0; k < 4; ++k) mix[k] = ca * a[k] + cb * b[k];
        EXPECT_NEAR(nhc_momentum(p, s, mix), ca * nhc_momentum(p, s, a) + cb * nhc_momentum(p, s, b),
                    1e-10);
    }
}

TEST(MomentumEquation, ExactChoicesAtDefaultStep) {
    EXPECT_LE(residual_max(kRoll, 0.01, se2_exact(), GroupAction::se2), 1e-6);
    const double scale = std::max(1.0, std::abs(kRoll.rolling_rate * kRoll.spin_rate * kPenny.mass *
                                                kPenny.radius * kPenny.radius));
    EXPECT_LE(residual_max(kRoll, 0.01, s1r2_exact(kPenny.radius), GroupAction::s1r2), 1e-6 * scale);
}

TEST(MomentumEquation, ConstantXiWithConservedPairing) {
    // (1, 0, 0) pushes forward to d/dtheta, which pairs to I theta', a
    // constant; dxi/dt = 0.
    const LieAlgebraField constant = [](const Config&) { return LieAlgebraElement{{1.0, 0.0, 0.0}}; };
    EXPECT_LE(residual_max(kRoll, 0.01, constant, GroupAction::s1r2), 1e-12);
}

TEST(MomentumEquation, SecondOrderConvergence) {
    for (GroupAction g : {GroupAction::se2, GroupAction::s1r2}) {
        const LieAlgebraField xi =
            scaled(g == GroupAction::se2 ? se2_exact() : s1r2_exact(kPenny.radius));
        const double coarse = residual_max(kRoll, 0.01, xi, g);
        const double fine = residual_max(kRoll, 0.005, xi, g);
        EXPECT_LE(coarse, 1e-3);
        EXPECT_GT(coarse, 1e-9) << "residual should be truncation- not roundoff-dominated";
        EXPECT_NEAR(coarse / fine, 4.0, 0.2) << to_string(g);
    }
}

TEST(MomentumEquation, DetectsAWrongField) {
    // A field that is not a symmetry of the dynamics leaves an O(1) residual.
    const LieAlgebraField wrong = [](const Config& q) {
        return LieAlgebraElement{{std::cos(q.phi), 0.0, 0.0}};
    };
    EXPECT_GT(residual_max(kRoll, 0.01, wrong, GroupAction::se2), 1e-3);
}

TEST(MomentumEquation, SeriesShapeAndErrors) {
    const Trajectory t = sample_explicit(kPenny, kRoll, 0.01, 100);
    const MomentumSeries r = momentum_equation_residual(kPenny, t, se2_exact(), GroupAction::se2);
    ASSERT_EQ(r.values.size(), 99u);
    EXPECT_EQ(r.times.front(), t.times[1]);
    EXPECT_EQ(r.times.back(), t.times[99]);

    const Trajectory tiny = sample_explicit(kPenny, kRoll, 0.01, 1);
    EXPECT_THROW(momentum_equation_residual(kPenny, tiny, se2_exact(), GroupAction::se2),
                 InvalidArgument);
}

TEST(TimeDerivative, ExactForQuadratics) {
    const double dt = 0.1;
    std::vector<double> v;
    for (int k = 0; k < 6; ++k) {
        const double t = k * dt;
        v.push_back(3.0 * t * t - t + 2.0);
    }
    const auto d = time_derivative(v, dt);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(d[k], 6.0 * k * dt - 1.0, 1e-12);
    EXPECT_THROW(time_derivative(std::vector<double>{1.0, 2.0}, dt), InvalidArgument);
}

TEST(ConservedQuantities, ExplicitTrajectoryExactlyConstant) {
    const ConservedQuantities c = conserved_quantities(kPenny, sample_explicit(kPenny, kRoll, 0.01, 2000));
    EXPECT_EQ(c.spin_deviation.absolute, 0.0);
    EXPECT_EQ(c.rolling_deviation.absolute, 0.0);
    EXPECT_DOUBLE_EQ(c.spin.values.front(), kPenny.inertia_yaw * kRoll.spin_rate);
    EXPECT_DOUBLE_EQ(c.rolling.values.front(),
                     (kPenny.inertia_roll + kPenny.mass * kPenny.radius * kPenny.radius) *
                         kRoll.rolling_rate);
}

TEST(ConservedQuantities, Rk4TrajectoryWithinRoundoff) {
    const Trajectory t = integrate_rk4(kPenny, explicit_state(kPenny, kRoll, 0.0), 0.01, 2000);
    const ConservedQuantities c = conserved_quantities(kPenny, t);
    EXPECT_LE(c.spin_deviation.relative, 1e-9);
    EXPECT_LE(c.rolling_deviation.relative, 1e-9);
}

TEST(ConservedQuantities, DetectsCorruption) {
    Trajectory t = sample_explicit(kPenny, kRoll, 0.01, 200);
    for (std::size_t k = 0; k < t.size(); ++k) t.states[k].v.phi_dot += 1e-3 * static_cast<double>(k);
    const ConservedQuantities c = conserved_quantities(kPenny, t);
    EXPECT_GT(c.spin_deviation.relative, 0.1);
    EXPECT_EQ(c.rolling_deviation.absolute, 0.0);
}
