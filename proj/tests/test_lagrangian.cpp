#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace qlag;

namespace {

LagrangianContext zero_field(int n, double omega) {
    return LagrangianContext(build_spin_operators(n), FieldSchedule::constant(Vec3::Zero(), -10.0, 10.0), omega, 1.0);
}

SpinVector vec(const Vector& v) { return SpinVector(v); }

} // namespace

TEST(PVector, PlusBranchVanishes) {
    const double w = 1e3, t = 0.37;
    const auto ctx = zero_field(2, w);
    const Vector q = std::polar(1.0, -w * t) * SpinVector::basis(2, 0).amps();
    const auto p = p_vector(ctx, vec(q), vec(Vector(Complex(0, -w) * q)), t);
    EXPECT_LT(p.norm(), 1e-12 * w);
}

TEST(PVector, MinusBranchIsTwiceOmegaQ) {
    const double w = 1e3, t = 0.37;
    const auto ctx = zero_field(2, w);
    const Vector q = std::polar(1.0, w * t) * SpinVector::basis(2, 0).amps();
    const auto p = p_vector(ctx, vec(q), vec(Vector(Complex(0, w) * q)), t);
    EXPECT_LT((p.amps() - 2.0 * w * q).norm(), 1e-12 * w);
}

TEST(PVector, StaticStateGivesOmegaQ) {
    const auto ctx = zero_field(2, 5.0);
    const auto p = p_vector(ctx, SpinVector::basis(2, 0), vec(Vector::Zero(2)), 0.0);
    EXPECT_EQ(p[0], Complex(5.0));
    EXPECT_EQ(p[1], Complex(0.0));
}

TEST(PVector, RejectsUncoveredTimeAndBadDimension) {
    const auto ctx = zero_field(2, 5.0);
    EXPECT_THROW(p_vector(ctx, SpinVector::basis(2, 0), SpinVector::basis(2, 0), 11.0), CoverageError);
    EXPECT_THROW(p_vector(ctx, SpinVector::basis(3, 0), SpinVector::basis(3, 0), 0.0), ValidationError);
}

TEST(LagrangianValue, BothBranchesAndStaticState) {
    const double w = 1e3, t = 0.2;
    const auto ctx = zero_field(2, w);
    const Vector qp = std::polar(1.0, -w * t) * SpinVector::basis(2, 0).amps();
    const Vector qm = std::polar(1.0, w * t) * SpinVector::basis(2, 0).amps();
    EXPECT_NEAR(lagrangian_value(ctx, vec(qp), vec(Vector(Complex(0, -w) * qp)), t), 0.0, 1e-9 * w * w);
    EXPECT_NEAR(lagrangian_value(ctx, vec(qm), vec(Vector(Complex(0, w) * qm)), t), 0.0, 1e-9 * w * w);
    EXPECT_DOUBLE_EQ(lagrangian_value(ctx, SpinVector::basis(2, 0), vec(Vector::Zero(2)), t), -w * w);
}

TEST(LagrangianValue, RealForRandomInputs) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + k % 4;
        const double w = 1e4;
        const auto sched = oracle::random_schedule(rng, 0.0, 1.0, 5.0);
        const LagrangianContext ctx(build_spin_operators(n), sched, w, 1.3);
        const Vector q = oracle::random_state(rng, n);
        const Vector qd = w * oracle::random_state(rng, n);
        // Oracle for the imaginary residue: <q|p> + <p|q> is real by construction.
        const Vector p = ctx.hamiltonian_at(0.5) * q - Complex(0, 1) * qd;
        const Complex cross = q.dot(p) + p.dot(q);
        EXPECT_LT(std::abs(cross.imag()), 1e-12 * std::abs(cross) + 1e-300);
        const double l = lagrangian_value(ctx, vec(q), vec(qd), 0.5);
        EXPECT_NEAR(l, p.squaredNorm() - w * cross.real(), 1e-9 * (p.squaredNorm() + w * std::abs(cross)));
    }
}

TEST(ParametricResidual, Examples) {
    const double w = 1e6;
    EXPECT_EQ(parametric_nlc_residual(w, 1.0, 0.0, 0.0, -w), 0.0);
    EXPECT_EQ(parametric_nlc_residual(w, 1.0, 0.0, w, 0.0), 0.0);
    for (double x : {0.0, 1.0, 1e3, 0.5 * w, 0.999 * w}) {
        const double td = -std::sqrt(w * w - x * x);
        EXPECT_NEAR(parametric_nlc_residual(w, 1.0, 0.0, x, td), 0.0, 1e-9 * w * w);
    }
    EXPECT_THROW(parametric_nlc_residual(w, 0.0, 0.0, 0.0, 0.0), ValidationError);
    EXPECT_THROW(parametric_nlc_residual(w, -1.0, 0.0, 0.0, 0.0), ValidationError);
}

// In a slow frame phi_j(t) that follows the field (i phi' = -g S.B phi),
// q = A e^{i theta} (cos alpha phi_1 + sin alpha sum c_j phi_j) gives
// L = -A^2 (Omega^2 - thetadot^2 - (Adot/A)^2 - alphadot^2) exactly.
TEST(ParametricResidual, AgreesWithLagrangianInSlowFrame) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + k % 3;
        const double w = 1e4, g = 0.7;
        const Vec3 b(3.0 * u(rng), 3.0 * u(rng), 3.0 * u(rng));
        const LagrangianContext ctx(build_spin_operators(n), FieldSchedule::constant(b, -1.0, 1.0), w, g);
        const double t = 0.5 * u(rng);
        // Slow frames from the eigenbasis of S.B: phase exp(i g m |B| t).
        const Matrix v = axis_eigenbasis(ctx.ops, b);
        const double s = 0.5 * (n - 1);
        Matrix phi(n, n), phidot(n, n);
        for (int j = 0; j < n; ++j) {
            const double rate = g * (s - j) * b.norm();
            phi.col(j) = std::polar(1.0, rate * t) * v.col(j);
            phidot.col(j) = Complex(0, rate) * phi.col(j);
        }
        const double a = 1.0 + 0.5 * u(rng), adot = 50.0 * u(rng);
        const double alpha = 1.5 * u(rng), alphadot = 300.0 * u(rng);
        const double theta = 10.0 * u(rng), thetadot = -w + 500.0 * u(rng);
        Vector c = oracle::random_state(rng, n - 1);
        Vector comp(n), compdot(n);
        comp(0) = std::cos(alpha);
        comp.tail(n - 1) = std::sin(alpha) * c;
        compdot(0) = -std::sin(alpha) * alphadot;
        compdot.tail(n - 1) = std::cos(alpha) * alphadot * c;
        const Complex ph = std::polar(1.0, theta);
        const Vector q = a * ph * (phi * comp);
        const Vector qd = (adot + Complex(0, thetadot) * a) * ph * (phi * comp) + a * ph * (phi * compdot) +
                          a * ph * (phidot * comp);
        const double l = lagrangian_value(ctx, vec(q), vec(qd), t);
        const double expect = -a * a * parametric_nlc_residual(w, a, adot, alphadot, thetadot);
        EXPECT_NEAR(l, expect, 1e-9 * a * a * w * w) << k;
    }
}

TEST(NlcResidual, ConstantStateIsOne) {
    const auto ctx = zero_field(2, 1e3);
    Trajectory tr;
    tr.branch = Branch::mixed;
    tr.omega = 1e3;
    for (int k = 0; k <= 10; ++k) {
        tr.times.push_back(0.1 * k);
        tr.states.push_back(SpinVector::basis(2, 0));
    }
    EXPECT_NEAR(nlc_residual(ctx, tr), 1.0, 1e-12);
}

TEST(NlcResidual, ElePlusAndMinusBelowBound) {
    std::mt19937_64 rng(23);
    const double w = 1e6;
    const auto sched = oracle::random_schedule(rng, 0.0, 1.0, 20.0);
    const LagrangianContext ctx(build_spin_operators(3), sched, w, 1.0);
    const SpinVector q0(oracle::random_state(rng, 3));
    EXPECT_LE(nlc_residual(ctx, evolve_plus(ctx, q0, 0.0, 1.0, 2000)), 1e-6);
    EXPECT_LE(nlc_residual(ctx, evolve_minus(ctx, q0, 0.0, 1.0, 2000)), 1e-6);
}

TEST(NlcResidual, GridTooShort) {
    const auto ctx = zero_field(2, 1e3);
    Trajectory tr{{0.0}, {SpinVector::basis(2, 0)}, Branch::plus, 1e3};
    EXPECT_THROW(nlc_residual(ctx, tr), ValidationError);
}

TEST(Factorization, EleSmallAndPerturbedLarge) {
    std::mt19937_64 rng(29);
    const double w = 1e6;
    // Off-grid field jumps would dominate the finite differences here.
    const auto sched = oracle::random_schedule(rng, 0.0, 1.0, 20.0, 4, false);
    const LagrangianContext ctx(build_spin_operators(2), sched, w, 1.0);
    const SpinVector q0(oracle::random_state(rng, 2));
    auto tr = evolve_plus(ctx, q0, 0.0, 1.0, 2000);
    EXPECT_LE(factorization_residual(ctx, tr), 1e-6);
    // A slow non-ELE wobble of the envelope breaks the second-order equation.
    for (std::size_t k = 0; k < tr.size(); ++k) {
        Vector v = tr.states[k].amps();
        v(1) += 0.1 * std::sin(400.0 * tr.times[k]) * std::polar(1.0, -w * tr.times[k]);
        tr.states[k] = SpinVector(v);
    }
    EXPECT_GT(factorization_residual(ctx, tr), 1e-6);
    EXPECT_GT(nlc_residual(ctx, tr), 1e-6);
}
