// dynamics.hpp: Euler-Lagrange branches of the toy Lagrangian.
//
// Both first-order branches share the slow Schrodinger-Pauli envelope
//   i d(chi)/dt = -gyro S.B(t) chi,
// and differ only in the rest-mass carrier:
//   plus:  q = exp(-i omega (t - t0)) chi   (p = 0)
//   minus: q = exp(+i omega (t - t0)) chi   (p = 2 omega q)
// The carrier is attached analytically; only the envelope is integrated, with
// fixed-step classic RK4, so runs are bit-reproducible.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include "qlag/lagrangian.hpp"
#include "qlag/trajectory.hpp"

namespace qlag {

namespace detail {

inline std::vector<double> uniform_grid(double t0, double t1, int steps) {
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    const double h = (t1 - t0) / steps;
    for (int k = 0; k <= steps; ++k) t[static_cast<std::size_t>(k)] = t0 + k * h;
    t.back() = t1;
    return t;
}

// RK4 on d(chi)/dt = -i * spin_term(t) * chi over the given grid. A step
// that straddles segment boundaries is split there, and each piece sees only
// its own segment's linear law, so field jumps and kinks cost no order.
inline std::vector<Vector> integrate_envelope(const LagrangianContext& ctx, const Vector& chi0,
                                              const std::vector<double>& grid) {
    std::vector<Vector> out;
    out.reserve(grid.size());
    out.push_back(chi0);
    const auto& segs = ctx.schedule.segments();
    auto rk4 = [&](Vector& y, double a, double b) {
        const std::size_t seg = ctx.schedule.segment_index(0.5 * (a + b));
        auto rhs = [&](double t, const Vector& v) {
            return Vector(kI * ctx.gyro * (ctx.ops.dot(ctx.schedule.at_segment(seg, t)) * v));
        };
        const double h = b - a;
        const Vector k1 = rhs(a, y);
        const Vector k2 = rhs(a + 0.5 * h, Vector(y + 0.5 * h * k1));
        const Vector k3 = rhs(a + 0.5 * h, Vector(y + 0.5 * h * k2));
        const Vector k4 = rhs(b, Vector(y + h * k3));
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    Vector y = chi0;
    std::vector<double> cuts;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double a = grid[k], b = grid[k + 1];
        const double lo = std::min(a, b), hi = std::max(a, b);
        const double tol = 1e-9 * (hi - lo);
        cuts.assign(1, a);
        for (std::size_t s = 1; s < segs.size(); ++s) {
            const double c = segs[s].t_start;
            if (c > lo + tol && c < hi - tol) cuts.push_back(c);
        }
        if (b < a) std::sort(cuts.begin() + 1, cuts.end(), std::greater<>());
        cuts.push_back(b);
        for (std::size_t p = 0; p + 1 < cuts.size(); ++p) rk4(y, cuts[p], cuts[p + 1]);
        out.push_back(y);
    }
    return out;
}

inline Trajectory evolve_branch(const LagrangianContext& ctx, const SpinVector& q0, double t0,
                                double t1, int steps, Branch branch) {
    ctx.validate();
    if (steps < 1) throw ValidationError("evolve: steps must be >= 1");
    if (q0.dim() != ctx.dim()) throw ValidationError("evolve: state dimension does not match context");
    if (!(t1 != t0)) throw ValidationError("evolve: empty time span");
    if (!ctx.schedule.covers(t0, t1)) throw CoverageError("evolve: schedule does not cover the span");

    const auto grid = uniform_grid(t0, t1, steps);
    const auto env = integrate_envelope(ctx, q0.amps(), grid);
    const double c = carrier_rate(branch, ctx.omega);

    Trajectory tr;
    tr.branch = branch;
    tr.omega = ctx.omega;
    tr.times = grid;
    tr.states.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        tr.states.emplace_back(Vector(std::exp(kI * (c * (grid[k] - t0))) * env[k]));

    // Endpoint guard: p must equal (omega + c) q for the branch.
    const double tend = grid.back();
    const Vector& chi = env.back();
    const Vector chidot = -kI * (ctx.spin_term_at(tend) * chi);
    const Vector p = p_raw(ctx, chi, Vector(chidot + kI * c * chi), tend);
    const double target = ctx.omega + c;
    if (!((p - target * chi).norm() <= 1e-8 * ctx.omega * chi.norm()))
        throw NumericalGuard("evolve: endpoint branch residual above 1e-8 omega |q|");

    if (t1 < t0) {
        std::reverse(tr.times.begin(), tr.times.end());
        std::reverse(tr.states.begin(), tr.states.end());
    }
    return tr;
}

} // namespace detail

// Plus branch (|p> = 0): the Schrodinger-Pauli state times exp(-i omega t).
// t1 < t0 integrates backward; the returned grid is always increasing.
inline Trajectory evolve_plus(const LagrangianContext& ctx, const SpinVector& q0, double t0, double t1,
                              int steps) {
    return detail::evolve_branch(ctx, q0, t0, t1, steps, Branch::plus);
}

// Minus branch (|p> = 2 omega |q>): i qdot = (-omega - gyro S.B) q.
inline Trajectory evolve_minus(const LagrangianContext& ctx, const SpinVector& q0, double t0,
                               double t1, int steps) {
    return detail::evolve_branch(ctx, q0, t0, t1, steps, Branch::minus);
}

// Split initial data (q0, qdot0) into q_plus + q_minus with
//   qdot_plus = -i H q_plus,  qdot_minus = -i (H - 2 omega) q_minus.
// Eliminating q_plus gives q_minus = (qdot0 + i H q0) / (2 i omega) directly.
inline std::pair<SpinVector, SpinVector> decompose(const LagrangianContext& ctx, const SpinVector& q0,
                                                   const SpinVector& qdot0, double t) {
    ctx.validate();
    detail::check_dims(ctx, q0.amps(), qdot0.amps());
    const Matrix h = ctx.hamiltonian_at(t);
    const Vector qm = (qdot0.amps() + kI * (h * q0.amps())) / (2.0 * kI * ctx.omega);
    const Vector qp = q0.amps() - qm;
    const auto n = static_cast<Eigen::Index>(ctx.dim());
    const Vector rebuilt = -kI * (h * qp) - kI * ((h - 2.0 * ctx.omega * Matrix::Identity(n, n)) * qm);
    const double scale = std::max({qdot0.norm(), ctx.omega * q0.norm(), 1e-300});
    if (!((rebuilt - qdot0.amps()).norm() <= 1e-10 * scale))
        throw NumericalGuard("decompose: branch split does not reproduce qdot0");
    return {SpinVector(qp), SpinVector(qm)};
}

// General second-order solution from (q0, qdot0): both branches evolved and summed.
inline Trajectory evolve_general(const LagrangianContext& ctx, const SpinVector& q0,
                                 const SpinVector& qdot0, double t0, double t1, int steps) {
    const auto [qp, qm] = decompose(ctx, q0, qdot0, t0);
    const Trajectory a = evolve_plus(ctx, qp, t0, t1, steps);
    const Trajectory b = evolve_minus(ctx, qm, t0, t1, steps);
    Trajectory out;
    out.times = a.times;
    out.branch = Branch::mixed;
    out.omega = ctx.omega;
    out.states.reserve(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out.states.push_back(a.states[k] + b.states[k]);
    return out;
}

// Backward-evolve each column of `final_basis` (taken at t_f) along the plus
// branch to time t. Column order is preserved.
inline std::vector<Trajectory> propagate_basis(const LagrangianContext& ctx, const Matrix& final_basis,
                                               double t_f, double t, int steps) {
    if (static_cast<std::size_t>(final_basis.rows()) != ctx.dim() || final_basis.cols() != final_basis.rows())
        throw ValidationError("propagate_basis: basis shape does not match the context");
    std::vector<Trajectory> out;
    out.reserve(static_cast<std::size_t>(final_basis.cols()));
    for (Eigen::Index j = 0; j < final_basis.cols(); ++j)
        out.push_back(evolve_plus(ctx, SpinVector(Vector(final_basis.col(j))), t_f, t, steps));
    return out;
}

// Eigenbasis of H(t_f) ordered by descending projection of S on B(t_f).
// Degenerate spectra have no unique basis and are rejected.
inline Matrix final_eigenbasis(const LagrangianContext& ctx, double t_f) {
    const Vec3 b = ctx.schedule.at(t_f);
    Eigen::SelfAdjointEigenSolver<Matrix> es(ctx.hamiltonian_at(t_f));
    const auto& ev = es.eigenvalues();
    double min_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 1; j < ev.size(); ++j) min_gap = std::min(min_gap, ev(j) - ev(j - 1));
    if (!(min_gap > 1e-12 * ctx.omega) || b.norm() == 0.0 || ctx.gyro == 0.0) {
        std::ostringstream msg;
        msg << "special_states: degenerate eigenvalues of H at t_f=" << t_f << " {";
        for (Eigen::Index j = 0; j < ev.size(); ++j) msg << (j ? ", " : "") << ev(j);
        msg << "}; the special-state basis is not unique";
        throw NumericalGuard(msg.str());
    }
    return axis_eigenbasis(ctx.ops, b);
}

// Schulman special states: final eigenstates at t_f evolved back to t (< t_f).
inline std::vector<Trajectory> special_states(const LagrangianContext& ctx, double t_f, double t,
                                              int steps) {
    if (!(t < t_f)) throw ValidationError("special_states: require t < t_f");
    return propagate_basis(ctx, final_eigenbasis(ctx, t_f), t_f, t, steps);
}

} // namespace qlag
