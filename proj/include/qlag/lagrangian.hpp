// lagrangian.hpp: The toy spin Lagrangian L(q, qdot, t), its momentum-like
// vector |p>, and null-Lagrangian residuals on states and sampled histories.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qlag/spin_algebra.hpp"
#include "qlag/trajectory.hpp"

namespace qlag {

struct LagrangianContext {
    SpinOperatorSet ops;
    FieldSchedule schedule;
    double omega{1.0};  // rest-energy frequency m c^2 / hbar
    double gyro{1.0};

    LagrangianContext() = default;
    LagrangianContext(SpinOperatorSet o, FieldSchedule s, double w, double g)
        : ops(std::move(o)), schedule(std::move(s)), omega(w), gyro(g) {
        validate();
    }

    void validate() const {
        if (!(omega > 0.0) || !std::isfinite(omega))
            throw ValidationError("LagrangianContext: omega must be positive and finite");
        if (!std::isfinite(gyro)) throw ValidationError("LagrangianContext: gyro must be finite");
        if (ops.dim() < 2) throw ValidationError("LagrangianContext: spin operators not built");
        if (schedule.segments().empty()) throw ValidationError("LagrangianContext: empty schedule");
    }

    std::size_t dim() const { return ops.dim(); }

    Matrix hamiltonian_at(double t) const { return qlag::hamiltonian(ops, schedule.at(t), omega, gyro); }

    // -gyro S.B(t): the spin part alone.
    Matrix spin_term_at(double t) const { return -gyro * ops.dot(schedule.at(t)); }
};

namespace detail {

inline void check_dims(const LagrangianContext& ctx, const Vector& q, const Vector& qdot) {
    if (static_cast<std::size_t>(q.size()) != ctx.dim() ||
        static_cast<std::size_t>(qdot.size()) != ctx.dim())
        throw ValidationError("lagrangian: state dimension does not match the context");
}

inline Vector p_raw(const LagrangianContext& ctx, const Vector& q, const Vector& qdot, double t) {
    return ctx.hamiltonian_at(t) * q - kI * qdot;
}

inline double lagrangian_raw(const LagrangianContext& ctx, const Vector& q, const Vector& qdot,
                             double t) {
    const Vector p = p_raw(ctx, q, qdot, t);
    const Complex cross = q.dot(p) + p.dot(q);
    const double value = p.squaredNorm() - ctx.omega * cross.real();
    const double scale = p.squaredNorm() + ctx.omega * std::abs(cross) + 1e-300;
    if (std::abs(ctx.omega * cross.imag()) > 1e-12 * scale)
        throw NumericalGuard("lagrangian_value: imaginary residue above tolerance");
    return value;
}

enum class Stencil { central, forward, backward };

// Second-order 3-point derivative on a possibly non-uniform grid. The
// one-sided stencils keep the samples on one side of a field jump.
inline Vector derivative(const std::vector<double>& t, const std::vector<Vector>& f, std::size_t k,
                         Stencil stencil = Stencil::central) {
    const std::size_t g = t.size();
    if (g == 2) return (f[1] - f[0]) / (t[1] - t[0]);
    auto one_sided = [&](std::size_t i0, std::size_t i1, std::size_t i2) {
        // Derivative at t[i0] from samples at i0, i1, i2 (same side).
        const double h1 = t[i1] - t[i0], h2 = t[i2] - t[i0];
        const double w0 = -(h1 + h2) / (h1 * h2);
        const double w1 = h2 / (h1 * (h2 - h1));
        const double w2 = -h1 / (h2 * (h2 - h1));
        return Vector(w0 * f[i0] + w1 * f[i1] + w2 * f[i2]);
    };
    if (k == 0) return one_sided(0, 1, 2);
    if (k == g - 1) return one_sided(g - 1, g - 2, g - 3);
    if (stencil == Stencil::forward && k + 2 < g) return one_sided(k, k + 1, k + 2);
    if (stencil == Stencil::backward && k >= 2) return one_sided(k, k - 1, k - 2);
    const double h1 = t[k] - t[k - 1], h2 = t[k + 1] - t[k];
    return Vector(-h2 / (h1 * (h1 + h2)) * f[k - 1] + (h2 - h1) / (h1 * h2) * f[k] +
                  h1 / (h2 * (h1 + h2)) * f[k + 1]);
}

// Times where B jumps.
inline std::vector<double> jump_times(const FieldSchedule& s) {
    std::vector<double> out;
    const auto& segs = s.segments();
    for (std::size_t k = 1; k < segs.size(); ++k)
        if ((segs[k].b_start - segs[k - 1].b_end).norm() > 0.0) out.push_back(segs[k].t_start);
    return out;
}

// Stencil at grid point k that does not straddle a jump. A jump exactly on
// t[k] belongs to the right-hand segment, so the forward side is used there.
inline Stencil stencil_at(const std::vector<double>& jumps, const std::vector<double>& t, std::size_t k) {
    if (jumps.empty()) return Stencil::central;
    const double tol = 1e-12 * std::max({std::abs(t.front()), std::abs(t.back()), t.back() - t.front()});
    auto jump_in = [&](std::size_t a, std::size_t b) {  // open interval (t[a], t[b]]
        for (const double j : jumps)
            if (j > t[a] + tol && j <= t[b] + tol) return true;
        return false;
    };
    const bool left = k > 0 && jump_in(k - 1, k);
    const bool right = k + 1 < t.size() && jump_in(k, k + 1);
    if (left) return Stencil::forward;
    if (right) return Stencil::backward;
    return Stencil::central;
}

// Envelope derivatives, with one-sided stencils next to field jumps.
inline std::vector<Vector> envelope_derivatives(const LagrangianContext& ctx,
                                                const std::vector<double>& times,
                                                const std::vector<Vector>& env) {
    const auto jumps = jump_times(ctx.schedule);
    std::vector<Vector> d(env.size());
    for (std::size_t k = 0; k < env.size(); ++k) d[k] = derivative(times, env, k, stencil_at(jumps, times, k));
    return d;
}

// max_k |L| / omega^2 for q = exp(i c (t - t0)) env, qdot = exp(...)(env' + i c env).
// L is invariant under a global phase, so the carrier factor is never formed.
inline double nlc_residual_sampled(const LagrangianContext& ctx, const std::vector<double>& times,
                                   const std::vector<Vector>& env, double carrier) {
    if (times.size() < 2) throw ValidationError("nlc_residual: grid needs at least 2 points");
    const auto d = envelope_derivatives(ctx, times, env);
    double worst = 0.0;
    for (std::size_t k = 0; k < env.size(); ++k) {
        const Vector qdot = d[k] + kI * carrier * env[k];
        worst = std::max(worst, std::abs(lagrangian_raw(ctx, env[k], qdot, times[k])));
    }
    return worst / (ctx.omega * ctx.omega);
}

} // namespace detail

// |p> = [omega - gyro S.B(t)] |q> - i |qdot>
inline SpinVector p_vector(const LagrangianContext& ctx, const SpinVector& q, const SpinVector& qdot,
                           double t) {
    detail::check_dims(ctx, q.amps(), qdot.amps());
    return SpinVector(detail::p_raw(ctx, q.amps(), qdot.amps(), t));
}

// L = <p|p> - omega (<q|p> + <p|q>)
inline double lagrangian_value(const LagrangianContext& ctx, const SpinVector& q,
                               const SpinVector& qdot, double t) {
    detail::check_dims(ctx, q.amps(), qdot.amps());
    return detail::lagrangian_raw(ctx, q.amps(), qdot.amps(), t);
}

// omega^2 - thetadot^2 - (adot/a)^2 - alphadot^2. On the parameterized form
// with A = a, lagrangian_value equals -a^2 times this.
inline double parametric_nlc_residual(double omega, double a, double adot, double alphadot,
                                      double thetadot) {
    if (!(a > 0.0)) throw ValidationError("parametric_nlc_residual: amplitude must be positive");
    const double r = adot / a;
    return omega * omega - thetadot * thetadot - r * r - alphadot * alphadot;
}

// Normalized worst-case |L| / omega^2 over the grid of a raw trajectory.
// Derivatives come from finite differences of the carrier-free envelope; a
// mixed trajectory has no carrier, so its grid must resolve omega itself.
inline double nlc_residual(const LagrangianContext& ctx, const Trajectory& traj) {
    traj.validate();
    std::vector<Vector> env(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) env[k] = traj.envelope(k);
    return detail::nlc_residual_sampled(ctx, traj.times, env, carrier_rate(traj.branch, traj.omega));
}

inline double nlc_residual(const LagrangianContext& ctx, const MicroHistory& history) {
    history.validate();
    if (history.dim() != ctx.dim()) throw ValidationError("nlc_residual: dimension mismatch");
    std::vector<Vector> env(history.size());
    for (std::size_t k = 0; k < history.size(); ++k) env[k] = history.envelope(k);
    return detail::nlc_residual_sampled(ctx, history.times, env,
                                        carrier_rate(history.branch, history.omega));
}

// Residual of the second-order operator (omega + gyro S.B + i d/dt) applied to
// the numerically computed |p(t)>, normalized by omega^2 |q|, interior points only.
inline double factorization_residual(const LagrangianContext& ctx, const Trajectory& traj) {
    traj.validate();
    if (traj.size() < 5) throw ValidationError("factorization_residual: grid needs at least 5 points");
    const double c = carrier_rate(traj.branch, traj.omega);
    std::vector<Vector> env(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k) env[k] = traj.envelope(k);
    const auto d = detail::envelope_derivatives(ctx, traj.times, env);
    // Envelope of p: p = exp(i c (t - t0)) ptil.
    std::vector<Vector> ptil(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k)
        ptil[k] = detail::p_raw(ctx, env[k], Vector(d[k] + kI * c * env[k]), traj.times[k]);
    const auto n = static_cast<Eigen::Index>(ctx.dim());
    const auto jumps = detail::jump_times(ctx.schedule);
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
        const double t = traj.times[k];
        const Vector dp = detail::derivative(traj.times, ptil, k, detail::stencil_at(jumps, traj.times, k));
        const Matrix left = (ctx.omega - c) * Matrix::Identity(n, n) - ctx.spin_term_at(t);
        const Vector r = left * ptil[k] + kI * dp;
        worst = std::max(worst, r.norm() / (ctx.omega * ctx.omega * env[k].norm()));
    }
    return worst;
}

} // namespace qlag
