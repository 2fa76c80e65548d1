// histories.hpp: Microhistory parameterization, NLC-satisfying anomaly
// histories, and the global-phase anomaly bookkeeping.
//
// Along a history the null-Lagrangian condition with A = 1 reads
//   thetadot^2 + alphadot^2 = omega^2,
// so any rotation of alpha is paid for by slowing the global phase below its
// classical rate -omega. The phase "anomaly" is the accumulated shortfall.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qlag/dynamics.hpp"
#include "qlag/lagrangian.hpp"
#include "qlag/trajectory.hpp"

namespace qlag {

struct AnomalyParams {
    double gamma_s{0.0};  // Gaussian scale of the net deviation sigma * t0
    double t0{1.0};       // duration between measurements
    double delta_t{1e-3}; // measurement-time uncertainty
    double omega{1e6};

    void validate() const {
        if (!(gamma_s >= 0.0) || !std::isfinite(gamma_s))
            throw ValidationError("AnomalyParams: gamma_s must be >= 0");
        if (!(t0 > 0.0)) throw ValidationError("AnomalyParams: t0 must be > 0");
        if (!(delta_t > 0.0)) throw ValidationError("AnomalyParams: delta_t must be > 0");
        if (!(omega > 0.0)) throw ValidationError("AnomalyParams: omega must be > 0");
        if (!(omega * t0 >= 1e3))
            throw ValidationError("AnomalyParams: omega * t0 must be >= 1e3 (got " +
                                  std::to_string(omega * t0) + ")");
    }
};

// <thetadot_a> = (sigma^2 + <alphadot>^2) / (2 omega), valid while the rms
// rotation rate stays well below omega.
inline double mean_phase_anomaly_rate(double sigma, double mean_alphadot, double omega) {
    if (!(omega > 0.0)) throw ValidationError("mean_phase_anomaly_rate: omega must be > 0");
    const double rms = std::sqrt(sigma * sigma + mean_alphadot * mean_alphadot);
    if (rms >= 0.1 * omega)
        throw ValidationError("mean_phase_anomaly_rate: |alphadot| >= 0.1 omega breaks the small-anomaly "
                              "approximation");
    return (sigma * sigma + mean_alphadot * mean_alphadot) / (2.0 * omega);
}

// theta_a(alpha_a) = (gamma_s^2 + alpha_a^2) / (2 omega t0): the Gaussian-averaged
// net phase anomaly for a net rotation alpha_a.
inline double net_phase_anomaly(double alpha_a, const AnomalyParams& p) {
    p.validate();
    return (p.gamma_s * p.gamma_s + alpha_a * alpha_a) / (2.0 * p.omega * p.t0);
}

// Spread of the global phase induced by the measurement-time uncertainty.
inline double phase_uncertainty(double alpha_a, const AnomalyParams& p) {
    p.validate();
    return p.delta_t * (p.gamma_s * p.gamma_s + alpha_a * alpha_a) / (2.0 * p.omega * p.t0 * p.t0);
}

// False outside delta_t <= t0; the proportionality to gamma_s^2 + alpha_a^2
// still holds there, so this is a warning condition only.
inline bool phase_uncertainty_in_regime(const AnomalyParams& p) { return p.delta_t <= p.t0; }

// alpha(t) moves from alpha_start to alpha_end along a raised cosine, with zero
// rotation rate at both ends.
struct RaisedCosineRamp {
    double alpha_start{0.0};
    double alpha_end{0.0};
    double t_start{0.0};
    double duration{1.0};

    double tau(double t) const { return std::clamp((t - t_start) / duration, 0.0, 1.0); }

    double alpha(double t) const {
        return alpha_start + (alpha_end - alpha_start) * 0.5 * (1.0 - std::cos(kPi * tau(t)));
    }

    double rate(double t) const {
        return (alpha_end - alpha_start) * 0.5 * kPi / duration * std::sin(kPi * tau(t));
    }

    double max_rate() const { return std::abs(alpha_end - alpha_start) * 0.5 * kPi / duration; }

    // omega - sqrt(omega^2 - alphadot^2), written without cancellation.
    double anomaly_rate(double t, double omega) const {
        const double r = rate(t);
        return r * r / (omega + std::sqrt(omega * omega - r * r));
    }
};

namespace detail {

// 5-point Gauss-Legendre on [a, b].
template <class F>
double gauss5(F&& f, double a, double b) {
    static constexpr std::array<double, 5> x{0.0, -0.5384693101056831, 0.5384693101056831,
                                             -0.9061798459386640, 0.9061798459386640};
    static constexpr std::array<double, 5> w{0.5688888888888889, 0.4786286704993665,
                                             0.4786286704993665, 0.2369268850561891,
                                             0.2369268850561891};
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) s += w[i] * f(mid + half * x[i]);
    return s * half;
}

inline double wrap_angle(double x) { return std::remainder(x, 2.0 * kPi); }

} // namespace detail

// Express a trajectory in (A, alpha, theta, c_j) form against `basis`.
// alpha lies in [0, pi/2]; theta is unwrapped along the grid relative to the
// branch carrier, so a plus-branch ELE gives thetadot = -omega exactly.
inline MicroHistory parameterize(const Trajectory& traj, const ReferenceBasis& basis) {
    traj.validate();
    const std::size_t n = traj.dim();
    if (basis.dim() != n) throw ValidationError("parameterize: basis dimension mismatch");
    if (!basis.is_stationary() && basis.frames.size() != traj.size())
        throw ValidationError("parameterize: basis frames do not match the trajectory grid");
    for (const auto& f : basis.frames) {
        const auto k = static_cast<Eigen::Index>(n);
        if (!(f.adjoint() * f).isApprox(Matrix::Identity(k, k), 1e-10))
            throw ValidationError("parameterize: basis is not orthonormal");
    }

    const double c = carrier_rate(traj.branch, traj.omega);
    MicroHistory h;
    h.times = traj.times;
    h.basis = basis;
    h.branch = traj.branch;
    h.omega = traj.omega;
    const std::size_t g = traj.size();
    h.a.resize(g);
    h.alpha.resize(g);
    h.theta.resize(g);
    h.c.resize(g);

    const auto m = static_cast<Eigen::Index>(n) - 1;
    for (std::size_t k = 0; k < g; ++k) {
        const Vector comp = basis.at(k).adjoint() * traj.states[k].amps();
        const double amp = comp.norm();
        if (!(amp > 0.0)) throw ValidationError("parameterize: zero-norm state at grid point " + std::to_string(k));
        const double rest = comp.tail(m).norm();
        const double first = std::abs(comp(0));
        h.a[k] = amp;
        h.alpha[k] = std::atan2(rest, first);

        // Phase reference: q_1 when it carries weight, else the leading c_j.
        Complex ref = comp(0);
        if (first <= 1e-14 * amp) {
            Eigen::Index big = 0;
            comp.tail(m).cwiseAbs().maxCoeff(&big);
            ref = comp(1 + big);
        }
        const double raw = std::arg(ref);
        if (k == 0) {
            h.theta[k] = raw;
        } else {
            const double predicted = h.theta[k - 1] + c * (h.times[k] - h.times[k - 1]);
            h.theta[k] = predicted + detail::wrap_angle(raw - predicted);
        }

        if (rest > 1e-14 * amp) {
            h.c[k] = comp.tail(m) * std::polar(1.0, -h.theta[k]) / rest;
        } else if (k > 0) {
            h.c[k] = h.c[k - 1];
        } else {
            h.c[k] = Vector::Zero(m);
            h.c[k](0) = 1.0;
        }
    }
    return h;
}

// Everything construct_history needs beyond the anomaly parameters.
struct HistorySpec {
    double alpha_start{0.0};
    double alpha_end{0.0};
    double t_start{0.0};
    double theta_start{0.0};
    std::optional<Vector> c;               // defaults to (1, 0, ..., 0)
    std::optional<ReferenceBasis> basis;   // defaults to special states (or standard if B(t_f) = 0)
    Branch branch{Branch::plus};
};

// Starting angle, phase and c_j of a state `q` against an orthonormal frame,
// so that a constructed history begins exactly at q.
inline HistorySpec spec_from_state(const Matrix& frame, const Vector& q) {
    if (frame.rows() != q.size() || frame.cols() != q.size())
        throw ValidationError("spec_from_state: frame and state dimensions differ");
    const Vector comp = frame.adjoint() * q;
    const auto m = comp.size() - 1;
    const double first = std::abs(comp(0)), rest = comp.tail(m).norm();
    if (!(first + rest > 0.0)) throw ValidationError("spec_from_state: zero state");
    HistorySpec spec;
    spec.alpha_start = std::atan2(rest, first);
    const double tiny = 1e-14 * (first + rest);
    if (first > tiny) {
        spec.theta_start = std::arg(comp(0));
    } else {
        Eigen::Index big = 0;
        comp.tail(m).cwiseAbs().maxCoeff(&big);
        spec.theta_start = std::arg(comp(1 + big));
    }
    Vector c = Vector::Zero(m);
    if (rest > tiny)
        c = comp.tail(m) * std::polar(1.0, -spec.theta_start) / rest;
    else
        c(0) = 1.0;
    spec.c = c;
    return spec;
}

// Reference basis for a history on [t_start, t_f]: the special states of the
// field at t_f, or the standard basis when the field vanishes there (every
// basis is stationary then). Frames are sampled on `steps + 1` uniform points.
inline ReferenceBasis default_history_basis(const LagrangianContext& ctx, double t_start, double t_f,
                                            int steps) {
    if (ctx.schedule.at(t_f).norm() == 0.0 || ctx.gyro == 0.0) return ReferenceBasis::standard(ctx.dim());
    return ReferenceBasis::from_special_states(special_states(ctx, t_f, t_start, steps));
}

// An NLC-satisfying history with A = 1, alpha on a raised-cosine ramp over
// [t_start, t_start + t0], c_j frozen at their ELE values, and
//   thetadot = -sqrt(omega^2 - alphadot^2)   (plus family; sign flipped for minus).
inline MicroHistory construct_history(const LagrangianContext& ctx, const AnomalyParams& p,
                                      const HistorySpec& spec, int grid_size) {
    ctx.validate();
    p.validate();
    if (grid_size < 100) throw ValidationError("construct_history: grid_size must be >= 100");
    if (std::abs(p.omega - ctx.omega) > 1e-12 * ctx.omega)
        throw ValidationError("construct_history: anomaly omega differs from the context omega");
    if (spec.branch == Branch::mixed) throw ValidationError("construct_history: mixed branch has no phase law");

    const RaisedCosineRamp ramp{spec.alpha_start, spec.alpha_end, spec.t_start, p.t0};
    if (ramp.max_rate() >= ctx.omega)
        throw ValidationError("construct_history: ramp needs |alphadot| >= omega, beyond the NLC budget");
    const double t_end = spec.t_start + p.t0;
    if (!ctx.schedule.covers(spec.t_start, t_end))
        throw CoverageError("construct_history: schedule does not cover the history span");

    const int steps = grid_size - 1;
    MicroHistory h;
    h.branch = spec.branch;
    h.omega = ctx.omega;
    h.basis = spec.basis ? *spec.basis : default_history_basis(ctx, spec.t_start, t_end, steps);
    if (h.basis.dim() != ctx.dim()) throw ValidationError("construct_history: basis dimension mismatch");
    if (!h.basis.is_stationary() && h.basis.frames.size() != static_cast<std::size_t>(grid_size))
        throw ValidationError("construct_history: basis frames do not match grid_size");

    const auto m = static_cast<Eigen::Index>(ctx.dim()) - 1;
    Vector c0 = Vector::Zero(m);
    c0(0) = 1.0;
    if (spec.c) {
        if (spec.c->size() != m) throw ValidationError("construct_history: c has wrong length");
        const double nrm = spec.c->norm();
        if (!(nrm > 0.0)) throw ValidationError("construct_history: c must be nonzero");
        c0 = *spec.c / nrm;
    }

    h.times = detail::uniform_grid(spec.t_start, t_end, steps);
    const std::size_t g = h.times.size();
    h.a.assign(g, 1.0);
    h.alpha.resize(g);
    h.theta.resize(g);
    h.c.assign(g, c0);
    h.theta_anomaly.resize(g);

    const double carrier = carrier_rate(spec.branch, ctx.omega);
    const double sign = carrier < 0.0 ? 1.0 : -1.0;  // anomaly slows |thetadot|
    double accumulated = 0.0;
    for (std::size_t k = 0; k < g; ++k) {
        const double t = h.times[k];
        if (k > 0)
            accumulated += detail::gauss5([&](double s) { return ramp.anomaly_rate(s, ctx.omega); },
                                          h.times[k - 1], t);
        h.alpha[k] = ramp.alpha(t);
        h.theta_anomaly[k] = accumulated;
        h.theta[k] = (spec.theta_start + sign * accumulated) + carrier * (t - spec.t_start);
    }
    h.alpha.back() = spec.alpha_end;
    return h;
}

// Convenience form: history starting at the schedule start with theta = 0.
inline MicroHistory construct_history(const LagrangianContext& ctx, const AnomalyParams& p,
                                      double alpha_start, double alpha_end, int grid_size) {
    HistorySpec spec;
    spec.alpha_start = alpha_start;
    spec.alpha_end = alpha_end;
    spec.t_start = ctx.schedule.start();
    return construct_history(ctx, p, spec, grid_size);
}

// Net global-phase anomaly accumulated by a history: the departure of
// theta(end) - theta(start) from the classical carrier advance.
inline double history_phase_anomaly(const MicroHistory& h) {
    if (h.size() < 2) throw ValidationError("history_phase_anomaly: need at least 2 grid points");
    if (h.theta_anomaly.size() == h.size()) return h.theta_anomaly.back() - h.theta_anomaly.front();
    const double c = carrier_rate(h.branch, h.omega);
    const double span = h.times.back() - h.times.front();
    const double dtheta = h.theta.back() - h.theta.front();
    return c < 0.0 ? dtheta - c * span : c * span - dtheta;
}

} // namespace qlag
