// spin_algebra.hpp: Dense spin-space linear algebra: spin vectors, spin
// operators, field schedules and the rest-energy-shifted Hamiltonian.
//
// Units: hbar = 1 throughout. The rest energy enters only as the angular
// frequency omega = m c^2 / hbar.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstddef>
#include <string>
#include <vector>

#include "qlag/errors.hpp"

namespace qlag {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// n complex amplitudes |q(t)> at a single instant.
class SpinVector {
public:
    SpinVector() = default;

    explicit SpinVector(Vector amps) : amps_(std::move(amps)) {
        if (amps_.size() < 2)
            throw ValidationError("SpinVector: dimension must be >= 2, got " +
                                  std::to_string(amps_.size()));
        if (!amps_.allFinite()) throw ValidationError("SpinVector: non-finite amplitude");
    }

    // Unit vector e_k (0-based).
    static SpinVector basis(std::size_t n, std::size_t k) {
        if (k >= n) throw ValidationError("SpinVector::basis: index out of range");
        Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
        v(static_cast<Eigen::Index>(k)) = 1.0;
        return SpinVector(std::move(v));
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
    const Vector& amps() const noexcept { return amps_; }
    Complex operator[](std::size_t k) const { return amps_(static_cast<Eigen::Index>(k)); }
    double norm2() const { return amps_.squaredNorm(); }
    double norm() const { return amps_.norm(); }

    friend SpinVector operator+(const SpinVector& a, const SpinVector& b) {
        return SpinVector(Vector(a.amps_ + b.amps_));
    }
    friend SpinVector operator-(const SpinVector& a, const SpinVector& b) {
        return SpinVector(Vector(a.amps_ - b.amps_));
    }
    friend SpinVector operator*(Complex s, const SpinVector& a) {
        return SpinVector(Vector(s * a.amps_));
    }

private:
    Vector amps_;
};

// <a|b>, conjugate-linear in the first slot.
inline Complex inner(const SpinVector& a, const SpinVector& b) {
    if (a.dim() != b.dim())
        throw ValidationError("inner: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                              std::to_string(b.dim()) + ")");
    return a.amps().dot(b.amps());
}

struct SpinOperatorSet {
    Matrix sx, sy, sz;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(sz.rows()); }
    double spin() const noexcept { return 0.5 * static_cast<double>(dim() - 1); }

    // S . b
    Matrix dot(const Vec3& b) const { return b.x() * sx + b.y() * sy + b.z() * sz; }
};

// Ladder construction in the |s, m> basis ordered m = s, s-1, ..., -s.
inline SpinOperatorSet build_spin_operators(int n) {
    if (n < 2) throw ValidationError("build_spin_operators: dimension must be >= 2, got " +
                                     std::to_string(n));
    const double s = 0.5 * (n - 1);
    Matrix sp = Matrix::Zero(n, n);
    Matrix sz = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const double m = s - k;
        sz(k, k) = m;
        // S+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>; |m+1> sits at index k-1.
        if (k > 0) sp(k - 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
    }
    const Matrix sm = sp.adjoint();
    SpinOperatorSet ops;
    ops.sx = 0.5 * (sp + sm);
    ops.sy = (sp - sm) / Complex(0.0, 2.0);
    ops.sz = sz;
    return ops;
}

// H = omega * I - gyro * S.b  (rest energy plus the spin Hamiltonian).
inline Matrix hamiltonian(const SpinOperatorSet& ops, const Vec3& b, double omega, double gyro) {
    const auto n = static_cast<Eigen::Index>(ops.dim());
    return omega * Matrix::Identity(n, n) - gyro * ops.dot(b);
}

// Orthonormal eigenbasis of S.axis, columns ordered by descending projection
// (column 0 is "up" along the axis). Each column is phase-fixed so that its
// largest-magnitude component is real and positive.
inline Matrix axis_eigenbasis(const SpinOperatorSet& ops, const Vec3& axis) {
    const double len = axis.norm();
    if (!(len > 0.0)) throw ValidationError("axis_eigenbasis: zero-length axis");
    Eigen::SelfAdjointEigenSolver<Matrix> es(ops.dot(axis / len));
    const Matrix& v = es.eigenvectors();
    const auto n = v.cols();
    Matrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Vector col = v.col(n - 1 - j);
        Eigen::Index big = 0;
        col.cwiseAbs().maxCoeff(&big);
        col *= std::conj(col(big)) / std::abs(col(big));
        out.col(j) = col;
    }
    return out;
}

struct FieldSegment {
    double t_start{0.0};
    double t_end{0.0};
    Vec3 b_start{Vec3::Zero()};
    Vec3 b_end{Vec3::Zero()};
};

// Piecewise-linear magnetic field history B(t). Jumps are allowed only at
// segment boundaries; at a boundary the later segment wins.
class FieldSchedule {
public:
    FieldSchedule() = default;

    explicit FieldSchedule(std::vector<FieldSegment> segments) : segs_(std::move(segments)) {
        if (segs_.empty()) throw ValidationError("FieldSchedule: no segments");
        for (std::size_t k = 0; k < segs_.size(); ++k) {
            const auto& s = segs_[k];
            if (!std::isfinite(s.t_start) || !std::isfinite(s.t_end) || !s.b_start.allFinite() ||
                !s.b_end.allFinite())
                throw ValidationError("FieldSchedule: non-finite value in segment " +
                                      std::to_string(k));
            if (!(s.t_end > s.t_start))
                throw ValidationError("FieldSchedule: segment " + std::to_string(k) +
                                      " has t_end <= t_start");
            if (k > 0 && std::abs(s.t_start - segs_[k - 1].t_end) > time_tol())
                throw ValidationError("FieldSchedule: segments " + std::to_string(k - 1) + " and " +
                                      std::to_string(k) + " are not contiguous");
        }
    }

    static FieldSchedule constant(const Vec3& b, double t0, double t1) {
        return FieldSchedule({FieldSegment{t0, t1, b, b}});
    }

    const std::vector<FieldSegment>& segments() const noexcept { return segs_; }
    double start() const { return segs_.front().t_start; }
    double end() const { return segs_.back().t_end; }

    bool covers(double t0, double t1) const {
        const double lo = std::min(t0, t1), hi = std::max(t0, t1);
        return lo >= start() - time_tol() && hi <= end() + time_tol();
    }

    Vec3 at(double t) const {
        if (!covers(t, t))
            throw CoverageError("FieldSchedule: t=" + fmt(t) + " outside [" + fmt(start()) + ", " +
                                fmt(end()) + "]");
        const FieldSegment& s = segment_for(t);
        const double u = std::clamp((t - s.t_start) / (s.t_end - s.t_start), 0.0, 1.0);
        return (1.0 - u) * s.b_start + u * s.b_end;
    }

    // Index of the segment that owns t (the later one on a boundary).
    std::size_t segment_index(double t) const {
        return static_cast<std::size_t>(&segment_for(t) - segs_.data());
    }

    // Linear field law of segment k, evaluated at t without ownership rules.
    Vec3 at_segment(std::size_t k, double t) const {
        const FieldSegment& s = segs_.at(k);
        const double u = (t - s.t_start) / (s.t_end - s.t_start);
        return (1.0 - u) * s.b_start + u * s.b_end;
    }

    // True when B jumps at t (t sits on an interior boundary with unequal sides).
    bool discontinuous_at(double t) const {
        for (std::size_t k = 1; k < segs_.size(); ++k)
            if (std::abs(segs_[k].t_start - t) <= time_tol())
                return (segs_[k].b_start - segs_[k - 1].b_end).norm() > 0.0;
        return false;
    }

    double max_field() const {
        double m = 0.0;
        for (const auto& s : segs_) m = std::max({m, s.b_start.norm(), s.b_end.norm()});
        return m;
    }

    // Time-reversed image: B'(t) = -B(-t) on [-end, -start]. The sign flip
    // makes a time-reversed plus-branch history an exact minus-branch solution.
    FieldSchedule mirrored() const {
        std::vector<FieldSegment> out;
        out.reserve(segs_.size());
        for (auto it = segs_.rbegin(); it != segs_.rend(); ++it)
            out.push_back({-it->t_end, -it->t_start, -it->b_end, -it->b_start});
        return FieldSchedule(std::move(out));
    }

    // Portion on [t0, t1], splitting segments at the cut points.
    FieldSchedule restricted(double t0, double t1) const {
        if (!(t1 > t0) || !covers(t0, t1))
            throw CoverageError("FieldSchedule::restricted: [" + fmt(t0) + ", " + fmt(t1) +
                                "] not inside the schedule");
        std::vector<FieldSegment> out;
        for (const auto& s : segs_) {
            const double a = std::max(s.t_start, t0), b = std::min(s.t_end, t1);
            if (b - a <= time_tol()) continue;
            auto lerp = [&](double t) {
                const double u = (t - s.t_start) / (s.t_end - s.t_start);
                return Vec3((1.0 - u) * s.b_start + u * s.b_end);
            };
            out.push_back({a, b, lerp(a), lerp(b)});
        }
        return FieldSchedule(std::move(out));
    }

    // Concatenation of two schedules that meet end-to-start.
    static FieldSchedule joined(const FieldSchedule& first, const FieldSchedule& second) {
        std::vector<FieldSegment> segs = first.segs_;
        segs.insert(segs.end(), second.segs_.begin(), second.segs_.end());
        return FieldSchedule(std::move(segs));
    }

private:
    double time_tol() const {
        if (segs_.empty()) return 0.0;
        const double scale = std::max({std::abs(segs_.front().t_start), std::abs(segs_.back().t_end),
                                       segs_.back().t_end - segs_.front().t_start});
        return 1e-12 * scale;
    }

    const FieldSegment& segment_for(double t) const {
        for (auto it = segs_.rbegin(); it != segs_.rend(); ++it)
            if (t >= it->t_start - time_tol()) return *it;
        return segs_.front();
    }

    static std::string fmt(double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", x);
        return buf;
    }

    std::vector<FieldSegment> segs_;
};

} // namespace qlag
