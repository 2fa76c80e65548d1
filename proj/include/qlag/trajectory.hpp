// trajectory.hpp: Time-gridded records of |q(t)>: raw Trajectory samples and
// the parameterized MicroHistory (A, alpha, theta, c_j) in a reference basis.

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qlag/spin_algebra.hpp"

namespace qlag {

enum class Branch { plus, minus, mixed };

inline const char* to_string(Branch b) {
    switch (b) {
        case Branch::plus: return "plus";
        case Branch::minus: return "minus";
        case Branch::mixed: return "mixed";
    }
    return "?";
}

inline Branch branch_from_string(const std::string& s) {
    if (s == "plus") return Branch::plus;
    if (s == "minus") return Branch::minus;
    if (s == "mixed") return Branch::mixed;
    throw ValidationError("unknown branch tag '" + s + "'");
}

// Rest-mass phase rate of a branch: q = exp(i * carrier * t) * envelope.
inline double carrier_rate(Branch b, double omega) {
    switch (b) {
        case Branch::plus: return -omega;
        case Branch::minus: return omega;
        case Branch::mixed: return 0.0;
    }
    return 0.0;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<SpinVector> states;
    Branch branch{Branch::plus};
    double omega{0.0};

    std::size_t size() const noexcept { return times.size(); }
    std::size_t dim() const { return states.empty() ? 0 : states.front().dim(); }

    // Slowly varying envelope with the branch carrier removed, referenced to
    // times.front() so the stripped phase never grows beyond omega * span.
    Vector envelope(std::size_t k) const {
        const double c = carrier_rate(branch, omega);
        return std::exp(-kI * (c * (times[k] - times.front()))) * states[k].amps();
    }

    void validate() const {
        if (times.size() != states.size())
            throw ValidationError("Trajectory: times/states size mismatch");
        if (times.empty()) throw ValidationError("Trajectory: empty");
        for (std::size_t k = 1; k < times.size(); ++k)
            if (!(times[k] > times[k - 1]))
                throw ValidationError("Trajectory: times must increase monotonically");
    }
};

// Reference basis for the parameterization. Columns are orthonormal and carry
// no rest-mass phase. One frame means a stationary basis; otherwise there is
// one frame per grid point (special states sampled on the history grid).
struct ReferenceBasis {
    std::vector<Matrix> frames;

    static ReferenceBasis stationary(Matrix m) { return ReferenceBasis{{std::move(m)}}; }

    static ReferenceBasis standard(std::size_t n) {
        const auto k = static_cast<Eigen::Index>(n);
        return stationary(Matrix::Identity(k, k));
    }

    // Frames from special-state trajectories that share one grid.
    static ReferenceBasis from_special_states(const std::vector<Trajectory>& special) {
        if (special.empty()) throw ValidationError("ReferenceBasis: no special states");
        const std::size_t grid = special.front().size();
        const auto n = static_cast<Eigen::Index>(special.front().dim());
        if (static_cast<Eigen::Index>(special.size()) != n)
            throw ValidationError("ReferenceBasis: need one special state per dimension");
        ReferenceBasis basis;
        basis.frames.assign(grid, Matrix(n, n));
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto& tr = special[static_cast<std::size_t>(j)];
            if (tr.size() != grid) throw ValidationError("ReferenceBasis: grids differ");
            for (std::size_t k = 0; k < grid; ++k) basis.frames[k].col(j) = tr.envelope(k);
        }
        return basis;
    }

    bool is_stationary() const noexcept { return frames.size() == 1; }
    const Matrix& at(std::size_t k) const { return is_stationary() ? frames.front() : frames.at(k); }
    std::size_t dim() const { return frames.empty() ? 0 : static_cast<std::size_t>(frames.front().rows()); }
};

// q_1 = A cos(alpha) e^{i theta}, q_{j>1} = A sin(alpha) c_j e^{i theta},
// components taken in the reference basis at each grid point.
struct MicroHistory {
    std::vector<double> times;
    std::vector<double> a;
    std::vector<double> alpha;
    std::vector<double> theta;
    std::vector<Vector> c;  // n-1 entries per grid point, sum |c_j|^2 = 1
    // Accumulated global-phase anomaly along the grid when known exactly from
    // construction; empty otherwise. theta itself cannot resolve it once
    // omega * span approaches 1/epsilon.
    std::vector<double> theta_anomaly;
    ReferenceBasis basis;
    Branch branch{Branch::plus};
    double omega{0.0};

    std::size_t size() const noexcept { return times.size(); }
    std::size_t dim() const { return basis.dim(); }

    // Basis components (before applying the frame) at grid point k.
    Vector components(std::size_t k) const {
        const auto n = static_cast<Eigen::Index>(dim());
        Vector comp(n);
        const Complex phase = std::polar(1.0, theta[k]);
        comp(0) = a[k] * std::cos(alpha[k]) * phase;
        comp.tail(n - 1) = (a[k] * std::sin(alpha[k]) * phase) * c[k];
        return comp;
    }

    SpinVector state(std::size_t k) const { return SpinVector(Vector(basis.at(k) * components(k))); }

    // Envelope with the branch carrier removed, referenced to times.front().
    Vector envelope(std::size_t k) const {
        const double slow_phase = theta[k] - carrier_rate(branch, omega) * (times[k] - times.front());
        const auto n = static_cast<Eigen::Index>(dim());
        Vector comp(n);
        const Complex phase = std::polar(1.0, slow_phase);
        comp(0) = a[k] * std::cos(alpha[k]) * phase;
        comp.tail(n - 1) = (a[k] * std::sin(alpha[k]) * phase) * c[k];
        return basis.at(k) * comp;
    }

    void validate(double tol = 1e-10) const {
        const std::size_t g = times.size();
        if (g == 0) throw ValidationError("MicroHistory: empty");
        if (a.size() != g || alpha.size() != g || theta.size() != g || c.size() != g)
            throw ValidationError("MicroHistory: field lengths differ from the grid");
        if (!basis.is_stationary() && basis.frames.size() != g)
            throw ValidationError("MicroHistory: basis frames do not match the grid");
        for (std::size_t k = 0; k < g; ++k) {
            if (k > 0 && !(times[k] > times[k - 1]))
                throw ValidationError("MicroHistory: times must increase monotonically");
            if (!(a[k] > 0.0)) throw ValidationError("MicroHistory: A must be positive");
            if (static_cast<std::size_t>(c[k].size()) + 1 != dim())
                throw ValidationError("MicroHistory: c_j has wrong length");
            if (std::abs(c[k].squaredNorm() - 1.0) > tol)
                throw ValidationError("MicroHistory: sum |c_j|^2 != 1 at grid point " +
                                      std::to_string(k));
        }
    }
};

inline std::vector<SpinVector> reconstruct(const MicroHistory& h) {
    std::vector<SpinVector> out;
    out.reserve(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) out.push_back(h.state(k));
    return out;
}

inline Trajectory to_trajectory(const MicroHistory& h) {
    return Trajectory{h.times, reconstruct(h), h.branch, h.omega};
}

} // namespace qlag
