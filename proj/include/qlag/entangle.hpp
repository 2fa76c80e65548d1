// entangle.hpp: the two-particle experiment obtained from a one-particle
// preparation/measurement run by time-reversing its first half.
//
// One-particle run on [-t_f, t_f]: prepared along the M1 axis at -t_f,
// measured along the M2 axis at +t_f. Cutting at t = 0 and reversing the
// earlier half gives a left particle (plus branch, [0, t_f], measured at M2)
// and a right particle (minus branch, own clock t' = -t, measured at M1),
// joined at the source by the M3 constraints
//   q_L(0) = q_R(0),   qdot_L(0) = -qdot_R(0).
// Spin-1/2 only.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qlag/born.hpp"
#include "qlag/config.hpp"
#include "qlag/histories.hpp"

namespace qlag {

// A boundary phase that is constrained but never assigned a number.
struct PhaseMarker {
    std::string name;
    std::string status{"constrained-unknown"};
};

struct DualExperiment {
    Vec3 m1_axis{Vec3::UnitZ()};   // one-particle preparation axis
    int m1_outcome{0};             // eigenvector index prepared there; the right "+" result
    Vec3 m2_axis{Vec3::UnitZ()};
    double t_f{1.0};
    double gamma_s{0.0};
    double omega{1e6};
    double gyro{1.0};
    double t0{2.0};                // one-particle span 2 t_f
    double delta_t{1e-3};
    FieldSchedule left_schedule;   // B(t) on [0, t_f]
    FieldSchedule right_schedule;  // -B(-t') on [0, t_f], right particle's own clock
    PhaseMarker theta_i{"theta_i"};
    PhaseMarker theta_f{"theta_f"};
    std::uint64_t seed{0};
    int steps{2000};  // one-particle steps; each side uses half
    long l_max{10000};
    bool erased{false};

    // Half the polar angle of the M1 axis from z (towards x).
    double alpha0() const { return 0.5 * std::atan2(m1_axis.x(), m1_axis.z()); }
    double setting_m2() const { return std::atan2(m2_axis.x(), m2_axis.z()); }
    int side_steps() const { return std::max(steps / 2, 99); }

    void validate() const {
        if (!(t_f > 0.0)) throw ValidationError("DualExperiment: t_f must be > 0");
        if (!(omega > 0.0)) throw ValidationError("DualExperiment: omega must be > 0");
        if (!(gamma_s >= 0.0)) throw ValidationError("DualExperiment: gamma_s must be >= 0");
        if (!(m1_axis.norm() > 0.0) || !(m2_axis.norm() > 0.0))
            throw ValidationError("DualExperiment: zero-length measurement axis");
        if (m1_outcome < 0 || m1_outcome > 1) throw ValidationError("DualExperiment: m1_outcome must be 0 or 1");
        if (!left_schedule.covers(0.0, t_f) || !right_schedule.covers(0.0, t_f))
            throw CoverageError("DualExperiment: schedules must cover [0, t_f]");
    }
};

// Outcomes are +1 / -1; "+" at M1 is the state the one-particle run prepared,
// "+" at M2 is "up" along the M2 axis.
struct JointOutcome {
    int left{1};   // M2
    int right{1};  // M1
    double prob{0.0};
};

// "+-" style label, M1 (right) first.
inline std::string joint_label(int right, int left) {
    return std::string(right > 0 ? "+" : "-") + (left > 0 ? "+" : "-");
}

inline std::pair<int, int> parse_joint_label(const std::string& s) {
    if (s.size() != 2 || (s[0] != '+' && s[0] != '-') || (s[1] != '+' && s[1] != '-'))
        throw ValidationError("joint outcome must be one of ++, +-, -+, -- (got '" + s + "')");
    return {s[0] == '+' ? 1 : -1, s[1] == '+' ? 1 : -1};
}

inline DualExperiment dualize(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.spin_n != 2) throw ValidationError("dualize: only spin-1/2 (spin_n = 2) is supported");
    const double t_f = cfg.measurement.time;
    if (!(t_f > 0.0) || std::abs(cfg.preparation.time + t_f) > 1e-12 * t_f)
        throw ValidationError("dualize: preparation must sit at -t_f and measurement at +t_f");
    DualExperiment d;
    d.m1_axis = cfg.preparation.axis;
    d.m1_outcome = cfg.preparation.outcome;
    d.m2_axis = cfg.measurement.axis;
    d.t_f = t_f;
    d.gamma_s = cfg.anomaly.gamma_s;
    d.omega = cfg.omega;
    d.gyro = cfg.gyro;
    d.t0 = cfg.anomaly.t0;
    d.delta_t = cfg.measurement.delta_t;
    d.left_schedule = cfg.schedule.restricted(0.0, t_f);
    d.right_schedule = cfg.schedule.restricted(-t_f, 0.0).mirrored();
    d.seed = cfg.seed;
    d.steps = cfg.steps;
    d.l_max = cfg.l_max;
    d.erased = cfg.erased;
    return d;
}

// Inverse map: reverse the right half back onto [-t_f, 0]. A segment that
// straddled t = 0 comes back split in two; B(t) itself is unchanged.
inline ExperimentConfig dualize(const DualExperiment& d) {
    d.validate();
    ExperimentConfig cfg;
    cfg.spin_n = 2;
    cfg.omega = d.omega;
    cfg.gyro = d.gyro;
    cfg.schedule = FieldSchedule::joined(d.right_schedule.mirrored(), d.left_schedule);
    cfg.preparation = {-d.t_f, d.m1_axis, d.m1_outcome};
    cfg.measurement = {d.t_f, d.m2_axis, d.delta_t};
    cfg.anomaly = {d.gamma_s, d.t0};
    cfg.erased = d.erased;
    cfg.seed = d.seed;
    cfg.steps = d.steps;
    cfg.l_max = d.l_max;
    validate_config(cfg);
    return cfg;
}

// Field-free dual experiment with the M1 axis at 2 alpha0 and the M2 axis at
// `setting_m2`, both measured from z towards x.
inline DualExperiment dual_from_angles(double alpha0, double setting_m2, double gamma_s, double t_f = 1.0,
                                       double omega = 1e6) {
    DualExperiment d;
    d.m1_axis = Vec3(std::sin(2.0 * alpha0), 0.0, std::cos(2.0 * alpha0));
    d.m2_axis = Vec3(std::sin(setting_m2), 0.0, std::cos(setting_m2));
    d.t_f = t_f;
    d.gamma_s = gamma_s;
    d.omega = omega;
    d.t0 = 2.0 * t_f;
    d.left_schedule = FieldSchedule::constant(Vec3::Zero(), 0.0, t_f);
    d.right_schedule = FieldSchedule::constant(Vec3::Zero(), 0.0, t_f);
    d.validate();
    return d;
}

inline LagrangianContext left_context(const DualExperiment& d) {
    return LagrangianContext(build_spin_operators(2), d.left_schedule, d.omega, d.gyro);
}

inline LagrangianContext right_context(const DualExperiment& d) {
    return LagrangianContext(build_spin_operators(2), d.right_schedule, d.omega, d.gyro);
}

// M1 eigenbasis with column 0 the prepared ("+") state.
inline Matrix m1_basis(const DualExperiment& d) {
    const Matrix b = axis_eigenbasis(build_spin_operators(2), d.m1_axis);
    Matrix out(2, 2);
    out.col(0) = b.col(d.m1_outcome);
    out.col(1) = b.col(1 - d.m1_outcome);
    return out;
}

inline Matrix m2_basis(const DualExperiment& d) { return axis_eigenbasis(build_spin_operators(2), d.m2_axis); }

// Right particle's a-priori history: minus branch on its own clock, fixed to
// the M1 "+" state at t' = t_f. Equals q_1(-t') of the one-particle run.
inline Trajectory right_best_guess(const DualExperiment& d) {
    d.validate();
    return evolve_minus(right_context(d), SpinVector(Vector(m1_basis(d).col(0))), d.t_f, 0.0, d.side_steps());
}

// Left particle's special state for M2 outcome `left` (+1 / -1) on [0, t_f].
inline Trajectory left_best_guess(const DualExperiment& d, int left) {
    d.validate();
    const Matrix b = m2_basis(d);
    return evolve_plus(left_context(d), SpinVector(Vector(b.col(left > 0 ? 0 : 1))), d.t_f, 0.0, d.side_steps());
}

// Angle at the junction between the right particle's state and the left
// particle's "+" special state; equals the one-particle preparation alpha.
inline double junction_alpha(const DualExperiment& d) {
    const Trajectory right = right_best_guess(d);
    const Trajectory up = left_best_guess(d, 1), down = left_best_guess(d, -1);
    Matrix frame(2, 2);
    frame.col(0) = up.states.front().amps();
    frame.col(1) = down.states.front().amps();
    return alpha_against(right.states.front().amps(), frame);
}

struct M3Check {
    bool passed{false};
    double value_residual{0.0};       // |q_L(0) - q_R(0)| / |q_L(0)|
    double derivative_residual{0.0};  // |qdot_L(0) + qdot_R(0)| / (omega |q_L(0)|)
};

namespace detail {

inline std::size_t index_of_zero(const Trajectory& tr, const char* side) {
    const double scale = std::max(std::abs(tr.times.front()), std::abs(tr.times.back()));
    for (std::size_t k = 0; k < tr.size(); ++k)
        if (std::abs(tr.times[k]) <= 1e-12 * scale) return k;
    throw ValidationError(std::string("check_m3: ") + side + " grid does not contain t = 0");
}

// qdot at grid point k from the carrier-free envelope.
inline Vector velocity(const Trajectory& tr, std::size_t k) {
    const double c = carrier_rate(tr.branch, tr.omega);
    std::vector<Vector> env(tr.size());
    for (std::size_t j = 0; j < tr.size(); ++j) env[j] = tr.envelope(j);
    const Vector d = derivative(tr.times, env, k);
    return std::exp(kI * (c * (tr.times[k] - tr.times.front()))) * (d + kI * c * env[k]);
}

} // namespace detail

inline M3Check check_m3(const Trajectory& left, const Trajectory& right, double tol = 1e-8) {
    left.validate();
    right.validate();
    if (left.dim() != right.dim()) throw ValidationError("check_m3: dimension mismatch");
    if (left.size() < 3 || right.size() < 3) throw ValidationError("check_m3: grids need at least 3 points");
    const std::size_t kl = detail::index_of_zero(left, "left"), kr = detail::index_of_zero(right, "right");
    const Vector& ql = left.states[kl].amps();
    const Vector& qr = right.states[kr].amps();
    const double scale = std::max(ql.norm(), 1e-300);
    const double omega = std::max(left.omega, right.omega);
    M3Check r;
    r.value_residual = (ql - qr).norm() / scale;
    r.derivative_residual =
        (detail::velocity(left, kl) + detail::velocity(right, kr)).norm() / (omega * scale);
    r.passed = r.value_residual <= tol && r.derivative_residual <= tol;
    return r;
}

// Joint probabilities from counting anomaly targets on both M1 branches. With
// alpha the junction angle, the M1 "+" branch starts alpha from M2 "up" and the
// "-" branch starts pi/2 - alpha, so
//   P(+,+) = P(-,-) = b(alpha) / 2,   P(+,-) = P(-,+) = (1 - b(alpha)) / 2.
// Order: ++, +-, -+, -- (M1 first). For gamma_s > 0 this reuses the
// one-particle law per M1 branch; nothing beyond that is modeled.
inline std::vector<JointOutcome> joint_probabilities_at(double alpha, double gamma_s) {
    const double b = born_probability(alpha, gamma_s);
    return {{1, 1, 0.5 * b}, {-1, 1, 0.5 * (1.0 - b)}, {1, -1, 0.5 * (1.0 - b)}, {-1, -1, 0.5 * b}};
}

inline std::vector<JointOutcome> joint_probabilities(const DualExperiment& d) {
    return joint_probabilities_at(junction_alpha(d), d.gamma_s);
}

inline double correlation(const std::vector<JointOutcome>& joint) {
    double e = 0.0;
    for (const auto& o : joint) e += o.left * o.right * o.prob;
    return e;
}

// E for M1 and M2 axes at polar angles x and y in the xz plane.
inline double correlation_for_settings(double x, double y, double gamma_s) {
    return correlation(joint_probabilities_at(0.5 * (x - y), gamma_s));
}

// settings = (a, a', b, b'); S = |E(a,b) + E(a,b') + E(a',b) - E(a',b')|.
inline double chsh(const std::array<double, 4>& s, double gamma_s) {
    const auto e = [&](double x, double y) { return correlation_for_settings(x, y, gamma_s); };
    return std::abs(e(s[0], s[2]) + e(s[0], s[3]) + e(s[1], s[2]) - e(s[1], s[3]));
}

inline const std::array<double, 4> kCanonicalChshSettings{0.0, 0.5 * kPi, 0.25 * kPi, -0.25 * kPi};

// One weighted categorical over both M1 branches and both M2 target families.
struct JointTargets {
    std::vector<AnomalyTarget> targets;
    std::vector<int> right;  // M1 result for each target
    std::vector<double> weights;
};

inline JointTargets joint_targets(double alpha, double gamma_s, long l_max) {
    JointTargets jt;
    for (const int r : {1, -1}) {
        const double start = r > 0 ? alpha : 0.5 * kPi - alpha;
        auto t = anomaly_targets(start, l_max);
        auto w = target_weights(t, gamma_s);
        jt.targets.insert(jt.targets.end(), t.begin(), t.end());
        jt.weights.insert(jt.weights.end(), w.begin(), w.end());
        jt.right.insert(jt.right.end(), t.size(), r);
    }
    return jt;
}

// Counts in the order ++, +-, -+, -- (M1 first), from n sampled hidden histories.
inline std::array<std::uint64_t, 4> sample_joint_counts(double alpha, double gamma_s, std::uint64_t n,
                                                        std::uint64_t seed, std::uint64_t stream = 0,
                                                        long l_max = 10000, unsigned workers = 1) {
    const JointTargets jt = joint_targets(alpha, gamma_s, l_max);
    const Categorical cat(jt.weights);
    const auto hits = sample_counts(cat, n, seed, stream, workers);
    std::array<std::uint64_t, 4> out{0, 0, 0, 0};
    for (std::size_t k = 0; k < hits.size(); ++k) {
        const int left = jt.targets[k].outcome == 0 ? 1 : -1;
        const std::size_t slot = (jt.right[k] > 0 ? 0 : 2) + (left > 0 ? 0 : 1);
        out[slot] += hits[k];
    }
    return out;
}

inline double sampled_correlation(const std::array<std::uint64_t, 4>& c) {
    const double n = static_cast<double>(c[0] + c[1] + c[2] + c[3]);
    return (static_cast<double>(c[0]) + static_cast<double>(c[3]) - static_cast<double>(c[1]) -
            static_cast<double>(c[2])) / n;
}

// CHSH from sampled hidden-variable histories, n samples per setting pair.
inline double sampled_chsh(const std::array<double, 4>& s, double gamma_s, std::uint64_t n, std::uint64_t seed,
                           long l_max = 10000, unsigned workers = 1) {
    const std::array<std::pair<int, int>, 4> pairs{{{0, 2}, {0, 3}, {1, 2}, {1, 3}}};
    std::array<double, 4> e{};
    for (std::size_t k = 0; k < 4; ++k) {
        const double alpha = 0.5 * (s[pairs[k].first] - s[pairs[k].second]);
        e[k] = sampled_correlation(sample_joint_counts(alpha, gamma_s, n, seed, 10 + k, l_max, workers));
    }
    return std::abs(e[0] + e[1] + e[2] - e[3]);
}

struct HiddenHistory {
    MicroHistory left;    // plus branch on [0, t_f]
    MicroHistory right;   // minus branch on the right particle's clock [0, t_f]
    double junction_alpha{0.0};
    double alpha_a{0.0};  // net rotation carried by the left history
    int left_outcome{1};
    int right_outcome{1};
};

// One concrete pair of NLC histories for a joint outcome. The right history is
// the pure ELE in the M1 special-state basis; the left history starts from the
// junction state and rotates by alpha_a onto the M2 outcome. Without a seed
// alpha_a is the maximal-weight target; with a seed it is drawn from the
// weighted targets of that outcome.
inline HiddenHistory hidden_history(const DualExperiment& d, int right, int left,
                                    std::optional<std::uint64_t> seed = std::nullopt) {
    d.validate();
    if (std::abs(right) != 1 || std::abs(left) != 1) throw ValidationError("hidden_history: outcomes must be +1 or -1");
    const double alpha_j = junction_alpha(d);
    for (const auto& o : joint_probabilities_at(alpha_j, d.gamma_s))
        if (o.left == left && o.right == right && !(o.prob > 0.0))
            throw ValidationError("hidden_history: outcome " + joint_label(right, left) + " has zero probability");

    const int steps = d.side_steps();
    const int grid = steps + 1;
    const LagrangianContext lctx = left_context(d), rctx = right_context(d);
    const AnomalyParams params{d.gamma_s, d.t_f, d.delta_t, d.omega};

    HistorySpec rs;
    rs.alpha_start = rs.alpha_end = right > 0 ? 0.0 : 0.5 * kPi;
    rs.basis = ReferenceBasis::from_special_states(propagate_basis(rctx, m1_basis(d), d.t_f, 0.0, steps));
    rs.branch = Branch::minus;
    HiddenHistory out;
    out.right = construct_history(rctx, params, rs, grid);

    // Junction state in the left special-state frame.
    const auto lbasis = ReferenceBasis::from_special_states(propagate_basis(lctx, m2_basis(d), d.t_f, 0.0, steps));
    HistorySpec ls = spec_from_state(lbasis.at(0), out.right.state(0).amps());
    ls.basis = lbasis;

    std::vector<AnomalyTarget> family;
    for (const auto& t : anomaly_targets(ls.alpha_start, d.l_max))
        if ((t.outcome == 0) == (left > 0)) family.push_back(t);
    std::size_t pick = 0;
    if (seed) {
        const Categorical cat(target_weights(family, d.gamma_s));
        pick = cat.draw(counter_uniform(*seed, 2, 0));
    } else {
        for (std::size_t k = 1; k < family.size(); ++k)
            if (std::abs(family[k].alpha_a) < std::abs(family[pick].alpha_a)) pick = k;
    }
    out.alpha_a = family[pick].alpha_a;
    ls.alpha_end = ls.alpha_start + out.alpha_a;
    ls.branch = Branch::plus;
    out.left = construct_history(lctx, params, ls, grid);
    out.junction_alpha = alpha_j;
    out.left_outcome = left;
    out.right_outcome = right;
    return out;
}

} // namespace qlag
