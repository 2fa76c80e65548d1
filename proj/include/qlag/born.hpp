// born.hpp: outcome probabilities from Cauchy-weighted anomaly targets.
//
// A net rotation alpha_a of the spin angle costs a phase anomaly, and the
// density of histories reaching it scales as 1 / (gamma_s^2 + alpha_a^2).
// Starting at angle alpha from the measurement "up" state, the outcome
// |q_1| = 1 is reached by alpha_a = l pi - alpha and q_1 = 0 by
// alpha_a = l pi + pi/2 - alpha, for every integer l.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qlag/config.hpp"
#include "qlag/rng.hpp"

namespace qlag {

inline constexpr double kHbarEvSeconds = 6.582119569e-16;
inline constexpr double kElectronRestEnergyEv = 510998.95;

// Unnormalized Cauchy weight of a net anomaly target.
inline double p0_weight(double alpha_a, double gamma_s) {
    if (alpha_a == 0.0 && gamma_s == 0.0)
        throw NumericalGuard("p0_weight: singular weight at alpha_a = 0 with gamma_s = 0");
    return 1.0 / (gamma_s * gamma_s + alpha_a * alpha_a);
}

struct TargetSum {
    double truncated{0.0};      // sum over |l| <= l_max
    double tail_estimate{0.0};  // midpoint-rule integral of the omitted terms
    double tail_bound{0.0};     // rigorous upper bound 2 / (pi^2 l_max) on the omitted terms
    bool certain{false};        // gamma_s = 0 and alpha on a target: infinite weight

    double value() const { return truncated + tail_estimate; }
};

namespace detail {

// alpha mapped into [0, pi/2]; the target sum is even and pi-periodic.
inline double reduce_angle(double alpha) {
    double a = std::fmod(std::abs(alpha), kPi);
    if (a > 0.5 * kPi) a = kPi - a;
    return a;
}

// Integral of 1 / (gamma^2 + (pi x + shift)^2) for x from l_max + 1/2 to infinity.
inline double tail_integral(double gamma, double x0) {
    if (gamma == 0.0) return 1.0 / (kPi * x0);
    return std::atan(gamma / x0) / (kPi * gamma);
}

} // namespace detail

// sum_{l=-l_max..l_max} 1 / (gamma_s^2 + (l pi - alpha)^2), with alpha reduced
// to [0, pi/2] by symmetry first and terms added smallest first.
inline TargetSum eigen_target_sum(double alpha, double gamma_s, long l_max) {
    if (l_max < 1) throw ValidationError("eigen_target_sum: l_max must be >= 1");
    if (!(gamma_s >= 0.0) || !std::isfinite(alpha)) throw ValidationError("eigen_target_sum: bad arguments");
    const double a = detail::reduce_angle(alpha);
    const double g2 = gamma_s * gamma_s;
    TargetSum out;
    if (gamma_s == 0.0 && a == 0.0) {
        out.truncated = std::numeric_limits<double>::infinity();
        out.certain = true;
        return out;
    }
    double s = 0.0;
    for (long l = l_max; l >= 1; --l) {
        const double lp = static_cast<double>(l) * kPi;
        const double up = lp - a, dn = lp + a;
        s += 1.0 / (g2 + dn * dn);
        s += 1.0 / (g2 + up * up);
    }
    s += 1.0 / (g2 + a * a);
    out.truncated = s;
    const double edge = kPi * (static_cast<double>(l_max) + 0.5);
    out.tail_estimate = detail::tail_integral(gamma_s, edge - a) + detail::tail_integral(gamma_s, edge + a);
    out.tail_bound = 2.0 / (kPi * kPi * static_cast<double>(l_max));
    return out;
}

// Infinite-l limit: sinh(2 gamma) / (2 gamma (sin^2 alpha + sinh^2 gamma)),
// 1 / sin^2 alpha at gamma = 0.
inline double closed_form_target_sum(double alpha, double gamma_s) {
    if (!(gamma_s >= 0.0)) throw ValidationError("closed_form_target_sum: gamma_s must be >= 0");
    const double s = std::sin(detail::reduce_angle(alpha));
    const double s2 = s * s;
    if (gamma_s == 0.0) return s2 == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / s2;
    if (gamma_s > 1.0) {
        const double sh = std::sinh(gamma_s);
        return 1.0 / (std::tanh(gamma_s) * gamma_s * (1.0 + s2 / (sh * sh)));
    }
    const double sh = std::sinh(gamma_s);
    return std::sinh(2.0 * gamma_s) / (2.0 * gamma_s * (s2 + sh * sh));
}

// P(|q_1| = 1) / P(q_1 = 0) = (cos^2 alpha + sinh^2 gamma) / (sin^2 alpha + sinh^2 gamma).
inline double outcome_ratio(double alpha, double gamma_s) {
    if (!(alpha >= 0.0 && alpha <= 0.5 * kPi)) throw ValidationError("outcome_ratio: alpha must lie in [0, pi/2]");
    if (!(gamma_s >= 0.0)) throw ValidationError("outcome_ratio: gamma_s must be >= 0");
    const double c = std::cos(alpha), s = std::sin(alpha);
    const double sh = std::sinh(gamma_s);
    const double t = sh * sh;
    if (!std::isfinite(t)) return 1.0;
    const double den = s * s + t;
    if (den == 0.0) return std::numeric_limits<double>::infinity();  // certainty of |q_1| = 1
    return (c * c + t) / den;
}

// ratio / (1 + ratio) = (cos^2 alpha + sinh^2 gamma) / (1 + 2 sinh^2 gamma).
inline double born_probability(double alpha, double gamma_s) {
    if (!(gamma_s >= 0.0)) throw ValidationError("born_probability: gamma_s must be >= 0");
    const double c = std::cos(alpha);
    const double sh = std::sinh(gamma_s);
    const double t = sh * sh;
    if (!std::isfinite(t)) return 0.5;
    return (c * c + t) / (1.0 + 2.0 * t);
}

struct DeviationRow {
    double alpha{0.0};
    double born{0.0};
    double cos2{0.0};
    double difference{0.0};  // born - cos2
};

inline std::vector<DeviationRow> deviation_scan(const std::vector<double>& alphas, double gamma_s) {
    std::vector<DeviationRow> rows;
    rows.reserve(alphas.size());
    for (const double a : alphas) {
        const double b = born_probability(a, gamma_s);
        const double c = std::cos(a);
        rows.push_back({a, b, c * c, b - c * c});
    }
    return rows;
}

// alpha_j = j (pi/2) / k for j = 0..k.
inline std::vector<double> quarter_grid(int k) {
    if (k < 1) throw ValidationError("quarter_grid: k must be >= 1");
    std::vector<double> a(static_cast<std::size_t>(k) + 1);
    for (int j = 0; j <= k; ++j) a[static_cast<std::size_t>(j)] = 0.5 * kPi * j / k;
    return a;
}

enum class OutcomeMethod { analytic, monte_carlo, cauchy_kick, eraser };

inline const char* to_string(OutcomeMethod m) {
    switch (m) {
        case OutcomeMethod::analytic: return "analytic";
        case OutcomeMethod::monte_carlo: return "monte_carlo";
        case OutcomeMethod::cauchy_kick: return "cauchy_kick";
        case OutcomeMethod::eraser: return "eraser";
    }
    return "?";
}

inline OutcomeMethod outcome_method_from_string(const std::string& s) {
    if (s == "analytic") return OutcomeMethod::analytic;
    if (s == "monte_carlo") return OutcomeMethod::monte_carlo;
    if (s == "cauchy_kick") return OutcomeMethod::cauchy_kick;
    if (s == "eraser") return OutcomeMethod::eraser;
    throw ValidationError("unknown outcome method '" + s + "'");
}

inline const std::string kUp = "up";          // |q_1| = 1
inline const std::string kDown = "down";      // q_1 = 0
inline const std::string kNoCollapse = "no-collapse";

struct OutcomeDistribution {
    std::vector<std::string> labels;
    std::vector<double> probs;
    OutcomeMethod method{OutcomeMethod::analytic};
    std::uint64_t samples{0};
    std::uint64_t seed{0};
    std::vector<std::uint64_t> counts;  // sampled methods only

    double prob(const std::string& label) const {
        for (std::size_t k = 0; k < labels.size(); ++k)
            if (labels[k] == label) return probs[k];
        throw ValidationError("OutcomeDistribution: no outcome labelled '" + label + "'");
    }

    void validate() const {
        if (labels.size() != probs.size() || labels.empty())
            throw ValidationError("OutcomeDistribution: labels and probs differ in length");
        double total = 0.0;
        for (const double p : probs) {
            if (!(p >= 0.0)) throw ValidationError("OutcomeDistribution: negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ValidationError("OutcomeDistribution: probabilities do not sum to 1");
    }
};

inline OutcomeDistribution analytic_outcomes(double alpha, double gamma_s) {
    const double b = born_probability(alpha, gamma_s);
    return {{kUp, kDown}, {b, 1.0 - b}, OutcomeMethod::analytic, 0, 0, {}};
}

struct AnomalyTarget {
    double alpha_a{0.0};
    int outcome{0};  // 0 = up, 1 = down
};

// Targets for |l| <= l_max, ordered by l and then outcome.
inline std::vector<AnomalyTarget> anomaly_targets(double alpha, long l_max) {
    if (l_max < 1) throw ValidationError("anomaly_targets: l_max must be >= 1");
    std::vector<AnomalyTarget> t;
    t.reserve(static_cast<std::size_t>(4 * l_max + 2));
    for (long l = -l_max; l <= l_max; ++l) {
        const double lp = static_cast<double>(l) * kPi;
        t.push_back({lp - alpha, 0});
        t.push_back({lp + 0.5 * kPi - alpha, 1});
    }
    return t;
}

inline std::vector<double> target_weights(const std::vector<AnomalyTarget>& targets, double gamma_s) {
    std::vector<double> w;
    w.reserve(targets.size());
    for (const auto& t : targets)
        w.push_back(gamma_s == 0.0 && t.alpha_a == 0.0 ? std::numeric_limits<double>::infinity()
                                                        : p0_weight(t.alpha_a, gamma_s));
    return w;
}

// Outcome probabilities of the truncated target set (what the sampler draws from).
inline OutcomeDistribution truncated_target_outcomes(double alpha, double gamma_s, long l_max) {
    const auto targets = anomaly_targets(alpha, l_max);
    const Categorical cat(target_weights(targets, gamma_s));
    double up = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k)
        if (targets[k].outcome == 0) up += cat.probability(k);
    return {{kUp, kDown}, {up, 1.0 - up}, OutcomeMethod::analytic, 0, 0, {}};
}

// Exact categorical sampling over the weighted targets.
inline OutcomeDistribution monte_carlo_outcomes(double alpha, double gamma_s, std::uint64_t n_samples,
                                                std::uint64_t seed, long l_max = 10000, unsigned workers = 1) {
    if (n_samples < 1) throw ValidationError("monte_carlo_outcomes: n_samples must be >= 1");
    if (!(gamma_s >= 0.0)) throw ValidationError("monte_carlo_outcomes: gamma_s must be >= 0");
    const auto targets = anomaly_targets(alpha, l_max);
    const Categorical cat(target_weights(targets, gamma_s));
    const auto hits = sample_counts(cat, n_samples, seed, 0, workers);
    std::vector<std::uint64_t> counts(2, 0);
    for (std::size_t k = 0; k < targets.size(); ++k) counts[static_cast<std::size_t>(targets[k].outcome)] += hits[k];
    const double n = static_cast<double>(n_samples);
    return {{kUp, kDown},
            {static_cast<double>(counts[0]) / n, static_cast<double>(counts[1]) / n},
            OutcomeMethod::monte_carlo,
            n_samples,
            seed,
            counts};
}

inline OutcomeDistribution monte_carlo_outcomes(const ExperimentConfig& cfg, std::uint64_t n_samples,
                                                std::uint64_t seed, unsigned workers = 1) {
    validate_config(cfg);
    return monte_carlo_outcomes(preparation_alpha(cfg), cfg.anomaly.gamma_s, n_samples, seed, cfg.l_max, workers);
}

// Cross-check: draw alpha_a from Cauchy(0, gamma_s) and keep proposals landing
// within window/2 of a target. Rejection keeps the target weights unbiased to
// O(window^2); snapping every proposal to its nearest target would not.
inline OutcomeDistribution cauchy_kick_outcomes(double alpha, double gamma_s, double window,
                                                std::uint64_t n_proposals, std::uint64_t seed,
                                                unsigned workers = 1) {
    if (!(gamma_s > 0.0)) throw ValidationError("cauchy_kick_outcomes: gamma_s must be > 0");
    if (!(window > 0.0 && window < 0.5 * kPi)) throw ValidationError("cauchy_kick_outcomes: window out of range");
    const double half = 0.5 * window;
    const auto counts = parallel_tally(n_proposals, 2, workers, [&](std::uint64_t i) -> long long {
        const double u = counter_uniform(seed, 1, i);
        const double aa = gamma_s * std::tan(kPi * (u - 0.5));
        // Targets sit at k pi/2 - alpha: even k -> up, odd k -> down.
        const double k = std::nearbyint((aa + alpha) / (0.5 * kPi));
        if (!std::isfinite(k) || std::abs(aa + alpha - k * 0.5 * kPi) > half) return -1;
        return std::fmod(std::abs(k), 2.0) == 0.0 ? 0 : 1;
    });
    const std::uint64_t accepted = counts[0] + counts[1];
    if (accepted == 0) throw NumericalGuard("cauchy_kick_outcomes: no proposal landed in a target window");
    const double n = static_cast<double>(accepted);
    return {{kUp, kDown},
            {static_cast<double>(counts[0]) / n, static_cast<double>(counts[1]) / n},
            OutcomeMethod::cauchy_kick,
            accepted,
            seed,
            counts};
}

// Number of rest-frequency periods inside a timing window.
inline double periodicity_multiplier(double omega, double delta_t) { return omega * delta_t / (2.0 * kPi); }

inline double rest_frequency(double rest_energy_ev) { return rest_energy_ev / kHbarEvSeconds; }

struct EraserResult {
    OutcomeDistribution distribution;
    std::optional<SpinVector> endpoint;  // set only when the phase constraint is erased
};

// With the measurement-phase constraint erased there is nothing to snap to:
// the result is the ELE endpoint itself. Otherwise identical to Monte Carlo.
inline EraserResult eraser_outcomes(const ExperimentConfig& cfg, std::uint64_t n_samples, std::uint64_t seed,
                                    unsigned workers = 1) {
    validate_config(cfg);
    if (!cfg.erased) return {monte_carlo_outcomes(cfg, n_samples, seed, workers), std::nullopt};
    EraserResult r;
    r.distribution = {{kNoCollapse}, {1.0}, OutcomeMethod::eraser, 0, seed, {}};
    r.endpoint = ele_trajectory(cfg).states.back();
    return r;
}

} // namespace qlag
