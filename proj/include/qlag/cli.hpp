// cli.hpp: the qlag command-line front end. run() parses a subcommand and
// its flags, executes it and emits a CSV (default) or JSON result document.
//
// Exit codes: 0 success, 2 validation/usage error, 3 numerical guard,
// 4 I/O error. Seed precedence: --seed flag, then QLAG_SEED, then config.

#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qlag/born.hpp"
#include "qlag/config.hpp"
#include "qlag/entangle.hpp"
#include "qlag/histories.hpp"
#include "qlag/io.hpp"

namespace qlag::cli {

inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed) {
    if (flag) return *flag;
    if (const char* env = std::getenv("QLAG_SEED"); env && *env) {
        char* end = nullptr;
        errno = 0;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (errno != 0 || *end != '\0' || env[0] == '-')
            throw ValidationError(std::string("QLAG_SEED is not an unsigned integer: '") + env + "'");
        return v;
    }
    return config_seed;
}

namespace detail {

inline std::string num(double x) { return format_double(x); }

inline std::vector<double> parse_angles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const Cell c = qlag::detail::parse_cell(item);
        const double* d = std::get_if<double>(&c);
        if (!d || !std::isfinite(*d)) throw ValidationError("--angles: '" + item + "' is not a number");
        out.push_back(*d);
    }
    if (out.size() != 4) throw ValidationError("--angles expects four comma-separated values a,a2,b,b2");
    return out;
}

inline void add_state_columns(Table& t, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        t.columns.push_back("re_" + std::to_string(j));
        t.columns.push_back("im_" + std::to_string(j));
    }
}

inline void append_state(std::vector<Cell>& row, const Vector& q) {
    for (Eigen::Index j = 0; j < q.size(); ++j) {
        row.emplace_back(q(j).real());
        row.emplace_back(q(j).imag());
    }
}

// Maximal-weight anomaly target for reaching `outcome` (0 up, 1 down) from alpha.
inline double nearest_target(double alpha, int outcome) {
    double best = 0.0;
    bool found = false;
    for (const auto& t : anomaly_targets(alpha, 2))
        if (t.outcome == outcome && (!found || std::abs(t.alpha_a) < std::abs(best))) {
            best = t.alpha_a;
            found = true;
        }
    return best;
}

struct Options {
    std::string format{"csv"};
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string config;
    double alpha{0.0};
    double gamma{0.0};
    int grid{1000};
    std::uint64_t samples{1000000};
    unsigned workers{1};
    std::string method{"categorical"};
    double window{0.01};
    std::string angles;
    long l_max{10000};
    double alpha0{0.0};
    double setting_m2{0.0};
    std::string kind{"trajectory"};
    std::string branch{"plus"};
    std::optional<double> alpha_a;
    std::string target_outcome{"up"};
    std::string outcome{"++"};
    std::string select{"auto"};
    double mass_kev{511.0};
    double window_ns{1.0};
};

inline ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

inline Document cmd_born(const Options& o) {
    Document doc;
    doc.table.columns = {"alpha", "gamma", "born_probability", "cos2_alpha", "outcome_ratio"};
    const double c = std::cos(o.alpha);
    doc.table.add({o.alpha, o.gamma, born_probability(o.alpha, o.gamma), c * c,
                   outcome_ratio(qlag::detail::reduce_angle(o.alpha), o.gamma)});
    return doc;
}

inline Document cmd_deviation_scan(const Options& o) {
    Document doc;
    doc.table.columns = {"alpha", "born_probability", "cos2_alpha", "difference"};
    double worst = 0.0, at = 0.0;
    for (const auto& r : deviation_scan(quarter_grid(o.grid), o.gamma)) {
        doc.table.add({r.alpha, r.born, r.cos2, r.difference});
        if (std::abs(r.difference) > worst) {
            worst = std::abs(r.difference);
            at = r.alpha;
        }
    }
    doc.meta = {{"gamma_s", num(o.gamma)}, {"max_abs_difference", num(worst)}, {"argmax_alpha", num(at)}};
    return doc;
}

inline Document cmd_mc(const Options& o, std::uint64_t seed, const ExperimentConfig& cfg) {
    Document doc;
    const double alpha = preparation_alpha(cfg);
    doc.meta = {{"alpha", num(alpha)}, {"gamma_s", num(cfg.anomaly.gamma_s)}, {"l_max", std::to_string(cfg.l_max)}};
    if (o.method == "cauchy-kick") {
        const auto dist = cauchy_kick_outcomes(alpha, cfg.anomaly.gamma_s, o.window, o.samples, seed, o.workers);
        doc.meta.emplace_back("mode", "cauchy_kick");
        doc.meta.emplace_back("window", num(o.window));
        doc.table.columns = {"label", "count", "frequency", "expected"};
        const auto exact = analytic_outcomes(alpha, cfg.anomaly.gamma_s);
        for (std::size_t k = 0; k < dist.labels.size(); ++k)
            doc.table.add({dist.labels[k], static_cast<double>(dist.counts[k]), dist.probs[k], exact.probs[k]});
        return doc;
    }
    const auto r = eraser_outcomes(cfg, o.samples, seed, o.workers);
    if (r.endpoint) {
        doc.meta.emplace_back("mode", "eraser");
        doc.table.columns = {"label"};
        add_state_columns(doc.table, r.endpoint->dim());
        std::vector<Cell> row{kNoCollapse};
        append_state(row, r.endpoint->amps());
        doc.table.add(std::move(row));
        return doc;
    }
    doc.meta.emplace_back("mode", "monte_carlo");
    doc.table.columns = {"label", "count", "frequency", "expected"};
    const auto exact = analytic_outcomes(alpha, cfg.anomaly.gamma_s);
    const auto& d = r.distribution;
    for (std::size_t k = 0; k < d.labels.size(); ++k)
        doc.table.add({d.labels[k], static_cast<double>(d.counts[k]), d.probs[k], exact.probs[k]});
    return doc;
}

inline Document cmd_chsh(const Options& o, std::uint64_t seed) {
    const auto a = parse_angles(o.angles);
    const std::array<double, 4> s{a[0], a[1], a[2], a[3]};
    const std::array<std::pair<int, int>, 4> pairs{{{0, 2}, {0, 3}, {1, 2}, {1, 3}}};
    const std::array<const char*, 4> names{"E_a_b", "E_a_b2", "E_a2_b", "E_a2_b2"};
    Document doc;
    doc.table.columns = {"quantity", "x", "y", "analytic", "sampled"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::array<double, 4> sampled{nan, nan, nan, nan};
    if (o.samples > 0)
        for (std::size_t k = 0; k < 4; ++k)
            sampled[k] = sampled_correlation(sample_joint_counts(0.5 * (s[pairs[k].first] - s[pairs[k].second]),
                                                                 o.gamma, o.samples, seed, 10 + k, o.l_max,
                                                                 o.workers));
    for (std::size_t k = 0; k < 4; ++k) {
        const double x = s[pairs[k].first], y = s[pairs[k].second];
        doc.table.add({std::string(names[k]), x, y, correlation_for_settings(x, y, o.gamma), sampled[k]});
    }
    const double s_sampled =
        o.samples > 0 ? std::abs(sampled[0] + sampled[1] + sampled[2] - sampled[3]) : nan;
    doc.table.add({std::string("S"), nan, nan, chsh(s, o.gamma), s_sampled});
    doc.meta = {{"gamma_s", num(o.gamma)}, {"samples_per_pair", std::to_string(o.samples)}};
    return doc;
}

inline Document cmd_joint(const Options& o) {
    const auto d = dual_from_angles(o.alpha0, o.setting_m2, o.gamma);
    const auto joint = joint_probabilities(d);
    Document doc;
    doc.table.columns = {"m1", "m2", "probability"};
    for (const auto& j : joint) doc.table.add({static_cast<double>(j.right), static_cast<double>(j.left), j.prob});
    doc.meta = {{"alpha0", num(o.alpha0)},
                {"setting_m2", num(o.setting_m2)},
                {"gamma_s", num(o.gamma)},
                {"correlation", num(correlation(joint))}};
    return doc;
}

inline Trajectory branch_trajectory(const ExperimentConfig& cfg, const std::string& branch) {
    const auto ctx = make_context(cfg);
    const auto q0 = prepared_state(cfg);
    if (branch == "plus") return evolve_plus(ctx, q0, cfg.preparation.time, cfg.measurement.time, cfg.steps);
    if (branch == "minus") return evolve_minus(ctx, q0, cfg.preparation.time, cfg.measurement.time, cfg.steps);
    throw ValidationError("--branch must be plus or minus");
}

inline Document cmd_nlc_check(const ExperimentConfig& cfg) {
    const auto ctx = make_context(cfg);
    Document doc;
    doc.table.columns = {"branch", "nlc_residual", "factorization_residual"};
    for (const char* b : {"plus", "minus"}) {
        const auto tr = branch_trajectory(cfg, b);
        doc.table.add({std::string(b), nlc_residual(ctx, tr), factorization_residual(ctx, tr)});
    }
    return doc;
}

inline Document cmd_history(const Options& o, const ExperimentConfig& cfg) {
    const auto ctx = make_context(cfg);
    Document doc;
    doc.meta = {{"kind", o.kind}};
    if (o.kind == "trajectory") {
        const auto tr = branch_trajectory(cfg, o.branch);
        doc.meta.emplace_back("branch", o.branch);
        doc.table.columns = {"t"};
        add_state_columns(doc.table, tr.dim());
        doc.table.columns.push_back("branch");
        for (std::size_t k = 0; k < tr.size(); ++k) {
            std::vector<Cell> row{tr.times[k]};
            append_state(row, tr.states[k].amps());
            row.emplace_back(std::string(to_string(tr.branch)));
            doc.table.add(std::move(row));
        }
        return doc;
    }
    const auto basis = measurement_special_basis(cfg);
    if (o.kind == "micro") {
        const auto h = parameterize(branch_trajectory(cfg, o.branch), basis);
        doc.meta.emplace_back("branch", o.branch);
        doc.table.columns = {"t", "a", "alpha", "theta"};
        for (std::size_t j = 1; j < h.dim(); ++j) {
            doc.table.columns.push_back("c_re_" + std::to_string(j));
            doc.table.columns.push_back("c_im_" + std::to_string(j));
        }
        for (std::size_t k = 0; k < h.size(); ++k) {
            std::vector<Cell> row{h.times[k], h.a[k], h.alpha[k], h.theta[k]};
            for (Eigen::Index j = 0; j < h.c[k].size(); ++j) {
                row.emplace_back(h.c[k](j).real());
                row.emplace_back(h.c[k](j).imag());
            }
            doc.table.add(std::move(row));
        }
        return doc;
    }
    if (o.kind == "anomaly") {
        HistorySpec spec = spec_from_state(basis.at(0), prepared_state(cfg).amps());
        spec.basis = basis;
        spec.t_start = cfg.preparation.time;
        if (o.target_outcome != "up" && o.target_outcome != "down")
            throw ValidationError("--target must be up or down");
        const double alpha_a =
            o.alpha_a ? *o.alpha_a : nearest_target(spec.alpha_start, o.target_outcome == "up" ? 0 : 1);
        spec.alpha_end = spec.alpha_start + alpha_a;
        const auto params = anomaly_params(cfg);
        const auto h = construct_history(ctx, params, spec, cfg.steps + 1);
        doc.meta.emplace_back("alpha_start", num(spec.alpha_start));
        doc.meta.emplace_back("alpha_a", num(alpha_a));
        doc.meta.emplace_back("net_phase_anomaly", num(history_phase_anomaly(h)));
        doc.meta.emplace_back("gaussian_net_phase_anomaly", num(net_phase_anomaly(alpha_a, params)));
        doc.meta.emplace_back("nlc_residual", num(nlc_residual(ctx, h)));
        doc.table.columns = {"t", "alpha", "theta", "theta_anomaly"};
        for (std::size_t k = 0; k < h.size(); ++k)
            doc.table.add({h.times[k], h.alpha[k], h.theta[k], h.theta_anomaly[k]});
        return doc;
    }
    throw ValidationError("--kind must be trajectory, micro or anomaly");
}

inline Document cmd_special_states(const ExperimentConfig& cfg) {
    const auto ctx = make_context(cfg);
    const auto states = special_states(ctx, cfg.measurement.time, cfg.preparation.time, cfg.steps);
    Document doc;
    doc.table.columns = {"t", "state"};
    add_state_columns(doc.table, ctx.dim());
    for (std::size_t k = 0; k < states.front().size(); ++k)
        for (std::size_t j = 0; j < states.size(); ++j) {
            std::vector<Cell> row{states[j].times[k], static_cast<double>(j)};
            append_state(row, states[j].states[k].amps());
            doc.table.add(std::move(row));
        }
    return doc;
}

inline Document cmd_hidden_history(const Options& o, std::optional<std::uint64_t> seed, const ExperimentConfig& cfg) {
    const auto d = dualize(cfg);
    const auto [right, left] = parse_joint_label(o.outcome);
    const auto hh = hidden_history(d, right, left, seed);
    const auto m3 = check_m3(to_trajectory(hh.left), to_trajectory(hh.right));
    Document doc;
    doc.meta = {{"outcome", o.outcome},
                {"selection", seed ? "sampled" : "max-weight"},
                {"junction_alpha", num(hh.junction_alpha)},
                {"alpha_a", num(hh.alpha_a)},
                {"m3_passed", m3.passed ? "true" : "false"},
                {"m3_value_residual", num(m3.value_residual)},
                {"m3_derivative_residual", num(m3.derivative_residual)},
                {"nlc_left", num(nlc_residual(left_context(d), hh.left))},
                {"nlc_right", num(nlc_residual(right_context(d), hh.right))},
                {"theta_i", d.theta_i.status},
                {"theta_f", d.theta_f.status}};
    doc.table.columns = {"side", "t", "a", "alpha", "theta", "theta_anomaly"};
    add_state_columns(doc.table, 2);
    for (const auto* h : {&hh.left, &hh.right}) {
        const std::string side = h == &hh.left ? "left" : "right";
        for (std::size_t k = 0; k < h->size(); ++k) {
            std::vector<Cell> row{side, h->times[k], h->a[k], h->alpha[k], h->theta[k], h->theta_anomaly[k]};
            append_state(row, h->state(k).amps());
            doc.table.add(std::move(row));
        }
    }
    return doc;
}

inline Document cmd_n_estimate(const Options& o) {
    if (!(o.mass_kev > 0.0) || !(o.window_ns >= 0.0))
        throw ValidationError("n-estimate: need --mass-kev > 0 and --window-ns >= 0");
    const double energy_ev = o.mass_kev * 1e3;
    const double omega = rest_frequency(energy_ev);
    const double dt = o.window_ns * 1e-9;
    Document doc;
    doc.table.columns = {"rest_energy_ev", "omega", "delta_t", "n_periods"};
    doc.table.add({energy_ev, omega, dt, periodicity_multiplier(omega, dt)});
    return doc;
}

} // namespace detail

// Run one qlag invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using detail::Options;
    Options o;
    CLI::App app{"qlag: null-Lagrangian spin histories and outcome statistics"};
    app.require_subcommand(1);
    std::uint64_t seed_value = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--out,--export", o.out, "output file (default: stdout)");
        sub->add_option("--seed", seed_value, "RNG seed (overrides QLAG_SEED and the config)");
    };
    auto* born = app.add_subcommand("born", "Born-rule probability for one alpha");
    born->add_option("--alpha", o.alpha, "angle from the measured 'up' state (rad)")->required();
    born->add_option("--gamma", o.gamma, "gamma_s")->required();
    auto* scan = app.add_subcommand("deviation-scan", "born_probability - cos^2 alpha over [0, pi/2]");
    scan->add_option("--gamma", o.gamma, "gamma_s")->required();
    scan->add_option("--grid", o.grid, "number of intervals on [0, pi/2]");
    auto* mc = app.add_subcommand("mc", "Monte Carlo outcomes for a config");
    mc->add_option("--config", o.config, "experiment config (JSON)")->required();
    mc->add_option("--samples", o.samples, "number of samples");
    mc->add_option("--workers", o.workers, "worker threads (0 = all cores)");
    mc->add_option("--method", o.method, "categorical or cauchy-kick")
        ->check(CLI::IsMember({"categorical", "cauchy-kick"}));
    mc->add_option("--window", o.window, "acceptance window for cauchy-kick (rad)");
    auto* ch = app.add_subcommand("chsh", "CHSH value for four settings");
    ch->add_option("--angles", o.angles, "a,a2,b,b2 (rad)")->required();
    ch->add_option("--gamma", o.gamma, "gamma_s");
    ch->add_option("--samples", o.samples, "hidden-history samples per setting pair (default 0: analytic only)");
    ch->add_option("--l-max", o.l_max, "anomaly-target truncation for sampling");
    ch->add_option("--workers", o.workers, "worker threads (0 = all cores)");
    auto* joint = app.add_subcommand("joint", "joint outcome probabilities of the dual experiment");
    joint->add_option("--alpha0", o.alpha0, "half-angle of the M1 axis from z (rad)")->required();
    joint->add_option("--gamma", o.gamma, "gamma_s");
    joint->add_option("--setting-m2", o.setting_m2, "M2 axis angle from z (rad)");
    auto* nlc = app.add_subcommand("nlc-check", "null-Lagrangian residuals of both ELE branches");
    nlc->add_option("--config", o.config, "experiment config (JSON)")->required();
    auto* hist = app.add_subcommand("history", "trajectory, microhistory or anomaly history");
    hist->add_option("--config", o.config, "experiment config (JSON)")->required();
    hist->add_option("--kind", o.kind, "trajectory, micro or anomaly")
        ->check(CLI::IsMember({"trajectory", "micro", "anomaly"}));
    hist->add_option("--branch", o.branch, "plus or minus")->check(CLI::IsMember({"plus", "minus"}));
    hist->add_option("--alpha-a", o.alpha_a, "net rotation of an anomaly history (rad)");
    hist->add_option("--target", o.target_outcome, "outcome reached by the anomaly history: up or down");
    auto* special = app.add_subcommand("special-states", "final eigenstates evolved back to the preparation");
    special->add_option("--config", o.config, "experiment config (JSON)")->required();
    auto* hidden = app.add_subcommand("hidden-history", "explicit left/right histories for a joint outcome");
    hidden->add_option("--config", o.config, "one-particle config with preparation at -t_f")->required();
    hidden->add_option("--outcome", o.outcome, "M1 then M2 result: ++, +-, -+ or --");
    hidden->add_option("--select", o.select, "auto, max-weight or sampled")
        ->check(CLI::IsMember({"auto", "max-weight", "sampled"}));
    auto* nest = app.add_subcommand("n-estimate", "rest-frequency periods inside a timing window");
    nest->add_option("--mass-kev", o.mass_kev, "rest energy (keV)");
    nest->add_option("--window-ns", o.window_ns, "timing window (ns)");
    for (auto* sub : {born, scan, mc, ch, joint, nlc, hist, special, hidden, nest}) common(sub);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (sub->count("--seed") > 0) o.seed = seed_value;
    if (name == "chsh" && sub->count("--samples") == 0) o.samples = 0;

    try {
        Document doc;
        std::uint64_t seed = resolve_seed(o.seed, 0);
        if (name == "born") {
            doc = detail::cmd_born(o);
        } else if (name == "deviation-scan") {
            doc = detail::cmd_deviation_scan(o);
        } else if (name == "chsh") {
            doc = detail::cmd_chsh(o, seed);
        } else if (name == "joint") {
            doc = detail::cmd_joint(o);
        } else if (name == "n-estimate") {
            doc = detail::cmd_n_estimate(o);
        } else {
            const ExperimentConfig cfg = detail::load_config(o.config);
            seed = resolve_seed(o.seed, cfg.seed);
            if (name == "mc") {
                doc = detail::cmd_mc(o, seed, cfg);
            } else if (name == "nlc-check") {
                doc = detail::cmd_nlc_check(cfg);
            } else if (name == "history") {
                doc = detail::cmd_history(o, cfg);
            } else if (name == "special-states") {
                doc = detail::cmd_special_states(cfg);
            } else {
                const bool sampled = o.select == "sampled" || (o.select == "auto" && o.seed.has_value());
                doc = detail::cmd_hidden_history(o, sampled ? std::optional<std::uint64_t>(seed) : std::nullopt, cfg);
            }
        }
        doc.command = name;
        doc.seed = seed;
        doc.flags = args;
        const std::string text = o.format == "json" ? write_json(doc) : write_csv(doc);
        if (o.out.empty())
            out << text;
        else
            write_file(o.out, text);
        return 0;
    } catch (const ConfigError& e) {
        err << "error[validation]: invalid config\n";
        for (const auto& v : e.violations()) err << "  - " << v << "\n";
        return 2;
    } catch (const ValidationError& e) {
        err << "error[validation]: " << e.what() << "\n";
        return 2;
    } catch (const NumericalGuard& e) {
        err << "error[numerical]: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        err << "error[io]: " << e.what() << "\n";
        return 4;
    }
}

} // namespace qlag::cli
