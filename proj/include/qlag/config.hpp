// config.hpp: JSON experiment configuration with exhaustive validation, plus
// the helpers that turn a config into a Lagrangian context and prepared state.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "qlag/dynamics.hpp"
#include "qlag/histories.hpp"
#include "qlag/spin_algebra.hpp"

namespace qlag {

struct Preparation {
    double time{0.0};
    Vec3 axis{Vec3::UnitZ()};
    int outcome{0};  // column of the axis eigenbasis, 0 = "up"
};

struct Measurement {
    double time{1.0};
    Vec3 axis{Vec3::UnitZ()};
    double delta_t{1e-3};
};

struct AnomalySettings {
    double gamma_s{0.0};
    double t0{1.0};
};

struct ExperimentConfig {
    int spin_n{2};
    double omega{1e6};
    double gyro{1.0};
    FieldSchedule schedule;
    Preparation preparation;
    Measurement measurement;
    AnomalySettings anomaly;
    bool erased{false};
    std::uint64_t seed{0};
    int steps{2000};       // integration steps between preparation and measurement
    long l_max{10000};     // anomaly-target truncation for sampling
};

// Every violation found in `cfg`; empty when valid.
inline std::vector<std::string> config_violations(const ExperimentConfig& cfg) {
    std::vector<std::string> v;
    if (cfg.spin_n < 2) v.push_back("spin_n: must be >= 2");
    if (!(cfg.omega > 0.0) || !std::isfinite(cfg.omega)) v.push_back("omega: must be positive and finite");
    if (!std::isfinite(cfg.gyro)) v.push_back("gyro: must be finite");
    if (cfg.schedule.segments().empty()) {
        v.push_back("schedule: needs at least one segment");
    } else {
        const double bound = 1e-3 * cfg.omega;
        const double spin_energy = std::abs(cfg.gyro) * cfg.schedule.max_field() * 0.5 * (cfg.spin_n - 1);
        if (spin_energy > bound)
            v.push_back("non-relativistic gate: gyro*max|B|*(spin_n-1)/2 = " + std::to_string(spin_energy) +
                        " exceeds the bound 1e-3*omega = " + std::to_string(bound));
        if (!cfg.schedule.covers(cfg.preparation.time, cfg.measurement.time))
            v.push_back("schedule: does not cover [preparation.time, measurement.time]");
    }
    if (!(cfg.preparation.time < cfg.measurement.time))
        v.push_back("time ordering: preparation.time must precede measurement.time");
    if (!(cfg.preparation.axis.norm() > 0.0)) v.push_back("preparation.axis: zero-length axis");
    if (!(cfg.measurement.axis.norm() > 0.0)) v.push_back("measurement.axis: zero-length axis");
    if (cfg.preparation.outcome < 0 || cfg.preparation.outcome >= cfg.spin_n)
        v.push_back("preparation.outcome: must be in [0, spin_n)");
    if (!(cfg.measurement.delta_t > 0.0)) v.push_back("measurement.delta_t: must be > 0");
    if (!(cfg.anomaly.gamma_s >= 0.0) || !std::isfinite(cfg.anomaly.gamma_s))
        v.push_back("anomaly.gamma_s: must be >= 0");
    const double span = cfg.measurement.time - cfg.preparation.time;
    if (std::abs(cfg.anomaly.t0 - span) > 1e-12 * std::max(1.0, std::abs(span)))
        v.push_back("anomaly.t0: must equal measurement.time - preparation.time");
    if (span > 0.0 && cfg.omega > 0.0 && !(cfg.omega * span >= 1e3))
        v.push_back("omega * t0 must be >= 1e3");
    if (cfg.steps < 99) v.push_back("steps: must be >= 99");
    if (cfg.l_max < 1) v.push_back("l_max: must be >= 1");
    return v;
}

inline void validate_config(const ExperimentConfig& cfg) {
    auto v = config_violations(cfg);
    if (!v.empty()) throw ConfigError(std::move(v));
}

namespace detail {

using json = nlohmann::json;

// (line, column), both 1-based, of the character at byte offset `byte` (1-based).
inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

// Field readers append to `errs` instead of throwing so that one pass reports everything.
class Reader {
public:
    explicit Reader(std::vector<std::string>& errs) : errs_(errs) {}

    void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!allowed.count(it.key())) errs_.push_back(where + it.key() + ": unknown field");
    }

    std::optional<double> number(const json& obj, const std::string& key, const std::string& where,
                                 bool required) {
        if (!obj.contains(key)) {
            if (required) errs_.push_back(where + key + ": missing required field");
            return std::nullopt;
        }
        const json& x = obj.at(key);
        if (!x.is_number()) {
            errs_.push_back(where + key + ": expected a number");
            return std::nullopt;
        }
        const double d = x.get<double>();
        if (!std::isfinite(d)) {
            errs_.push_back(where + key + ": must be finite");
            return std::nullopt;
        }
        return d;
    }

    std::optional<long long> integer(const json& obj, const std::string& key, const std::string& where,
                                     bool required) {
        if (!obj.contains(key)) {
            if (required) errs_.push_back(where + key + ": missing required field");
            return std::nullopt;
        }
        const json& x = obj.at(key);
        if (!x.is_number_integer()) {
            errs_.push_back(where + key + ": expected an integer");
            return std::nullopt;
        }
        return x.get<long long>();
    }

    std::optional<Vec3> vec3(const json& obj, const std::string& key, const std::string& where, bool required) {
        if (!obj.contains(key)) {
            if (required) errs_.push_back(where + key + ": missing required field");
            return std::nullopt;
        }
        const json& x = obj.at(key);
        if (!x.is_array() || x.size() != 3 || !x[0].is_number() || !x[1].is_number() || !x[2].is_number()) {
            errs_.push_back(where + key + ": expected an array of 3 numbers");
            return std::nullopt;
        }
        return Vec3(x[0].get<double>(), x[1].get<double>(), x[2].get<double>());
    }

    const json* object(const json& obj, const std::string& key, const std::string& where, bool required) {
        if (!obj.contains(key)) {
            if (required) errs_.push_back(where + key + ": missing required field");
            return nullptr;
        }
        if (!obj.at(key).is_object()) {
            errs_.push_back(where + key + ": expected an object");
            return nullptr;
        }
        return &obj.at(key);
    }

private:
    std::vector<std::string>& errs_;
};

} // namespace detail

// Parse and validate. Syntax errors report line and column; otherwise every
// structural and semantic violation is collected into one ConfigError.
inline ExperimentConfig parse_config(const std::string& text) {
    using detail::json;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        throw ConfigError({"syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                           ": " + e.what()});
    }
    if (!root.is_object()) throw ConfigError({"top level: expected a JSON object"});

    std::vector<std::string> errs;
    detail::Reader rd(errs);
    rd.check_keys(root, "",
                  {"spin_n", "omega", "gyro", "schedule", "preparation", "measurement", "anomaly", "erased",
                   "seed", "steps", "l_max"});

    ExperimentConfig cfg;
    if (auto n = rd.integer(root, "spin_n", "", true)) cfg.spin_n = static_cast<int>(*n);
    if (auto w = rd.number(root, "omega", "", true)) cfg.omega = *w;
    if (auto g = rd.number(root, "gyro", "", true)) cfg.gyro = *g;

    bool schedule_ok = false;
    if (!root.contains("schedule")) {
        errs.push_back("schedule: missing required field");
    } else if (!root["schedule"].is_array() || root["schedule"].empty()) {
        errs.push_back("schedule: expected a non-empty array of segments");
    } else {
        std::vector<FieldSegment> segs;
        const std::size_t before = errs.size();
        for (std::size_t k = 0; k < root["schedule"].size(); ++k) {
            const json& s = root["schedule"][k];
            const std::string where = "schedule[" + std::to_string(k) + "].";
            if (!s.is_object()) {
                errs.push_back(where.substr(0, where.size() - 1) + ": expected an object");
                continue;
            }
            rd.check_keys(s, where, {"t_start", "t_end", "b_start", "b_end"});
            FieldSegment seg;
            if (auto x = rd.number(s, "t_start", where, true)) seg.t_start = *x;
            if (auto x = rd.number(s, "t_end", where, true)) seg.t_end = *x;
            if (auto x = rd.vec3(s, "b_start", where, true)) seg.b_start = *x;
            if (auto x = rd.vec3(s, "b_end", where, true)) seg.b_end = *x;
            segs.push_back(seg);
        }
        if (errs.size() == before) {
            try {
                cfg.schedule = FieldSchedule(std::move(segs));
                schedule_ok = true;
            } catch (const ValidationError& e) {
                errs.push_back(std::string("schedule: ") + e.what());
            }
        }
    }

    if (const json* p = rd.object(root, "preparation", "", true)) {
        rd.check_keys(*p, "preparation.", {"time", "axis", "outcome"});
        if (auto x = rd.number(*p, "time", "preparation.", true)) cfg.preparation.time = *x;
        if (auto x = rd.vec3(*p, "axis", "preparation.", true)) cfg.preparation.axis = *x;
        if (auto x = rd.integer(*p, "outcome", "preparation.", false)) cfg.preparation.outcome = static_cast<int>(*x);
    }
    if (const json* m = rd.object(root, "measurement", "", true)) {
        rd.check_keys(*m, "measurement.", {"time", "axis", "delta_t"});
        if (auto x = rd.number(*m, "time", "measurement.", true)) cfg.measurement.time = *x;
        if (auto x = rd.vec3(*m, "axis", "measurement.", true)) cfg.measurement.axis = *x;
        if (auto x = rd.number(*m, "delta_t", "measurement.", true)) cfg.measurement.delta_t = *x;
    }
    cfg.anomaly.t0 = cfg.measurement.time - cfg.preparation.time;
    if (const json* a = rd.object(root, "anomaly", "", true)) {
        rd.check_keys(*a, "anomaly.", {"gamma_s", "t0"});
        if (auto x = rd.number(*a, "gamma_s", "anomaly.", true)) cfg.anomaly.gamma_s = *x;
        if (auto x = rd.number(*a, "t0", "anomaly.", false)) cfg.anomaly.t0 = *x;
    }
    if (root.contains("erased")) {
        if (root["erased"].is_boolean())
            cfg.erased = root["erased"].get<bool>();
        else
            errs.push_back("erased: expected a boolean");
    }
    if (root.contains("seed")) {
        if (root["seed"].is_number_unsigned())
            cfg.seed = root["seed"].get<std::uint64_t>();
        else
            errs.push_back("seed: expected a non-negative integer");
    }
    if (auto x = rd.integer(root, "steps", "", false)) cfg.steps = static_cast<int>(*x);
    if (auto x = rd.integer(root, "l_max", "", false)) cfg.l_max = static_cast<long>(*x);

    for (auto& s : config_violations(cfg)) {
        if (!schedule_ok && s.rfind("schedule", 0) == 0) continue;  // already reported
        errs.push_back(std::move(s));
    }
    if (!errs.empty()) throw ConfigError(std::move(errs));
    return cfg;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
    using detail::json;
    auto v3 = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
    json segs = json::array();
    for (const auto& s : cfg.schedule.segments())
        segs.push_back({{"t_start", s.t_start}, {"t_end", s.t_end}, {"b_start", v3(s.b_start)}, {"b_end", v3(s.b_end)}});
    return json{{"spin_n", cfg.spin_n},
                {"omega", cfg.omega},
                {"gyro", cfg.gyro},
                {"schedule", segs},
                {"preparation",
                 {{"time", cfg.preparation.time}, {"axis", v3(cfg.preparation.axis)}, {"outcome", cfg.preparation.outcome}}},
                {"measurement",
                 {{"time", cfg.measurement.time}, {"axis", v3(cfg.measurement.axis)}, {"delta_t", cfg.measurement.delta_t}}},
                {"anomaly", {{"gamma_s", cfg.anomaly.gamma_s}, {"t0", cfg.anomaly.t0}}},
                {"erased", cfg.erased},
                {"seed", cfg.seed},
                {"steps", cfg.steps},
                {"l_max", cfg.l_max}};
}

inline LagrangianContext make_context(const ExperimentConfig& cfg) {
    return LagrangianContext(build_spin_operators(cfg.spin_n), cfg.schedule, cfg.omega, cfg.gyro);
}

inline AnomalyParams anomaly_params(const ExperimentConfig& cfg) {
    return AnomalyParams{cfg.anomaly.gamma_s, cfg.anomaly.t0, cfg.measurement.delta_t, cfg.omega};
}

inline SpinVector prepared_state(const ExperimentConfig& cfg) {
    const auto ops = build_spin_operators(cfg.spin_n);
    return SpinVector(Vector(axis_eigenbasis(ops, cfg.preparation.axis).col(cfg.preparation.outcome)));
}

inline Matrix measurement_basis(const ExperimentConfig& cfg) {
    return axis_eigenbasis(build_spin_operators(cfg.spin_n), cfg.measurement.axis);
}

// Measurement eigenstates evolved back from measurement to preparation:
// the frame in which an ELE history has constant alpha.
inline ReferenceBasis measurement_special_basis(const ExperimentConfig& cfg) {
    return ReferenceBasis::from_special_states(propagate_basis(make_context(cfg), measurement_basis(cfg),
                                                               cfg.measurement.time, cfg.preparation.time,
                                                               cfg.steps));
}

// Unitary (plus-branch) propagation from preparation to measurement.
inline Trajectory ele_trajectory(const ExperimentConfig& cfg) {
    return evolve_plus(make_context(cfg), prepared_state(cfg), cfg.preparation.time, cfg.measurement.time,
                       cfg.steps);
}

// Angle between a state and the "up" eigenvector of a measurement basis, in
// [0, pi/2]: cos(alpha) = |<up|q>| / |q|.
inline double alpha_against(const Vector& q, const Matrix& basis) {
    const Vector comp = basis.adjoint() * q;
    const auto m = comp.size() - 1;
    return std::atan2(comp.tail(m).norm(), std::abs(comp(0)));
}

// alpha of the ELE endpoint against the measurement eigenbasis.
inline double preparation_alpha(const ExperimentConfig& cfg) {
    return alpha_against(ele_trajectory(cfg).states.back().amps(), measurement_basis(cfg));
}

} // namespace qlag
