#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ksflow/initial_data.hpp"
#include "ksflow/io.hpp"
#include "ksflow/params.hpp"
#include "ksflow/solver.hpp"

namespace ksflow {

struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CheckSettings {
    std::vector<std::string> run;   // empty: default roster
    bool assert_odi = false;        // the moment inequality is reported by default
    double tol_mass = 1e-6;
    double tol_bounds = 1e-12;
    double tol_vr = 1e-10;
    double tol_vr_boundary = 1e-12;
    double tol_barrier_rel = 1e-8;  // relative to m/omega_n
    double tol_concavity_rel = 1e-8;
    double tol_slope = 1e-8;
    double tol_eps = 1e-8;
    double tol_odi_rel = 1e-6;      // relative to y(0)
};

struct ThresholdSettings {
    std::optional<double> m0;
    std::optional<double> C4;
    std::optional<double> gamma;
    std::optional<double> mass; // direct mass when no initial data is given
};

struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

struct RunConfig {
    int n = 2;
    double R = 1.0;
    double beta = 1.0;
    double alpha = 1.0;
    std::optional<InitialDataSpec> initial;
    int N = 400;
    double q = 2.0;
    double epsilon = 0.0;
    std::vector<double> eps_list;
    StepControls controls;
    CheckSettings checks;
    ThresholdSettings threshold;
    std::vector<SweepAxis> sweep_axes;
    std::optional<std::string> trajectory_dir;
    std::optional<std::string> output_dir;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw config_error("config: unknown key '" + it.key() + "' in " + where);
}

inline double num_at(const nlohmann::json& j, const std::string& key, const std::string& where) {
    if (!j.at(key).is_number())
        throw config_error("config: '" + key + "' in " + where + " must be a number");
    return j.at(key).get<double>();
}

inline double num_or(const nlohmann::json& j, const std::string& key, double fallback,
                     const std::string& where) {
    if (!j.contains(key)) return fallback;
    return num_at(j, key, where);
}

inline InitialDataSpec parse_initial(const nlohmann::json& j) {
    reject_unknown(j, {"family", "scale", "plateau_fraction", "tail_fraction", "height", "mass", "path"},
                   "initial_data");
    InitialDataSpec spec;
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "constant") spec.family = InitialDataSpec::Family::constant;
    else if (fam == "quadratic") spec.family = InitialDataSpec::Family::quadratic;
    else if (fam == "plateau") spec.family = InitialDataSpec::Family::plateau;
    else if (fam == "csv") spec.family = InitialDataSpec::Family::csv;
    else throw config_error("config: unknown initial data family '" + fam + "'");
    spec.scale = num_or(j, "scale", 1.0, "initial_data");
    spec.plateau_fraction = num_or(j, "plateau_fraction", 0.1, "initial_data");
    spec.tail_fraction = num_or(j, "tail_fraction", 0.3, "initial_data");
    if (j.contains("height")) spec.height = num_at(j, "height", "initial_data");
    if (j.contains("mass")) spec.mass = num_at(j, "mass", "initial_data");
    if (j.contains("path")) spec.csv_path = j.at("path").get<std::string>();
    if (spec.family == InitialDataSpec::Family::csv) {
        if (spec.csv_path.empty()) throw config_error("config: csv initial data needs 'path'");
        if (!std::filesystem::exists(spec.csv_path))
            throw config_error("config: initial data file does not exist: " + spec.csv_path);
    }
    return spec;
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    detail::reject_unknown(j, {"params", "initial_data", "grid", "controls", "checks",
                               "threshold", "sweep", "trajectory", "output"},
                           "top level");
    RunConfig cfg;

    if (!j.contains("params")) throw config_error("config: missing 'params' block");
    const auto& jp = j.at("params");
    detail::reject_unknown(jp, {"n", "R", "beta", "alpha"}, "params");
    if (!jp.contains("n") || !jp.at("n").is_number_integer())
        throw config_error("config: params.n must be an integer");
    cfg.n = jp.at("n").get<int>();
    cfg.R = detail::num_at(jp, "R", "params");
    cfg.beta = detail::num_at(jp, "beta", "params");
    cfg.alpha = detail::num_at(jp, "alpha", "params");
    try {
        validate_core(cfg.n, cfg.R, cfg.beta, cfg.alpha);
    } catch (const param_error& e) {
        throw config_error(std::string("config: ") + e.what());
    }

    if (j.contains("initial_data")) cfg.initial = detail::parse_initial(j.at("initial_data"));

    if (j.contains("grid")) {
        const auto& jg = j.at("grid");
        detail::reject_unknown(jg, {"N", "q", "epsilon", "eps_list"}, "grid");
        if (jg.contains("N")) {
            if (!jg.at("N").is_number_integer()) throw config_error("config: grid.N must be an integer");
            cfg.N = jg.at("N").get<int>();
        }
        cfg.q = detail::num_or(jg, "q", cfg.q, "grid");
        cfg.epsilon = detail::num_or(jg, "epsilon", cfg.epsilon, "grid");
        if (jg.contains("eps_list")) {
            if (!jg.at("eps_list").is_array())
                throw config_error("config: grid.eps_list must be an array of numbers");
            for (const auto& v : jg.at("eps_list")) {
                if (!v.is_number()) throw config_error("config: grid.eps_list must be numeric");
                cfg.eps_list.push_back(v.get<double>());
            }
        }
    }

    if (j.contains("controls")) {
        const auto& jc = j.at("controls");
        detail::reject_unknown(jc, {"cfl", "dt_init", "dt_min", "dt_max", "u_cap", "t_end",
                                    "tol_mono", "snapshot_interval"},
                               "controls");
        StepControls& c = cfg.controls;
        c.cfl = detail::num_or(jc, "cfl", c.cfl, "controls");
        c.dt_init = detail::num_or(jc, "dt_init", c.dt_init, "controls");
        c.dt_min = detail::num_or(jc, "dt_min", c.dt_min, "controls");
        c.dt_max = detail::num_or(jc, "dt_max", c.dt_max, "controls");
        c.u_cap = detail::num_or(jc, "u_cap", c.u_cap, "controls");
        c.t_end = detail::num_or(jc, "t_end", c.t_end, "controls");
        c.tol_mono = detail::num_or(jc, "tol_mono", c.tol_mono, "controls");
        c.snapshot_interval = detail::num_or(jc, "snapshot_interval", c.snapshot_interval, "controls");
        try {
            validate_controls(c);
        } catch (const param_error& e) {
            throw config_error(std::string("config: ") + e.what());
        }
    }

    if (j.contains("checks")) {
        const auto& jk = j.at("checks");
        detail::reject_unknown(jk, {"run", "assert_odi", "tol_mass", "tol_bounds", "tol_vr",
                                    "tol_vr_boundary", "tol_barrier_rel", "tol_concavity_rel",
                                    "tol_slope", "tol_eps", "tol_odi_rel"},
                               "checks");
        CheckSettings& k = cfg.checks;
        if (jk.contains("run")) {
            if (!jk.at("run").is_array()) throw config_error("config: checks.run must be an array");
            for (const auto& v : jk.at("run")) k.run.push_back(v.get<std::string>());
        }
        if (jk.contains("assert_odi")) k.assert_odi = jk.at("assert_odi").get<bool>();
        k.tol_mass = detail::num_or(jk, "tol_mass", k.tol_mass, "checks");
        k.tol_bounds = detail::num_or(jk, "tol_bounds", k.tol_bounds, "checks");
        k.tol_vr = detail::num_or(jk, "tol_vr", k.tol_vr, "checks");
        k.tol_vr_boundary = detail::num_or(jk, "tol_vr_boundary", k.tol_vr_boundary, "checks");
        k.tol_barrier_rel = detail::num_or(jk, "tol_barrier_rel", k.tol_barrier_rel, "checks");
        k.tol_concavity_rel = detail::num_or(jk, "tol_concavity_rel", k.tol_concavity_rel, "checks");
        k.tol_slope = detail::num_or(jk, "tol_slope", k.tol_slope, "checks");
        k.tol_eps = detail::num_or(jk, "tol_eps", k.tol_eps, "checks");
        k.tol_odi_rel = detail::num_or(jk, "tol_odi_rel", k.tol_odi_rel, "checks");
    }

    if (j.contains("threshold")) {
        const auto& jt = j.at("threshold");
        detail::reject_unknown(jt, {"m0", "C4", "gamma", "m"}, "threshold");
        if (jt.contains("m0")) cfg.threshold.m0 = detail::num_at(jt, "m0", "threshold");
        if (jt.contains("C4")) cfg.threshold.C4 = detail::num_at(jt, "C4", "threshold");
        if (jt.contains("gamma")) cfg.threshold.gamma = detail::num_at(jt, "gamma", "threshold");
        if (jt.contains("m")) cfg.threshold.mass = detail::num_at(jt, "m", "threshold");
    }

    if (j.contains("sweep")) {
        const auto& js = j.at("sweep");
        detail::reject_unknown(js, {"axes"}, "sweep");
        if (!js.contains("axes") || !js.at("axes").is_array())
            throw config_error("config: sweep needs an 'axes' array");
        std::size_t cells = 1;
        for (const auto& ja : js.at("axes")) {
            detail::reject_unknown(ja, {"name", "values"}, "sweep axis");
            SweepAxis ax;
            ax.name = ja.at("name").get<std::string>();
            if (!ja.at("values").is_array() || ja.at("values").empty())
                throw config_error("config: sweep axis '" + ax.name + "' needs nonempty values");
            for (const auto& v : ja.at("values")) ax.values.push_back(v.get<double>());
            cells *= ax.values.size();
            cfg.sweep_axes.push_back(std::move(ax));
        }
        if (cells > 10000) throw config_error("config: sweep exceeds 10000 cells");
    }

    if (j.contains("trajectory")) cfg.trajectory_dir = j.at("trajectory").get<std::string>();
    if (j.contains("output")) cfg.output_dir = j.at("output").get<std::string>();
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw config_error("config: file does not exist: " + path.string());
    nlohmann::json j;
    try {
        auto f = detail::open_in(path);
        f >> j;
    } catch (const io_error& e) {
        throw config_error(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw config_error("config: top level must be a JSON object");
    return parse_config(j);
}

} // namespace ksflow
