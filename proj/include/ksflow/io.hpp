#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ksflow/blowup.hpp"
#include "ksflow/grid.hpp"
#include "ksflow/params.hpp"
#include "ksflow/solver.hpp"

namespace ksflow {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full-precision decimal rendering (17 significant digits round-trips a double).
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path.string());
    return f;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open for reading: " + path.string());
    return f;
}

inline std::vector<double> parse_csv_row(const std::string& line, std::size_t expect,
                                         const std::string& where) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw io_error(where + ": malformed numeric cell '" + cell + "'");
        }
    }
    if (out.size() != expect)
        throw io_error(where + ": expected " + std::to_string(expect) + " columns");
    return out;
}

} // namespace detail

inline void write_radial_csv(const std::filesystem::path& path, const RadialProfile& u) {
    auto f = detail::open_out(path);
    f << "r,u\n";
    for (std::size_t i = 0; i < u.r.size(); ++i)
        f << fmt17(u.r[i]) << ',' << fmt17(u.u[i]) << '\n';
}

inline RadialProfile read_radial_csv(const std::filesystem::path& path) {
    auto f = detail::open_in(path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("r,u", 0) != 0)
        throw io_error(path.string() + ": expected header 'r,u'");
    RadialProfile u;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto row = detail::parse_csv_row(line, 2, path.string());
        u.r.push_back(row[0]);
        u.u.push_back(row[1]);
    }
    return u;
}

inline void write_mass_csv(const std::filesystem::path& path, const MassProfile& w) {
    auto f = detail::open_out(path);
    f << "s,w,t\n";
    for (std::size_t i = 0; i < w.s.size(); ++i)
        f << fmt17(w.s[i]) << ',' << fmt17(w.w[i]) << ',' << fmt17(w.time) << '\n';
}

inline MassProfile read_mass_csv(const std::filesystem::path& path) {
    auto f = detail::open_in(path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("s,w,t", 0) != 0)
        throw io_error(path.string() + ": expected header 's,w,t'");
    MassProfile w;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto row = detail::parse_csv_row(line, 3, path.string());
        w.s.push_back(row[0]);
        w.w.push_back(row[1]);
        w.time = row[2];
    }
    return w;
}

inline nlohmann::json params_to_json(const Params& p) {
    return {{"n", p.n},       {"R", p.R},           {"beta", p.beta}, {"alpha", p.alpha},
            {"m", p.m},       {"omega_n", p.omega_n}, {"mu", p.mu}};
}

inline Params params_from_json(const nlohmann::json& j) {
    Params p;
    p.n = j.at("n").get<int>();
    p.R = j.at("R").get<double>();
    p.beta = j.at("beta").get<double>();
    p.alpha = j.at("alpha").get<double>();
    p.m = j.at("m").get<double>();
    p.omega_n = j.at("omega_n").get<double>();
    p.mu = j.at("mu").get<double>();
    return p;
}

inline nlohmann::json controls_to_json(const StepControls& c) {
    return {{"cfl", c.cfl},     {"dt_init", c.dt_init}, {"dt_min", c.dt_min},
            {"dt_max", c.dt_max}, {"u_cap", c.u_cap},     {"t_end", c.t_end},
            {"tol_mono", c.tol_mono}, {"snapshot_interval", c.snapshot_interval}};
}

inline StepControls controls_from_json(const nlohmann::json& j) {
    StepControls c;
    c.cfl = j.at("cfl").get<double>();
    c.dt_init = j.at("dt_init").get<double>();
    c.dt_min = j.at("dt_min").get<double>();
    c.dt_max = j.at("dt_max").get<double>();
    c.u_cap = j.at("u_cap").get<double>();
    c.t_end = j.at("t_end").get<double>();
    c.tol_mono = j.at("tol_mono").get<double>();
    c.snapshot_interval = j.at("snapshot_interval").get<double>();
    return c;
}

/// Trajectory directory layout: meta.json, snap_<k>.csv (s,w columns), diag.csv.
inline void store_trajectory(const std::filesystem::path& dir, const Trajectory& traj) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory: " + dir.string());

    nlohmann::json meta;
    meta["format"] = 1;
    meta["params"] = params_to_json(traj.params);
    meta["grid"] = {{"N", traj.grid.N}, {"q", traj.grid.q}, {"epsilon", traj.grid.epsilon}};
    meta["controls"] = controls_to_json(traj.controls);
    meta["termination"] = to_string(traj.termination);
    nlohmann::json times = nlohmann::json::array();
    for (const auto& snap : traj.snapshots) times.push_back(snap.time);
    meta["snapshot_times"] = times;
    {
        auto f = detail::open_out(dir / "meta.json");
        f << meta.dump(2) << '\n';
    }

    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        auto f = detail::open_out(dir / ("snap_" + std::to_string(k) + ".csv"));
        f << "s,w\n";
        const auto& snap = traj.snapshots[k];
        for (std::size_t i = 0; i < snap.s.size(); ++i)
            f << fmt17(snap.s[i]) << ',' << fmt17(snap.w[i]) << '\n';
    }

    {
        auto f = detail::open_out(dir / "diag.csv");
        f << "t,dt,sup_u,min_second_diff\n";
        for (const auto& d : traj.diagnostics)
            f << fmt17(d.t) << ',' << fmt17(d.dt) << ',' << fmt17(d.sup_u) << ','
              << fmt17(d.min_second_diff) << '\n';
    }
}

inline Trajectory load_trajectory(const std::filesystem::path& dir) {
    nlohmann::json meta;
    try {
        auto f = detail::open_in(dir / "meta.json");
        f >> meta;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(dir.string() + "/meta.json: " + e.what());
    }
    Trajectory traj;
    try {
        traj.params = params_from_json(meta.at("params"));
        traj.controls = controls_from_json(meta.at("controls"));
        const auto& jg = meta.at("grid");
        traj.grid = make_grid(traj.params, jg.at("N").get<int>(), jg.at("q").get<double>(),
                              jg.at("epsilon").get<double>());
        auto term = termination_from_string(meta.at("termination").get<std::string>());
        if (!term) throw io_error(dir.string() + ": unknown termination cause in meta.json");
        traj.termination = *term;
        const auto& times = meta.at("snapshot_times");
        for (std::size_t k = 0; k < times.size(); ++k) {
            auto snap_path = dir / ("snap_" + std::to_string(k) + ".csv");
            auto f = detail::open_in(snap_path);
            std::string line;
            if (!std::getline(f, line) || line.rfind("s,w", 0) != 0)
                throw io_error(snap_path.string() + ": expected header 's,w'");
            MassProfile snap;
            snap.time = times[k].get<double>();
            while (std::getline(f, line)) {
                if (line.empty()) continue;
                auto row = detail::parse_csv_row(line, 2, snap_path.string());
                snap.s.push_back(row[0]);
                snap.w.push_back(row[1]);
            }
            if (snap.s.size() != traj.grid.s.size())
                throw io_error(snap_path.string() + ": node count does not match the grid");
            traj.snapshots.push_back(std::move(snap));
        }
    } catch (const nlohmann::json::exception& e) {
        throw io_error(dir.string() + "/meta.json: " + e.what());
    }
    if (traj.snapshots.empty()) throw io_error(dir.string() + ": trajectory has no snapshots");

    std::error_code ec;
    if (std::filesystem::exists(dir / "diag.csv", ec)) {
        auto f = detail::open_in(dir / "diag.csv");
        std::string line;
        std::getline(f, line);
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            auto row = detail::parse_csv_row(line, 4, "diag.csv");
            traj.diagnostics.push_back({row[0], row[1], row[2], row[3]});
        }
    }
    return traj;
}

inline nlohmann::json certificate_to_json(const BlowupCertificate& cert, const Params& p) {
    nlohmann::json j;
    j["params"] = params_to_json(p);
    j["gamma"] = cert.gamma;
    j["c1"] = cert.c1;
    j["c2"] = cert.c2;
    j["c3"] = cert.c3;
    j["C4"] = cert.C4;
    j["m0"] = cert.m0;
    j["s1"] = cert.s1;
    j["s0"] = cert.s0;
    j["r0"] = cert.r0;
    j["predicate"] = cert.predicate;
    return j;
}

} // namespace ksflow
