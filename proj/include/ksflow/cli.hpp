#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "ksflow/blowup.hpp"
#include "ksflow/config.hpp"
#include "ksflow/io.hpp"
#include "ksflow/pipeline.hpp"
#include "ksflow/solver.hpp"
#include "ksflow/sweep.hpp"
#include "ksflow/verify.hpp"

namespace ksflow {
namespace cli {

// Exit codes.  Simulation outcomes get dedicated codes so sweep drivers and
// shell scripts can branch on them without parsing output.
constexpr int exit_ok = 0;
constexpr int exit_checks_failed = 1;
constexpr int exit_config = 2;
constexpr int exit_io = 3;
constexpr int exit_blowup = 10;
constexpr int exit_step_collapse = 11;
constexpr int exit_monotonicity = 12;

inline int termination_code(Termination t) {
    switch (t) {
        case Termination::horizon_reached: return exit_ok;
        case Termination::blowup_declared: return exit_blowup;
        case Termination::step_collapse: return exit_step_collapse;
        case Termination::monotonicity_failure: return exit_monotonicity;
    }
    return exit_io;
}

// Worker count: explicit flag wins, then KSFLOW_WORKERS, then 1.
inline int resolve_workers(std::optional<int> flag) {
    if (flag) {
        if (*flag < 1) throw config_error("config: --workers must be >= 1");
        return *flag;
    }
    if (const char* env = std::getenv("KSFLOW_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw config_error("config: KSFLOW_WORKERS must be a positive integer");
        return static_cast<int>(v);
    }
    return 1;
}

inline RunConfig load_run_config(const std::string& config_path,
                                 const std::optional<std::string>& out_override) {
    RunConfig cfg = load_config(config_path);
    if (out_override) cfg.output_dir = *out_override;
    return cfg;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw io_error("write failed: " + path.string());
}

inline int run_simulate(const std::string& config_path,
                        const std::optional<std::string>& out_override) {
    RunConfig cfg = load_run_config(config_path, out_override);
    Problem prob = build_problem(cfg);
    Trajectory traj = simulate(prob.w0, prob.grid, prob.params, cfg.controls);
    if (cfg.output_dir) store_trajectory(*cfg.output_dir, traj);

    const MassProfile& fin = traj.final_state();
    std::cout << "termination: " << to_string(traj.termination) << "\n"
              << "t_final: " << fmt17(fin.time) << "\n"
              << "steps: " << traj.diagnostics.size() << "\n"
              << "sup_u_final: " << fmt17(prob.params.n * sup_slope(fin)) << "\n";
    if (cfg.output_dir) std::cout << "trajectory: " << *cfg.output_dir << "\n";
    return termination_code(traj.termination);
}

inline int run_threshold(const std::string& config_path,
                         const std::optional<std::string>& out_override) {
    RunConfig cfg = load_run_config(config_path, out_override);

    nlohmann::json j;
    BlowupCertificate cert;
    Params p;
    if (cfg.initial) {
        Problem prob = build_problem(cfg);
        p = prob.params;
        const double sup_u0 = p.n * sup_slope(prob.w0_full);
        cert = build_certificate(cfg, p, sup_u0);
        j = certificate_to_json(cert, p);
        j["concentrated"] = check_concentration(prob.w0_full, cert, p);
        const double y0 = moment(prob.w0_full, cert.gamma, cert.s1);
        j["y0"] = y0;
        RiccatiResult ric = certificate_blowup_time(p, cert, y0);
        j["riccati"] = {{"A", ric.A},
                        {"B", ric.B},
                        {"C", ric.C},
                        {"y_plus", ric.y_plus},
                        {"y_minus", ric.y_minus},
                        {"supercritical", ric.supercritical}};
        if (ric.supercritical) j["riccati"]["T"] = ric.T;
    } else {
        if (!cfg.threshold.mass)
            throw config_error("config: threshold needs initial_data or threshold.mass");
        p = build_params(cfg.n, cfg.R, cfg.beta, cfg.alpha, *cfg.threshold.mass);
        if (p.alpha > 1.0 && !cfg.threshold.C4)
            throw config_error("config: threshold.C4 is required when alpha > 1 "
                               "and no initial data is given");
        cert = build_certificate(cfg, p, 0.0);
        j = certificate_to_json(cert, p);
    }

    if (cfg.output_dir) {
        const std::filesystem::path path =
            std::filesystem::path(*cfg.output_dir) / "certificate.json";
        std::error_code ec;
        std::filesystem::create_directories(*cfg.output_dir, ec);
        if (ec) throw io_error("cannot create directory: " + *cfg.output_dir);
        write_json_file(path, j);
        std::cout << "certificate: " << path.string() << "\n";
    } else {
        std::cout << j.dump(2) << "\n";
    }
    return exit_ok;
}

inline int run_verify(const std::string& config_path,
                      const std::optional<std::string>& out_override) {
    RunConfig cfg = load_run_config(config_path, out_override);

    Trajectory traj;
    if (cfg.trajectory_dir) {
        traj = load_trajectory(*cfg.trajectory_dir);
    } else {
        Problem prob = build_problem(cfg);
        traj = simulate(prob.w0, prob.grid, prob.params, cfg.controls);
    }

    VerifyReport report = run_checks(traj, cfg);
    for (const auto& c : report.checks) {
        std::cout << "check " << c.name << ": " << c.status;
        if (c.status != "skipped")
            std::cout << " (value=" << fmt17(c.value) << ", tol=" << fmt17(c.tolerance)
                      << (c.asserted ? "" : ", informational") << ")";
        if (!c.details.empty()) std::cout << " -- " << c.details;
        std::cout << "\n";
    }
    std::cout << (report.all_passed ? "all checks passed" : "checks FAILED") << "\n";

    if (cfg.output_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*cfg.output_dir, ec);
        if (ec) throw io_error("cannot create directory: " + *cfg.output_dir);
        write_json_file(std::filesystem::path(*cfg.output_dir) / "verify.json",
                        report_to_json(report));
    }
    return report.all_passed ? exit_ok : exit_checks_failed;
}

inline int run_sweep_cmd(const std::string& config_path,
                         const std::optional<std::string>& out_override,
                         std::optional<int> workers_flag) {
    RunConfig cfg = load_run_config(config_path, out_override);
    const int workers = resolve_workers(workers_flag);
    SweepResult result = run_sweep(cfg, workers);

    std::map<std::string, int> counts;
    for (const auto& row : result.rows) ++counts[row.outcome];

    if (cfg.output_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*cfg.output_dir, ec);
        if (ec) throw io_error("cannot create directory: " + *cfg.output_dir);
        const std::filesystem::path path = std::filesystem::path(*cfg.output_dir) / "sweep.csv";
        write_sweep_csv(path.string(), result);
        std::cout << "cells: " << result.rows.size() << "\n";
        for (const auto& [name, k] : counts) std::cout << name << ": " << k << "\n";
        std::cout << "sweep: " << path.string() << "\n";
    } else {
        write_sweep_csv(std::cout, result);
        std::cerr << "cells: " << result.rows.size() << "\n";
        for (const auto& [name, k] : counts) std::cerr << name << ": " << k << "\n";
    }
    return exit_ok;
}

// Translate exceptions into exit codes: configuration and parameter problems
// are exit 2, I/O problems exit 3.
template <typename Fn>
inline int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const param_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return exit_config;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_io;
    }
}

} // namespace cli
} // namespace ksflow
