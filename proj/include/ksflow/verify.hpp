#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ksflow/barrier.hpp"
#include "ksflow/blowup.hpp"
#include "ksflow/config.hpp"
#include "ksflow/pipeline.hpp"
#include "ksflow/solver.hpp"
#include "ksflow/transform.hpp"
#include <json.hpp>

namespace ksflow {

// One structural property of a trajectory, measured and compared against its
// tolerance.  "skipped" means the property's hypothesis does not apply (e.g.
// non-concave data for the concavity check); skipped checks never fail.
// Checks with asserted = false are informational: their status is reported but
// does not affect the overall verdict.
struct CheckResult {
    std::string name;
    std::string status = "pass"; // pass | fail | skipped
    bool asserted = true;
    double value = 0.0;
    double tolerance = 0.0;
    std::string details;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool all_passed = true;

    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline CheckResult measured(const std::string& name, double value, double tol,
                            std::string details = "") {
    CheckResult r;
    r.name = name;
    r.value = value;
    r.tolerance = tol;
    r.status = value <= tol ? "pass" : "fail";
    r.details = std::move(details);
    return r;
}

inline CheckResult skipped(const std::string& name, std::string why) {
    CheckResult r;
    r.name = name;
    r.status = "skipped";
    r.details = std::move(why);
    return r;
}

inline CheckResult check_bounds(const Trajectory& traj, const CheckSettings& cs) {
    const double wtot = traj.params.w_total();
    double worst = 0.0;
    for (const auto& snap : traj.snapshots)
        for (double wv : snap.w)
            worst = std::max({worst, -wv, wv - wtot});
    return measured("bounds", worst, cs.tol_bounds * wtot);
}

inline CheckResult check_mass(const Trajectory& traj, const CheckSettings& cs) {
    return measured("mass", mass_conservation_drift(traj.snapshots, traj.params), cs.tol_mass);
}

inline CheckResult check_vr_interior(const Trajectory& traj, const CheckSettings& cs) {
    const Params& p = traj.params;
    double worst = -std::numeric_limits<double>::infinity();
    double scale = 0.0;
    for (const auto& snap : traj.snapshots) {
        const double sup_u = p.n * sup_slope(snap);
        scale = std::max(scale, 2.0 / p.n * sup_u * p.R);
        RadialProfile v = signal_gradient(snap, p);
        for (std::size_t i = 0; i < v.r.size(); ++i)
            worst = std::max(worst, std::abs(v.u[i]) - 2.0 / p.n * sup_u * v.r[i]);
    }
    return measured("vr_interior", worst, cs.tol_vr * std::max(scale, 1e-300));
}

inline CheckResult check_vr_boundary(const Trajectory& traj, const CheckSettings& cs) {
    const Params& p = traj.params;
    double worst = 0.0;
    for (const auto& snap : traj.snapshots)
        worst = std::max(worst, std::abs(signal_gradient_at(snap, p, p.R)));
    const double scale = std::max(p.w_total() / std::pow(p.R, p.n - 1), 1e-300);
    return measured("vr_boundary", worst, cs.tol_vr_boundary * scale);
}

inline CheckResult check_barrier(const Trajectory& traj, const CheckSettings& cs) {
    try {
        BarrierCheck bc = check_linear_barrier(traj, cs.tol_barrier_rel * traj.params.w_total());
        CheckResult r = measured("barrier", bc.max_violation,
                                 cs.tol_barrier_rel * traj.params.w_total());
        char buf[96];
        std::snprintf(buf, sizeof buf, "y0=%.6g t_star=%.6g", bc.y0, bc.t_star);
        r.details = buf;
        return r;
    } catch (const param_error& e) {
        return skipped("barrier", e.what());
    }
}

inline CheckResult check_concavity_result(const Trajectory& traj, const CheckSettings& cs) {
    ConcavityCheck cc = check_concavity(traj, cs.tol_concavity_rel);
    if (!cc.hypothesis_ok) return skipped("concavity", "initial data is not concave");
    return measured("concavity", cc.max_positive_dd, cs.tol_concavity_rel * cc.scale);
}

inline CheckResult check_slope(const Trajectory& traj, const CheckSettings& cs) {
    if (!check_concavity(traj, cs.tol_concavity_rel).hypothesis_ok)
        return skipped("slope", "initial data is not concave");
    try {
        const double y0 = sup_slope(traj.initial());
        SlopeBoundCheck sb = check_slope_bound(traj, cs.tol_slope * y0);
        return measured("slope", sb.max_excess, cs.tol_slope * y0);
    } catch (const param_error& e) {
        return skipped("slope", e.what());
    }
}

inline CheckResult check_eps_monotone(const RunConfig& cfg) {
    if (cfg.eps_list.size() < 2)
        return skipped("eps_monotone", "needs an eps_list with at least two entries");
    if (!cfg.initial)
        return skipped("eps_monotone", "needs initial data to re-run the continuation");
    std::vector<double> eps = cfg.eps_list;
    std::sort(eps.begin(), eps.end(), std::greater<double>());
    if (std::adjacent_find(eps.begin(), eps.end()) != eps.end())
        throw config_error("config: eps_list entries must be distinct");
    Problem prob = build_problem(cfg);
    ContinuationResult cont =
        epsilon_continuation(prob.w0_full, prob.params, cfg.N, cfg.q, eps, cfg.controls);
    const double wtot = prob.params.w_total();
    CheckResult r = measured("eps_monotone", -cont.min_monotonicity_margin,
                             cfg.checks.tol_eps * wtot);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu runs, margin=%.3e", cont.runs.size(),
                  cont.min_monotonicity_margin);
    r.details = buf;
    return r;
}

inline CheckResult check_odi(const Trajectory& traj, const RunConfig& cfg) {
    const Params& p = traj.params;
    const double sup_u0 = p.n * sup_slope(traj.initial());
    BlowupCertificate cert = build_certificate(cfg, p, sup_u0);
    const bool concentrated = check_concentration(traj.initial(), cert, p);
    OdiSeries series = odi_residual(traj, cert);
    const double scale = std::max(series.y0, 1e-300);
    CheckResult r = measured("odi", -series.min_residual, cfg.checks.tol_odi_rel * scale);
    r.asserted = cfg.checks.assert_odi;
    char buf[128];
    std::snprintf(buf, sizeof buf, "y0=%.6g s1=%.6g concentrated=%s", series.y0, cert.s1,
                  concentrated ? "yes" : "no");
    r.details = buf;
    return r;
}

} // namespace detail

// Run the requested checks (or the default roster) against a trajectory.
// The config supplies tolerances, threshold inputs, and -- for the epsilon
// continuation -- the means to rebuild the initial data.
inline VerifyReport run_checks(const Trajectory& traj, const RunConfig& cfg) {
    static const std::vector<std::string> known = {
        "bounds", "mass",  "vr_interior",  "vr_boundary", "barrier",
        "concavity", "slope", "eps_monotone", "odi"};
    std::vector<std::string> roster = cfg.checks.run;
    if (roster.empty()) {
        roster = {"bounds", "mass", "vr_interior", "vr_boundary",
                  "barrier", "concavity", "slope", "odi"};
        if (cfg.eps_list.size() >= 2) roster.push_back("eps_monotone");
    } else {
        for (const auto& name : roster)
            if (std::find(known.begin(), known.end(), name) == known.end())
                throw config_error("config: unknown check '" + name + "'");
    }

    VerifyReport report;
    const CheckSettings& cs = cfg.checks;
    for (const auto& name : roster) {
        CheckResult r;
        if (name == "bounds") r = detail::check_bounds(traj, cs);
        else if (name == "mass") r = detail::check_mass(traj, cs);
        else if (name == "vr_interior") r = detail::check_vr_interior(traj, cs);
        else if (name == "vr_boundary") r = detail::check_vr_boundary(traj, cs);
        else if (name == "barrier") r = detail::check_barrier(traj, cs);
        else if (name == "concavity") r = detail::check_concavity_result(traj, cs);
        else if (name == "slope") r = detail::check_slope(traj, cs);
        else if (name == "eps_monotone") r = detail::check_eps_monotone(cfg);
        else r = detail::check_odi(traj, cfg);
        if (r.asserted && r.status == "fail") report.all_passed = false;
        report.checks.push_back(std::move(r));
    }
    return report;
}

inline nlohmann::json report_to_json(const VerifyReport& report) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"name", c.name},
                          {"status", c.status},
                          {"asserted", c.asserted},
                          {"value", c.value},
                          {"tolerance", c.tolerance},
                          {"details", c.details}});
    }
    return {{"all_passed", report.all_passed}, {"checks", checks}};
}

} // namespace ksflow
