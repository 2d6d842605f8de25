#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ksflow/params.hpp"
#include "ksflow/solver.hpp"

namespace ksflow {

// Slope barrier: y' = n^alpha y^{alpha+1}, y(0) = y0 = sup w0_s.  Closed form
//   y(t) = y0 (1 - alpha n^alpha y0^alpha t)^{-1/alpha},
// which blows up at t_star = 1 / (alpha n^alpha y0^alpha).  While it lives,
// w(s, t) <= y(t) s and sup w_s <= y(t) for concave data.

inline double barrier_blowup_time(const Params& p, double y0) {
    if (!(y0 > 0.0)) throw param_error("barrier: y0 must be positive");
    return 1.0 / (p.alpha * std::pow(double(p.n), p.alpha) * std::pow(y0, p.alpha));
}

inline double barrier_value(const Params& p, double y0, double t) {
    if (!(y0 > 0.0)) throw param_error("barrier: y0 must be positive");
    if (t < 0.0) throw param_error("barrier: t must be nonnegative");
    const double denom = 1.0 - p.alpha * std::pow(double(p.n), p.alpha) * std::pow(y0, p.alpha) * t;
    if (!(denom > 0.0)) throw param_error("barrier: t is at or past the blow-up time");
    return y0 * std::pow(denom, -1.0 / p.alpha);
}

struct BarrierCheck {
    double y0 = 0.0;
    double t_star = 0.0;
    double max_violation = 0.0; // max over snapshots/nodes of w - y(t) s
    bool ok = false;
};

// Certify w(s, t) <= y(t) s along a trajectory, with y0 taken from the
// trajectory's own initial slope.  All snapshots must predate t_star.
inline BarrierCheck check_linear_barrier(const Trajectory& traj, double tol) {
    BarrierCheck out;
    out.y0 = sup_slope(traj.initial());
    out.t_star = barrier_blowup_time(traj.params, out.y0);
    if (traj.snapshots.back().time >= out.t_star)
        throw param_error("barrier check: trajectory extends to or past t_star");
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& snap : traj.snapshots) {
        const double y = barrier_value(traj.params, out.y0, snap.time);
        for (std::size_t i = 0; i < snap.s.size(); ++i)
            worst = std::max(worst, snap.w[i] - y * snap.s[i]);
    }
    out.max_violation = worst;
    out.ok = worst <= tol;
    return out;
}

struct ConcavityCheck {
    bool hypothesis_ok = false;  // initial profile concave within tol
    double max_positive_dd = 0.0; // worst (most positive) second difference over all times
    double scale = 0.0;           // curvature scale used to normalize tolerances
    bool ok = false;
};

// Concavity preservation: concave initial data keeps w_ss <= 0 (up to tol).
// If the initial profile is not concave the hypothesis fails and the result is
// reported without asserting.
inline ConcavityCheck check_concavity(const Trajectory& traj, double rel_tol) {
    ConcavityCheck out;
    const MassProfile& w0 = traj.initial();
    double dd0_min = 0.0, dd0_max = 0.0;
    for (std::size_t i = 1; i + 1 < w0.s.size(); ++i) {
        const double dd = second_difference(w0.s, w0.w, i);
        dd0_min = std::min(dd0_min, dd);
        dd0_max = std::max(dd0_max, dd);
    }
    const double wtot = traj.params.w_total();
    const double Rn = traj.params.Rn();
    out.scale = std::max(std::abs(dd0_min), wtot / (Rn * Rn));
    out.hypothesis_ok = dd0_max <= rel_tol * out.scale;

    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& snap : traj.snapshots)
        for (std::size_t i = 1; i + 1 < snap.s.size(); ++i)
            worst = std::max(worst, second_difference(snap.s, snap.w, i));
    out.max_positive_dd = worst;
    out.ok = out.hypothesis_ok && worst <= rel_tol * out.scale;
    return out;
}

struct SlopeBoundCheck {
    bool hypothesis_ok = false; // needs concave data; sup w_s then sits at the left end
    double max_excess = 0.0;    // max over snapshots of sup w_s - y(t)
    bool ok = false;
};

// Slope bound via the barrier ODE: for concave data, sup w_s(., t) <= y(t).
inline SlopeBoundCheck check_slope_bound(const Trajectory& traj, double tol) {
    SlopeBoundCheck out;
    out.hypothesis_ok = check_concavity(traj, 1e-7).hypothesis_ok;
    const double y0 = sup_slope(traj.initial());
    const double t_star = barrier_blowup_time(traj.params, y0);
    if (traj.snapshots.back().time >= t_star)
        throw param_error("slope bound: trajectory extends to or past t_star");
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& snap : traj.snapshots) {
        const double y = barrier_value(traj.params, y0, snap.time);
        worst = std::max(worst, sup_slope(snap) - y);
    }
    out.max_excess = worst;
    out.ok = out.hypothesis_ok && worst <= tol;
    return out;
}

// Synthesize the moving linear supersolution y(t) s on the grid and snapshot
// times of a base trajectory (for comparison certification and tests).
inline Trajectory make_barrier_trajectory(const Trajectory& base) {
    const double y0 = sup_slope(base.initial());
    const double t_star = barrier_blowup_time(base.params, y0);
    if (base.snapshots.back().time >= t_star)
        throw param_error("barrier trajectory: base extends to or past t_star");
    Trajectory out;
    out.params = base.params;
    out.grid = base.grid;
    out.controls = base.controls;
    out.termination = Termination::horizon_reached;
    for (const auto& snap : base.snapshots) {
        const double y = barrier_value(base.params, y0, snap.time);
        MassProfile b;
        b.s = snap.s;
        b.time = snap.time;
        b.w.resize(snap.s.size());
        for (std::size_t i = 0; i < snap.s.size(); ++i) b.w[i] = y * snap.s[i];
        out.snapshots.push_back(std::move(b));
    }
    return out;
}

} // namespace ksflow
