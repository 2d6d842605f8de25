#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ksflow/params.hpp"
#include "ksflow/solver.hpp"

namespace ksflow {

// Comparison-principle certifier for operators of the form
//
//   w_t ~ a s^theta w_ss + b s^gamma w w_s^alpha + c s^delta w_s^alpha + d w_s^alpha
//
// with a, b, gamma, delta >= 0, alpha > 0 and theta, c, d unrestricted.  Given
// a claimed subsolution (lower) and supersolution (upper), the checker
// certifies the hypotheses (signed residuals, initial and boundary ordering,
// bounded slopes) on a common probe lattice and, if they hold, asserts the
// interior ordering lower <= upper up to tolerance.

struct OperatorCoeffs {
    double a = 0.0, theta = 0.0;
    double b = 0.0, gamma = 0.0;
    double c = 0.0, delta = 0.0;
    double d = 0.0;
    double alpha = 1.0;
};

// The transformed system's own operator on [eps, R^n]: the transport factor
// -(s - eps) splits into c s^delta + d with c = -n^{alpha-1} mu, delta = 1,
// d = n^{alpha-1} mu eps.
inline OperatorCoeffs transformed_operator_coeffs(const Params& p, double epsilon) {
    OperatorCoeffs k;
    k.a = double(p.n) * p.n;
    k.theta = (2.0 * p.n - 2.0 + p.beta) / p.n;
    k.b = std::pow(double(p.n), p.alpha);
    k.gamma = 0.0;
    k.c = -std::pow(double(p.n), p.alpha - 1.0) * p.mu;
    k.delta = 1.0;
    k.d = std::pow(double(p.n), p.alpha - 1.0) * p.mu * epsilon;
    k.alpha = p.alpha;
    return k;
}

inline void validate_coeffs(const OperatorCoeffs& k) {
    if (k.a < 0.0 || k.b < 0.0 || k.gamma < 0.0 || k.delta < 0.0)
        throw param_error("comparison: coefficients a, b, gamma, delta must be nonnegative");
    if (!(k.alpha > 0.0)) throw param_error("comparison: alpha must be positive");
}

struct ComparisonReport {
    OperatorCoeffs coeffs;
    std::size_t probe_nodes = 0;
    std::size_t probe_times = 0;
    double initial_margin = 0.0;      // max (lower - upper) at the first common time
    double boundary_margin = 0.0;     // max (lower - upper) at the lattice ends over time
    double residual_lower_max = 0.0;  // subsolution residual: want <= tol
    double residual_upper_min = 0.0;  // supersolution residual: want >= -tol
    double slope_sup_lower = 0.0;
    double slope_sup_upper = 0.0;
    bool hypotheses_ok = false;
    std::vector<std::string> failed_hypotheses;
    double max_order_violation = 0.0; // max (lower - upper) over the whole lattice
    double min_order_margin = 0.0;    // min (upper - lower); = -max_order_violation
    bool ordered = false;             // asserted only when the hypotheses hold
};

namespace detail {

struct LatticeSlice {
    std::vector<double> w; // values on the probe nodes at one time
};

inline std::vector<LatticeSlice> interp_onto(const Trajectory& tr, const std::vector<double>& probes,
                                             const std::vector<double>& times) {
    std::vector<LatticeSlice> out;
    out.reserve(times.size());
    for (double tm : times) {
        const MassProfile* found = nullptr;
        for (const auto& snap : tr.snapshots)
            if (std::abs(snap.time - tm) <= 1e-12 * std::max(1.0, tm)) {
                found = &snap;
                break;
            }
        if (!found) throw param_error("comparison: snapshot times do not align");
        LatticeSlice sl;
        sl.w.resize(probes.size());
        for (std::size_t i = 0; i < probes.size(); ++i) sl.w[i] = eval(*found, probes[i]);
        out.push_back(std::move(sl));
    }
    return out;
}

inline double apply_operator(const OperatorCoeffs& k, const std::vector<double>& s,
                             const std::vector<double>& w, std::size_t i) {
    const double dd = second_difference(s, w, i);
    const double sl = central_slope(s, w, i);
    const double slp = std::pow(std::max(sl, 0.0), k.alpha);
    double v = k.a * std::pow(s[i], k.theta) * dd;
    v += k.b * std::pow(s[i], k.gamma) * w[i] * slp;
    v += k.c * std::pow(s[i], k.delta) * slp;
    v += k.d * slp;
    return v;
}

} // namespace detail

inline ComparisonReport verify_comparison(const Trajectory& lower, const Trajectory& upper,
                                          const OperatorCoeffs& k, double tol_residual,
                                          double tol_order) {
    validate_coeffs(k);
    ComparisonReport rep;
    rep.coeffs = k;

    // probe lattice: nodes of the coarser trajectory, snapshot times shared by both
    const std::vector<double>& probes =
        (lower.grid.s.size() <= upper.grid.s.size()) ? lower.grid.s : upper.grid.s;
    std::vector<double> times;
    for (const auto& snap : lower.snapshots)
        for (const auto& other : upper.snapshots)
            if (std::abs(snap.time - other.time) <= 1e-12 * std::max(1.0, snap.time)) {
                times.push_back(snap.time);
                break;
            }
    if (times.size() < 2) throw param_error("comparison: need at least two common snapshot times");

    auto lo = detail::interp_onto(lower, probes, times);
    auto up = detail::interp_onto(upper, probes, times);
    rep.probe_nodes = probes.size();
    rep.probe_times = times.size();

    const std::size_t N = probes.size();
    const std::size_t K = times.size();

    rep.initial_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i)
        rep.initial_margin = std::max(rep.initial_margin, lo[0].w[i] - up[0].w[i]);

    rep.boundary_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t kk = 0; kk < K; ++kk) {
        rep.boundary_margin = std::max(rep.boundary_margin, lo[kk].w[0] - up[kk].w[0]);
        rep.boundary_margin = std::max(rep.boundary_margin, lo[kk].w[N - 1] - up[kk].w[N - 1]);
    }

    auto slope_sup = [&](const std::vector<detail::LatticeSlice>& sl) {
        double best = 0.0;
        for (const auto& slice : sl)
            for (std::size_t i = 0; i + 1 < N; ++i)
                best = std::max(best, std::abs(slice.w[i + 1] - slice.w[i]) / (probes[i + 1] - probes[i]));
        return best;
    };
    rep.slope_sup_lower = slope_sup(lo);
    rep.slope_sup_upper = slope_sup(up);

    // signed residuals w_t - L[w] at interior probes: difference quotient over
    // each snapshot interval against the trapezoidal average of the operator at
    // its endpoints (second order in the interval, so the residual reflects the
    // inputs rather than the estimator)
    double res_lo = -std::numeric_limits<double>::infinity();
    double res_up = std::numeric_limits<double>::infinity();
    for (std::size_t kk = 0; kk + 1 < K; ++kk) {
        const double dt = times[kk + 1] - times[kk];
        for (std::size_t i = 1; i + 1 < N; ++i) {
            const double wt_lo = (lo[kk + 1].w[i] - lo[kk].w[i]) / dt;
            const double wt_up = (up[kk + 1].w[i] - up[kk].w[i]) / dt;
            const double L_lo = 0.5 * (detail::apply_operator(k, probes, lo[kk].w, i) +
                                       detail::apply_operator(k, probes, lo[kk + 1].w, i));
            const double L_up = 0.5 * (detail::apply_operator(k, probes, up[kk].w, i) +
                                       detail::apply_operator(k, probes, up[kk + 1].w, i));
            res_lo = std::max(res_lo, wt_lo - L_lo);
            res_up = std::min(res_up, wt_up - L_up);
        }
    }
    rep.residual_lower_max = res_lo;
    rep.residual_upper_min = res_up;

    rep.failed_hypotheses.clear();
    if (rep.initial_margin > tol_order) rep.failed_hypotheses.push_back("initial_ordering");
    if (rep.boundary_margin > tol_order) rep.failed_hypotheses.push_back("boundary_ordering");
    if (rep.residual_lower_max > tol_residual) rep.failed_hypotheses.push_back("subsolution_residual");
    if (rep.residual_upper_min < -tol_residual) rep.failed_hypotheses.push_back("supersolution_residual");
    if (!std::isfinite(rep.slope_sup_lower) || !std::isfinite(rep.slope_sup_upper))
        rep.failed_hypotheses.push_back("slope_bound");
    rep.hypotheses_ok = rep.failed_hypotheses.empty();

    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t kk = 0; kk < K; ++kk)
        for (std::size_t i = 0; i < N; ++i)
            worst = std::max(worst, lo[kk].w[i] - up[kk].w[i]);
    rep.max_order_violation = worst;
    rep.min_order_margin = -worst;
    rep.ordered = rep.hypotheses_ok && worst <= tol_order;
    return rep;
}

} // namespace ksflow
