#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ksflow/grid.hpp"
#include "ksflow/params.hpp"
#include "ksflow/transform.hpp"

namespace ksflow {

// IMEX scheme for the transformed equation on [eps, R^n]:
//
//   w_t = n^2 s^{(2n-2+beta)/n} w_ss + n^alpha w w_s^alpha - n^{alpha-1} mu (s - eps) w_s^alpha
//   w(eps, t) = 0,  w(R^n, t) = m / omega_n
//
// Diffusion is implicit (nonuniform three-point stencil, tridiagonal solve);
// the aggregation/transport terms are explicit with the one-sided slope picked
// by the sign of sigma = n^alpha w - n^{alpha-1} mu (s - eps).

struct step_error : std::runtime_error {
    enum class Kind { monotonicity, singular_solve };
    Kind kind;
    step_error(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
};

struct StepControls {
    double cfl = 0.4;
    double dt_init = 1e-4;
    double dt_min = 1e-13;
    double dt_max = 1e-2;
    double u_cap = 1e8;              // declare blow-up when n * sup w_s reaches this
    double t_end = 1.0;
    // Tolerated monotonicity defect max(w_i - w_{i+1}), relative to max(1, m/omega_n).
    // Measured on values, not slopes: on strongly graded meshes a single ulp of w
    // over a ~1e-8 cell already reads as a slope of ~1e-7.
    double tol_mono = 1e-10;
    double snapshot_interval = 0.0;  // 0: auto (t_end / 200); < 0: every accepted step
};

inline void validate_controls(const StepControls& c) {
    if (!(c.cfl > 0.0 && c.cfl <= 1.0)) throw param_error("controls: cfl must lie in (0, 1]");
    if (!(c.dt_min > 0.0 && c.dt_min < c.dt_init && c.dt_init <= c.dt_max))
        throw param_error("controls: need 0 < dt_min < dt_init <= dt_max");
    if (!(c.u_cap > 0.0)) throw param_error("controls: u_cap must be positive");
    if (c.t_end < 0.0) throw param_error("controls: t_end must be nonnegative");
    if (!(c.tol_mono >= 0.0)) throw param_error("controls: tol_mono must be nonnegative");
}

enum class Termination { horizon_reached, blowup_declared, step_collapse, monotonicity_failure };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::horizon_reached: return "horizon_reached";
        case Termination::blowup_declared: return "blowup_declared";
        case Termination::step_collapse: return "step_collapse";
        case Termination::monotonicity_failure: return "monotonicity_failure";
    }
    return "unknown";
}

inline std::optional<Termination> termination_from_string(const std::string& s) {
    if (s == "horizon_reached") return Termination::horizon_reached;
    if (s == "blowup_declared") return Termination::blowup_declared;
    if (s == "step_collapse") return Termination::step_collapse;
    if (s == "monotonicity_failure") return Termination::monotonicity_failure;
    return std::nullopt;
}

struct StepDiagnostics {
    double t = 0.0;
    double dt = 0.0;
    double sup_u = 0.0;           // n * sup w_s over cells
    double min_second_diff = 0.0; // most negative nonuniform second difference
};

struct Trajectory {
    Params params;
    Grid grid;
    StepControls controls;
    std::vector<MassProfile> snapshots;
    std::vector<StepDiagnostics> diagnostics;
    Termination termination = Termination::horizon_reached;

    const MassProfile& initial() const { return snapshots.front(); }
    const MassProfile& final_state() const { return snapshots.back(); }
};

/// Initial data for the eps-regularized problem: pull w0 (given on [0, R^n])
// back through the affine map that sends [eps, R^n] onto [0, R^n].
inline MassProfile rescale_initial(const MassProfile& w0, const Grid& g, const Params& p) {
    const double Rn = p.Rn();
    if (std::abs(w0.s.front()) > 1e-12 * Rn || std::abs(w0.s.back() - Rn) > 1e-9 * Rn)
        throw param_error("rescale: w0 must be given on [0, R^n]");
    MassProfile out;
    out.s = g.s;
    out.w.resize(g.s.size());
    out.time = 0.0;
    const double stretch = Rn / (Rn - g.epsilon);
    for (std::size_t i = 0; i < g.s.size(); ++i)
        out.w[i] = eval(w0, (g.s[i] - g.epsilon) * stretch);
    out.w.front() = 0.0;
    out.w.back() = w0.w.back();
    return out;
}

namespace detail {

inline bool integer_alpha(double alpha) { return std::abs(alpha - std::round(alpha)) < 1e-12; }

// w_s^alpha with the clamping rule: fractional alpha cannot take a negative
// base, so a negative upwind slope is clamped to zero when the value drop it
// represents is within tolerance, and is a hard monotonicity failure beyond it.
inline double slope_power(double slope, double drop, double alpha, bool int_alpha,
                          double tol_value) {
    if (!int_alpha && slope < 0.0) {
        if (drop > tol_value)
            throw step_error(step_error::Kind::monotonicity,
                             "fractional-power transport hit a negative slope beyond tol_mono");
        slope = 0.0;
    }
    return std::pow(slope, alpha);
}

// Explicit aggregation/transport term at interior node i, with upwind slope.
inline double transport_term(const std::vector<double>& s, const std::vector<double>& w,
                             std::size_t i, const Params& p, double eps,
                             double n_pow_a, double n_pow_am1, bool int_alpha, double tol_value) {
    const double sigma = n_pow_a * w[i] - n_pow_am1 * p.mu * (s[i] - eps);
    const std::size_t up = (sigma > 0.0) ? i + 1 : i;
    const double slope = (w[up] - w[up - 1]) / (s[up] - s[up - 1]);
    return sigma * slope_power(slope, w[up - 1] - w[up], p.alpha, int_alpha, tol_value);
}

inline void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag,
                              std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t k = diag.size();
    for (std::size_t i = 1; i < k; ++i) {
        if (std::abs(diag[i - 1]) < 1e-300)
            throw step_error(step_error::Kind::singular_solve, "tridiagonal solve: vanishing pivot");
        const double f = lower[i] / diag[i - 1];
        diag[i] -= f * upper[i - 1];
        rhs[i] -= f * rhs[i - 1];
    }
    if (std::abs(diag[k - 1]) < 1e-300)
        throw step_error(step_error::Kind::singular_solve, "tridiagonal solve: vanishing pivot");
    rhs[k - 1] /= diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;)
        rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

} // namespace detail

// One IMEX step of size dt.  Boundary values are carried over unchanged.
// `with_transport = false` runs the implicit diffusion alone (test hook).
inline std::vector<double> step(const std::vector<double>& w, const Grid& g, const Params& p,
                                double dt, double tol_mono, bool with_transport = true) {
    const std::size_t N = g.s.size();
    if (w.size() != N) throw param_error("step: state size does not match grid");
    if (!(dt > 0.0)) throw param_error("step: dt must be positive");

    const double kappa = (2.0 * p.n - 2.0 + p.beta) / p.n;
    const double n_pow_a = std::pow(double(p.n), p.alpha);
    const double n_pow_am1 = std::pow(double(p.n), p.alpha - 1.0);
    const bool int_alpha = detail::integer_alpha(p.alpha);
    const double tol_value = tol_mono * std::max(1.0, p.w_total());

    const std::size_t k = N - 2; // interior unknowns
    std::vector<double> lower(k, 0.0), diag(k, 0.0), upper(k, 0.0), rhs(k, 0.0);

    for (std::size_t i = 1; i + 1 < N; ++i) {
        const double hm = g.s[i] - g.s[i - 1];
        const double hp = g.s[i + 1] - g.s[i];
        const double D = p.n * p.n * std::pow(g.s[i], kappa);
        const double cm = dt * D * 2.0 / (hm * (hm + hp));
        const double cp = dt * D * 2.0 / (hp * (hm + hp));
        const std::size_t j = i - 1;
        lower[j] = -cm;
        diag[j] = 1.0 + cm + cp;
        upper[j] = -cp;
        double F = 0.0;
        if (with_transport)
            F = detail::transport_term(g.s, w, i, p, g.epsilon, n_pow_a, n_pow_am1, int_alpha,
                                       tol_value);
        rhs[j] = w[i] + dt * F;
    }
    rhs[0] += dt * p.n * p.n * std::pow(g.s[1], kappa) * 2.0 /
              ((g.s[1] - g.s[0]) * (g.s[2] - g.s[0])) * w[0];
    rhs[k - 1] += dt * p.n * p.n * std::pow(g.s[N - 2], kappa) * 2.0 /
                  ((g.s[N - 1] - g.s[N - 2]) * (g.s[N - 1] - g.s[N - 3])) * w[N - 1];

    detail::solve_tridiagonal(lower, diag, upper, rhs);

    std::vector<double> out(N);
    out[0] = w[0];
    out[N - 1] = w[N - 1];
    for (std::size_t i = 0; i < k; ++i) out[i + 1] = rhs[i];
    return out;
}

// Local wave speed |sigma| * alpha * w_s^{alpha-1} of the explicit term,
// maximized over interior nodes; used by the CFL-style dt selection.
inline double max_wave_speed(const std::vector<double>& w, const Grid& g, const Params& p) {
    const double n_pow_a = std::pow(double(p.n), p.alpha);
    const double n_pow_am1 = std::pow(double(p.n), p.alpha - 1.0);
    double speed = 0.0;
    for (std::size_t i = 1; i + 1 < g.s.size(); ++i) {
        const double sigma = n_pow_a * w[i] - n_pow_am1 * p.mu * (g.s[i] - g.epsilon);
        const double slope = (sigma > 0.0) ? (w[i + 1] - w[i]) / (g.s[i + 1] - g.s[i])
                                           : (w[i] - w[i - 1]) / (g.s[i] - g.s[i - 1]);
        const double grad = std::pow(std::max(slope, 0.0), p.alpha - 1.0);
        speed = std::max(speed, std::abs(sigma) * p.alpha * grad);
    }
    return speed;
}

namespace detail {

struct StateScan {
    double sup_u;
    double min_dd;
    double max_drop; // worst per-cell value decrease w_i - w_{i+1} (monotonicity defect)
    double min_w, max_w;
};

inline StateScan scan_state(const std::vector<double>& w, const Grid& g, const Params& p) {
    StateScan sc{};
    sc.max_drop = -std::numeric_limits<double>::infinity();
    sc.min_dd = std::numeric_limits<double>::infinity();
    sc.min_w = std::numeric_limits<double>::infinity();
    sc.max_w = -std::numeric_limits<double>::infinity();
    double max_slope = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        const double sl = (w[i + 1] - w[i]) / (g.s[i + 1] - g.s[i]);
        max_slope = std::max(max_slope, sl);
        sc.max_drop = std::max(sc.max_drop, w[i] - w[i + 1]);
    }
    for (std::size_t i = 1; i + 1 < w.size(); ++i)
        sc.min_dd = std::min(sc.min_dd, second_difference(g.s, w, i));
    for (double v : w) {
        sc.min_w = std::min(sc.min_w, v);
        sc.max_w = std::max(sc.max_w, v);
    }
    sc.sup_u = p.n * max_slope;
    return sc;
}

} // namespace detail

// Advance w0 (already on the grid) until t_end, blow-up declaration, or step
// collapse.  dt adapts to the explicit term's wave speed; a step is rejected
// (and dt halved) if the update leaves [0, m/omega_n] beyond slack or breaks
// monotonicity beyond tol_mono.  Snapshots land on exact multiples of the
// snapshot interval; the final accepted state is always stored.
inline Trajectory simulate(const MassProfile& w0, const Grid& g, const Params& p,
                           const StepControls& c) {
    validate_controls(c);
    if (w0.s.size() != g.s.size()) throw param_error("simulate: w0 does not live on the grid");
    const double wtot = p.w_total();
    const double wscale = std::max(1.0, wtot);
    if (std::abs(w0.w.front()) > 1e-9 * wscale || std::abs(w0.w.back() - wtot) > 1e-9 * wscale)
        throw param_error("simulate: w0 must satisfy the boundary values 0 and m/omega_n");

    Trajectory traj;
    traj.params = p;
    traj.grid = g;
    traj.controls = c;

    double snap_every = c.snapshot_interval;
    if (snap_every == 0.0) snap_every = c.t_end / 200.0;

    std::vector<double> w = w0.w;
    double t = 0.0;
    auto push_snapshot = [&](double at) {
        if (!traj.snapshots.empty() && traj.snapshots.back().time >= at) return;
        traj.snapshots.push_back(MassProfile{g.s, w, at});
    };
    traj.snapshots.push_back(MassProfile{g.s, w, 0.0});

    const double min_ds = g.min_spacing();
    const double bound_slack = 1e-12 * wscale;
    // dt ceiling from rejections: halves on a rejected step, relaxes on accepts
    double cap = c.dt_init;
    long next_snap = 1;
    Termination verdict = Termination::horizon_reached;
    bool done = (c.t_end <= 0.0);

    while (!done) {
        const double speed = max_wave_speed(w, g, p);
        const double dt_cfl = (speed > 0.0) ? c.cfl * min_ds / speed : c.dt_max;
        double dt = std::max(std::min({dt_cfl, c.dt_max, cap}), c.dt_min);

        // land exactly on the next snapshot time / horizon
        double target = c.t_end;
        bool snap_here = false;
        if (snap_every > 0.0 && next_snap * snap_every < c.t_end * (1.0 - 1e-12)) {
            target = next_snap * snap_every;
            snap_here = true;
        }
        bool landed = false;
        if (t + dt >= target - 1e-15 * std::max(1.0, target)) {
            dt = target - t;
            landed = true;
        }

        bool mono_reject = false;
        std::vector<double> w_new;
        bool ok = true;
        try {
            w_new = step(w, g, p, dt, c.tol_mono);
        } catch (const step_error& e) {
            ok = false;
            mono_reject = (e.kind == step_error::Kind::monotonicity);
        }
        detail::StateScan sc{};
        if (ok) {
            sc = detail::scan_state(w_new, g, p);
            if (sc.min_w < -bound_slack || sc.max_w > wtot + bound_slack) ok = false;
            if (sc.max_drop > c.tol_mono * wscale) {
                ok = false;
                mono_reject = true;
            }
        }
        if (!ok) {
            if (dt <= c.dt_min * (1.0 + 1e-12)) {
                verdict = mono_reject ? Termination::monotonicity_failure : Termination::step_collapse;
                break;
            }
            cap = dt * 0.5;
            continue;
        }

        w = std::move(w_new);
        t = landed ? target : t + dt;
        cap = std::min(cap * 2.0, 1e30);
        traj.diagnostics.push_back({t, dt, sc.sup_u, sc.min_dd});

        if (sc.sup_u >= c.u_cap) {
            verdict = Termination::blowup_declared;
            push_snapshot(t);
            break;
        }
        if (landed && snap_here) {
            push_snapshot(t);
            ++next_snap;
        } else if (snap_every < 0.0) {
            push_snapshot(t);
        }
        if (t >= c.t_end * (1.0 - 1e-15)) {
            verdict = Termination::horizon_reached;
            done = true;
        }
    }

    push_snapshot(t);
    traj.termination = verdict;
    return traj;
}

// Convenience wrapper: sample/rescale w0 from the full-domain profile.
inline Trajectory simulate_from_full(const MassProfile& w0_full, const Grid& g, const Params& p,
                                     const StepControls& c) {
    return simulate(rescale_initial(w0_full, g, p), g, p, c);
}

struct ContinuationResult {
    std::vector<double> eps;
    std::vector<Trajectory> runs;
    // min over common probes/times of w_{eps_{k+1}} - w_{eps_k}; >= -tol certifies
    // the monotone approach from below as eps decreases.
    double min_monotonicity_margin = 0.0;
    // pairwise sup distances over common probes/times, row-major
    std::vector<std::vector<double>> distances;
};

// Run the eps-regularized problem for each eps in the (strictly decreasing)
// list with shared N, q, controls; compare on the finest run's nodes at common
// snapshot times, extending each profile by zero below its left endpoint.
inline ContinuationResult epsilon_continuation(const MassProfile& w0_full, const Params& p,
                                               int N, double q, std::vector<double> eps_list,
                                               const StepControls& c) {
    if (eps_list.empty()) throw param_error("continuation: need at least one eps value");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0 && eps_list[i] < p.Rn()))
            throw param_error("continuation: eps values must lie in (0, R^n)");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw param_error("continuation: eps values must be strictly decreasing");
    }
    ContinuationResult res;
    res.eps = eps_list;
    for (double eps : eps_list) {
        Grid g = make_grid(p, N, q, eps);
        res.runs.push_back(simulate_from_full(w0_full, g, p, c));
    }
    if (res.runs.size() == 1) return res; // nothing to compare; distances stay empty

    // common snapshot times: those present in every run (exact landing makes
    // them bitwise comparable up to tiny tolerance)
    std::vector<double> common;
    for (const auto& s0 : res.runs.front().snapshots) {
        bool everywhere = true;
        for (std::size_t r = 1; r < res.runs.size() && everywhere; ++r) {
            bool found = false;
            for (const auto& sn : res.runs[r].snapshots)
                if (std::abs(sn.time - s0.time) <= 1e-12 * std::max(1.0, s0.time)) {
                    found = true;
                    break;
                }
            everywhere = found;
        }
        if (everywhere) common.push_back(s0.time);
    }
    if (common.size() < 2)
        throw param_error("continuation: a member run failed before the first comparison time");

    const Grid probe_grid = res.runs.back().grid; // smallest eps: finest near the origin
    auto at_time = [&](const Trajectory& tr, double tm) -> const MassProfile& {
        for (const auto& sn : tr.snapshots)
            if (std::abs(sn.time - tm) <= 1e-12 * std::max(1.0, tm)) return sn;
        throw param_error("continuation: missing snapshot");
    };

    const std::size_t K = res.runs.size();
    res.distances.assign(K, std::vector<double>(K, 0.0));
    double margin = std::numeric_limits<double>::infinity();
    for (double tm : common) {
        for (std::size_t a = 0; a < K; ++a) {
            const MassProfile& wa = at_time(res.runs[a], tm);
            for (std::size_t b = a + 1; b < K; ++b) {
                const MassProfile& wb = at_time(res.runs[b], tm);
                double dist = 0.0;
                double pair_margin = std::numeric_limits<double>::infinity();
                for (double sp : probe_grid.s) {
                    const double va = (sp <= wa.s.front()) ? 0.0 : eval(wa, sp);
                    const double vb = (sp <= wb.s.front()) ? 0.0 : eval(wb, sp);
                    dist = std::max(dist, std::abs(va - vb));
                    pair_margin = std::min(pair_margin, vb - va);
                }
                res.distances[a][b] = std::max(res.distances[a][b], dist);
                res.distances[b][a] = res.distances[a][b];
                if (b == a + 1) margin = std::min(margin, pair_margin);
            }
        }
    }
    res.min_monotonicity_margin = margin;
    return res;
}

} // namespace ksflow
