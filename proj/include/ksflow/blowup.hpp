#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ksflow/params.hpp"
#include "ksflow/solver.hpp"

namespace ksflow {

// Finite-time blow-up machinery built on the weighted moment
//   y(t) = integral over [0, s1] of s^{-gamma} (s1 - s) w(s, t) ds.
// For admissible gamma and small enough s1, initial concentration
// w0(s0) >= m0/omega_n (s0 = s1/2) forces a supercritical Riccati inequality
// for y, whose finite escape time bounds the solution's lifespan.

// gamma must lie in (0, 1) with gamma <= 1 - 2/n + beta/n.  The default picks
// min(0.9, 1 - 2/n + beta/n).
inline double select_gamma(const Params& p, std::optional<double> override_gamma = std::nullopt) {
    const double bound = 1.0 - 2.0 / p.n + p.beta / p.n;
    if (override_gamma) {
        const double g = *override_gamma;
        if (!(g > 0.0 && g < 1.0) || g > bound)
            throw param_error("gamma: override must lie in (0, 1) and respect 1 - 2/n + beta/n");
        return g;
    }
    return std::min(0.9, bound);
}

struct BlowupConstants {
    double gamma = 0.0;
    double c1 = 0.0; // controls the diffusion contribution near the weight's singularity
    double c2 = 0.0; // controls the mean-field transport contribution
    double c3 = 0.0; // moment lower-bound constant from concentrated data
    double C4 = 1.0; // bound on ||w_s||^{alpha-1}; identically 1 when alpha = 1
};

inline BlowupConstants blowup_constants(const Params& p, double gamma, double C4) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw param_error("constants: gamma must lie in (0, 1)");
    if (!(C4 > 0.0)) throw param_error("constants: C4 must be positive");
    const double n = p.n, a = p.alpha, b = p.beta;
    BlowupConstants c;
    c.gamma = gamma;
    c.C4 = (a == 1.0) ? 1.0 : C4;
    const double e1 = 2.0 - 2.0 / n + b / n - gamma;
    const double e2 = 3.0 - 4.0 / n + 2.0 * b / n - gamma;
    c.c1 = 8.0 * e1 * e1 * std::pow(n, 4.0 - a) / (e2 * a);
    c.c2 = 2.0 * c.C4 * c.C4 * std::pow(n, a) / (a * (3.0 - gamma) * p.omega_n * p.omega_n);
    const double g1 = 1.0 - gamma, g2 = 2.0 - gamma;
    c.c3 = ((1.0 - std::pow(2.0, -g1)) / g1 - (1.0 - std::pow(2.0, -g2)) / g2) / p.omega_n;
    return c;
}

// C4 default for alpha > 1: a conservative bound on ||w_s||^{alpha-1} built
// from the initial data, with a safety factor of 2.
inline double default_C4(const Params& p, double sup_u0) {
    if (p.alpha == 1.0) return 1.0;
    return 2.0 * std::pow(p.n * sup_u0, p.alpha - 1.0);
}

// Alternative C4 from the slope barrier: sup w_s stays below y(t) for concave
// data, so y(t_horizon)^{alpha-1} bounds the slope power up to that horizon.
inline double barrier_C4(const Params& p, double y0, double t_horizon) {
    const double denom = 1.0 - p.alpha * std::pow(double(p.n), p.alpha) * std::pow(y0, p.alpha) * t_horizon;
    if (!(denom > 0.0)) throw param_error("C4: horizon is at or past the barrier blow-up time");
    return std::pow(y0 * std::pow(denom, -1.0 / p.alpha), p.alpha - 1.0);
}

struct BlowupCertificate {
    double gamma = 0.0;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, C4 = 1.0;
    double m0 = 0.0;
    double s1 = 0.0, s0 = 0.0, r0 = 0.0;
    double predicate = 0.0; // (C + B y)/(A y^2) at y = c3 m0 s1^{2-gamma}; <= 1 certifies
};

// Riccati coefficients induced by a certificate: y' >= A y^2 - B y - C.
inline void riccati_coefficients(const Params& p, const BlowupCertificate& cert,
                                 double& A, double& B, double& C) {
    const double n = p.n, a = p.alpha, b = p.beta;
    const double na = std::pow(n, a);
    A = a * na * (1.0 - cert.gamma) / 4.0 * std::pow(cert.s1, cert.gamma - 3.0);
    B = (a - 1.0) * na;
    C = cert.c1 * std::pow(cert.s1, 3.0 - 4.0 / n + 2.0 * b / n - cert.gamma) +
        cert.c2 * (p.m * p.m / std::pow(p.R, 2.0 * p.n)) * std::pow(cert.s1, 3.0 - cert.gamma);
}

// Solve the concentration-threshold inequalities for the largest admissible
// s1, then s0 = s1/2 and r0 = s0^{1/n}.  m0 is the mass to be concentrated in
// B_{r0}(0); it cannot exceed the total mass.
inline BlowupCertificate concentration_threshold(const Params& p, double m0, double C4,
                                                 std::optional<double> gamma_override = std::nullopt) {
    if (!(m0 > 0.0) || m0 > p.m * (1.0 + 1e-12))
        throw param_error("threshold: m0 must lie in (0, m]");
    const double gamma = select_gamma(p, gamma_override);
    const BlowupConstants cs = blowup_constants(p, gamma, C4);

    const double n = p.n, a = p.alpha;
    const double na = std::pow(n, a);
    const double R2n = std::pow(p.R, 2.0 * p.n);
    const double base = a * na * (1.0 - gamma) * cs.c3 * cs.c3 * m0 * m0;

    double s1 = p.Rn() * (1.0 - 1e-9); // never place s1 at the outer boundary

    // diffusion-driven constraint: s1^{2 - 4/n + 2 beta/n} <= base / (12 c1)
    const double expo = 2.0 - 4.0 / n + 2.0 * p.beta / n;
    const double rhs1 = base / (12.0 * cs.c1);
    if (expo > 0.0) {
        s1 = std::min(s1, std::pow(rhs1, 1.0 / expo));
    } else if (expo == 0.0) {
        if (1.0 > rhs1) throw param_error("threshold: degenerate exponent renders the constraint infeasible");
    } else {
        throw param_error("threshold: negative constraint exponent (inadmissible n, beta)");
    }

    // transport-driven constraint, and for alpha > 1 the linear-term constraint
    if (a > 1.0) {
        s1 = std::min(s1, std::sqrt(base * R2n / (12.0 * cs.c2 * p.m * p.m)));
        s1 = std::min(s1, a * (1.0 - gamma) * cs.c3 * m0 / (12.0 * (a - 1.0)));
    } else {
        s1 = std::min(s1, std::sqrt(base * R2n / (6.0 * cs.c2 * p.m * p.m)));
    }

    BlowupCertificate cert;
    cert.gamma = gamma;
    cert.c1 = cs.c1;
    cert.c2 = cs.c2;
    cert.c3 = cs.c3;
    cert.C4 = cs.C4;
    cert.m0 = m0;
    cert.s1 = s1;
    cert.s0 = 0.5 * s1;
    cert.r0 = std::pow(cert.s0, 1.0 / n);

    double A, B, C;
    riccati_coefficients(p, cert, A, B, C);
    const double y_min = cs.c3 * m0 * std::pow(s1, 2.0 - gamma);
    cert.predicate = (C + B * y_min) / (A * y_min * y_min);
    return cert;
}

// Does the initial profile concentrate enough mass? w0(s0) >= m0/omega_n.
inline bool check_concentration(const MassProfile& w0, const BlowupCertificate& cert,
                                const Params& p) {
    return eval(w0, cert.s0) >= cert.m0 / p.omega_n;
}

// Weighted moment integral over [0, s1], cell-exact for the piecewise-linear
// interpolant against the singular weight s^{-gamma} (s1 - s).  Profiles on
// [eps, R^n] are extended by zero below their left endpoint.
inline double moment(const MassProfile& w, double gamma, double s1) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw param_error("moment: gamma must lie in (0, 1)");
    if (!(s1 > 0.0) || s1 > w.s.back() * (1.0 + 1e-12))
        throw param_error("moment: s1 must lie in (0, max s]");
    const double g1 = 1.0 - gamma, g2 = 2.0 - gamma, g3 = 3.0 - gamma;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < w.s.size(); ++i) {
        double a = w.s[i], b = w.s[i + 1];
        if (a >= s1) break;
        b = std::min(b, s1);
        if (!(b > a)) continue;
        const double lam = (w.w[i + 1] - w.w[i]) / (w.s[i + 1] - w.s[i]);
        const double P = w.w[i] - lam * w.s[i]; // w(s) = P + lam s on the cell
        const double I1 = (std::pow(b, g1) - std::pow(a, g1)) / g1;
        const double I2 = (std::pow(b, g2) - std::pow(a, g2)) / g2;
        const double I3 = (std::pow(b, g3) - std::pow(a, g3)) / g3;
        acc += P * s1 * I1 + (lam * s1 - P) * I2 - lam * I3;
    }
    return acc;
}

struct OdiSeries {
    std::vector<double> t;
    std::vector<double> y;        // moment at each snapshot
    std::vector<double> residual; // y(t) minus the integral inequality's right side
    double y0 = 0.0;
    double min_residual = 0.0;
};

// Residual of the integral inequality
//   y(t) >= y(0) + A * int y^2 + (1 - alpha) n^alpha * int y - C * t
// along a trajectory (trapezoid in time over the snapshots).  Nonnegative
// residuals certify the inequality at the sampled times.
inline OdiSeries odi_residual(const Trajectory& traj, const BlowupCertificate& cert) {
    if (traj.snapshots.size() < 3)
        throw param_error("odi: need at least 3 snapshots for the time integrals");
    const Params& p = traj.params;
    double A, B, C;
    riccati_coefficients(p, cert, A, B, C);
    OdiSeries out;
    out.t.reserve(traj.snapshots.size());
    out.y.reserve(traj.snapshots.size());
    for (const auto& snap : traj.snapshots) {
        out.t.push_back(snap.time);
        out.y.push_back(moment(snap, cert.gamma, cert.s1));
    }
    out.y0 = out.y.front();
    double I1 = 0.0, I2 = 0.0;
    out.residual.resize(out.t.size());
    out.residual[0] = 0.0;
    double worst = 0.0;
    for (std::size_t k = 1; k < out.t.size(); ++k) {
        const double dt = out.t[k] - out.t[k - 1];
        I1 += 0.5 * dt * (out.y[k] + out.y[k - 1]);
        I2 += 0.5 * dt * (out.y[k] * out.y[k] + out.y[k - 1] * out.y[k - 1]);
        const double rhs = out.y0 + A * I2 - B * I1 - C * out.t[k];
        out.residual[k] = out.y[k] - rhs;
        worst = std::min(worst, out.residual[k]);
    }
    out.min_residual = worst;
    return out;
}

struct RiccatiResult {
    double A = 0.0, B = 0.0, C = 0.0;
    double y_plus = 0.0, y_minus = 0.0;
    bool supercritical = false;
    double T = std::numeric_limits<double>::infinity();
};

// Escape time of y' = A y^2 - B y - C from y(0) = y_init: finite iff y_init
// exceeds the larger root y_plus, in which case
//   T = ln((y_init - y_minus)/(y_init - y_plus)) / (A (y_plus - y_minus)).
inline RiccatiResult subsolution_blowup_time(double A, double B, double C, double y_init) {
    if (!(A > 0.0)) throw param_error("riccati: A must be positive");
    if (B < 0.0 || C < 0.0) throw param_error("riccati: B and C must be nonnegative");
    if (!(y_init > 0.0)) throw param_error("riccati: y_init must be positive");
    RiccatiResult r;
    r.A = A;
    r.B = B;
    r.C = C;
    const double disc = std::sqrt(B * B + 4.0 * A * C);
    r.y_plus = (B + disc) / (2.0 * A);
    r.y_minus = (B - disc) / (2.0 * A);
    r.supercritical = y_init > r.y_plus;
    if (r.supercritical && disc > 0.0)
        r.T = std::log((y_init - r.y_minus) / (y_init - r.y_plus)) / (A * (r.y_plus - r.y_minus));
    else if (r.supercritical)
        r.T = 1.0 / (A * y_init); // degenerate double root at 0: y' = A y^2
    return r;
}

inline RiccatiResult certificate_blowup_time(const Params& p, const BlowupCertificate& cert,
                                             double y_init) {
    double A, B, C;
    riccati_coefficients(p, cert, A, B, C);
    return subsolution_blowup_time(A, B, C, y_init);
}

} // namespace ksflow
