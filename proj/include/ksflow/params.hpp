#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksflow {

// Thrown when a physical or numerical parameter is outside its admissible range.
struct param_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Radially symmetric density u(r) sampled on strictly increasing nodes in (0, R].
// The value at r = 0 is never needed: every integral of rho^{n-1} u vanishes there.
struct RadialProfile {
    std::vector<double> r;
    std::vector<double> u;
};

// Cumulative mass profile w(s) on s-nodes in [0, R^n], w nondecreasing,
// w(s) = integral of rho^{n-1} u over [0, s^{1/n}].  `time` tags the snapshot.
struct MassProfile {
    std::vector<double> s;
    std::vector<double> w;
    double time = 0.0;
};

// Surface area of the unit sphere in R^n, so that |B_R| = omega_n R^n / n.
inline double unit_sphere_area(int n) {
    if (n < 2) throw param_error("unit_sphere_area: n must be >= 2");
    return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

struct Params {
    int n = 2;          // space dimension, n >= 2
    double R = 1.0;     // domain radius, R > 0
    double beta = 1.0;  // degenerate diffusion exponent, beta > 0
    double alpha = 1.0; // aggregation nonlinearity exponent, alpha >= 1
    double m = 0.0;     // total mass, m > 0
    double omega_n = 0.0;
    double mu = 0.0;    // mean density seen by the signal equation, mu = n m / (omega_n R^n)

    double Rn() const { return std::pow(R, n); }
    // Total accumulated mass at s = R^n, i.e. the right boundary value of w.
    double w_total() const { return m / omega_n; }
};

inline void validate_core(int n, double R, double beta, double alpha) {
    if (n < 2) throw param_error("params: n must be an integer >= 2");
    if (!(R > 0.0)) throw param_error("params: R must be positive");
    if (!(beta > 0.0)) throw param_error("params: beta must be positive");
    if (!(alpha >= 1.0)) throw param_error("params: alpha must be >= 1");
}

inline void validate_radial_profile(const RadialProfile& u0, double R) {
    if (u0.r.size() < 2 || u0.r.size() != u0.u.size())
        throw param_error("radial profile: need >= 2 matching (r, u) nodes");
    double prev = 0.0;
    for (std::size_t i = 0; i < u0.r.size(); ++i) {
        if (!(u0.r[i] > prev)) throw param_error("radial profile: r nodes must be strictly increasing and positive");
        if (u0.u[i] < 0.0) throw param_error("radial profile: density must be nonnegative");
        prev = u0.r[i];
    }
    if (std::abs(u0.r.back() - R) > 1e-12 * R)
        throw param_error("radial profile: last node must sit at r = R");
}

// Composite trapezoid of f(rho) = rho^{n-1} u(rho) over [0, R] on the profile's
// nodes, with the implicit node (0, 0) prepended.  This is the one quadrature
// rule shared by every mass integral in the library, so that w(R^n) = m/omega_n
// holds to round-off rather than to discretization error.
inline double mass_integral(const RadialProfile& u0, int n) {
    double acc = 0.0, x_prev = 0.0, f_prev = 0.0;
    for (std::size_t i = 0; i < u0.r.size(); ++i) {
        const double f = std::pow(u0.r[i], n - 1) * u0.u[i];
        acc += 0.5 * (u0.r[i] - x_prev) * (f + f_prev);
        x_prev = u0.r[i];
        f_prev = f;
    }
    return acc;
}

inline Params build_params(int n, double R, double beta, double alpha, const RadialProfile& u0) {
    validate_core(n, R, beta, alpha);
    validate_radial_profile(u0, R);
    Params p;
    p.n = n;
    p.R = R;
    p.beta = beta;
    p.alpha = alpha;
    p.omega_n = unit_sphere_area(n);
    p.m = p.omega_n * mass_integral(u0, n);
    if (!(p.m > 0.0)) throw param_error("params: initial data carries no mass");
    p.mu = n * p.m / (p.omega_n * p.Rn());
    return p;
}

// For callers that know the mass directly (threshold-only workflows).
inline Params build_params(int n, double R, double beta, double alpha, double m) {
    validate_core(n, R, beta, alpha);
    if (!(m > 0.0)) throw param_error("params: mass must be positive");
    Params p;
    p.n = n;
    p.R = R;
    p.beta = beta;
    p.alpha = alpha;
    p.m = m;
    p.omega_n = unit_sphere_area(n);
    p.mu = n * m / (p.omega_n * p.Rn());
    return p;
}

// Piecewise-linear evaluation of w at s, clamped to the end values outside the
// node range.  Below the first node this returns w.front(), which is 0 for
// every solver state (the left boundary is pinned), matching the extension by
// zero used when profiles on [eps, R^n] are compared across different eps.
inline double eval(const MassProfile& w, double s) {
    const auto& xs = w.s;
    if (s <= xs.front()) return w.w.front();
    if (s >= xs.back()) return w.w.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin()) - 1;
    const double h = xs[j + 1] - xs[j];
    const double lam = (s - xs[j]) / h;
    return w.w[j] + lam * (w.w[j + 1] - w.w[j]);
}

// Largest slope of the piecewise-linear interpolant; n * sup_slope is the
// reconstructed sup of the density.
inline double sup_slope(const MassProfile& w) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < w.s.size(); ++i)
        best = std::max(best, (w.w[i + 1] - w.w[i]) / (w.s[i + 1] - w.s[i]));
    return best;
}

inline double min_slope(const MassProfile& w) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < w.s.size(); ++i)
        worst = std::min(worst, (w.w[i + 1] - w.w[i]) / (w.s[i + 1] - w.s[i]));
    return worst;
}

// Nonuniform three-point second difference at interior node i; exact for quadratics.
inline double second_difference(const std::vector<double>& s, const std::vector<double>& w, std::size_t i) {
    const double hm = s[i] - s[i - 1];
    const double hp = s[i + 1] - s[i];
    return 2.0 * ((w[i + 1] - w[i]) / hp - (w[i] - w[i - 1]) / hm) / (hm + hp);
}

// Nonuniform three-point first derivative at interior node i; exact for quadratics.
inline double central_slope(const std::vector<double>& s, const std::vector<double>& w, std::size_t i) {
    const double hm = s[i] - s[i - 1];
    const double hp = s[i + 1] - s[i];
    return (-hp / hm * w[i - 1] + (hp / hm - hm / hp) * w[i] + hm / hp * w[i + 1]) / (hm + hp);
}

// Nonuniform three-point one-sided first derivative at the first or last node;
// exact for quadratics like the interior stencil (a two-point quotient would
// carry an O(h) w_ss term that shows up as spurious mass drift).
inline double edge_slope(const std::vector<double>& s, const std::vector<double>& w, bool left) {
    const std::size_t N = s.size();
    if (left) {
        const double h1 = s[1] - s[0];
        const double h2 = s[2] - s[1];
        return -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * w[0] + (h1 + h2) / (h1 * h2) * w[1] -
               h1 / (h2 * (h1 + h2)) * w[2];
    }
    const double h1 = s[N - 2] - s[N - 3];
    const double h2 = s[N - 1] - s[N - 2];
    return h2 / (h1 * (h1 + h2)) * w[N - 3] - (h1 + h2) / (h1 * h2) * w[N - 2] +
           (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * w[N - 1];
}

} // namespace ksflow
