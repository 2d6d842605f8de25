#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "ksflow/params.hpp"

namespace ksflow {

// Mass-accumulation transform and its inverse.
//
// Forward:  w(s) = integral over [0, s^{1/n}] of rho^{n-1} u(rho) d rho, s = r^n.
// Inverse:  u(r) = n * w_s(r^n).
// Both directions operate on sampled profiles; the forward direction integrates
// the piecewise-linear interpolant of f(rho) = rho^{n-1} u(rho) cell-exactly
// (equivalently, composite trapezoid with partially covered end cells).

namespace detail {

// Breakpoints (x_j, f_j) of f = rho^{n-1} u with the implicit origin node, plus
// the cumulative trapezoid W_j at each breakpoint.
struct MassAccumulator {
    std::vector<double> x, f, W;

    explicit MassAccumulator(const RadialProfile& u0, int n) {
        const std::size_t k = u0.r.size();
        x.resize(k + 1);
        f.resize(k + 1);
        W.resize(k + 1);
        x[0] = 0.0;
        f[0] = 0.0;
        W[0] = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            x[j + 1] = u0.r[j];
            f[j + 1] = std::pow(u0.r[j], n - 1) * u0.u[j];
            W[j + 1] = W[j] + 0.5 * (x[j + 1] - x[j]) * (f[j] + f[j + 1]);
        }
    }

    // Integral of the interpolant over [0, r]; r may fall inside a cell.
    double at(double r) const {
        if (r <= 0.0) return 0.0;
        if (r >= x.back()) return W.back();
        auto it = std::upper_bound(x.begin(), x.end(), r);
        const std::size_t j = static_cast<std::size_t>(it - x.begin()) - 1;
        const double lam = (r - x[j]) / (x[j + 1] - x[j]);
        const double fr = f[j] + lam * (f[j + 1] - f[j]);
        return W[j] + 0.5 * (r - x[j]) * (f[j] + fr);
    }
};

} // namespace detail

// Build w on the given s-grid from sampled initial density.  The grid must be
// strictly increasing, start in [0, R^n), and end at R^n = (last r node)^n.
inline MassProfile mass_profile_from_density(const RadialProfile& u0, const Params& p,
                                             const std::vector<double>& s_nodes) {
    validate_radial_profile(u0, p.R);
    if (s_nodes.size() < 2) throw param_error("mass profile: need at least 2 grid nodes");
    for (std::size_t i = 0; i + 1 < s_nodes.size(); ++i)
        if (!(s_nodes[i] < s_nodes[i + 1]))
            throw param_error("mass profile: s grid must be strictly increasing");
    const double Rn = std::pow(u0.r.back(), p.n);
    if (s_nodes.front() < 0.0 || std::abs(s_nodes.back() - Rn) > 1e-9 * Rn)
        throw param_error("mass profile: s grid does not match the density's domain [0, R^n]");

    detail::MassAccumulator acc(u0, p.n);
    MassProfile w;
    w.s = s_nodes;
    w.w.resize(s_nodes.size());
    for (std::size_t i = 0; i < s_nodes.size(); ++i)
        w.w[i] = acc.at(std::pow(s_nodes[i], 1.0 / p.n));
    w.w.back() = acc.W.back(); // exact right endpoint, no pow round-trip noise
    w.time = 0.0;
    return w;
}

// Reconstruct the density at the grid's radii: u = n * w_s(s), slopes by the
// second-order nonuniform central difference, one-sided at the ends.  A leading
// s = 0 node is dropped (the density lives on (0, R]).
inline RadialProfile density_from_mass_profile(const MassProfile& w, const Params& p) {
    const std::size_t N = w.s.size();
    if (N < 3) throw param_error("density: need at least 3 nodes");
    std::vector<double> slope(N);
    slope[0] = edge_slope(w.s, w.w, true);
    slope[N - 1] = edge_slope(w.s, w.w, false);
    for (std::size_t i = 1; i + 1 < N; ++i) slope[i] = central_slope(w.s, w.w, i);

    RadialProfile u;
    const std::size_t first = (w.s.front() == 0.0) ? 1 : 0;
    u.r.reserve(N - first);
    u.u.reserve(N - first);
    for (std::size_t i = first; i < N; ++i) {
        u.r.push_back(std::pow(w.s[i], 1.0 / p.n));
        u.u.push_back(p.n * slope[i]);
    }
    return u;
}

// Gradient of the signal: v_r(r) = (mu r^n / n - w(r^n)) / r^{n-1}.
inline double signal_gradient_at(const MassProfile& w, const Params& p, double r) {
    if (!(r > 0.0) || r > p.R * (1.0 + 1e-12))
        throw param_error("signal gradient: r must lie in (0, R]");
    const double s = std::pow(r, p.n);
    const double ws = (s >= w.s.back()) ? p.w_total() : eval(w, s);
    return (p.mu * s / p.n - ws) / std::pow(r, p.n - 1);
}

// v_r sampled at the radii of the profile's own grid (s > 0 nodes).
inline RadialProfile signal_gradient(const MassProfile& w, const Params& p) {
    RadialProfile v;
    for (std::size_t i = 0; i < w.s.size(); ++i) {
        if (!(w.s[i] > 0.0)) continue;
        const double r = std::pow(w.s[i], 1.0 / p.n);
        const double ws = (i + 1 == w.s.size()) ? p.w_total() : w.w[i];
        v.r.push_back(r);
        v.u.push_back((p.mu * w.s[i] / p.n - ws) / std::pow(r, p.n - 1));
    }
    return v;
}

namespace detail {

// Finite-difference weights for the first derivative at z from five arbitrary
// nodes (Fornberg's recursion); exact for quartics.
inline std::array<double, 5> fd5_weights(double z, const double* x) {
    double C[5][2] = {};
    C[0][0] = 1.0;
    double c1 = 1.0, c4 = x[0] - z;
    for (int i = 1; i < 5; ++i) {
        double c2 = 1.0, c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                C[i][1] = c1 * (C[i - 1][0] - c5 * C[i - 1][1]) / c2;
                C[i][0] = -c1 * c5 * C[i - 1][0] / c2;
            }
            C[j][1] = (c4 * C[j][1] - C[j][0]) / c3;
            C[j][0] = c4 * C[j][0] / c3;
        }
        c1 = c2;
    }
    return {C[0][1], C[1][1], C[2][1], C[3][1], C[4][1]};
}

inline double slope5(const std::vector<double>& s, const std::vector<double>& w, std::size_t i) {
    const std::size_t N = s.size();
    std::size_t a = (i < 2) ? 0 : i - 2;
    if (a + 5 > N) a = N - 5;
    const std::array<double, 5> wts = fd5_weights(s[i], &s[a]);
    double d = 0.0;
    for (int k = 0; k < 5; ++k) d += wts[k] * w[a + k];
    return d;
}

} // namespace detail

// Integral of the reconstructed density, int rho^{n-1} u drho = (1/n) int u ds,
// from nodal slopes by corrected trapezoid in s (Euler-Maclaurin curvature
// term).  The slopes here are one order above the solver's stencils: a
// second-order reconstruction carries an O(h^2) bias proportional to the
// boundary slopes, which changes as a run relaxes and would masquerade as
// mass drift at the 1e-6 scale on desk-size grids.
inline double reconstructed_mass(const MassProfile& w) {
    const std::size_t N = w.s.size();
    if (N < 3) throw param_error("reconstructed mass: need at least 3 nodes");
    std::vector<double> f(N), g(N);
    if (N >= 5) {
        for (std::size_t i = 0; i < N; ++i) f[i] = detail::slope5(w.s, w.w, i);
    } else {
        f[0] = edge_slope(w.s, w.w, true);
        f[N - 1] = edge_slope(w.s, w.w, false);
        for (std::size_t i = 1; i + 1 < N; ++i) f[i] = central_slope(w.s, w.w, i);
    }
    for (std::size_t i = 1; i + 1 < N; ++i) g[i] = second_difference(w.s, w.w, i);
    g[0] = g[1];
    g[N - 1] = g[N - 2];
    double I = 0.0;
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const double D = w.s[i + 1] - w.s[i];
        I += 0.5 * D * (f[i] + f[i + 1]) - D * D / 12.0 * (g[i + 1] - g[i]);
    }
    return I;
}

// Relative drift of the reconstructed mass integral over a run.  Each
// snapshot's integral is compared against the first snapshot's rather than
// against m/omega_n: drift measures loss of conservation along the flow, not
// the reconstruction's own discretization bias (a single snapshot therefore
// drifts by exactly zero).
inline double mass_conservation_drift(const std::vector<MassProfile>& snaps, const Params& p) {
    if (snaps.empty()) return 0.0;
    double worst = 0.0;
    const double ref = reconstructed_mass(snaps.front());
    for (const auto& w : snaps)
        worst = std::max(worst, std::abs(reconstructed_mass(w) - ref) * p.omega_n / p.m);
    return worst;
}

} // namespace ksflow
