#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ksflow/grid.hpp"
#include "ksflow/params.hpp"
#include "ksflow/transform.hpp"

namespace ksflow {

// Analytic initial-data families, sampled onto the run grid's radii by the
// front end (the core only ever sees sampled nodes).
//
//   constant   u0 = scale
//   quadratic  u0 = 2 scale (1 - (r/R)^2), smoothly decreasing with zero slope at 0
//   plateau    u0 = h on [0, p R], cubic smoothstep down to 0 at q R, 0 beyond;
//              C^1, radially nonincreasing, flat at the origin and at the support edge
//
// The plateau height can be given directly or solved from a target mass; the
// solve uses the shared trapezoid rule, so the realized mass matches exactly.
struct InitialDataSpec {
    enum class Family { constant, quadratic, plateau, csv };
    Family family = Family::constant;
    double scale = 1.0;
    double plateau_fraction = 0.1; // plateau edge, as a fraction of R
    double tail_fraction = 0.3;    // support edge, as a fraction of R
    std::optional<double> height;
    std::optional<double> mass;
    std::string csv_path;
};

namespace detail {

inline double smoothstep(double x) { return x * x * (3.0 - 2.0 * x); }

inline double plateau_shape(double r, double R, double pfrac, double qfrac) {
    const double rp = pfrac * R, rq = qfrac * R;
    if (r <= rp) return 1.0;
    if (r >= rq) return 0.0;
    return smoothstep((rq - r) / (rq - rp));
}

} // namespace detail

// Radii where the analytic families are sampled: the grid's own r-nodes
// r_i = s_i^{1/n}, skipping a leading s = 0.
inline std::vector<double> sample_radii(const Grid& g, int n) {
    std::vector<double> r;
    r.reserve(g.s.size());
    for (double s : g.s) {
        if (!(s > 0.0)) continue;
        r.push_back(std::pow(s, 1.0 / n));
    }
    return r;
}

inline RadialProfile sample_initial(const InitialDataSpec& spec, int n, double R,
                                    const std::vector<double>& radii) {
    RadialProfile u;
    u.r = radii;
    u.u.resize(radii.size());
    switch (spec.family) {
        case InitialDataSpec::Family::constant:
            for (std::size_t i = 0; i < radii.size(); ++i) u.u[i] = spec.scale;
            break;
        case InitialDataSpec::Family::quadratic:
            for (std::size_t i = 0; i < radii.size(); ++i) {
                const double x = radii[i] / R;
                u.u[i] = 2.0 * spec.scale * (1.0 - x * x);
            }
            break;
        case InitialDataSpec::Family::plateau: {
            if (!(spec.plateau_fraction > 0.0 && spec.plateau_fraction < spec.tail_fraction &&
                  spec.tail_fraction <= 1.0))
                throw param_error("plateau family: need 0 < plateau_fraction < tail_fraction <= 1");
            if (spec.height && spec.mass)
                throw param_error("plateau family: give height or mass, not both");
            for (std::size_t i = 0; i < radii.size(); ++i)
                u.u[i] = detail::plateau_shape(radii[i], R, spec.plateau_fraction, spec.tail_fraction);
            double h = spec.height.value_or(spec.scale);
            if (spec.mass) {
                const double unit = unit_sphere_area(n) * mass_integral(u, n);
                if (!(unit > 0.0))
                    throw param_error("plateau family: support is unresolved by the sample radii");
                h = *spec.mass / unit;
            }
            for (auto& v : u.u) v *= h;
            break;
        }
        case InitialDataSpec::Family::csv:
            throw param_error("csv initial data carries its own nodes; do not resample");
    }
    return u;
}

} // namespace ksflow
