#pragma once

#include <cmath>
#include <vector>

#include "ksflow/params.hpp"

namespace ksflow {

// Graded mesh on [eps, R^n]: s_i = eps + (R^n - eps) * (i/(N-1))^q.
// q > 1 clusters nodes near the left end, where the transformed problem
// degenerates and concentration happens.
struct Grid {
    int N = 0;
    double q = 2.0;
    double epsilon = 0.0;
    std::vector<double> s;

    double min_spacing() const {
        double h = s[1] - s[0];
        for (std::size_t i = 1; i + 1 < s.size(); ++i) h = std::min(h, s[i + 1] - s[i]);
        return h;
    }
};

inline Grid make_grid(double Rn, int N, double q, double epsilon) {
    if (N < 3) throw param_error("grid: need N >= 3 nodes");
    if (!(q >= 1.0)) throw param_error("grid: grading exponent q must be >= 1");
    if (epsilon < 0.0 || epsilon >= Rn) throw param_error("grid: epsilon must lie in [0, R^n)");
    Grid g;
    g.N = N;
    g.q = q;
    g.epsilon = epsilon;
    g.s.resize(N);
    for (int i = 0; i < N; ++i)
        g.s[i] = epsilon + (Rn - epsilon) * std::pow(double(i) / double(N - 1), q);
    g.s[0] = epsilon;
    g.s[N - 1] = Rn;
    return g;
}

inline Grid make_grid(const Params& p, int N, double q, double epsilon) {
    return make_grid(p.Rn(), N, q, epsilon);
}

} // namespace ksflow
