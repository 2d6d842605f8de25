#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include <ksflow/ksflow.hpp>

#include "oracle_helpers.hpp"

using namespace ksflow;
using std::numbers::pi;

namespace {

Params flat_params() { return build_params(2, 1.0, 1.0, 1.0, pi); }

MassProfile linear_profile(int N) {
    MassProfile w;
    for (int i = 0; i < N; ++i) {
        double s = double(i) / (N - 1);
        w.s.push_back(s);
        w.w.push_back(0.5 * s);
    }
    return w;
}

Trajectory run_family(InitialDataSpec id, int N, double q, const StepControls& c) {
    RunConfig cfg;
    cfg.n = 2;
    cfg.R = 1.0;
    cfg.beta = 1.0;
    cfg.alpha = 1.0;
    cfg.N = N;
    cfg.q = q;
    cfg.epsilon = 0.0;
    cfg.initial = id;
    Problem pr = build_problem(cfg);
    return simulate(pr.w0, pr.grid, pr.params, c);
}

} // namespace

TEST_CASE("gamma selection respects the admissible window", "[blowup]") {
    REQUIRE(select_gamma(flat_params()) == Catch::Approx(0.5).epsilon(1e-15));
    // large beta: the 0.9 cap binds before the exponent bound does
    REQUIRE(select_gamma(build_params(2, 1.0, 4.0, 1.0, pi)) == Catch::Approx(0.9).epsilon(1e-15));
    REQUIRE(select_gamma(build_params(3, 1.0, 0.3, 1.0, pi)) ==
            Catch::Approx(13.0 / 30.0).epsilon(1e-14));

    REQUIRE(select_gamma(flat_params(), 0.3) == Catch::Approx(0.3).epsilon(1e-15));
    REQUIRE_THROWS_AS(select_gamma(flat_params(), 0.0), param_error);
    REQUIRE_THROWS_AS(select_gamma(flat_params(), 1.0), param_error);
    REQUIRE_THROWS_AS(select_gamma(flat_params(), -0.1), param_error);
    // above the exponent bound 1 - 2/n + beta/n = 0.5
    REQUIRE_THROWS_AS(select_gamma(flat_params(), 0.6), param_error);
}

TEST_CASE("moment constants at the reference parameters", "[blowup]") {
    const Params p = flat_params();
    const BlowupConstants cs = blowup_constants(p, 0.5, 1.0);
    REQUIRE(cs.c1 == Catch::Approx(128.0 / 3.0).epsilon(1e-13));
    REQUIRE(cs.c2 == Catch::Approx(0.040528473456935117).epsilon(1e-12));
    REQUIRE(cs.c3 == Catch::Approx(0.024640691589796666).epsilon(1e-12));
    REQUIRE(cs.c3 * p.omega_n == Catch::Approx(0.154822).margin(5e-7));
    REQUIRE(cs.C4 == 1.0);

    // alpha = 1 pins C4 at one no matter what was passed
    REQUIRE(blowup_constants(p, 0.5, 7.0).C4 == 1.0);
    REQUIRE(blowup_constants(p, 0.5, 7.0).c2 == Catch::Approx(cs.c2).epsilon(1e-15));
    // alpha > 1 keeps the caller's bound
    const Params p2 = build_params(2, 1.0, 1.0, 2.0, pi);
    REQUIRE(blowup_constants(p2, 0.5, 7.0).C4 == 7.0);

    REQUIRE_THROWS_AS(blowup_constants(p, 0.0, 1.0), param_error);
    REQUIRE_THROWS_AS(blowup_constants(p, 1.0, 1.0), param_error);
    REQUIRE_THROWS_AS(blowup_constants(p, 0.5, 0.0), param_error);
    REQUIRE_THROWS_AS(blowup_constants(p, 0.5, -1.0), param_error);
}

TEST_CASE("slope-power bounds for the transport term", "[blowup]") {
    const Params p2 = build_params(2, 1.0, 1.0, 2.0, pi);
    REQUIRE(default_C4(flat_params(), 123.0) == 1.0);
    REQUIRE(default_C4(p2, 3.0) == Catch::Approx(12.0).epsilon(1e-15));
    // barrier value sqrt(2) at half the barrier's blow-up time 0.125
    REQUIRE(barrier_C4(p2, 1.0, 0.0625) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));
    REQUIRE_THROWS_AS(barrier_C4(p2, 1.0, 0.125), param_error);
    REQUIRE_THROWS_AS(barrier_C4(p2, 1.0, 0.2), param_error);
}

TEST_CASE("concentration threshold at the reference parameters", "[blowup]") {
    const Params p = flat_params();
    const BlowupCertificate cert = concentration_threshold(p, p.m, 1.0);
    REQUIRE(cert.gamma == Catch::Approx(0.5).epsilon(1e-15));
    REQUIRE(cert.s1 == Catch::Approx(1.1704033883360388e-05).epsilon(1e-10));
    REQUIRE(cert.s0 == Catch::Approx(0.5 * cert.s1).epsilon(1e-15));
    REQUIRE(cert.r0 == Catch::Approx(0.0024190942399336564).epsilon(1e-10));
    REQUIRE(cert.r0 == Catch::Approx(std::sqrt(cert.s0)).epsilon(1e-15));
    REQUIRE(cert.m0 == p.m);

    // the diffusion constraint binds here: its closed form reproduces s1
    const double base = p.alpha * std::pow(2.0, p.alpha) * (1.0 - cert.gamma) *
                        cert.c3 * cert.c3 * cert.m0 * cert.m0;
    REQUIRE(cert.s1 == Catch::Approx(base / (12.0 * cert.c1)).epsilon(1e-14));
    REQUIRE(cert.s1 < std::sqrt(base / (6.0 * cert.c2 * p.m * p.m)));

    // the induced Riccati coefficients, against their definitions
    double A, B, C;
    riccati_coefficients(p, cert, A, B, C);
    REQUIRE(A == Catch::Approx(0.25 * std::pow(cert.s1, -2.5)).epsilon(1e-14));
    REQUIRE(B == 0.0);
    REQUIRE(C == Catch::Approx(cert.c1 * std::pow(cert.s1, 1.5) +
                               cert.c2 * pi * pi * std::pow(cert.s1, 2.5))
                     .epsilon(1e-14));

    // less mass to concentrate means a smaller admissible window
    REQUIRE(concentration_threshold(p, 0.5 * p.m, 1.0).s1 < cert.s1);
    // alpha > 1 pulls in the linear-term constraint and changes the window
    const Params p2 = build_params(2, 1.0, 1.0, 2.0, pi);
    const BlowupCertificate cert2 = concentration_threshold(p2, p2.m, 1.0);
    REQUIRE(cert2.s1 > 0.0);
    REQUIRE(cert2.s1 != Catch::Approx(cert.s1).epsilon(1e-6));

    REQUIRE_THROWS_AS(concentration_threshold(p, 0.0, 1.0), param_error);
    REQUIRE_THROWS_AS(concentration_threshold(p, -1.0, 1.0), param_error);
    REQUIRE_THROWS_AS(concentration_threshold(p, p.m * 1.01, 1.0), param_error);
}

TEST_CASE("certificate predicate holds at the threshold", "[blowup]") {
    // across the parameter space, the moment lower bound from concentrated
    // data always lands at or above the larger Riccati root
    std::mt19937 rng(424242);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 2 + int(4.0 * U(rng)) % 4;
        const double beta = 0.05 + 3.95 * U(rng);
        const double alpha = (trial % 3 == 0) ? 1.0 : 1.0 + 2.0 * U(rng);
        const double R = 0.5 + 1.5 * U(rng);
        const double m = 0.1 + 9.9 * U(rng);
        const double m0 = m * (0.05 + 0.95 * U(rng));
        const double C4 = 0.5 + 3.5 * U(rng);
        const Params q = build_params(n, R, beta, alpha, m);
        const BlowupCertificate c = concentration_threshold(q, m0, C4);
        REQUIRE(c.s1 > 0.0);
        REQUIRE(c.s1 < q.Rn());
        worst = std::max(worst, c.predicate);
    }
    REQUIRE(worst <= 1.0 + 1e-12);
}

TEST_CASE("concentration check compares mass inside the core ball", "[blowup]") {
    const Params p = flat_params();
    MassProfile w;
    for (int i = 0; i <= 20; ++i) {
        double s = double(i) / 20.0;
        w.s.push_back(s);
        w.w.push_back(s - 0.5 * s * s);
    }
    BlowupCertificate cert;
    cert.m0 = 0.5;
    cert.s0 = 0.1; // w(0.1) = 0.095 >= 0.5 / (2 pi)
    REQUIRE(check_concentration(w, cert, p));
    cert.s0 = 1e-5; // nothing is concentrated that deep
    REQUIRE_FALSE(check_concentration(w, cert, p));

    MassProfile step;
    step.s = {0.0, 0.05, 0.1, 1.0};
    step.w = {0.0, 0.08, 0.08, 0.5};
    cert.s0 = 0.1;
    REQUIRE(check_concentration(step, cert, p));
}

TEST_CASE("weighted moment of reference profiles", "[blowup]") {
    // w = s/2 against s^{-1/2} (1 - s) integrates to 2/15
    REQUIRE(moment(linear_profile(101), 0.5, 1.0) == Catch::Approx(2.0 / 15.0).epsilon(1e-12));

    MassProfile zero;
    zero.s = {0.0, 0.5, 1.0};
    zero.w = {0.0, 0.0, 0.0};
    REQUIRE(moment(zero, 0.5, 1.0) == 0.0);

    // profiles starting at s = eps behave as if extended by zero below it
    MassProfile tail, padded;
    tail.s = {0.25, 0.5, 1.0};
    tail.w = {0.0, 0.1, 0.2};
    padded.s = {0.0, 0.25, 0.5, 1.0};
    padded.w = {0.0, 0.0, 0.1, 0.2};
    REQUIRE(moment(tail, 0.7, 0.8) == Catch::Approx(moment(padded, 0.7, 0.8)).epsilon(1e-14));

    REQUIRE_THROWS_AS(moment(linear_profile(11), 0.0, 1.0), param_error);
    REQUIRE_THROWS_AS(moment(linear_profile(11), 1.0, 1.0), param_error);
    REQUIRE_THROWS_AS(moment(linear_profile(11), 0.5, 1.5), param_error);
    REQUIRE_THROWS_AS(moment(linear_profile(11), 0.5, 0.0), param_error);
}

TEST_CASE("weighted moment matches adaptive quadrature on random data", "[blowup]") {
    std::mt19937 rng(123);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int M = 12;
        MassProfile w;
        double acc = 0.0;
        for (int i = 0; i < M; ++i) {
            w.s.push_back(std::pow(double(i) / (M - 1), 1.5));
            w.w.push_back(acc);
            acc += U(rng);
        }
        const double gamma = 0.2 + 0.6 * U(rng);
        const double s1 = 0.3 + 0.6 * U(rng);
        const double got = moment(w, gamma, s1);
        // substitute s = z^{1/(1-gamma)} so the integrand is smooth at zero
        const double g1 = 1.0 - gamma;
        auto f = [&](double z) {
            const double s = std::pow(z, 1.0 / g1);
            return (s1 - s) * eval(w, s) / g1;
        };
        const double ref = oracle::integrate(f, 0.0, std::pow(s1, g1), 1e-14);
        REQUIRE(got == Catch::Approx(ref).epsilon(1e-10));
    }
}

TEST_CASE("moment lower bound from concentrated data", "[blowup]") {
    // any profile holding m0/omega_n across [s1/2, s1] beats c3 m0 s1^{2-gamma}
    const Params p = flat_params();
    const double gamma = 0.5, s1 = 0.4, m0 = 0.4 * pi; // m0 / omega_n = 0.2
    const double c3 = blowup_constants(p, gamma, 1.0).c3;
    MassProfile w;
    w.s = {0.0, 0.2, 0.4, 1.0};
    w.w = {0.0, 0.2, 0.2, 0.5};
    const double y = moment(w, gamma, s1);
    const double bound = c3 * m0 * std::pow(s1, 2.0 - gamma);
    REQUIRE(y >= bound - 1e-12);
    REQUIRE(y == Catch::Approx(0.024529418248929475).epsilon(1e-13));
}

TEST_CASE("ODI residual stays nonnegative on a steady run", "[blowup]") {
    InitialDataSpec id;
    id.family = InitialDataSpec::Family::constant;
    id.mass = pi;
    StepControls c;
    c.t_end = 0.05;
    c.snapshot_interval = 0.01;
    Trajectory tr = run_family(id, 200, 2.0, c);
    const BlowupCertificate cert = concentration_threshold(tr.params, tr.params.m, 1.0);
    const OdiSeries odi = odi_residual(tr, cert);
    REQUIRE(odi.t.size() == tr.snapshots.size());
    REQUIRE(odi.residual.front() == 0.0);
    REQUIRE(odi.min_residual >= 0.0);
    REQUIRE(odi.residual.back() > 0.0);

    // two snapshots are not enough to form the time integrals
    Trajectory stub = tr;
    stub.snapshots.resize(2);
    REQUIRE_THROWS_AS(odi_residual(stub, cert), param_error);
}

TEST_CASE("concentrated data satisfies the certified inequality", "[blowup]") {
    InitialDataSpec id;
    id.family = InitialDataSpec::Family::plateau;
    id.plateau_fraction = 0.02;
    id.tail_fraction = 0.045;
    id.mass = 20.0 * pi;
    StepControls c;
    c.t_end = 1.0;
    c.u_cap = 1e5;
    c.snapshot_interval = 1e-5;
    Trajectory tr = run_family(id, 200, 3.0, c);
    REQUIRE(tr.termination == Termination::blowup_declared);

    const BlowupCertificate cert = concentration_threshold(tr.params, tr.params.m, 1.0);
    REQUIRE(check_concentration(tr.snapshots.front(), cert, tr.params));

    const OdiSeries odi = odi_residual(tr, cert);
    REQUIRE(odi.y0 == Catch::Approx(2.239624e-3).epsilon(1e-4));
    REQUIRE(odi.min_residual >= -1e-6 * odi.y0);

    // the Riccati escape time is a (generous) upper bound on the lifespan
    const RiccatiResult rr = certificate_blowup_time(tr.params, cert, odi.y0);
    REQUIRE(rr.supercritical);
    REQUIRE(odi.y0 > rr.y_plus);
    REQUIRE(rr.T == Catch::Approx(2.693389e-3).epsilon(1e-4));
    REQUIRE(tr.snapshots.back().time < rr.T);
}

TEST_CASE("Riccati escape time in closed form", "[blowup]") {
    const RiccatiResult r = subsolution_blowup_time(1.0, 0.0, 1.0, 2.0);
    REQUIRE(r.y_plus == Catch::Approx(1.0).epsilon(1e-15));
    REQUIRE(r.y_minus == Catch::Approx(-1.0).epsilon(1e-15));
    REQUIRE(r.supercritical);
    REQUIRE(r.T == Catch::Approx(0.5 * std::log(3.0)).epsilon(1e-14));

    // at or below the larger root the escape never happens
    REQUIRE_FALSE(subsolution_blowup_time(1.0, 0.0, 1.0, 1.0).supercritical);
    REQUIRE(std::isinf(subsolution_blowup_time(1.0, 0.0, 1.0, 1.0).T));
    REQUIRE(std::isinf(subsolution_blowup_time(1.0, 0.0, 1.0, 0.5).T));

    // pure-quadratic degenerate case: double root at zero
    REQUIRE(subsolution_blowup_time(3.0, 0.0, 0.0, 2.0).T ==
            Catch::Approx(1.0 / 6.0).epsilon(1e-15));

    REQUIRE_THROWS_AS(subsolution_blowup_time(0.0, 0.0, 1.0, 2.0), param_error);
    REQUIRE_THROWS_AS(subsolution_blowup_time(-1.0, 0.0, 1.0, 2.0), param_error);
    REQUIRE_THROWS_AS(subsolution_blowup_time(1.0, -0.1, 1.0, 2.0), param_error);
    REQUIRE_THROWS_AS(subsolution_blowup_time(1.0, 0.0, -0.1, 2.0), param_error);
    REQUIRE_THROWS_AS(subsolution_blowup_time(1.0, 0.0, 1.0, 0.0), param_error);
    REQUIRE_THROWS_AS(subsolution_blowup_time(1.0, 0.0, 1.0, -1.0), param_error);
}

TEST_CASE("Riccati escape time matches direct integration", "[blowup]") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double A = 0.1 + 10.0 * U(rng);
        const double B = 5.0 * U(rng);
        const double C = 0.1 + 10.0 * U(rng);
        const double y_plus = subsolution_blowup_time(A, B, C, 1.0).y_plus;
        const double y0 = y_plus * (1.01 + 3.0 * U(rng));
        const RiccatiResult r = subsolution_blowup_time(A, B, C, y0);
        REQUIRE(r.supercritical);

        // integrate z = 1/y down to (nearly) zero; z' = -(A - B z - C z^2)
        auto zdot = [&](double, double z) { return -(A - B * z - C * z * z); };
        double z = 1.0 / y0, t = 0.0;
        const double dt = z / (A * 40000.0);
        double ref = -1.0;
        for (long k = 0; k < 40000000L; ++k) {
            double k1 = zdot(t, z);
            double k2 = zdot(t + 0.5 * dt, z + 0.5 * dt * k1);
            double k3 = zdot(t + 0.5 * dt, z + 0.5 * dt * k2);
            double k4 = zdot(t + dt, z + dt * k3);
            double zn = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (zn <= 1e-9 / y0) {
                ref = t + dt * (z - 1e-9 / y0) / (z - zn);
                break;
            }
            z = zn;
            t += dt;
        }
        REQUIRE(ref > 0.0);
        REQUIRE(r.T == Catch::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("escape happens exactly above the larger root", "[blowup]") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double A = 0.1 + 10.0 * U(rng);
        const double B = 5.0 * U(rng);
        const double C = 0.1 + 10.0 * U(rng);
        const double y_plus = subsolution_blowup_time(A, B, C, 1.0).y_plus;
        const bool above = (trial % 2 != 0);
        const double factor = above ? 1.03 + 2.0 * U(rng) : 0.3 + 0.67 * U(rng);
        const double y = y_plus * factor;
        const bool pred_ok = (C + B * y) / (A * y * y) <= 1.0;
        REQUIRE(pred_ok == above);
        REQUIRE(subsolution_blowup_time(A, B, C, y).supercritical == above);
    }
}
