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

Params params_with_alpha(double alpha) { return build_params(2, 1.0, 1.0, alpha, pi); }

// Smooth concentrated-but-mild run used for the comparison and slope checks:
// compactly supported plateau whose profile meets the right boundary flat, so
// the initial data is compatible with the pinned boundary rows.
Trajectory plateau_run() {
    RunConfig cfg;
    cfg.n = 2;
    cfg.N = 400;
    cfg.q = 2.0;
    InitialDataSpec id;
    id.family = InitialDataSpec::Family::plateau;
    id.height = 2.0;
    id.plateau_fraction = 0.3;
    id.tail_fraction = 0.8;
    cfg.initial = id;
    Problem pr = build_problem(cfg);
    StepControls c;
    c.t_end = 0.25;
    c.snapshot_interval = 1.25e-3;
    return simulate(pr.w0, pr.grid, pr.params, c);
}

Trajectory quad_run(double t_end) {
    RunConfig cfg;
    cfg.n = 2;
    cfg.N = 400;
    cfg.q = 2.0;
    InitialDataSpec id;
    id.family = InitialDataSpec::Family::quadratic;
    cfg.initial = id;
    Problem pr = build_problem(cfg);
    StepControls c;
    c.t_end = t_end;
    c.snapshot_interval = t_end / 200.0;
    return simulate(pr.w0, pr.grid, pr.params, c);
}

Trajectory steady_run(double t_end) {
    RunConfig cfg;
    cfg.n = 2;
    cfg.N = 200;
    cfg.q = 2.0;
    InitialDataSpec id;
    id.family = InitialDataSpec::Family::constant;
    cfg.initial = id;
    Problem pr = build_problem(cfg);
    StepControls c;
    c.t_end = t_end;
    c.snapshot_interval = t_end > 0.0 ? t_end / 10.0 : 0.0;
    return simulate(pr.w0, pr.grid, pr.params, c);
}

// Hand-built trajectory holding a fixed profile at the given times.
Trajectory frozen(const Params& p, const Grid& g, double offset,
                  std::initializer_list<double> times) {
    Trajectory tr;
    tr.params = p;
    tr.grid = g;
    for (double tm : times) {
        MassProfile w;
        w.s = g.s;
        w.time = tm;
        for (double s : g.s) w.w.push_back(0.5 * s + offset);
        tr.snapshots.push_back(w);
    }
    return tr;
}

} // namespace

TEST_CASE("barrier ODE closed form", "[barrier]") {
    Params p = flat_params();
    REQUIRE(barrier_value(p, 1.0, 0.0) == 1.0);
    REQUIRE(barrier_value(p, 1.0, 0.25) == Catch::Approx(2.0).epsilon(1e-14));

    auto rhs = [&](double, double y) { return 2.0 * y * y; };
    const double numeric = oracle::rk4(rhs, 1.0, 0.0, 0.25, 1e-5);
    REQUIRE(std::abs(barrier_value(p, 1.0, 0.25) - numeric) / numeric <= 1e-8);

    Params p2 = params_with_alpha(2.0);
    REQUIRE(barrier_value(p2, 1.0, 0.1) == Catch::Approx(std::pow(0.2, -0.5)).epsilon(1e-14));
    auto rhs2 = [&](double, double y) { return 4.0 * y * y * y; };
    const double numeric2 = oracle::rk4(rhs2, 1.0, 0.0, 0.1, 1e-5);
    REQUIRE(std::abs(barrier_value(p2, 1.0, 0.1) - numeric2) / numeric2 <= 1e-8);

    REQUIRE_THROWS_AS(barrier_value(p, 1.0, 0.5), param_error);
    REQUIRE_THROWS_AS(barrier_value(p, 1.0, 0.7), param_error);
    REQUIRE_THROWS_AS(barrier_value(p, 0.0, 0.1), param_error);
    REQUIRE_THROWS_AS(barrier_value(p, 1.0, -0.1), param_error);
}

TEST_CASE("barrier blow-up time", "[barrier]") {
    REQUIRE(barrier_blowup_time(flat_params(), 1.0) == Catch::Approx(0.5).epsilon(1e-15));
    REQUIRE(barrier_blowup_time(flat_params(), 0.5) == Catch::Approx(1.0).epsilon(1e-15));
    REQUIRE(barrier_blowup_time(params_with_alpha(2.0), 1.0) ==
            Catch::Approx(0.125).epsilon(1e-15));
    REQUIRE_THROWS_AS(barrier_blowup_time(flat_params(), 0.0), param_error);
    REQUIRE_THROWS_AS(barrier_blowup_time(flat_params(), -1.0), param_error);
}

TEST_CASE("barrier ODE matches RK4 across parameter draws", "[barrier]") {
    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> dim(2, 4);
    std::uniform_real_distribution<double> alpha(1.0, 3.0), y0d(0.1, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = dim(rng);
        const double a = alpha(rng), y0 = y0d(rng);
        Params p = build_params(n, 1.0, 1.0, a, 1.0);
        const double t_star = barrier_blowup_time(p, y0);
        const double t = 0.9 * t_star;
        const double na = std::pow(double(n), a);
        auto rhs = [&](double, double y) { return na * std::pow(y, a + 1.0); };
        const double numeric = oracle::rk4(rhs, y0, 0.0, t, t / 5000.0);
        const double closed = barrier_value(p, y0, t);
        REQUIRE(std::abs(closed - numeric) / closed <= 1e-6);
    }
}

TEST_CASE("solver runs stay under the linear barrier", "[barrier]") {
    Trajectory steady = steady_run(0.1);
    BarrierCheck bs = check_linear_barrier(steady, 1e-8 * steady.params.w_total());
    REQUIRE(bs.ok);
    REQUIRE(bs.max_violation <= 1e-12);

    Trajectory quad = quad_run(0.25); // y0 = 1, so t_star = 0.5 and we stop halfway
    BarrierCheck bq = check_linear_barrier(quad, 1e-8 * quad.params.w_total());
    REQUIRE(bq.t_star == Catch::Approx(0.5).epsilon(1e-4));
    REQUIRE(bq.ok);
    REQUIRE(bq.max_violation <= 1e-8 * quad.params.w_total());
}

TEST_CASE("barrier check covers edge cases", "[barrier]") {
    // single snapshot at t = 0: w0(s) <= sup(w0_s) s is the mean value inequality
    RunConfig cfg;
    cfg.n = 2;
    cfg.N = 200;
    InitialDataSpec id;
    id.family = InitialDataSpec::Family::quadratic;
    cfg.initial = id;
    Problem pr = build_problem(cfg);
    StepControls c;
    c.t_end = 0.0;
    Trajectory single = simulate(pr.w0, pr.grid, pr.params, c);
    BarrierCheck b0 = check_linear_barrier(single, 1e-12);
    REQUIRE(b0.ok);
    REQUIRE(b0.max_violation <= 1e-12);

    // a trajectory reaching t_star is rejected
    Params p = flat_params();
    Grid g = make_grid(p, 21, 1.0, 0.0);
    Trajectory past = frozen(p, g, 0.0, {0.0, 1.0}); // y0 = 1/2 so t_star = 1
    REQUIRE_THROWS_AS(check_linear_barrier(past, 1e-8), param_error);
}

TEST_CASE("concavity is preserved along concave runs", "[barrier]") {
    Trajectory quad = quad_run(0.25);
    ConcavityCheck cq = check_concavity(quad, 1e-8);
    REQUIRE(cq.hypothesis_ok);
    REQUIRE(cq.ok);
    REQUIRE(cq.max_positive_dd <= 1e-8 * cq.scale);

    Trajectory steady = steady_run(0.1);
    ConcavityCheck cs = check_concavity(steady, 1e-8);
    REQUIRE(cs.hypothesis_ok);
    REQUIRE(cs.max_positive_dd <= 1e-10 * cs.scale);

    // convex data: the lemma's hypothesis fails and nothing is asserted
    Params p = flat_params();
    Grid g = make_grid(p, 31, 1.0, 0.0);
    Trajectory convex;
    convex.params = p;
    convex.grid = g;
    MassProfile w;
    w.s = g.s;
    for (double s : g.s) w.w.push_back(0.5 * s * s);
    convex.snapshots.push_back(w);
    ConcavityCheck cc = check_concavity(convex, 1e-8);
    REQUIRE_FALSE(cc.hypothesis_ok);
    REQUIRE_FALSE(cc.ok);
    REQUIRE(cc.max_positive_dd > 0.0);
}

TEST_CASE("slope bound follows the barrier ODE", "[barrier]") {
    Trajectory steady = steady_run(0.1);
    SlopeBoundCheck ss = check_slope_bound(steady, 1e-12);
    REQUIRE(ss.hypothesis_ok);
    REQUIRE(ss.ok);
    for (const auto& snap : steady.snapshots)
        REQUIRE(sup_slope(snap) == Catch::Approx(steady.params.mu / steady.params.n).epsilon(1e-12));

    Trajectory quad = quad_run(0.25);
    REQUIRE(sup_slope(quad.initial()) == Catch::Approx(1.0).margin(1e-4));
    SlopeBoundCheck sq = check_slope_bound(quad, 1e-8 * sup_slope(quad.initial()));
    REQUIRE(sq.hypothesis_ok);
    REQUIRE(sq.ok);
    REQUIRE(sq.max_excess <= 1e-8);
}

TEST_CASE("transformed operator coefficients", "[barrier]") {
    Params p = flat_params();
    OperatorCoeffs k = transformed_operator_coeffs(p, 0.0);
    REQUIRE(k.a == Catch::Approx(4.0).epsilon(1e-15));
    REQUIRE(k.theta == Catch::Approx(1.5).epsilon(1e-15));
    REQUIRE(k.b == Catch::Approx(2.0).epsilon(1e-15));
    REQUIRE(k.gamma == 0.0);
    REQUIRE(k.c == Catch::Approx(-1.0).epsilon(1e-14));
    REQUIRE(k.delta == 1.0);
    REQUIRE(k.d == 0.0);

    OperatorCoeffs keps = transformed_operator_coeffs(p, 0.25);
    REQUIRE(keps.d == Catch::Approx(0.25).epsilon(1e-14));

    OperatorCoeffs bad = k;
    bad.a = -1.0;
    REQUIRE_THROWS_AS(validate_coeffs(bad), param_error);
    bad = k;
    bad.alpha = 0.0;
    REQUIRE_THROWS_AS(validate_coeffs(bad), param_error);
}

TEST_CASE("a run sits below its moving linear supersolution", "[barrier]") {
    Trajectory run = plateau_run();
    REQUIRE(run.termination == Termination::horizon_reached);
    Trajectory bar = make_barrier_trajectory(run);
    OperatorCoeffs k = transformed_operator_coeffs(run.params, 0.0);
    const double wtot = run.params.w_total();

    ComparisonReport rep = verify_comparison(run, bar, k, 0.15, 1e-8 * wtot);
    REQUIRE(rep.hypotheses_ok);
    REQUIRE(rep.ordered);
    REQUIRE(rep.max_order_violation <= 1e-8 * wtot);
    REQUIRE(rep.residual_lower_max <= 0.15);
    REQUIRE(rep.residual_upper_min >= -1e-10); // barrier residual is >= 0 in theory

    // reflexive: a trajectory neither under- nor over-takes itself
    ComparisonReport self = verify_comparison(run, run, k, 0.15, 1e-8 * wtot);
    REQUIRE(self.max_order_violation == 0.0);
    REQUIRE(self.ordered);
}

TEST_CASE("comparison hypotheses and antisymmetry", "[barrier]") {
    Params p = flat_params();
    Grid g = make_grid(p, 21, 1.0, 0.0);
    Trajectory x = frozen(p, g, 0.0, {0.0, 0.05, 0.1});
    Trajectory y = frozen(p, g, 0.01, {0.0, 0.05, 0.1});
    OperatorCoeffs k = transformed_operator_coeffs(p, 0.0);
    const double tol_order = 1e-8 * p.w_total();

    ComparisonReport fwd = verify_comparison(x, y, k, 0.15, tol_order);
    REQUIRE(fwd.hypotheses_ok);
    REQUIRE(fwd.ordered);
    REQUIRE(fwd.max_order_violation == Catch::Approx(-0.01).epsilon(1e-12));

    ComparisonReport rev = verify_comparison(y, x, k, 0.15, tol_order);
    REQUIRE(std::abs(fwd.max_order_violation + rev.max_order_violation) <= 1e-15);
    REQUIRE_FALSE(rev.ordered);
    REQUIRE_FALSE(rev.hypotheses_ok);
    const auto& failed = rev.failed_hypotheses;
    REQUIRE(std::find(failed.begin(), failed.end(), "initial_ordering") != failed.end());
    REQUIRE(std::find(failed.begin(), failed.end(), "boundary_ordering") != failed.end());

    // fewer than two shared snapshot times cannot support a residual estimate
    Trajectory stub = frozen(p, g, 0.0, {0.0});
    REQUIRE_THROWS_AS(verify_comparison(stub, y, k, 0.15, tol_order), param_error);
}
