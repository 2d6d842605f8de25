#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "ksflow/config.hpp"
#include "ksflow/io.hpp"
#include "ksflow/pipeline.hpp"
#include "ksflow/solver.hpp"

namespace ksflow {

namespace detail {

// Apply one swept knob to a cell's config.  Axis names mirror the config keys
// they override.
inline void apply_axis(RunConfig& cfg, const std::string& name, double v) {
    auto need_initial = [&]() {
        if (!cfg.initial)
            throw config_error("config: sweep axis '" + name + "' needs an initial_data block");
    };
    if (name == "alpha") cfg.alpha = v;
    else if (name == "beta") cfg.beta = v;
    else if (name == "R") cfg.R = v;
    else if (name == "n") {
        const long long k = std::llround(v);
        if (std::abs(v - double(k)) > 1e-9)
            throw config_error("config: sweep axis 'n' takes integer values");
        cfg.n = static_cast<int>(k);
    } else if (name == "N") {
        const long long k = std::llround(v);
        if (std::abs(v - double(k)) > 1e-9)
            throw config_error("config: sweep axis 'N' takes integer values");
        cfg.N = static_cast<int>(k);
    } else if (name == "q") cfg.q = v;
    else if (name == "epsilon") cfg.epsilon = v;
    else if (name == "t_end") cfg.controls.t_end = v;
    else if (name == "u_cap") cfg.controls.u_cap = v;
    else if (name == "scale") { need_initial(); cfg.initial->scale = v; }
    else if (name == "plateau_fraction") { need_initial(); cfg.initial->plateau_fraction = v; }
    else if (name == "tail_fraction") { need_initial(); cfg.initial->tail_fraction = v; }
    else if (name == "height") { need_initial(); cfg.initial->height = v; }
    else if (name == "mass") { need_initial(); cfg.initial->mass = v; }
    else if (name == "m0") cfg.threshold.m0 = v;
    else if (name == "C4") cfg.threshold.C4 = v;
    else if (name == "gamma") cfg.threshold.gamma = v;
    else throw config_error("config: unknown sweep axis '" + name + "'");
}

} // namespace detail

struct SweepRow {
    std::size_t cell = 0;
    std::vector<double> axis_values;
    Termination termination = Termination::horizon_reached;
    std::string outcome;
    double t_final = 0.0;
    double sup_u_final = 0.0;
    double blowup_time = std::numeric_limits<double>::quiet_NaN();
    BlowupCertificate cert;
    bool concentrated = false;
};

struct SweepResult {
    std::vector<std::string> axis_names;
    std::vector<SweepRow> rows;
};

// Expand the cartesian product of the sweep axes into per-cell configs, last
// axis varying fastest.  Every cell is validated (parameters, grid, initial
// data) before any simulation starts, so bad cells surface as config errors
// rather than mid-sweep surprises.
inline std::vector<RunConfig> expand_sweep(const RunConfig& base) {
    if (base.sweep_axes.empty()) throw config_error("config: sweep needs a 'sweep' block");
    std::size_t cells = 1;
    for (const auto& ax : base.sweep_axes) cells *= ax.values.size();

    std::vector<RunConfig> out;
    out.reserve(cells);
    std::vector<std::size_t> idx(base.sweep_axes.size(), 0);
    for (std::size_t c = 0; c < cells; ++c) {
        RunConfig cfg = base;
        cfg.sweep_axes.clear();
        for (std::size_t a = 0; a < base.sweep_axes.size(); ++a)
            detail::apply_axis(cfg, base.sweep_axes[a].name, base.sweep_axes[a].values[idx[a]]);
        out.push_back(std::move(cfg));
        for (std::size_t a = base.sweep_axes.size(); a-- > 0;) {
            if (++idx[a] < base.sweep_axes[a].values.size()) break;
            idx[a] = 0;
        }
    }

    for (std::size_t c = 0; c < cells; ++c) {
        try {
            (void)build_problem(out[c]);
            validate_controls(out[c].controls);
        } catch (const std::exception& e) {
            throw config_error("config: sweep cell " + std::to_string(c) + ": " + e.what());
        }
    }
    return out;
}

inline SweepRow run_sweep_cell(const RunConfig& cfg, std::size_t index,
                               const std::vector<SweepAxis>& axes) {
    Problem prob = build_problem(cfg);
    Trajectory traj = simulate(prob.w0, prob.grid, prob.params, cfg.controls);

    SweepRow row;
    row.cell = index;
    std::size_t rem = index;
    std::vector<std::size_t> idx(axes.size(), 0);
    for (std::size_t a = axes.size(); a-- > 0;) {
        idx[a] = rem % axes[a].values.size();
        rem /= axes[a].values.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a) row.axis_values.push_back(axes[a].values[idx[a]]);

    row.termination = traj.termination;
    row.outcome = classify_outcome(traj);
    row.t_final = traj.final_state().time;
    row.sup_u_final = prob.params.n * sup_slope(traj.final_state());
    if (traj.termination == Termination::blowup_declared) row.blowup_time = row.t_final;

    const double sup_u0 = prob.params.n * sup_slope(traj.initial());
    row.cert = build_certificate(cfg, prob.params, sup_u0);
    row.concentrated = check_concentration(prob.w0_full, row.cert, prob.params);
    return row;
}

// Run every cell on a pool of `workers` threads.  Rows land in preallocated
// slots keyed by cell index, so the merged output is deterministic regardless
// of worker count or scheduling.
inline SweepResult run_sweep(const RunConfig& base, int workers) {
    std::vector<RunConfig> cells = expand_sweep(base);
    if (workers < 1) throw config_error("config: worker count must be >= 1");
    const std::size_t nw = std::min<std::size_t>(workers, cells.size());

    SweepResult result;
    for (const auto& ax : base.sweep_axes) result.axis_names.push_back(ax.name);
    result.rows.resize(cells.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= cells.size()) return;
            try {
                result.rows[c] = run_sweep_cell(cells[c], c, base.sweep_axes);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    if (nw <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < nw; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return result;
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "cell";
    for (const auto& name : result.axis_names) out << "," << name;
    out << ",termination,outcome,t_final,sup_u_final,blowup_time,"
           "gamma,s1,s0,r0,predicate,concentrated\n";
    for (const auto& row : result.rows) {
        out << row.cell;
        for (double v : row.axis_values) out << "," << fmt17(v);
        out << "," << to_string(row.termination) << "," << row.outcome;
        out << "," << fmt17(row.t_final) << "," << fmt17(row.sup_u_final);
        out << ",";
        if (!std::isnan(row.blowup_time)) out << fmt17(row.blowup_time);
        out << "," << fmt17(row.cert.gamma) << "," << fmt17(row.cert.s1) << ","
            << fmt17(row.cert.s0) << "," << fmt17(row.cert.r0) << ","
            << fmt17(row.cert.predicate) << "," << (row.concentrated ? 1 : 0) << "\n";
    }
}

inline void write_sweep_csv(const std::string& path, const SweepResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    write_sweep_csv(out, result);
    if (!out) throw io_error("write failed: " + path);
}

} // namespace ksflow
