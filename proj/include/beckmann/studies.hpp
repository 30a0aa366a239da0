#pragma once

// Experiment orchestration: single runs, (epsilon, delta) sweeps, residual
// convergence series, and the coupled epsilon-delta refinement study.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "flow.hpp"
#include "solver.hpp"

namespace beckmann {

/// Everything one solve produces, kept in memory; file emission is the
/// caller's business.
struct RunResult {
    Config cfg;
    ProblemData problem;
    Potential y;
    SolveReport report;
    FlowField flow;
    FlowMetrics metrics;
};

inline RunResult run_single(const Config& cfg, SolveReport* partial = nullptr) {
    RunResult run;
    run.cfg = cfg;
    run.problem = generate_problem(cfg);
    auto [y, report] = newton_solve(run.problem, cfg.solver, {}, partial);
    run.y = std::move(y);
    run.report = std::move(report);
    run.flow = recover_flow(run.problem, run.y);
    run.flow.mesh = &run.problem.mesh;
    run.metrics = flow_metrics(run.problem, run.y, run.flow);
    return run;
}

struct StudyRecord {
    double epsilon = 0.0;
    double delta = 0.0;
    Termination termination = Termination::converged;
    int iterations = 0;
    double transport_cost = 0.0;
    double objective = 0.0;
    double duality_gap = 0.0;
    double divergence_residual = 0.0;
    double flow_max_norm = 0.0;
};

struct StudyResult {
    std::vector<StudyRecord> records;
};

inline StudyRecord make_record(const RunResult& run) {
    StudyRecord rec;
    rec.epsilon = run.cfg.params.epsilon;
    rec.delta = run.cfg.params.delta;
    rec.termination = run.report.termination;
    rec.iterations = run.report.iteration_count();
    rec.transport_cost = run.metrics.transport_cost;
    rec.objective = run.report.final_objective;
    rec.duality_gap = run.metrics.duality_gap;
    rec.divergence_residual = run.metrics.divergence_residual;
    rec.flow_max_norm = run.metrics.max_norm;
    return rec;
}

/// Solve every (epsilon, delta) pair (epsilon outer, delta inner), one
/// independent run each. per_run, when given, sees each finished run in
/// order, e.g. to write per-pair outputs.
inline StudyResult run_sweep(
    const Config& cfg, const std::vector<double>& epsilons, const std::vector<double>& deltas,
    const std::function<void(const RunResult&, const StudyRecord&)>& per_run = {}) {
    StudyResult result;
    for (double eps : epsilons) {
        for (double delta : deltas) {
            Config c = cfg;
            c.params = RegParams(eps, delta, cfg.params.alpha);
            const RunResult run = run_single(c);
            const StudyRecord rec = make_record(run);
            result.records.push_back(rec);
            if (per_run) per_run(run, rec);
        }
    }
    return result;
}

struct ConvergenceRow {
    int iter = 0;
    double residual = 0.0;
    double sigma = 0.0;
    int backtracks = 0;
    double objective = 0.0;
};

/// Residual-vs-iteration series of one solve: one row per Newton step
/// (residual measured before the step) plus a final row at the last iterate.
struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    Termination termination = Termination::converged;
    bool hit_max_iters = false;
};

inline ConvergenceStudy run_convergence_study(const Config& cfg, RunResult* out_run = nullptr) {
    RunResult run = run_single(cfg);
    ConvergenceStudy study;
    study.termination = run.report.termination;
    study.hit_max_iters = run.report.termination == Termination::max_iters;
    for (const auto& it : run.report.iterations)
        study.rows.push_back({it.iter, it.residual, it.sigma, it.backtracks, it.objective});
    study.rows.push_back({run.report.iteration_count(), run.report.final_residual, 0.0, 0,
                          run.report.final_objective});
    if (out_run) *out_run = std::move(run);
    return study;
}

struct GammaRow {
    int n = 0;
    double epsilon = 0.0;
    double delta = 0.0;
    double coupling = 0.0; // epsilon * h(delta)^alpha with h(delta) = delta^(-1/2)
    double transport_cost = 0.0;
    int iterations = 0;
    Termination termination = Termination::converged;
};

struct GammaStudy {
    std::vector<GammaRow> rows;
};

/// Coupled refinement schedule epsilon_n = 4^-n, delta_n = 2^-n for
/// n = 1..n_max. With h(delta) = delta^(-1/2) and alpha = 2 the coupling
/// epsilon_n * h(delta_n)^alpha equals 2^-n, so it vanishes as n grows;
/// transport costs along the schedule track the unregularized problem.
inline GammaStudy run_gamma_study(
    const Config& cfg, int n_max,
    const std::function<void(const RunResult&, const GammaRow&)>& per_run = {}) {
    if (n_max < 0) throw std::invalid_argument("run_gamma_study: n_max must be >= 0");
    GammaStudy study;
    for (int n = 1; n <= n_max; ++n) {
        Config c = cfg;
        const double eps = std::pow(4.0, -n);
        const double delta = std::pow(2.0, -n);
        c.params = RegParams(eps, delta, cfg.params.alpha);
        const RunResult run = run_single(c);
        GammaRow row;
        row.n = n;
        row.epsilon = eps;
        row.delta = delta;
        row.coupling = eps * std::pow(std::pow(delta, -0.5), cfg.params.alpha);
        row.transport_cost = run.metrics.transport_cost;
        row.iterations = run.report.iteration_count();
        row.termination = run.report.termination;
        study.rows.push_back(row);
        if (per_run) per_run(run, row);
    }
    return study;
}

} // namespace beckmann
