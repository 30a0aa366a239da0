// Command-line front end: solve single problems, run (epsilon, delta)
// sweeps, emit convergence series, or run the coupled refinement study.
//
// Exit codes: 0 converged, 2 hit max_iters, 3 line-search failure,
// 4 config error, 5 linear-solve failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include <beckmann/beckmann.hpp>

namespace {

using namespace beckmann;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int threads = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("config", args.config_path, "Path to the config JSON document")->required();
    cmd->add_option("--out-dir", args.out_dir, "Override the output directory");
    cmd->add_option("--threads", args.threads,
                    "Thread budget for linear algebra (solver kernels are serial and "
                    "deterministic regardless)");
    cmd->add_flag("--quiet", args.quiet, "Suppress progress messages");
}

int exit_code(Termination t) {
    switch (t) {
        case Termination::converged: return 0;
        case Termination::max_iters: return 2;
        case Termination::line_search_failed: return 3;
    }
    return 1;
}

Config load(const CommonArgs& args) {
    Config cfg = parse_config(args.config_path);
    if (!args.out_dir.empty()) cfg.output.dir = args.out_dir;
    if (args.threads > 0) Eigen::setNbThreads(args.threads);
    if (!args.quiet)
        for (const auto& note : cfg.notes) std::cerr << "[beckmann] note: " << note << '\n';
    return cfg;
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::string param_tag(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string csv17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_run_files(const RunResult& run, const std::string& dir, const std::string& suffix) {
    const OutputOptions& out = run.cfg.output;
    if (out.flow_csv) write_flow_csv(run.flow, run.problem.mesh, join(dir, "flow" + suffix + ".csv"));
    if (out.report_json)
        write_report_json(run.report, run.cfg, run.metrics, join(dir, "report" + suffix + ".json"));
    if (out.quiver_svg) write_quiver_svg(run.flow, run.problem, join(dir, "field" + suffix + ".svg"));
}

void print_summary(const RunResult& run, bool quiet) {
    if (quiet) return;
    std::cerr << "[beckmann] " << to_string(run.report.termination) << " after "
              << run.report.iteration_count() << " iterations, residual "
              << run.report.final_residual << ", cost " << run.metrics.transport_cost
              << ", duality gap " << run.metrics.duality_gap << '\n';
}

int do_solve(const CommonArgs& args) {
    const Config cfg = load(args);
    SolveReport partial;
    try {
        const RunResult run = run_single(cfg, &partial);
        write_run_files(run, cfg.output.dir, "");
        print_summary(run, args.quiet);
        return exit_code(run.report.termination);
    } catch (const LinearSolveError& e) {
        std::cerr << "[beckmann] linear solve failed after " << partial.iteration_count()
                  << " iterations (residual " << partial.final_residual << "): " << e.what()
                  << '\n';
        return 5;
    }
}

int do_sweep(const CommonArgs& args, const std::vector<double>& epsilons,
             const std::vector<double>& deltas) {
    const Config cfg = load(args);
    int worst = 0;
    const auto per_run = [&](const RunResult& run, const StudyRecord& rec) {
        const std::string suffix =
            "_eps_" + param_tag(rec.epsilon) + "_delta_" + param_tag(rec.delta);
        write_run_files(run, cfg.output.dir, suffix);
        print_summary(run, args.quiet);
        worst = std::max(worst, exit_code(rec.termination));
    };
    const StudyResult result = run_sweep(cfg, epsilons, deltas, per_run);

    std::ofstream out = detail::open_out(join(cfg.output.dir, "summary.csv"));
    out << "epsilon,delta,termination,iterations,transport_cost,objective,duality_gap,"
           "divergence_residual,flow_max_norm\n";
    for (const auto& r : result.records)
        out << csv17(r.epsilon) << ',' << csv17(r.delta) << ',' << to_string(r.termination) << ','
            << r.iterations << ',' << csv17(r.transport_cost) << ',' << csv17(r.objective) << ','
            << csv17(r.duality_gap) << ',' << csv17(r.divergence_residual) << ','
            << csv17(r.flow_max_norm) << '\n';
    return worst;
}

int do_convergence(const CommonArgs& args) {
    const Config cfg = load(args);
    RunResult run;
    const ConvergenceStudy study = run_convergence_study(cfg, &run);

    std::ofstream out = detail::open_out(join(cfg.output.dir, "residuals.csv"));
    out << "iter,residual,sigma,backtracks,objective\n";
    for (const auto& row : study.rows)
        out << row.iter << ',' << csv17(row.residual) << ',' << csv17(row.sigma) << ','
            << row.backtracks << ',' << csv17(row.objective) << '\n';
    write_run_files(run, cfg.output.dir, "");
    print_summary(run, args.quiet);
    return exit_code(study.termination);
}

int do_gamma(const CommonArgs& args, int n_max) {
    const Config cfg = load(args);
    int worst = 0;
    const auto per_run = [&](const RunResult& run, const GammaRow& row) {
        write_run_files(run, cfg.output.dir, "_n" + std::to_string(row.n));
        print_summary(run, args.quiet);
        worst = std::max(worst, exit_code(row.termination));
    };
    const GammaStudy study = run_gamma_study(cfg, n_max, per_run);

    std::ofstream out = detail::open_out(join(cfg.output.dir, "gamma.csv"));
    out << "n,epsilon,delta,coupling,transport_cost,iterations,termination\n";
    for (const auto& row : study.rows)
        out << row.n << ',' << csv17(row.epsilon) << ',' << csv17(row.delta) << ','
            << csv17(row.coupling) << ',' << csv17(row.transport_cost) << ',' << row.iterations
            << ',' << to_string(row.termination) << '\n';
    return worst;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Solver for L^alpha- and Huber-regularized minimal-flow transport on "
                 "rectangles"};
    app.require_subcommand(1);

    CommonArgs solve_args, sweep_args, conv_args, gamma_args;
    std::vector<double> epsilons, deltas;
    int n_max = 6;

    CLI::App* solve_cmd = app.add_subcommand("solve", "Solve one configured problem");
    add_common(solve_cmd, solve_args);

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Solve a grid of (epsilon, delta) pairs");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--eps", epsilons, "Epsilon values")->required()->expected(-1);
    sweep_cmd->add_option("--delta", deltas, "Delta values")->required()->expected(-1);

    CLI::App* conv_cmd =
        app.add_subcommand("convergence", "Solve once and emit the residual-vs-iteration series");
    add_common(conv_cmd, conv_args);

    CLI::App* gamma_cmd = app.add_subcommand(
        "gamma", "Run the coupled schedule epsilon_n = 4^-n, delta_n = 2^-n");
    add_common(gamma_cmd, gamma_args);
    gamma_cmd->add_option("--n-max", n_max, "Last schedule index (default 6)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 4;
    }

    try {
        if (solve_cmd->parsed()) return do_solve(solve_args);
        if (sweep_cmd->parsed()) return do_sweep(sweep_args, epsilons, deltas);
        if (conv_cmd->parsed()) return do_convergence(conv_args);
        if (gamma_cmd->parsed()) return do_gamma(gamma_args, n_max);
    } catch (const ConfigError& e) {
        std::cerr << "[beckmann] " << e.what() << '\n';
        return 4;
    } catch (const LinearSolveError& e) {
        std::cerr << "[beckmann] " << e.what() << '\n';
        return 5;
    } catch (const LineSearchError& e) {
        std::cerr << "[beckmann] " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "[beckmann] invalid configuration: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "[beckmann] error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
