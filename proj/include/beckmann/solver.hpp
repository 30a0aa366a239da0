#pragma once

// Semi-smooth Newton driver for the dual problem: minimize the convex energy
// dual_energy over zero-mean potentials. Each iteration solves the bordered
// saddle system enforcing the zero-mean constraint through one scalar
// multiplier, then backtracks along the Newton direction until the Armijo
// condition holds.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "assembly.hpp"
#include "errors.hpp"

namespace beckmann {

struct SolverOptions {
    double sigma0 = 1.0;
    double beta = 0.5;
    double gamma = 0.1;
    double tol = 1e-8;
    int max_iters = 1000;
    int max_backtracks = 60;

    void validate() const {
        if (!(sigma0 > 0.0)) throw std::invalid_argument("SolverOptions: sigma0 must be positive");
        if (!(beta > 0.0 && beta < 1.0))
            throw std::invalid_argument("SolverOptions: beta must lie in (0,1)");
        if (!(gamma > 0.0 && gamma < 1.0))
            throw std::invalid_argument("SolverOptions: gamma must lie in (0,1)");
        if (!(tol > 0.0)) throw std::invalid_argument("SolverOptions: tol must be positive");
        if (max_iters < 0) throw std::invalid_argument("SolverOptions: max_iters must be >= 0");
        if (max_backtracks < 0)
            throw std::invalid_argument("SolverOptions: max_backtracks must be >= 0");
    }
};

enum class Termination { converged, max_iters, line_search_failed };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iters: return "max_iters";
        case Termination::line_search_failed: return "line_search_failed";
    }
    return "unknown";
}

/// One accepted Newton step. `residual` is measured before the step,
/// `objective` after it.
struct IterationRecord {
    int iter = 0;
    double residual = 0.0;
    double sigma = 0.0;
    int backtracks = 0;
    double objective = 0.0;
    double seconds = 0.0;
};

struct SolveReport {
    std::vector<IterationRecord> iterations;
    Termination termination = Termination::converged;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double final_residual = 0.0;
    double total_seconds = 0.0;

    int iteration_count() const { return static_cast<int>(iterations.size()); }
};

struct SaddleSolution {
    Eigen::VectorXd eta;
    double multiplier = 0.0;
};

/// Solve [[A, c],[c^T, 0]] [eta; r] = [rhs; 0] with c = M*1 by a sparse
/// direct factorization of the bordered system. The constraint row pins the
/// M-weighted mean of eta to zero, which removes the constant kernel of A.
/// The residual of the full bordered system is checked a posteriori.
inline SaddleSolution solve_saddle(const Eigen::SparseMatrix<double>& A,
                                   const Eigen::SparseMatrix<double>& M,
                                   const Eigen::VectorXd& rhs) {
    const int n = static_cast<int>(A.rows());
    const Eigen::VectorXd c = M * Eigen::VectorXd::Ones(n);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(A.nonZeros()) + 2 * n);
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                               it.value());
    for (int i = 0; i < n; ++i) {
        trips.emplace_back(i, n, c[i]);
        trips.emplace_back(n, i, c[i]);
    }
    Eigen::SparseMatrix<double> K(n + 1, n + 1);
    K.setFromTriplets(trips.begin(), trips.end());

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success)
        throw LinearSolveError("solve_saddle: factorization of the bordered system failed",
                               std::numeric_limits<double>::infinity());

    Eigen::VectorXd full_rhs(n + 1);
    full_rhs.head(n) = rhs;
    full_rhs[n] = 0.0;
    const Eigen::VectorXd x = lu.solve(full_rhs);

    SaddleSolution sol;
    sol.eta = x.head(n);
    sol.multiplier = x[n];

    const double defect = std::hypot((A * sol.eta + sol.multiplier * c - rhs).norm(),
                                     c.dot(sol.eta));
    const double bound = 1e-9 * std::max(rhs.norm(), 1e-300);
    if (!(defect <= bound))
        throw LinearSolveError("solve_saddle: residual check failed (" +
                                   std::to_string(defect) + " > " + std::to_string(bound) + ")",
                               defect);
    return sol;
}

struct LineSearchResult {
    double sigma = 0.0;
    int backtracks = 0;
    double objective = 0.0;
};

namespace detail {

/// Backtracking with precomputed objective value and directional derivative
/// (slope must equal -(b+d).eta and j0 must equal dual_energy(pd, y, d)).
inline LineSearchResult armijo_backtrack(const ProblemData& pd, const Potential& y,
                                         const Eigen::VectorXd& eta, const SolverOptions& opts,
                                         double j0, double slope, const Eigen::VectorXd& d) {
    if (!(slope < 0.0))
        throw LineSearchError("armijo: direction is not a descent direction (slope " +
                              std::to_string(slope) + ")");
    double sigma = opts.sigma0;
    Potential trial;
    for (int k = 0; k <= opts.max_backtracks; ++k) {
        trial.coeffs = y.coeffs + sigma * eta;
        const double jt = dual_energy(pd, trial, d);
        if (jt <= j0 + opts.gamma * sigma * slope) return {sigma, k, jt};
        sigma *= opts.beta;
    }
    throw LineSearchError("armijo: no acceptable step within " +
                          std::to_string(opts.max_backtracks) + " backtracks (j0 " +
                          std::to_string(j0) + ", slope " + std::to_string(slope) + ")");
}

} // namespace detail

/// Largest sigma in {sigma0 * beta^k} satisfying the Armijo decrease
/// condition on the dual energy. The direction must be a descent direction.
inline LineSearchResult armijo(const ProblemData& pd, const Potential& y,
                               const Eigen::VectorXd& eta, const SolverOptions& opts = {}) {
    opts.validate();
    const Eigen::VectorXd d = assemble_load(pd);
    const Eigen::VectorXd b = assemble_flux_vector(pd, y);
    const double slope = -(b + d).dot(eta);
    return detail::armijo_backtrack(pd, y, eta, opts, dual_energy(pd, y, d), slope, d);
}

/// Semi-smooth Newton iteration. Starts from y0 (default 0), keeps iterates
/// at zero M-weighted mean, and stops when the relative optimality residual
/// drops below opts.tol or max_iters is reached. A line-search failure ends
/// the run with a complete report (termination = line_search_failed); a
/// linear-solve failure throws, after copying the progress so far into
/// *partial if given.
inline std::pair<Potential, SolveReport> newton_solve(const ProblemData& pd,
                                                      const SolverOptions& opts = {},
                                                      std::optional<Potential> y0 = {},
                                                      SolveReport* partial = nullptr) {
    using clock = std::chrono::steady_clock;
    opts.validate();
    pd.validate();
    if (!(pd.params.delta > 0.0))
        throw std::invalid_argument("newton_solve: delta must be positive");

    const int n = pd.mesh.node_count();
    Potential y = y0 ? std::move(*y0) : Potential::zeros(n);
    if (y.coeffs.size() != n)
        throw std::invalid_argument("newton_solve: y0 size does not match mesh");

    const Eigen::SparseMatrix<double> M = assemble_mass(pd.mesh);
    const Eigen::VectorXd c = M * Eigen::VectorXd::Ones(n);
    const double volume = c.sum();
    const auto recenter = [&](Potential& p) { p.coeffs.array() -= c.dot(p.coeffs) / volume; };
    recenter(y);

    const Eigen::VectorXd d = assemble_load(pd);

    SolveReport report;
    report.initial_objective = dual_energy(pd, y, d);

    const auto t_start = clock::now();
    // y is already re-centered on every path that reaches finish; touching it
    // here would detach the returned point from the measured residual.
    const auto finish = [&](Termination why, double res) {
        report.termination = why;
        report.final_residual = res;
        report.final_objective = dual_energy(pd, y, d);
        report.total_seconds = std::chrono::duration<double>(clock::now() - t_start).count();
        return std::make_pair(std::move(y), std::move(report));
    };

    for (int k = 0; k < opts.max_iters; ++k) {
        const auto t_iter = clock::now();
        const Eigen::VectorXd b = assemble_flux_vector(pd, y);
        const double res = residual_from(b, d);
        if (res < opts.tol) return finish(Termination::converged, res);

        const Eigen::VectorXd rhs = b + d;
        SaddleSolution sol;
        try {
            sol = solve_saddle(assemble_newton_matrix(pd, y), M, rhs);
        } catch (const LinearSolveError&) {
            if (partial) {
                *partial = report;
                partial->termination = Termination::max_iters;
                partial->final_residual = res;
                partial->final_objective = dual_energy(pd, y, d);
            }
            throw;
        }

        LineSearchResult ls;
        try {
            const double j0 = report.iterations.empty() ? report.initial_objective
                                                        : report.iterations.back().objective;
            ls = detail::armijo_backtrack(pd, y, sol.eta, opts, j0, -rhs.dot(sol.eta), d);
        } catch (const LineSearchError&) {
            return finish(Termination::line_search_failed, res);
        }

        y.coeffs += ls.sigma * sol.eta;
        recenter(y);

        // Record the objective accepted by the line search: the Armijo test
        // jt <= j0 + gamma*sigma*slope with slope < 0 makes the recorded
        // series strictly decreasing, exactly. Re-centering only perturbs the
        // value at rounding level and is not re-measured here.
        IterationRecord rec;
        rec.iter = k;
        rec.residual = res;
        rec.sigma = ls.sigma;
        rec.backtracks = ls.backtracks;
        rec.objective = ls.objective;
        rec.seconds = std::chrono::duration<double>(clock::now() - t_iter).count();
        report.iterations.push_back(rec);
    }
    return finish(Termination::max_iters, optimality_residual(pd, y));
}

} // namespace beckmann
