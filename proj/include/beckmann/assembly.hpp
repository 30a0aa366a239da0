#pragma once

// Finite element assembly for the dual formulation. The discrete unknown is
// a P1 potential y; all integrands are piecewise constant or piecewise
// polynomial per triangle, so every integral below is exact (no quadrature
// error). Assembly order is fixed by triangle index, which makes results
// bit-reproducible.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mesh.hpp"
#include "model.hpp"

namespace beckmann {

/// Nodal coefficients of a P1 potential. Solver routines keep the M-weighted
/// mean at zero so the singular dual problem has a unique representative.
struct Potential {
    Eigen::VectorXd coeffs;

    static Potential zeros(int n) { return Potential{Eigen::VectorXd::Zero(n)}; }
};

/// A discretized problem instance: mesh, per-cell cost w, per-cell source
/// and sink densities (both normalized to unit total mass), and the
/// regularization parameters.
struct ProblemData {
    Mesh mesh;
    std::vector<double> cost;   // per cell, > 0
    std::vector<double> source; // per cell, >= 0, mass 1
    std::vector<double> sink;   // per cell, >= 0, mass 1
    RegParams params;

    void validate() const {
        const size_t cells = static_cast<size_t>(mesh.cell_count());
        if (cost.size() != cells || source.size() != cells || sink.size() != cells)
            throw std::invalid_argument("ProblemData: field sizes do not match grid");
        for (double w : cost)
            if (!(w > 0.0)) throw std::invalid_argument("ProblemData: cost must be positive");
        long double mass_src = 0.0L, mass_snk = 0.0L;
        const double ca = mesh.cell_area();
        for (size_t c = 0; c < cells; ++c) {
            if (source[c] < 0.0 || sink[c] < 0.0)
                throw std::invalid_argument("ProblemData: marginal densities must be nonnegative");
            mass_src += static_cast<long double>(source[c]) * ca;
            mass_snk += static_cast<long double>(sink[c]) * ca;
        }
        if (std::fabs(static_cast<double>(mass_src - 1.0L)) > 1e-12 ||
            std::fabs(static_cast<double>(mass_snk - 1.0L)) > 1e-12)
            throw std::invalid_argument("ProblemData: marginals must have unit mass");
    }
};

/// Gradient of a P1 potential on one triangle.
inline Eigen::Vector2d element_gradient(const Potential& y, const Mesh& mesh, int t,
                                        const ElementGeometry& geo) {
    const auto& tri = mesh.triangles[t];
    return y.coeffs[tri[0]] * geo.grad[0] + y.coeffs[tri[1]] * geo.grad[1] +
           y.coeffs[tri[2]] * geo.grad[2];
}

/// Load vector d_i = integral of phi_i against (source - sink). Piecewise
/// constant densities integrate to density * area/3 per vertex.
inline Eigen::VectorXd assemble_load(const ProblemData& pd) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(pd.mesh.node_count());
    for (int t = 0; t < pd.mesh.triangle_count(); ++t) {
        const int cell = pd.mesh.cell_of_triangle(t);
        const double mu = pd.source[cell] - pd.sink[cell];
        if (mu == 0.0) continue;
        const double contrib = mu * element_geometry(pd.mesh, t).area / 3.0;
        for (int k = 0; k < 3; ++k) d[pd.mesh.triangles[t][k]] += contrib;
    }
    return d;
}

/// Flux vector b_i(y) = integral of flux(w, -grad y) . grad phi_i.
inline Eigen::VectorXd assemble_flux_vector(const ProblemData& pd, const Potential& y) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(pd.mesh.node_count());
    for (int t = 0; t < pd.mesh.triangle_count(); ++t) {
        const ElementGeometry geo = element_geometry(pd.mesh, t);
        const double w = pd.cost[pd.mesh.cell_of_triangle(t)];
        const Eigen::Vector2d q = flux(w, -element_gradient(y, pd.mesh, t, geo), pd.params);
        for (int k = 0; k < 3; ++k)
            b[pd.mesh.triangles[t][k]] += geo.area * q.dot(geo.grad[k]);
    }
    return b;
}

/// Newton matrix A(y)_ij = integral of grad phi_i . flux_jacobian(w, -grad y)
/// grad phi_j. Symmetric positive semidefinite with kernel spanned by
/// constants; the flux_jacobian kink convention keeps it uniformly definite
/// on the zero-mean subspace for delta > 0.
inline Eigen::SparseMatrix<double> assemble_newton_matrix(const ProblemData& pd,
                                                          const Potential& y) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(9) * pd.mesh.triangle_count());
    for (int t = 0; t < pd.mesh.triangle_count(); ++t) {
        const ElementGeometry geo = element_geometry(pd.mesh, t);
        const double w = pd.cost[pd.mesh.cell_of_triangle(t)];
        const Eigen::Matrix2d J =
            flux_jacobian(w, -element_gradient(y, pd.mesh, t, geo), pd.params);
        const auto& tri = pd.mesh.triangles[t];
        std::array<Eigen::Vector2d, 3> Jg;
        for (int k = 0; k < 3; ++k) Jg[k] = J * geo.grad[k];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                trips.emplace_back(tri[r], tri[c], geo.area * geo.grad[r].dot(Jg[c]));
    }
    Eigen::SparseMatrix<double> A(pd.mesh.node_count(), pd.mesh.node_count());
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

/// Dual objective with a precomputed load vector (must equal
/// assemble_load(pd)).
inline double dual_energy(const ProblemData& pd, const Potential& y, const Eigen::VectorXd& d) {
    double acc = 0.0;
    for (int t = 0; t < pd.mesh.triangle_count(); ++t) {
        const ElementGeometry geo = element_geometry(pd.mesh, t);
        const double w = pd.cost[pd.mesh.cell_of_triangle(t)];
        acc += geo.area * energy_density(w, -element_gradient(y, pd.mesh, t, geo), pd.params);
    }
    return acc - d.dot(y.coeffs);
}

/// Dual objective: integral of energy_density(w, -grad y) minus the pairing
/// of y with (source - sink). Convex; its gradient is -(b + d).
inline double dual_energy(const ProblemData& pd, const Potential& y) {
    return dual_energy(pd, y, assemble_load(pd));
}

/// Relative first-order optimality residual ||b + d|| / max(||b||, ||d||,
/// 1e-300). The floor keeps the balanced problem (d = 0, y = 0) at exactly 0.
inline double residual_from(const Eigen::VectorXd& b, const Eigen::VectorXd& d) {
    const double denom = std::max({b.norm(), d.norm(), 1e-300});
    return (b + d).norm() / denom;
}

inline double optimality_residual(const ProblemData& pd, const Potential& y) {
    return residual_from(assemble_flux_vector(pd, y), assemble_load(pd));
}

} // namespace beckmann
