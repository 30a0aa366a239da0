#pragma once

// Primal post-processing: the flow field recovered from a dual potential,
// its transport cost, the weak-divergence defect, the duality gap, and the
// block-averaged arrow field used for visualization.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "assembly.hpp"
#include "model.hpp"

namespace beckmann {

/// Piecewise-constant flow, one vector per triangle. Stored exactly as
/// recovered; no interpolation to nodes.
struct FlowField {
    const Mesh* mesh = nullptr;
    std::vector<Eigen::Vector2d> q;

    int size() const { return static_cast<int>(q.size()); }
};

/// q_T = flux(w_T, -grad y|_T) per triangle.
inline FlowField recover_flow(const ProblemData& pd, const Potential& y) {
    FlowField f;
    f.mesh = &pd.mesh;
    f.q.resize(static_cast<size_t>(pd.mesh.triangle_count()));
    for (int t = 0; t < pd.mesh.triangle_count(); ++t) {
        const ElementGeometry geo = element_geometry(pd.mesh, t);
        const double w = pd.cost[pd.mesh.cell_of_triangle(t)];
        f.q[t] = flux(w, -element_gradient(y, pd.mesh, t, geo), pd.params);
    }
    return f;
}

/// Weak-divergence defect of q against the marginals: the norm of the vector
/// with entries (integral of q . grad phi_i) + (integral of phi_i dmu),
/// relative to max(||sum of flux integrals||, ||d||, 1e-300). Equals
/// optimality_residual(pd, y) exactly when q = recover_flow(pd, y).
inline double divergence_residual(const ProblemData& pd, const FlowField& f) {
    Eigen::VectorXd bq = Eigen::VectorXd::Zero(pd.mesh.node_count());
    for (int t = 0; t < pd.mesh.triangle_count(); ++t) {
        const ElementGeometry geo = element_geometry(pd.mesh, t);
        for (int k = 0; k < 3; ++k)
            bq[pd.mesh.triangles[t][k]] += geo.area * f.q[t].dot(geo.grad[k]);
    }
    return residual_from(bq, assemble_load(pd));
}

/// Transport cost: sum over triangles of area * w * |q|.
inline double transport_cost(const ProblemData& pd, const FlowField& f) {
    double acc = 0.0;
    for (int t = 0; t < pd.mesh.triangle_count(); ++t) {
        const double area = element_geometry(pd.mesh, t).area;
        acc += area * pd.cost[pd.mesh.cell_of_triangle(t)] * f.q[t].norm();
    }
    return acc;
}

/// Duality gap: dual_energy(y) + integral of energy_conjugate(w, q).
/// Zero at an optimal feasible primal-dual pair; meaningful only together
/// with divergence_residual since a recovered q is only approximately
/// divergence-feasible.
inline double duality_gap(const ProblemData& pd, const Potential& y, const FlowField& f) {
    double conj = 0.0;
    for (int t = 0; t < pd.mesh.triangle_count(); ++t) {
        const double area = element_geometry(pd.mesh, t).area;
        conj += area * energy_conjugate(pd.cost[pd.mesh.cell_of_triangle(t)], f.q[t], pd.params);
    }
    return dual_energy(pd, y) + conj;
}

inline double max_flow_norm(const FlowField& f) {
    double m = 0.0;
    for (const auto& v : f.q) m = std::max(m, v.norm());
    return m;
}

/// The standard post-solve diagnostics bundle.
struct FlowMetrics {
    double transport_cost = 0.0;
    double duality_gap = 0.0;
    double divergence_residual = 0.0;
    double max_norm = 0.0;
};

inline FlowMetrics flow_metrics(const ProblemData& pd, const Potential& y, const FlowField& f) {
    return {transport_cost(pd, f), duality_gap(pd, y, f), divergence_residual(pd, f),
            max_flow_norm(f)};
}

/// Block-averaged arrow field for quiver plots: mean of q over each 2x2 cell
/// block (8 triangles), with arrows at or below 1% of the largest averaged
/// norm zeroed out. Odd trailing rows/columns are truncated.
struct ArrowField {
    int bx = 0, by = 0;
    std::vector<Eigen::Vector2d> centers;
    std::vector<Eigen::Vector2d> arrows; // zeroed when filtered
    double max_norm = 0.0;

    int survivor_count() const {
        int n = 0;
        for (const auto& a : arrows)
            if (a.x() != 0.0 || a.y() != 0.0) ++n;
        return n;
    }
};

inline ArrowField downsample(const FlowField& f, const Mesh& mesh) {
    ArrowField af;
    af.bx = mesh.nx / 2;
    af.by = mesh.ny / 2;
    af.centers.reserve(static_cast<size_t>(af.bx) * af.by);
    af.arrows.reserve(static_cast<size_t>(af.bx) * af.by);

    for (int bj = 0; bj < af.by; ++bj) {
        for (int bi = 0; bi < af.bx; ++bi) {
            Eigen::Vector2d mean = Eigen::Vector2d::Zero();
            for (int dj = 0; dj < 2; ++dj)
                for (int di = 0; di < 2; ++di) {
                    const int cell = mesh.cell_index(2 * bi + di, 2 * bj + dj);
                    mean += f.q[2 * cell] + f.q[2 * cell + 1];
                }
            mean /= 8.0;
            af.arrows.push_back(mean);
            af.centers.emplace_back(mesh.domain.x0 + (2 * bi + 1) * mesh.hx(),
                                    mesh.domain.y0 + (2 * bj + 1) * mesh.hy());
            af.max_norm = std::max(af.max_norm, mean.norm());
        }
    }
    for (auto& a : af.arrows)
        if (!(a.norm() > 0.01 * af.max_norm)) a.setZero();
    return af;
}

} // namespace beckmann
