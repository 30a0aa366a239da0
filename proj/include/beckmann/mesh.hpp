#pragma once

// Structured triangulations of axis-aligned rectangles: every grid cell is
// split along its lower-left to upper-right diagonal into two triangles.
// Piecewise-constant data (cost, marginals) lives on grid cells; piecewise
// linear finite element functions live on nodes.

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace beckmann {

struct Rect {
    double x0 = 0.0, x1 = 1.0;
    double y0 = 0.0, y1 = 1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

/// Uniform triangulated grid. Nodes are ordered row-major from the lower-left
/// corner (node (i,j) has index j*(nx+1)+i); cells likewise (cell (i,j) has
/// index j*nx+i). Cell c owns triangles 2c (lower, below the diagonal) and
/// 2c+1 (upper). All triangles are counter-clockwise.
struct Mesh {
    Rect domain;
    int nx = 0;
    int ny = 0;
    std::vector<Eigen::Vector2d> nodes;
    std::vector<std::array<int, 3>> triangles;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
    int cell_count() const { return nx * ny; }

    double hx() const { return domain.width() / nx; }
    double hy() const { return domain.height() / ny; }
    double cell_area() const { return hx() * hy(); }

    int node_index(int i, int j) const { return j * (nx + 1) + i; }
    int cell_index(int i, int j) const { return j * nx + i; }
    int cell_of_triangle(int t) const { return t / 2; }

    /// Center of cell (i,j): domain corner + (index+0.5) * cell size.
    Eigen::Vector2d cell_center(int i, int j) const {
        return {domain.x0 + (i + 0.5) * hx(), domain.y0 + (j + 0.5) * hy()};
    }
};

/// Area and P1 shape-function gradients of one triangle. Gradients are
/// constant per triangle; grad[k] belongs to the k-th local vertex.
struct ElementGeometry {
    double area = 0.0;
    std::array<Eigen::Vector2d, 3> grad;
};

inline Mesh build_grid(const Rect& domain, int nx, int ny) {
    if (nx < 1 || ny < 1)
        throw std::invalid_argument("build_grid: cell counts must be positive");
    if (!(domain.width() > 0.0) || !(domain.height() > 0.0))
        throw std::invalid_argument("build_grid: domain must have positive extent");

    Mesh mesh;
    mesh.domain = domain;
    mesh.nx = nx;
    mesh.ny = ny;

    const double hx = domain.width() / nx;
    const double hy = domain.height() / ny;

    mesh.nodes.reserve(static_cast<size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            mesh.nodes.emplace_back(domain.x0 + i * hx, domain.y0 + j * hy);

    mesh.triangles.reserve(static_cast<size_t>(2) * nx * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = mesh.node_index(i, j);
            const int v10 = mesh.node_index(i + 1, j);
            const int v01 = mesh.node_index(i, j + 1);
            const int v11 = mesh.node_index(i + 1, j + 1);
            mesh.triangles.push_back({v00, v10, v11});
            mesh.triangles.push_back({v00, v11, v01});
        }
    }
    return mesh;
}

inline ElementGeometry element_geometry(const Mesh& mesh, int t) {
    if (t < 0 || t >= mesh.triangle_count())
        throw std::out_of_range("element_geometry: triangle index out of range");

    const auto& tri = mesh.triangles[t];
    const Eigen::Vector2d& a = mesh.nodes[tri[0]];
    const Eigen::Vector2d& b = mesh.nodes[tri[1]];
    const Eigen::Vector2d& c = mesh.nodes[tri[2]];

    const double twice_area =
        (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());

    ElementGeometry geo;
    geo.area = 0.5 * twice_area;
    // Gradient of the hat function that is 1 at vertex k: rotate the opposite
    // edge by 90 degrees and scale by 1/(2*area).
    geo.grad[0] = Eigen::Vector2d(b.y() - c.y(), c.x() - b.x()) / twice_area;
    geo.grad[1] = Eigen::Vector2d(c.y() - a.y(), a.x() - c.x()) / twice_area;
    geo.grad[2] = Eigen::Vector2d(a.y() - b.y(), b.x() - a.x()) / twice_area;
    return geo;
}

/// Consistent (exactly integrated) P1 mass matrix. Element contribution is
/// area/12 * [[2,1,1],[1,2,1],[1,1,2]].
inline Eigen::SparseMatrix<double> assemble_mass(const Mesh& mesh) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(9) * mesh.triangle_count());
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double s = element_geometry(mesh, t).area / 12.0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                trips.emplace_back(tri[r], tri[c], (r == c ? 2.0 : 1.0) * s);
    }
    Eigen::SparseMatrix<double> M(mesh.node_count(), mesh.node_count());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

/// Sample a function at cell centers, producing one value per grid cell.
inline std::vector<double> project_to_cells(const Mesh& mesh,
                                            const std::function<double(double, double)>& f) {
    std::vector<double> values(static_cast<size_t>(mesh.cell_count()));
    for (int j = 0; j < mesh.ny; ++j)
        for (int i = 0; i < mesh.nx; ++i) {
            const Eigen::Vector2d c = mesh.cell_center(i, j);
            values[mesh.cell_index(i, j)] = f(c.x(), c.y());
        }
    return values;
}

/// Adopt an existing per-cell raster. Dimensions must match the grid; values
/// are row-major from the lower-left cell, matching cell indexing.
inline std::vector<double> project_to_cells(const Mesh& mesh, const std::vector<double>& raster,
                                            int rnx, int rny) {
    if (rnx != mesh.nx || rny != mesh.ny)
        throw std::invalid_argument("project_to_cells: raster dimensions do not match grid");
    if (raster.size() != static_cast<size_t>(mesh.cell_count()))
        throw std::invalid_argument("project_to_cells: raster size does not match grid");
    return raster;
}

} // namespace beckmann
