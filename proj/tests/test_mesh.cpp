#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include <beckmann/mesh.hpp>

#include "oracles.hpp"

using namespace beckmann;

TEST(BuildGrid, SingleCellCounts) {
    const Mesh mesh = build_grid({0.0, 1.0, 0.0, 1.0}, 1, 1);
    EXPECT_EQ(mesh.node_count(), 4);
    EXPECT_EQ(mesh.triangle_count(), 2);
    EXPECT_DOUBLE_EQ(element_geometry(mesh, 0).area, 0.5);
    EXPECT_DOUBLE_EQ(element_geometry(mesh, 1).area, 0.5);
}

TEST(BuildGrid, BenchmarkScaleCounts) {
    const Mesh mesh = build_grid({0.0, 1.0, 0.0, 1.0}, 50, 50);
    EXPECT_EQ(mesh.triangle_count(), 5000);
    EXPECT_EQ(mesh.node_count(), 2601);
}

TEST(BuildGrid, AreasSumToRectangleArea) {
    const Mesh mesh = build_grid({0.0, 2.0, -1.0, 0.0}, 5, 7);
    long double total = 0.0L;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        total += oracle::shoelace_area(mesh.nodes[tri[0]], mesh.nodes[tri[1]],
                                       mesh.nodes[tri[2]]);
    }
    EXPECT_NEAR(static_cast<double>(total), 2.0, 1e-12 * 2.0);
}

TEST(BuildGrid, InvalidArguments) {
    EXPECT_THROW(build_grid({0.0, 1.0, 0.0, 1.0}, 0, 3), std::invalid_argument);
    EXPECT_THROW(build_grid({0.0, 1.0, 0.0, 1.0}, 3, -1), std::invalid_argument);
    EXPECT_THROW(build_grid({1.0, 0.0, 0.0, 1.0}, 3, 3), std::invalid_argument);
}

TEST(BuildGrid, EdgeTopology) {
    // Interior edges must be shared by exactly two triangles, boundary edges
    // by exactly one.
    const Mesh mesh = build_grid({0.0, 1.0, 0.0, 1.0}, 4, 3);
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& tri : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            const int u = tri[k], v = tri[(k + 1) % 3];
            edge_count[{std::min(u, v), std::max(u, v)}]++;
        }
    const auto on_boundary = [&](int node) {
        const auto& p = mesh.nodes[node];
        return p.x() == mesh.domain.x0 || p.x() == mesh.domain.x1 || p.y() == mesh.domain.y0 ||
               p.y() == mesh.domain.y1;
    };
    for (const auto& [edge, count] : edge_count) {
        ASSERT_TRUE(count == 1 || count == 2);
        if (count == 1) {
            EXPECT_TRUE(on_boundary(edge.first) && on_boundary(edge.second));
        }
    }
}

TEST(BuildGrid, TrianglesCounterClockwise) {
    const Mesh mesh = build_grid({-2.0, 3.0, 0.5, 4.0}, 6, 5);
    for (int t = 0; t < mesh.triangle_count(); ++t)
        EXPECT_GT(element_geometry(mesh, t).area, 0.0);
}

TEST(ElementGeometry, GradientsOnUnitCell) {
    const Mesh mesh = build_grid({0.0, 1.0, 0.0, 1.0}, 10, 10);
    const double h = 0.1;
    for (int t : {0, 1, 57, 198}) {
        const ElementGeometry geo = element_geometry(mesh, t);
        EXPECT_NEAR(geo.area, 0.5 * h * h, 1e-15);
        // Hat gradients on a right isoceles triangle have magnitude 1/h along
        // the legs and sqrt(2)/h across the hypotenuse.
        std::multiset<double> mags;
        Eigen::Vector2d sum = Eigen::Vector2d::Zero();
        for (const auto& g : geo.grad) {
            mags.insert(g.norm());
            sum += g;
        }
        EXPECT_NEAR(sum.norm(), 0.0, 1e-12);
        auto it = mags.begin();
        EXPECT_NEAR(*it++, 1.0 / h, 1e-9);
        EXPECT_NEAR(*it++, 1.0 / h, 1e-9);
        EXPECT_NEAR(*it++, std::sqrt(2.0) / h, 1e-9);
    }
}

TEST(ElementGeometry, MatchesPlaneFitOracle) {
    const Mesh mesh = build_grid({0.0, 2.0, 0.0, 1.0}, 7, 4);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const ElementGeometry geo = element_geometry(mesh, t);
        const auto& tri = mesh.triangles[t];
        const auto fit = oracle::plane_fit_gradients(mesh.nodes[tri[0]], mesh.nodes[tri[1]],
                                                     mesh.nodes[tri[2]]);
        for (int k = 0; k < 3; ++k)
            EXPECT_NEAR((geo.grad[k] - fit[k]).norm(), 0.0, 1e-10);
    }
}

TEST(ElementGeometry, OutOfRangeThrows) {
    const Mesh mesh = build_grid({0.0, 1.0, 0.0, 1.0}, 2, 2);
    EXPECT_THROW(element_geometry(mesh, -1), std::out_of_range);
    EXPECT_THROW(element_geometry(mesh, 8), std::out_of_range);
}

TEST(MassMatrix, MatchesQuadratureOracle) {
    const Mesh mesh = build_grid({0.0, 1.0, 0.0, 2.0}, 3, 2);
    const Eigen::MatrixXd M = Eigen::MatrixXd(assemble_mass(mesh));
    const Eigen::MatrixXd Mq = oracle::mass_matrix(mesh);
    EXPECT_NEAR((M - Mq).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(MassMatrix, PartitionOfUnity) {
    const Mesh mesh = build_grid({0.0, 3.0, 0.0, 1.5}, 6, 4);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.node_count());
    const double volume = ones.dot(assemble_mass(mesh) * ones);
    EXPECT_NEAR(volume, 4.5, 1e-12 * 4.5);
}

TEST(MassMatrix, SymmetricPositiveDefinite) {
    const Mesh mesh = build_grid({0.0, 1.0, 0.0, 1.0}, 4, 4);
    const Eigen::MatrixXd M = Eigen::MatrixXd(assemble_mass(mesh));
    EXPECT_NEAR((M - M.transpose()).cwiseAbs().maxCoeff(), 0.0, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(ProjectToCells, FunctionSampling) {
    const Mesh mesh = build_grid({0.0, 1.0, 0.0, 1.0}, 50, 50);
    const auto f = [](double x, double y) {
        return std::exp(-((x - 0.3) * (x - 0.3) + (y - 0.7) * (y - 0.7)) / 0.02);
    };
    const std::vector<double> vals = project_to_cells(mesh, f);
    ASSERT_EQ(vals.size(), 2500u);
    for (int j = 0; j < mesh.ny; ++j)
        for (int i = 0; i < mesh.nx; ++i) {
            // Independent re-evaluation at the documented center formula.
            const double cx = 0.0 + (i + 0.5) * mesh.hx();
            const double cy = 0.0 + (j + 0.5) * mesh.hy();
            EXPECT_EQ(vals[mesh.cell_index(i, j)], f(cx, cy));
        }
}

TEST(ProjectToCells, RasterPassThroughAndMismatch) {
    const Mesh mesh = build_grid({0.0, 1.0, 0.0, 1.0}, 3, 2);
    std::vector<double> raster{1, 2, 3, 4, 5, 6};
    EXPECT_EQ(project_to_cells(mesh, raster, 3, 2), raster);
    EXPECT_THROW(project_to_cells(mesh, raster, 2, 3), std::invalid_argument);
}

TEST(Mesh, CellTriangleOwnership) {
    const Mesh mesh = build_grid({0.0, 1.0, 0.0, 1.0}, 4, 4);
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        // Both triangles of a cell must have their centroid inside that cell.
        const int cell = mesh.cell_of_triangle(t);
        const int ci = cell % mesh.nx, cj = cell / mesh.nx;
        const auto& tri = mesh.triangles[t];
        const Eigen::Vector2d centroid =
            (mesh.nodes[tri[0]] + mesh.nodes[tri[1]] + mesh.nodes[tri[2]]) / 3.0;
        EXPECT_GT(centroid.x(), mesh.domain.x0 + ci * mesh.hx());
        EXPECT_LT(centroid.x(), mesh.domain.x0 + (ci + 1) * mesh.hx());
        EXPECT_GT(centroid.y(), mesh.domain.y0 + cj * mesh.hy());
        EXPECT_LT(centroid.y(), mesh.domain.y0 + (cj + 1) * mesh.hy());
    }
}

TEST(Mesh, TranslationInvariance) {
    const Mesh base = build_grid({0.0, 1.0, 0.0, 1.0}, 5, 5);
    const Mesh moved = build_grid({1.3, 2.3, -2.7, -1.7}, 5, 5);
    for (int k = 0; k < base.node_count(); ++k) {
        EXPECT_NEAR(moved.nodes[k].x() - base.nodes[k].x(), 1.3, 1e-12);
        EXPECT_NEAR(moved.nodes[k].y() - base.nodes[k].y(), -2.7, 1e-12);
    }
    for (int t = 0; t < base.triangle_count(); ++t) {
        const ElementGeometry g0 = element_geometry(base, t);
        const ElementGeometry g1 = element_geometry(moved, t);
        EXPECT_NEAR(g0.area, g1.area, 1e-12);
        for (int k = 0; k < 3; ++k)
            EXPECT_NEAR((g0.grad[k] - g1.grad[k]).norm(), 0.0, 1e-12);
    }
    const Eigen::MatrixXd M0 = Eigen::MatrixXd(assemble_mass(base));
    const Eigen::MatrixXd M1 = Eigen::MatrixXd(assemble_mass(moved));
    EXPECT_NEAR((M0 - M1).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}
