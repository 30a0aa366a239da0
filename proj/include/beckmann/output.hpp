#pragma once

// File emission: flow CSV, run report JSON, quiver SVG. All writers are
// deterministic; floating-point values go out with 17 significant digits
// (CSV) or shortest round-trip form (JSON), so re-reading loses nothing.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "flow.hpp"
#include "solver.hpp"

namespace beckmann {

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

} // namespace detail

/// One row per triangle: id, centroid, flow vector.
inline void write_flow_csv(const FlowField& f, const Mesh& mesh, const std::string& path) {
    std::ofstream out = detail::open_out(path);
    out << "triangle_id,cx,cy,qx,qy\n";
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Eigen::Vector2d c =
            (mesh.nodes[tri[0]] + mesh.nodes[tri[1]] + mesh.nodes[tri[2]]) / 3.0;
        out << t << ',' << detail::fmt17(c.x()) << ',' << detail::fmt17(c.y()) << ','
            << detail::fmt17(f.q[t].x()) << ',' << detail::fmt17(f.q[t].y()) << '\n';
    }
    if (!out) throw Error("write failed for '" + path + "'");
}

inline nlohmann::json report_to_json(const SolveReport& report, const Config& cfg,
                                     const FlowMetrics& metrics) {
    using nlohmann::json;
    const bool timings = cfg.output.include_timings;
    json iters = json::array();
    for (const auto& it : report.iterations) {
        json row = {{"iter", it.iter},
                    {"residual", it.residual},
                    {"sigma", it.sigma},
                    {"backtracks", it.backtracks},
                    {"objective", it.objective}};
        if (timings) row["seconds"] = it.seconds;
        iters.push_back(row);
    }
    json root;
    root["config"] = config_to_json(cfg);
    root["termination"] = to_string(report.termination);
    root["initial_objective"] = report.initial_objective;
    root["iterations"] = iters;
    root["final"] = {{"iterations", report.iteration_count()},
                     {"residual", report.final_residual},
                     {"objective", report.final_objective}};
    if (timings) root["final"]["total_seconds"] = report.total_seconds;
    root["metrics"] = {{"transport_cost", metrics.transport_cost},
                       {"duality_gap", metrics.duality_gap},
                       {"divergence_residual", metrics.divergence_residual},
                       {"flow_max_norm", metrics.max_norm}};
    return root;
}

/// Full run report: config echo, iteration log, final state, flow metrics.
/// Timing fields are included only when cfg.output.include_timings is set,
/// so default reports are bit-identical across reruns.
inline void write_report_json(const SolveReport& report, const Config& cfg,
                              const FlowMetrics& metrics, const std::string& path) {
    std::ofstream out = detail::open_out(path);
    out << report_to_json(report, cfg, metrics).dump(2) << '\n';
    if (!out) throw Error("write failed for '" + path + "'");
}

/// Quiver plot: grayscale cost background (darker = costlier) plus the
/// block-averaged arrows. Arrow lengths are normalized per figure; the
/// data-units-per-pixel factor is recorded on the arrow group so absolute
/// magnitudes can be recovered.
inline void write_quiver_svg(const FlowField& f, const ProblemData& pd, const std::string& path) {
    const Mesh& mesh = pd.mesh;
    const double W = 640.0;
    const double H = W * mesh.domain.height() / mesh.domain.width();
    const double sx = W / mesh.domain.width();
    const double sy = H / mesh.domain.height();
    const auto px = [&](double x) { return (x - mesh.domain.x0) * sx; };
    const auto py = [&](double y) { return H - (y - mesh.domain.y0) * sy; };
    const auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };

    double wmin = pd.cost[0], wmax = pd.cost[0];
    for (double w : pd.cost) {
        wmin = std::min(wmin, w);
        wmax = std::max(wmax, w);
    }

    const ArrowField arrows = downsample(f, mesh);
    // Arrow pixels per flow unit: the largest arrow spans ~90% of a block.
    const double block_px = 2.0 * std::min(W / mesh.nx, H / mesh.ny);
    const double scale = arrows.max_norm > 0.0 ? 0.9 * block_px / arrows.max_norm : 0.0;

    std::ofstream out = detail::open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\""
        << num(H) << "\" viewBox=\"0 0 " << num(W) << ' ' << num(H) << "\">\n";
    out << "<defs><marker id=\"tip\" viewBox=\"0 0 4 4\" refX=\"3.2\" refY=\"2\" "
           "markerWidth=\"4\" markerHeight=\"4\" orient=\"auto\">"
           "<path d=\"M0,0 L4,2 L0,4 z\" fill=\"#2b5fd9\"/></marker></defs>\n";

    out << "<g id=\"cost-cells\" shape-rendering=\"crispEdges\">\n";
    for (int j = 0; j < mesh.ny; ++j) {
        for (int i = 0; i < mesh.nx; ++i) {
            const double w = pd.cost[mesh.cell_index(i, j)];
            const double rel = wmax > wmin ? (w - wmin) / (wmax - wmin) : 0.0;
            const int gray = static_cast<int>(235.0 - 165.0 * rel + 0.5);
            const double x = px(mesh.domain.x0 + i * mesh.hx());
            const double y = py(mesh.domain.y0 + (j + 1) * mesh.hy());
            out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
                << num(mesh.hx() * sx + 0.5) << "\" height=\"" << num(mesh.hy() * sy + 0.5)
                << "\" fill=\"rgb(" << gray << ',' << gray << ',' << gray << ")\"/>\n";
        }
    }
    out << "</g>\n";

    out << "<g id=\"flow-arrows\" stroke=\"#2b5fd9\" stroke-width=\"1.4\" "
           "data-units-per-px=\""
        << (scale > 0.0 ? detail::fmt17(1.0 / scale) : "0") << "\">\n";
    for (size_t k = 0; k < arrows.arrows.size(); ++k) {
        const Eigen::Vector2d& a = arrows.arrows[k];
        if (a.x() == 0.0 && a.y() == 0.0) continue;
        const Eigen::Vector2d c = arrows.centers[k];
        const double x1 = px(c.x()) - 0.5 * a.x() * scale;
        const double y1 = py(c.y()) + 0.5 * a.y() * scale;
        const double x2 = px(c.x()) + 0.5 * a.x() * scale;
        const double y2 = py(c.y()) - 0.5 * a.y() * scale;
        out << "<line class=\"arrow\" x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\""
            << num(x2) << "\" y2=\"" << num(y2) << "\" marker-end=\"url(#tip)\"/>\n";
    }
    out << "</g>\n</svg>\n";
    if (!out) throw Error("write failed for '" + path + "'");
}

} // namespace beckmann
