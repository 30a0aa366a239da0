#pragma once

// Config parsing and problem generation. A single JSON document describes
// the grid, the per-cell cost field, both marginals, regularization and
// solver parameters, and output toggles. Parsing is strict: unknown keys are
// rejected with path-qualified messages (keys starting with '_' are ignored
// so configs can carry annotations).

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "assembly.hpp"
#include "errors.hpp"
#include "mesh.hpp"
#include "model.hpp"
#include "solver.hpp"

namespace beckmann {

struct GridSpec {
    int nx = 0, ny = 0;
    Rect domain;
};

struct ConstantSpec {
    double value = 1.0;
};

struct GaussianSpec {
    Eigen::Vector2d center{0.5, 0.5};
    double sigma = 0.1;
    double weight = 1.0;
};

struct GaussianMixtureSpec {
    std::vector<GaussianSpec> components;
    double offset = 0.0;
};

/// Affine ramp base + slope . (x, y), sampled at cell centers.
struct LinearSpec {
    double base = 1.0;
    Eigen::Vector2d slope{0.0, 0.0};
};

/// ASCII raster: rows are listed top-down (image order), '#' cells get
/// w_high and '.' cells w_low.
struct MazeSpec {
    std::vector<std::string> rows;
    double w_high = 10.0;
    double w_low = 0.1;
};

/// Per-cell values, rows listed top-down (image order).
struct CellsSpec {
    std::vector<std::vector<double>> rows;
};

/// One grid cell addressed by (i, j) from the lower-left corner.
struct SingleCellSpec {
    int i = 0, j = 0;
};

using CostSpec = std::variant<ConstantSpec, LinearSpec, GaussianMixtureSpec, MazeSpec, CellsSpec>;
using MarginalSpec = std::variant<GaussianSpec, SingleCellSpec, CellsSpec>;

struct OutputOptions {
    std::string dir = "out";
    bool flow_csv = true;
    bool report_json = true;
    bool quiver_svg = true;
    bool include_timings = false;
};

struct Config {
    GridSpec grid;
    CostSpec cost = ConstantSpec{};
    MarginalSpec mu_plus = SingleCellSpec{};
    MarginalSpec mu_minus = SingleCellSpec{};
    RegParams params;
    SolverOptions solver;
    double w_min = 1e-6;
    OutputOptions output;
    std::vector<std::string> notes; // validation remarks, not serialized
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + ": " + what);
}

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (!key.empty() && key[0] == '_') continue;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        if (!ok) config_fail(path.empty() ? key : path + "." + key, "unknown key");
    }
}

inline const json* find(const json& obj, const std::string& key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) config_fail(path, "expected a number");
    return v.get<double>();
}

inline int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) config_fail(path, "expected an integer");
    return v.get<int>();
}

inline bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) config_fail(path, "expected a boolean");
    return v.get<bool>();
}

inline std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) config_fail(path, "expected a string");
    return v.get<std::string>();
}

inline Eigen::Vector2d as_point(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) config_fail(path, "expected [x, y]");
    return {as_number(v[0], path + "[0]"), as_number(v[1], path + "[1]")};
}

inline double get_number(const json& obj, const std::string& path, const char* key,
                         double fallback) {
    const json* v = find(obj, key);
    return v ? as_number(*v, path + "." + key) : fallback;
}

inline GaussianSpec parse_gaussian(const json& obj, const std::string& path) {
    check_keys(obj, path, {"type", "center", "sigma", "weight"});
    GaussianSpec g;
    if (const json* v = find(obj, "center")) g.center = as_point(*v, path + ".center");
    g.sigma = get_number(obj, path, "sigma", g.sigma);
    g.weight = get_number(obj, path, "weight", g.weight);
    if (!(g.sigma > 0.0)) config_fail(path + ".sigma", "must be positive");
    if (!(g.weight > 0.0)) config_fail(path + ".weight", "must be positive");
    return g;
}

inline CellsSpec parse_cells(const json& obj, const std::string& path) {
    check_keys(obj, path, {"type", "values"});
    const json* v = find(obj, "values");
    if (!v || !v->is_array() || v->empty())
        config_fail(path + ".values", "expected a non-empty array of rows");
    CellsSpec cells;
    for (size_t r = 0; r < v->size(); ++r) {
        const json& row = (*v)[r];
        const std::string rpath = path + ".values[" + std::to_string(r) + "]";
        if (!row.is_array() || row.empty()) config_fail(rpath, "expected a non-empty row array");
        std::vector<double> vals;
        vals.reserve(row.size());
        for (size_t c = 0; c < row.size(); ++c)
            vals.push_back(as_number(row[c], rpath + "[" + std::to_string(c) + "]"));
        cells.rows.push_back(std::move(vals));
    }
    return cells;
}

inline CostSpec parse_cost(const json& obj, const std::string& path) {
    if (!obj.is_object()) config_fail(path, "expected an object");
    const json* tv = find(obj, "type");
    if (!tv) config_fail(path + ".type", "missing");
    const std::string type = as_string(*tv, path + ".type");
    if (type == "constant") {
        check_keys(obj, path, {"type", "value"});
        ConstantSpec c;
        c.value = get_number(obj, path, "value", c.value);
        if (!(c.value > 0.0)) config_fail(path + ".value", "must be positive");
        return c;
    }
    if (type == "linear") {
        check_keys(obj, path, {"type", "base", "slope"});
        LinearSpec lin;
        lin.base = get_number(obj, path, "base", lin.base);
        if (const json* v = find(obj, "slope")) lin.slope = as_point(*v, path + ".slope");
        return lin;
    }
    if (type == "gaussian_mixture") {
        check_keys(obj, path, {"type", "components", "offset"});
        const json* comps = find(obj, "components");
        if (!comps || !comps->is_array() || comps->empty())
            config_fail(path + ".components", "expected a non-empty array");
        GaussianMixtureSpec mix;
        mix.offset = get_number(obj, path, "offset", mix.offset);
        for (size_t k = 0; k < comps->size(); ++k)
            mix.components.push_back(
                parse_gaussian((*comps)[k], path + ".components[" + std::to_string(k) + "]"));
        return mix;
    }
    if (type == "maze") {
        check_keys(obj, path, {"type", "rows", "w_high", "w_low"});
        const json* rows = find(obj, "rows");
        if (!rows || !rows->is_array() || rows->empty())
            config_fail(path + ".rows", "expected a non-empty array of strings");
        MazeSpec maze;
        for (size_t r = 0; r < rows->size(); ++r)
            maze.rows.push_back(as_string((*rows)[r], path + ".rows[" + std::to_string(r) + "]"));
        maze.w_high = get_number(obj, path, "w_high", maze.w_high);
        maze.w_low = get_number(obj, path, "w_low", maze.w_low);
        if (!(maze.w_low > 0.0)) config_fail(path + ".w_low", "must be positive");
        if (!(maze.w_high > 0.0)) config_fail(path + ".w_high", "must be positive");
        return maze;
    }
    if (type == "cells") return parse_cells(obj, path);
    config_fail(path + ".type", "unknown cost type '" + type + "'");
}

inline MarginalSpec parse_marginal(const json& obj, const std::string& path) {
    if (!obj.is_object()) config_fail(path, "expected an object");
    const json* tv = find(obj, "type");
    if (!tv) config_fail(path + ".type", "missing");
    const std::string type = as_string(*tv, path + ".type");
    if (type == "gaussian") return parse_gaussian(obj, path);
    if (type == "cell") {
        check_keys(obj, path, {"type", "i", "j"});
        SingleCellSpec s;
        const json* iv = find(obj, "i");
        const json* jv = find(obj, "j");
        if (!iv) config_fail(path + ".i", "missing");
        if (!jv) config_fail(path + ".j", "missing");
        s.i = as_int(*iv, path + ".i");
        s.j = as_int(*jv, path + ".j");
        return s;
    }
    if (type == "cells") return parse_cells(obj, path);
    config_fail(path + ".type", "unknown marginal type '" + type + "'");
}

} // namespace detail

inline Config parse_config_json(const nlohmann::json& root) {
    using detail::as_bool;
    using detail::as_int;
    using detail::as_number;
    using detail::check_keys;
    using detail::config_fail;
    using detail::find;
    using detail::get_number;
    using nlohmann::json;

    if (!root.is_object()) config_fail("(root)", "expected a JSON object");
    check_keys(root, "",
               {"grid", "cost", "mu_plus", "mu_minus", "params", "solver", "w_min", "output"});

    Config cfg;

    const json* grid = find(root, "grid");
    if (!grid || !grid->is_object()) config_fail("grid", "missing or not an object");
    check_keys(*grid, "grid", {"nx", "ny", "domain"});
    const json* nxv = find(*grid, "nx");
    const json* nyv = find(*grid, "ny");
    if (!nxv) config_fail("grid.nx", "missing");
    if (!nyv) config_fail("grid.ny", "missing");
    cfg.grid.nx = as_int(*nxv, "grid.nx");
    cfg.grid.ny = as_int(*nyv, "grid.ny");
    if (cfg.grid.nx < 1) config_fail("grid.nx", "must be >= 1");
    if (cfg.grid.ny < 1) config_fail("grid.ny", "must be >= 1");
    if (const json* dom = find(*grid, "domain")) {
        if (!dom->is_object()) config_fail("grid.domain", "expected an object");
        check_keys(*dom, "grid.domain", {"x", "y"});
        const json* xv = find(*dom, "x");
        const json* yv = find(*dom, "y");
        if (!xv || !yv) config_fail("grid.domain", "needs x and y ranges");
        const Eigen::Vector2d x = detail::as_point(*xv, "grid.domain.x");
        const Eigen::Vector2d y = detail::as_point(*yv, "grid.domain.y");
        cfg.grid.domain = Rect{x[0], x[1], y[0], y[1]};
        if (!(cfg.grid.domain.width() > 0.0)) config_fail("grid.domain.x", "must be increasing");
        if (!(cfg.grid.domain.height() > 0.0)) config_fail("grid.domain.y", "must be increasing");
    }

    if (const json* cost = find(root, "cost")) cfg.cost = detail::parse_cost(*cost, "cost");

    const json* mp = find(root, "mu_plus");
    const json* mm = find(root, "mu_minus");
    if (!mp) config_fail("mu_plus", "missing");
    if (!mm) config_fail("mu_minus", "missing");
    cfg.mu_plus = detail::parse_marginal(*mp, "mu_plus");
    cfg.mu_minus = detail::parse_marginal(*mm, "mu_minus");

    if (const json* params = find(root, "params")) {
        if (!params->is_object()) config_fail("params", "expected an object");
        check_keys(*params, "params", {"epsilon", "delta", "alpha"});
        const double epsilon = get_number(*params, "params", "epsilon", cfg.params.epsilon);
        const double delta = get_number(*params, "params", "delta", cfg.params.delta);
        const double alpha = get_number(*params, "params", "alpha", cfg.params.alpha);
        if (!(epsilon > 0.0)) config_fail("params.epsilon", "must be positive");
        if (!(delta > 0.0)) config_fail("params.delta", "must be positive");
        if (!(alpha > 1.0)) config_fail("params.alpha", "must exceed 1");
        cfg.params = RegParams(epsilon, delta, alpha);
    }
    if (cfg.params.alpha >= 2.0)
        cfg.notes.push_back("params.alpha = " + std::to_string(cfg.params.alpha) +
                            " is at or beyond the planar well-posedness bound 2 = d/(d-1); "
                            "treated as the documented limit case");

    if (const json* solver = find(root, "solver")) {
        if (!solver->is_object()) config_fail("solver", "expected an object");
        check_keys(*solver, "solver",
                   {"sigma0", "beta", "gamma", "tol", "max_iters", "max_backtracks"});
        cfg.solver.sigma0 = get_number(*solver, "solver", "sigma0", cfg.solver.sigma0);
        cfg.solver.beta = get_number(*solver, "solver", "beta", cfg.solver.beta);
        cfg.solver.gamma = get_number(*solver, "solver", "gamma", cfg.solver.gamma);
        cfg.solver.tol = get_number(*solver, "solver", "tol", cfg.solver.tol);
        if (const json* v = find(*solver, "max_iters"))
            cfg.solver.max_iters = as_int(*v, "solver.max_iters");
        if (const json* v = find(*solver, "max_backtracks"))
            cfg.solver.max_backtracks = as_int(*v, "solver.max_backtracks");
        try {
            cfg.solver.validate();
        } catch (const std::invalid_argument& e) {
            config_fail("solver", e.what());
        }
    }

    if (const json* v = find(root, "w_min")) {
        cfg.w_min = as_number(*v, "w_min");
        if (!(cfg.w_min > 0.0)) config_fail("w_min", "must be positive");
    }

    if (const json* output = find(root, "output")) {
        if (!output->is_object()) config_fail("output", "expected an object");
        check_keys(*output, "output",
                   {"dir", "flow_csv", "report_json", "quiver_svg", "include_timings"});
        if (const json* v = find(*output, "dir")) cfg.output.dir = detail::as_string(*v, "output.dir");
        if (const json* v = find(*output, "flow_csv"))
            cfg.output.flow_csv = as_bool(*v, "output.flow_csv");
        if (const json* v = find(*output, "report_json"))
            cfg.output.report_json = as_bool(*v, "output.report_json");
        if (const json* v = find(*output, "quiver_svg"))
            cfg.output.quiver_svg = as_bool(*v, "output.quiver_svg");
        if (const json* v = find(*output, "include_timings"))
            cfg.output.include_timings = as_bool(*v, "output.include_timings");
    }

    return cfg;
}

inline Config parse_config_text(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    return parse_config_json(root);
}

inline Config parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

/// Serialize a resolved Config back to JSON. parse_config_json of the result
/// reproduces the Config; reports embed this echo so any run can be redone
/// from its own output.
inline nlohmann::json config_to_json(const Config& cfg) {
    using nlohmann::json;
    json root;
    root["grid"] = {{"nx", cfg.grid.nx},
                    {"ny", cfg.grid.ny},
                    {"domain",
                     {{"x", {cfg.grid.domain.x0, cfg.grid.domain.x1}},
                      {"y", {cfg.grid.domain.y0, cfg.grid.domain.y1}}}}};

    const auto gaussian_json = [](const GaussianSpec& g) {
        return json{{"type", "gaussian"},
                    {"center", {g.center.x(), g.center.y()}},
                    {"sigma", g.sigma},
                    {"weight", g.weight}};
    };
    const auto cells_json = [](const CellsSpec& c) {
        json rows = json::array();
        for (const auto& row : c.rows) rows.push_back(row);
        return json{{"type", "cells"}, {"values", rows}};
    };

    root["cost"] = std::visit(
        [&](const auto& spec) -> json {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, ConstantSpec>)
                return {{"type", "constant"}, {"value", spec.value}};
            else if constexpr (std::is_same_v<T, LinearSpec>)
                return {{"type", "linear"},
                        {"base", spec.base},
                        {"slope", {spec.slope.x(), spec.slope.y()}}};
            else if constexpr (std::is_same_v<T, GaussianMixtureSpec>) {
                json comps = json::array();
                for (const auto& g : spec.components) {
                    json gj = gaussian_json(g);
                    gj.erase("type");
                    comps.push_back(gj);
                }
                return {{"type", "gaussian_mixture"}, {"components", comps}, {"offset", spec.offset}};
            } else if constexpr (std::is_same_v<T, MazeSpec>)
                return {{"type", "maze"},
                        {"rows", spec.rows},
                        {"w_high", spec.w_high},
                        {"w_low", spec.w_low}};
            else
                return cells_json(spec);
        },
        cfg.cost);

    const auto marginal_json = [&](const MarginalSpec& m) {
        return std::visit(
            [&](const auto& spec) -> json {
                using T = std::decay_t<decltype(spec)>;
                if constexpr (std::is_same_v<T, GaussianSpec>) return gaussian_json(spec);
                else if constexpr (std::is_same_v<T, SingleCellSpec>)
                    return {{"type", "cell"}, {"i", spec.i}, {"j", spec.j}};
                else
                    return cells_json(spec);
            },
            m);
    };
    root["mu_plus"] = marginal_json(cfg.mu_plus);
    root["mu_minus"] = marginal_json(cfg.mu_minus);

    root["params"] = {{"epsilon", cfg.params.epsilon},
                      {"delta", cfg.params.delta},
                      {"alpha", cfg.params.alpha}};
    root["solver"] = {{"sigma0", cfg.solver.sigma0},   {"beta", cfg.solver.beta},
                      {"gamma", cfg.solver.gamma},     {"tol", cfg.solver.tol},
                      {"max_iters", cfg.solver.max_iters},
                      {"max_backtracks", cfg.solver.max_backtracks}};
    root["w_min"] = cfg.w_min;
    root["output"] = {{"dir", cfg.output.dir},
                      {"flow_csv", cfg.output.flow_csv},
                      {"report_json", cfg.output.report_json},
                      {"quiver_svg", cfg.output.quiver_svg},
                      {"include_timings", cfg.output.include_timings}};
    return root;
}

namespace detail {

/// Normalize a nonnegative per-cell density to unit total mass. Two passes
/// with extended-precision accumulation keep the final mass within 1e-12.
inline void normalize_mass(std::vector<double>& v, double cell_area, const std::string& which) {
    for (double x : v)
        if (x < 0.0) throw ConfigError("config: " + which + ": negative density value");
    long double total = 0.0L;
    for (double x : v) total += x;
    total *= cell_area;
    if (!(total > 0.0L)) throw ConfigError("config: " + which + ": total mass is zero");
    for (double& x : v) x = static_cast<double>(x / total);
    long double again = 0.0L;
    for (double x : v) again += x;
    again *= cell_area;
    for (double& x : v) x = static_cast<double>(x / again);
}

inline std::vector<double> rasterize_rows(const std::vector<std::vector<double>>& rows,
                                          const Mesh& mesh, const std::string& which) {
    if (static_cast<int>(rows.size()) != mesh.ny)
        throw ConfigError("config: " + which + ": raster has " + std::to_string(rows.size()) +
                          " rows, grid needs " + std::to_string(mesh.ny));
    std::vector<double> raster(static_cast<size_t>(mesh.cell_count()));
    for (int r = 0; r < mesh.ny; ++r) {
        const auto& row = rows[r];
        if (static_cast<int>(row.size()) != mesh.nx)
            throw ConfigError("config: " + which + ": row " + std::to_string(r) + " has " +
                              std::to_string(row.size()) + " values, grid needs " +
                              std::to_string(mesh.nx));
        const int j = mesh.ny - 1 - r; // rows are listed top-down
        for (int i = 0; i < mesh.nx; ++i) raster[mesh.cell_index(i, j)] = row[i];
    }
    return raster;
}

inline std::vector<double> evaluate_cost(const CostSpec& spec, const Mesh& mesh, double w_min) {
    std::vector<double> w = std::visit(
        [&](const auto& s) -> std::vector<double> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantSpec>)
                return std::vector<double>(static_cast<size_t>(mesh.cell_count()), s.value);
            else if constexpr (std::is_same_v<T, LinearSpec>)
                return project_to_cells(mesh, [&](double x, double y) {
                    return s.base + s.slope.x() * x + s.slope.y() * y;
                });
            else if constexpr (std::is_same_v<T, GaussianMixtureSpec>)
                return project_to_cells(mesh, [&](double x, double y) {
                    double acc = s.offset;
                    for (const auto& g : s.components) {
                        const double dx = x - g.center.x();
                        const double dy = y - g.center.y();
                        acc += g.weight * std::exp(-(dx * dx + dy * dy) / (2.0 * g.sigma * g.sigma));
                    }
                    return acc;
                });
            else if constexpr (std::is_same_v<T, MazeSpec>) {
                std::vector<std::vector<double>> rows;
                rows.reserve(s.rows.size());
                for (size_t r = 0; r < s.rows.size(); ++r) {
                    std::vector<double> vals;
                    vals.reserve(s.rows[r].size());
                    for (char ch : s.rows[r]) {
                        if (ch == '#') vals.push_back(s.w_high);
                        else if (ch == '.') vals.push_back(s.w_low);
                        else
                            throw ConfigError("config: cost.rows[" + std::to_string(r) +
                                              "]: invalid character '" + std::string(1, ch) +
                                              "' (use '#' or '.')");
                    }
                    rows.push_back(std::move(vals));
                }
                return rasterize_rows(rows, mesh, "cost");
            } else
                return rasterize_rows(s.rows, mesh, "cost");
        },
        spec);
    for (double& x : w) x = std::max(x, w_min);
    return w;
}

inline std::vector<double> evaluate_marginal(const MarginalSpec& spec, const Mesh& mesh,
                                             const std::string& which) {
    std::vector<double> v = std::visit(
        [&](const auto& s) -> std::vector<double> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianSpec>)
                return project_to_cells(mesh, [&](double x, double y) {
                    const double dx = x - s.center.x();
                    const double dy = y - s.center.y();
                    return s.weight * std::exp(-(dx * dx + dy * dy) / (2.0 * s.sigma * s.sigma));
                });
            else if constexpr (std::is_same_v<T, SingleCellSpec>) {
                if (s.i < 0 || s.i >= mesh.nx || s.j < 0 || s.j >= mesh.ny)
                    throw ConfigError("config: " + which + ": cell (" + std::to_string(s.i) +
                                      ", " + std::to_string(s.j) + ") outside grid");
                std::vector<double> raster(static_cast<size_t>(mesh.cell_count()), 0.0);
                raster[mesh.cell_index(s.i, s.j)] = 1.0;
                return raster;
            } else
                return rasterize_rows(s.rows, mesh, which);
        },
        spec);
    normalize_mass(v, mesh.cell_area(), which);
    return v;
}

} // namespace detail

/// Build the discrete problem described by a Config: grid, per-cell cost
/// (floored at w_min), and unit-mass marginals.
inline ProblemData generate_problem(const Config& cfg) {
    ProblemData pd;
    pd.mesh = build_grid(cfg.grid.domain, cfg.grid.nx, cfg.grid.ny);
    pd.cost = detail::evaluate_cost(cfg.cost, pd.mesh, cfg.w_min);
    pd.source = detail::evaluate_marginal(cfg.mu_plus, pd.mesh, "mu_plus");
    pd.sink = detail::evaluate_marginal(cfg.mu_minus, pd.mesh, "mu_minus");
    pd.params = cfg.params;
    pd.validate();
    return pd;
}

} // namespace beckmann
