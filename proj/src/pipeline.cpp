#include "aet/pipeline.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aet/errors.hpp"
#include "aet/io.hpp"
#include "aet/render.hpp"

namespace aet {

namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

json nlcg_to_json(const NlcgConfig& c) {
    return json{{"alpha", c.alpha},
                {"s", c.s},
                {"sigma_lower", c.sigma_lower},
                {"sigma_upper", c.sigma_upper},
                {"sigma_background", c.sigma_background},
                {"sigma_init", c.sigma_init},
                {"armijo_delta", c.armijo_delta},
                {"armijo_backtrack", c.armijo_backtrack},
                {"alpha0", c.alpha0},
                {"bb_warm_start", c.bb_warm_start},
                {"k_max", c.k_max},
                {"tol", c.tol},
                {"restart_threshold", c.restart_threshold},
                {"max_backtracks", c.max_backtracks},
                {"solver_tol", c.solver_tol}};
}

void nlcg_from_json(const json& j, NlcgConfig& c) {
    c.alpha = j.value("alpha", c.alpha);
    c.s = j.value("s", c.s);
    c.sigma_lower = j.value("sigma_lower", c.sigma_lower);
    c.sigma_upper = j.value("sigma_upper", c.sigma_upper);
    c.sigma_background = j.value("sigma_background", c.sigma_background);
    c.sigma_init = j.value("sigma_init", c.sigma_init);
    c.armijo_delta = j.value("armijo_delta", c.armijo_delta);
    c.armijo_backtrack = j.value("armijo_backtrack", c.armijo_backtrack);
    c.alpha0 = j.value("alpha0", c.alpha0);
    c.bb_warm_start = j.value("bb_warm_start", c.bb_warm_start);
    c.k_max = j.value("k_max", c.k_max);
    c.tol = j.value("tol", c.tol);
    c.restart_threshold = j.value("restart_threshold", c.restart_threshold);
    c.max_backtracks = j.value("max_backtracks", c.max_backtracks);
    c.solver_tol = j.value("solver_tol", c.solver_tol);
}

json config_to_json(const RunConfig& c) {
    return json{{"phantom", c.phantom},
                {"bc_set", to_string(c.bc_set)},
                {"fine_h", c.fine_h},
                {"coarse_h", c.coarse_h},
                {"noise", c.noise_delta},
                {"seed", c.seed},
                {"out", c.out_dir},
                {"label", c.label},
                {"nlcg", nlcg_to_json(c.nlcg)}};
}

std::uint64_t config_hash(const RunConfig& c) { return fnv1a64(config_to_json(c).dump()); }

}  // namespace

void RunConfig::validate() const {
    if (!(fine_h > 0.0) || !(coarse_h > 0.0) || !(fine_h < 1.0) || !(coarse_h < 1.0)) {
        throw ConfigError("config: mesh sizes must lie in (0, 1)");
    }
    if (!(fine_h <= coarse_h / 2.0 + 1e-12)) {
        throw ConfigError("config: fine_h must be at most coarse_h / 2 (inverse-crime guard)");
    }
    if (noise_delta < 0.0) throw ConfigError("config: noise level must be nonnegative");
    nlcg.validate();
}

std::vector<std::string> preset_names() {
    return {"test1-bc1-clean",  "test2-bc1-clean", "test2-bc1-noise10", "test2-bc1-noise25",
            "test3-bc1-clean",  "test3-bc2-clean", "test3-bc3-clean",   "test4-bc1-clean"};
}

bool is_preset_name(const std::string& name) {
    try {
        preset_config(name);
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.label = name;
    c.out_dir = "runs/" + name;
    bool have_phantom = false;

    std::stringstream ss(name);
    std::string token;
    int index = 0;
    while (std::getline(ss, token, '-')) {
        if (index == 0) {
            try {
                c.phantom = phantom_by_name(token).id;
                have_phantom = true;
            } catch (const InvalidParameterError&) {
                throw ConfigError("preset: unknown phantom token '" + token + "' in " + name);
            }
        } else if (token == "bc1" || token == "bc2" || token == "bc3") {
            c.bc_set = bc_set_from_string(token);
        } else if (token == "clean") {
            c.noise_delta = 0.0;
        } else if (token == "noise10") {
            c.noise_delta = 0.10;
        } else if (token == "noise25") {
            c.noise_delta = 0.25;
        } else {
            throw ConfigError("preset: unknown token '" + token + "' in " + name);
        }
        ++index;
    }
    if (!have_phantom) throw ConfigError("preset: missing phantom token in " + name);
    return c;
}

RunConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig c;
    if (j.contains("preset")) c = preset_config(j.at("preset").get<std::string>());
    c.phantom = j.value("phantom", c.phantom);
    if (j.contains("bc_set")) c.bc_set = bc_set_from_string(j.at("bc_set").get<std::string>());
    c.fine_h = j.value("fine_h", c.fine_h);
    c.coarse_h = j.value("coarse_h", c.coarse_h);
    c.noise_delta = j.value("noise", c.noise_delta);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out", c.out_dir);
    c.label = j.value("label", c.label);
    if (j.contains("nlcg")) nlcg_from_json(j.at("nlcg"), c.nlcg);
    return c;
}

RunConfig config_from_json_file(const std::filesystem::path& path) {
    return config_from_json_text(read_text_file(path));
}

std::string config_to_json_text(const RunConfig& config) {
    return config_to_json(config).dump(2) + "\n";
}

Phantom resolve_phantom(const std::string& name_or_path) {
    if (name_or_path.size() > 5 &&
        name_or_path.substr(name_or_path.size() - 5) == ".json") {
        return phantom_from_json_file(name_or_path);
    }
    try {
        return phantom_by_name(name_or_path);
    } catch (const InvalidParameterError& e) {
        throw ConfigError(std::string(e.what()) + " (expected a built-in id or a .json file)");
    }
}

std::filesystem::path cmd_generate(const RunConfig& config) {
    config.validate();
    const Phantom phantom = resolve_phantom(config.phantom);

    auto coarse_mesh = std::make_shared<const Mesh>(generate_disk_mesh(config.coarse_h));
    const int degree = config.nlcg.s == 0 ? 1 : 2;
    auto coarse_space = FunctionSpace::create(coarse_mesh, degree);

    const PowerDensity data =
        generate_data(phantom.evaluator(), config.bc_set, config.fine_h, coarse_space,
                      config.noise_delta, config.seed, config.nlcg.exec, config.nlcg.solver_tol);

    std::filesystem::create_directories(config.out_dir);
    const auto file = std::filesystem::path(config.out_dir) / (config.label + ".pd");
    write_power_density(data, file);

    json manifest;
    manifest["kind"] = "power-density";
    manifest["version"] = 1;
    manifest["config"] = config_to_json(config);
    manifest["config_hash"] = hex64(config_hash(config));
    manifest["coarse_mesh_hash"] = hex64(mesh_hash(*coarse_mesh));
    manifest["fine_mesh_hash"] = hex64(mesh_hash(generate_disk_mesh(config.fine_h)));
    manifest["phantom"] = json::parse(phantom_to_json_text(phantom));
    manifest["data_file"] = file.filename().string();
    manifest["data_file_hash"] = hex64(fnv1a64(read_text_file(file)));
    write_text_file(file.string() + ".manifest.json", manifest.dump(2) + "\n");
    return file;
}

namespace {

bool element_straddles_interface(const Phantom& truth, const FunctionSpace& space, int t) {
    // Sample the phantom at the element's nodes and centroid; a mix of values
    // marks an interface element.
    const auto& mesh = space.mesh();
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    double first = 0.0;
    bool have = false;
    for (int k = 0; k < 3; ++k) {
        const auto& p = mesh.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
        const double v = truth.eval(p[0], p[1]);
        if (!have) {
            first = v;
            have = true;
        } else if (v != first) {
            return true;
        }
    }
    double cx = 0.0, cy = 0.0;
    for (int k = 0; k < 3; ++k) {
        cx += mesh.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])][0] / 3.0;
        cy += mesh.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])][1] / 3.0;
    }
    return truth.eval(cx, cy) != first;
}

}  // namespace

Metrics compute_metrics(const ScalarField& sigma_rec, const Phantom& truth,
                        const ReconstructionResult& result, double wall_time_seconds,
                        double solver_tol) {
    Metrics m;
    const auto& space = sigma_rec.space;
    const ScalarField truth_field = interpolate(space, truth.evaluator());

    ScalarField diff(space);
    for (std::size_t i = 0; i < diff.coeffs.size(); ++i) {
        diff.coeffs[i] = sigma_rec.coeffs[i] - truth_field.coeffs[i];
    }
    const double num = std::sqrt(inner_product(diff, diff, InnerKind::L2));
    const double den = std::sqrt(inner_product(truth_field, truth_field, InnerKind::L2));
    m.rel_l2_error = num / den;

    // Peak reconstructed value inside each true inclusion (dof owned by the
    // last containing primitive, matching the phantom's precedence rule).
    const auto& coords = space->dof_coords();
    for (std::size_t d = 0; d < coords.size(); ++d) {
        const PhantomPrimitive* owner = nullptr;
        for (const auto& p : truth.primitives) {
            if (p.contains(coords[d][0], coords[d][1])) owner = &p;
        }
        if (!owner) continue;
        const std::string key = owner->name.empty() ? "inclusion" : owner->name;
        auto [it, inserted] = m.max_in_inclusion.try_emplace(key, sigma_rec.coeffs[d]);
        if (!inserted) it->second = std::max(it->second, sigma_rec.coeffs[d]);
    }

    // Determinant diagnostic at the reconstruction (first two excitations).
    auto uspace = FunctionSpace::create(space->mesh_ptr(), 2);
    const auto bcs = boundary_conditions(BcSet::bc2);
    const ScalarField u1 = solve_forward(sigma_rec, bcs[0], uspace, solver_tol);
    const ScalarField u2 = solve_forward(sigma_rec, bcs[1], uspace, solver_tol);
    m.min_det = determinant_diagnostic(u1, u2).global_min;

    // Edge sharpness: peak |grad sigma_rec| over interface elements.
    const QuadRule& rule = form_rule(*space, 0);
    const auto grads = gradient_at_quadrature(sigma_rec, rule);
    double max_grad = 0.0;
    for (std::size_t t = 0; t < space->mesh().num_triangles(); ++t) {
        if (!element_straddles_interface(truth, *space, static_cast<int>(t))) continue;
        for (int q = 0; q < rule.n; ++q) {
            const auto& g = grads[t * static_cast<std::size_t>(rule.n) + static_cast<std::size_t>(q)];
            max_grad = std::max(max_grad, std::hypot(g[0], g[1]));
        }
    }
    m.edge_max_grad = max_grad;

    m.iterations = static_cast<int>(result.history.size());
    m.wall_time_seconds = wall_time_seconds;
    return m;
}

namespace {

json metrics_to_json(const Metrics& m) {
    json incl = json::object();
    for (const auto& [k, v] : m.max_in_inclusion) incl[k] = v;
    return json{{"rel_l2_error", m.rel_l2_error},
                {"max_in_inclusion", incl},
                {"min_det", m.min_det},
                {"edge_max_grad", m.edge_max_grad},
                {"iterations", m.iterations},
                {"wall_time_seconds", m.wall_time_seconds}};
}

Metrics metrics_from_json(const json& j) {
    Metrics m;
    m.rel_l2_error = j.at("rel_l2_error").get<double>();
    for (const auto& [k, v] : j.at("max_in_inclusion").items()) {
        m.max_in_inclusion[k] = v.get<double>();
    }
    m.min_det = j.at("min_det").get<double>();
    m.edge_max_grad = j.value("edge_max_grad", 0.0);
    m.iterations = j.at("iterations").get<int>();
    m.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    return m;
}

std::string history_csv(const ReconstructionResult& result) {
    std::string out = "k,cost,grad_norm,step,beta,backtracks,active_frac\n";
    char buf[256];
    for (const auto& r : result.history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n", r.k, r.cost,
                      r.grad_norm, r.step, r.beta, r.backtracks, r.active_set_fraction);
        out += buf;
    }
    return out;
}

}  // namespace

ReconstructOutput cmd_reconstruct(const std::filesystem::path& data_file, RunConfig config) {
    const auto manifest_path = std::filesystem::path(data_file.string() + ".manifest.json");
    if (!std::filesystem::exists(manifest_path)) {
        throw ConfigError("reconstruct: missing manifest " + manifest_path.string() +
                          " (generate the data with this tool to get full provenance)");
    }
    const json data_manifest = json::parse(read_text_file(manifest_path));
    const Phantom truth = phantom_from_json_text(data_manifest.at("phantom").dump());

    const PowerDensity data = read_power_density(data_file);
    const double coarse_h = data.fields[0].space->mesh().target_h;
    if (!(data.fine_h > 0.0) || data.fine_h >= coarse_h - 1e-15) {
        throw ConfigError("reconstruct: data was synthesized on the reconstruction mesh "
                          "(inverse crime); regenerate with a finer data mesh");
    }
    const int expected_degree = config.nlcg.s == 0 ? 1 : 2;
    if (data.fields[0].space->degree() != expected_degree) {
        throw ConfigError("reconstruct: data stores degree " +
                          std::to_string(data.fields[0].space->degree()) +
                          " fields but s=" + std::to_string(config.nlcg.s) + " needs degree " +
                          std::to_string(expected_degree) + "; regenerate the data");
    }

    const std::filesystem::path out_dir = config.out_dir;
    std::filesystem::create_directories(out_dir);
    ReconstructOutput out;
    out.directory = out_dir;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        out.result = run_nlcg(data, config.nlcg);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.metrics = compute_metrics(out.result.sigma, truth, out.result, wall,
                                      config.nlcg.solver_tol);

        write_field_csv(out.result.sigma, out_dir / "sigma.csv");
        write_field_vtk(out.result.sigma, out_dir / "sigma.vtk", "sigma");
        render_field_png(out.result.sigma, out_dir / "heatmap.png");
        write_text_file(out_dir / "history.csv", history_csv(out.result));
        write_text_file(out_dir / "metrics.json", metrics_to_json(out.metrics).dump(2) + "\n");

        json summary;
        summary["termination"] = to_string(out.result.termination);
        summary["iterations"] = static_cast<int>(out.result.history.size());
        summary["initial_cost"] = out.result.initial_cost;
        summary["final_cost"] = out.result.final_cost;
        summary["projected_gradient_measure"] = out.result.projected_gradient_measure;
        summary["wall_time_seconds"] = wall;
        write_text_file(out_dir / "run_summary.json", summary.dump(2) + "\n");

        json manifest;
        manifest["kind"] = "reconstruction";
        manifest["version"] = 1;
        manifest["config"] = config_to_json(config);
        manifest["config_hash"] = hex64(config_hash(config));
        manifest["data_file"] = data_file.string();
        manifest["data_file_hash"] = hex64(fnv1a64(read_text_file(data_file)));
        manifest["data_manifest"] = data_manifest;
        manifest["coarse_mesh_hash"] = hex64(mesh_hash(data.fields[0].space->mesh()));
        write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove_all(out_dir, ec);
        throw;
    }
    return out;
}

std::string cmd_compare(const std::vector<std::filesystem::path>& result_dirs, bool csv) {
    if (result_dirs.size() < 2) {
        throw ConfigError("compare: need at least 2 result directories");
    }
    struct Row {
        std::string name;
        Metrics m;
    };
    std::vector<Row> rows;
    for (const auto& dir : result_dirs) {
        const auto path = dir / "metrics.json";
        if (!std::filesystem::exists(path)) {
            throw ConfigError("compare: missing " + path.string());
        }
        rows.push_back({dir.filename().string(), metrics_from_json(json::parse(read_text_file(path)))});
    }

    auto peak = [](const Metrics& m) {
        double v = 0.0;
        for (const auto& [k, x] : m.max_in_inclusion) v = std::max(v, x);
        return v;
    };

    std::string out;
    char buf[256];
    if (csv) {
        out = "run,rel_l2_error,max_in_inclusion,min_det,edge_max_grad,iterations,wall_time_s\n";
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%.6g,%.6g,%d,%.3f\n", r.name.c_str(),
                          r.m.rel_l2_error, peak(r.m), r.m.min_det, r.m.edge_max_grad,
                          r.m.iterations, r.m.wall_time_seconds);
            out += buf;
        }
    } else {
        out = "| run | rel_l2_error | max_in_inclusion | min_det | edge_max_grad | iters | wall_s |\n";
        out += "|---|---|---|---|---|---|---|\n";
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "| %s | %.4f | %.4f | %.4g | %.4g | %d | %.1f |\n",
                          r.name.c_str(), r.m.rel_l2_error, peak(r.m), r.m.min_det,
                          r.m.edge_max_grad, r.m.iterations, r.m.wall_time_seconds);
            out += buf;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gradient check

namespace {

// Smooth bump that vanishes (with its derivative) at the unit circle.
double boundary_window(double x, double y) {
    const double r2 = x * x + y * y;
    const double w = std::max(0.0, 1.0 - r2);
    return w * w;
}

double gaussian(double x, double y, double cx, double cy, double width) {
    const double dx = x - cx, dy = y - cy;
    return std::exp(-(dx * dx + dy * dy) / (width * width));
}

}  // namespace

std::vector<GradCheckRow> gradient_check(double h, int s, const std::vector<double>& eps_list,
                                         int n_directions, std::uint64_t seed, double solver_tol) {
    auto mesh = std::make_shared<const Mesh>(generate_disk_mesh(h));
    auto sspace = FunctionSpace::create(mesh, s == 0 ? 1 : 2);
    auto uspace = FunctionSpace::create(mesh, 2);

    // Data from a contrasty smooth truth so the residuals are O(1).
    const auto truth = [](double x, double y) {
        return 1.0 + 0.8 * gaussian(x, y, 0.25, 0.15, 0.45);
    };
    const PowerDensity data = generate_data(truth, BcSet::bc1, h / 2.0, sspace, 0.0, seed,
                                            Exec::par, solver_tol);

    const ScalarField background(sspace, 1.0);
    ObjectiveEvaluator evaluator(sspace, uspace, data, background,
                                 ObjectiveOptions{0.1, s, solver_tol, Exec::par, false});

    // Base point: smooth, away from the box bounds.
    const ScalarField sigma0 = interpolate(sspace, [](double x, double y) {
        return 1.0 + 0.35 * gaussian(x, y, -0.2, 0.25, 0.5) * boundary_window(x, y);
    });

    NormalSampler rng(seed, 7);
    std::vector<GradCheckRow> rows;
    for (int dir = 0; dir < n_directions; ++dir) {
        const double a0 = 1.5 + std::abs(rng.next());
        const double a1 = rng.next();
        const double cx = 0.45 * std::tanh(rng.next());
        const double cy = 0.45 * std::tanh(rng.next());
        ScalarField phi = interpolate(sspace, [&](double x, double y) {
            return (a0 * gaussian(x, y, cx, cy, 0.4) + 1.2 * a1 * gaussian(x, y, -cx, -cy, 0.55)) *
                   boundary_window(x, y);
        });
        // The pairing identities assume a zero trace; the window vanishes on
        // the circle but boundary midpoint nodes sit on the chords.
        for (int d : sspace->boundary_dofs()) phi.coeffs[static_cast<std::size_t>(d)] = 0.0;

        // Adjoint-side directional derivative in the matching pairing.
        const auto ev = evaluator.evaluate(sigma0);
        double adj;
        if (s == 0) {
            adj = inner_product(ev.gradient, phi, InnerKind::L2);
        } else {
            adj = inner_product(ev.gradient, phi, InnerKind::H1);
        }

        for (double eps : eps_list) {
            ScalarField plus = sigma0, minus = sigma0;
            for (std::size_t i = 0; i < plus.coeffs.size(); ++i) {
                plus.coeffs[i] += eps * phi.coeffs[i];
                minus.coeffs[i] -= eps * phi.coeffs[i];
            }
            const double fd = (evaluator.cost(plus) - evaluator.cost(minus)) / (2.0 * eps);
            GradCheckRow row;
            row.direction = dir;
            row.eps = eps;
            row.fd_value = fd;
            row.adjoint_value = adj;
            row.rel_error = std::abs(fd - adj) / std::max(1e-300, std::abs(adj));
            rows.push_back(row);
        }
    }
    return rows;
}

std::string format_gradient_check(const std::vector<GradCheckRow>& rows) {
    std::string out = "direction      eps              fd                adjoint           rel_error\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%5d      %9.1e   %18.12e  %18.12e  %10.3e\n", r.direction,
                      r.eps, r.fd_value, r.adjoint_value, r.rel_error);
        out += buf;
    }
    return out;
}

}  // namespace aet
