#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aet/errors.hpp"
#include "aet/io.hpp"
#include "aet/pipeline.hpp"

namespace {

// Exit codes: 0 success, 2 configuration error, 3 solver failure,
// 4 line-search failure.
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitLineSearch = 4;

struct CommonFlags {
    std::string preset;
    std::string config_file;
    double alpha = -1.0;
    int s = -1;
    double noise = -1.0;
    long long seed = -1;
    int kmax = -1;
    double tol = -1.0;
    std::string out;
    bool serial = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--preset", f.preset, "Named preset, e.g. test1-bc1-clean");
    cmd->add_option("--config", f.config_file, "JSON run configuration");
    cmd->add_option("--alpha", f.alpha, "Regularization weight");
    cmd->add_option("--s", f.s, "Regularization order (0: L2, 1: H1)")->check(CLI::Range(0, 1));
    cmd->add_option("--noise", f.noise, "Relative noise level");
    cmd->add_option("--seed", f.seed, "Noise seed");
    cmd->add_option("--kmax", f.kmax, "Maximum optimizer iterations");
    cmd->add_option("--tol", f.tol, "Optimizer stopping tolerance");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_flag("--serial", f.serial, "Run all kernels on the serial lane");
}

aet::RunConfig build_config(const CommonFlags& f) {
    aet::RunConfig config;
    if (!f.preset.empty()) config = aet::preset_config(f.preset);
    if (!f.config_file.empty()) {
        aet::RunConfig from_file = aet::config_from_json_file(f.config_file);
        if (!f.preset.empty()) {
            // --preset provides the base; a config file refines it.
            throw aet::ConfigError("use either --preset or --config, not both");
        }
        config = from_file;
    }
    if (f.alpha >= 0.0) config.nlcg.alpha = f.alpha;
    if (f.s >= 0) config.nlcg.s = f.s;
    if (f.noise >= 0.0) config.noise_delta = f.noise;
    if (f.seed >= 0) config.seed = static_cast<std::uint64_t>(f.seed);
    if (f.kmax >= 0) config.nlcg.k_max = f.kmax;
    if (f.tol > 0.0) config.nlcg.tol = f.tol;
    if (!f.out.empty()) config.out_dir = f.out;
    if (f.serial) config.nlcg.exec = aet::Exec::serial;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conductivity reconstruction from interior power-density data"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Synthesize a power-density data file");
    CommonFlags gen_flags;
    add_common(gen, gen_flags);
    std::string gen_phantom, gen_bc;
    double gen_fine_h = -1.0, gen_coarse_h = -1.0;
    gen->add_option("--phantom", gen_phantom, "Phantom id or geometry JSON path");
    gen->add_option("--bc", gen_bc, "Boundary-condition set (bc1|bc2|bc3)");
    gen->add_option("--fine-h", gen_fine_h, "Data synthesis mesh size");
    gen->add_option("--coarse-h", gen_coarse_h, "Reconstruction mesh size");

    // reconstruct
    auto* rec = app.add_subcommand("reconstruct", "Run the NLCG reconstruction on a data file");
    CommonFlags rec_flags;
    add_common(rec, rec_flags);
    std::string rec_data;
    rec->add_option("data", rec_data, "Power-density data file")->required();

    // compare
    auto* cmp = app.add_subcommand("compare", "Tabulate metrics of result directories");
    std::vector<std::string> cmp_dirs;
    bool cmp_csv = false;
    std::string cmp_out;
    cmp->add_option("dirs", cmp_dirs, "Result directories")->required()->expected(-2);
    cmp->add_flag("--csv", cmp_csv, "Emit CSV instead of markdown");
    cmp->add_option("--out", cmp_out, "Write the table to a file");

    // gradcheck
    auto* grad = app.add_subcommand("gradcheck", "Adjoint-vs-finite-difference gradient table");
    double grad_h = 0.05;
    int grad_s = 1, grad_dirs = 3;
    long long grad_seed = 12345;
    grad->add_option("--h", grad_h, "Mesh size");
    grad->add_option("--s", grad_s, "Regularization order")->check(CLI::Range(0, 1));
    grad->add_option("--dirs", grad_dirs, "Number of random directions");
    grad->add_option("--seed", grad_seed, "Direction seed");

    // mesh
    auto* mesh_cmd = app.add_subcommand("mesh", "Generate and export a unit-disk mesh");
    double mesh_h = 0.05;
    std::string mesh_out = "mesh", mesh_format = "both";
    mesh_cmd->add_option("--h", mesh_h, "Mesh size")->required();
    mesh_cmd->add_option("--out", mesh_out, "Output path prefix");
    mesh_cmd->add_option("--format", mesh_format, "text|vtk|both")
        ->check(CLI::IsMember({"text", "vtk", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            aet::RunConfig config = build_config(gen_flags);
            if (!gen_phantom.empty()) config.phantom = gen_phantom;
            if (!gen_bc.empty()) config.bc_set = aet::bc_set_from_string(gen_bc);
            if (gen_fine_h > 0.0) config.fine_h = gen_fine_h;
            if (gen_coarse_h > 0.0) config.coarse_h = gen_coarse_h;
            const auto file = aet::cmd_generate(config);
            std::printf("wrote %s\n", file.string().c_str());
        } else if (rec->parsed()) {
            aet::RunConfig config = build_config(rec_flags);
            const auto out = aet::cmd_reconstruct(rec_data, config);
            std::printf("wrote %s (termination: %s, rel_l2_error: %.4f)\n",
                        out.directory.string().c_str(),
                        aet::to_string(out.result.termination).c_str(),
                        out.metrics.rel_l2_error);
            if (out.result.termination == aet::Termination::line_search_failure) {
                return kExitLineSearch;
            }
        } else if (cmp->parsed()) {
            std::vector<std::filesystem::path> dirs(cmp_dirs.begin(), cmp_dirs.end());
            const std::string table = aet::cmd_compare(dirs, cmp_csv);
            if (!cmp_out.empty()) {
                aet::write_text_file(cmp_out, table);
            }
            std::fputs(table.c_str(), stdout);
        } else if (grad->parsed()) {
            const auto rows = aet::gradient_check(grad_h, grad_s, {1e-4, 1e-5, 1e-6}, grad_dirs,
                                                  static_cast<std::uint64_t>(grad_seed));
            std::fputs(aet::format_gradient_check(rows).c_str(), stdout);
        } else if (mesh_cmd->parsed()) {
            const aet::Mesh mesh = aet::generate_disk_mesh(mesh_h);
            if (mesh_format != "vtk") {
                aet::write_mesh_text(mesh, mesh_out + ".txt");
                std::printf("wrote %s.txt\n", mesh_out.c_str());
            }
            if (mesh_format != "text") {
                aet::write_mesh_vtk(mesh, mesh_out + ".vtk");
                std::printf("wrote %s.vtk\n", mesh_out.c_str());
            }
            std::printf("vertices=%zu triangles=%zu hash=%016llx\n", mesh.num_vertices(),
                        mesh.num_triangles(),
                        static_cast<unsigned long long>(aet::mesh_hash(mesh)));
        }
    } catch (const aet::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const aet::InvalidParameterError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const aet::IoError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const aet::SolverFailureError& e) {
        std::fprintf(stderr, "solver failure: %s (iterations=%d, residual=%.3e)\n", e.what(),
                     e.iterations, e.residual);
        return kExitSolver;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
