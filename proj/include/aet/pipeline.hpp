#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aet/optimizer.hpp"
#include "aet/phantoms.hpp"

namespace aet {

struct RunConfig {
    std::string phantom = "disk";  // phantom id or path to a geometry JSON
    BcSet bc_set = BcSet::bc1;
    double fine_h = 0.005;
    double coarse_h = 0.01;
    double noise_delta = 0.0;
    std::uint64_t seed = 424242;
    NlcgConfig nlcg;
    std::string out_dir = "runs/out";
    std::string label = "run";

    void validate() const;
};

/// Shipped preset names ("<phantom>-<bc>-<noise>", e.g. "test1-bc1-clean",
/// "heart-noise25"; bc defaults to bc1 and noise to clean).
std::vector<std::string> preset_names();
RunConfig preset_config(const std::string& name);
bool is_preset_name(const std::string& name);

RunConfig config_from_json_text(const std::string& text);
RunConfig config_from_json_file(const std::filesystem::path& path);
std::string config_to_json_text(const RunConfig& config);

/// Resolve the phantom field (built-in id or JSON file path).
Phantom resolve_phantom(const std::string& name_or_path);

/// Synthesize data per the config and write the versioned file plus its
/// manifest. Returns the data file path.
std::filesystem::path cmd_generate(const RunConfig& config);

struct Metrics {
    double rel_l2_error = 0.0;
    std::map<std::string, double> max_in_inclusion;
    double min_det = 0.0;
    double edge_max_grad = 0.0;
    int iterations = 0;
    double wall_time_seconds = 0.0;
};

struct ReconstructOutput {
    std::filesystem::path directory;
    ReconstructionResult result;
    Metrics metrics;
};

/// Run the reconstruction on a data file. Reads the sibling manifest for
/// provenance (ground-truth phantom), runs the optimizer, writes sigma
/// (CSV/VTK/PNG), the iteration history, metrics, a run summary, and a
/// manifest into `out_dir`. Partial outputs are removed on failure.
ReconstructOutput cmd_reconstruct(const std::filesystem::path& data_file, RunConfig config);

/// Markdown (default) or CSV table of the metrics of several result
/// directories.
std::string cmd_compare(const std::vector<std::filesystem::path>& result_dirs,
                        bool csv = false);

struct GradCheckRow {
    int direction = 0;
    double eps = 0.0;
    double fd_value = 0.0;
    double adjoint_value = 0.0;
    double rel_error = 0.0;
};

/// Adjoint-vs-finite-difference table on a smooth test problem at mesh size h
/// for regularization order s. Directions vanish near the boundary.
std::vector<GradCheckRow> gradient_check(double h, int s, const std::vector<double>& eps_list,
                                         int n_directions, std::uint64_t seed,
                                         double solver_tol = 1e-13);
std::string format_gradient_check(const std::vector<GradCheckRow>& rows);

Metrics compute_metrics(const ScalarField& sigma_rec, const Phantom& truth,
                        const ReconstructionResult& result, double wall_time_seconds,
                        double solver_tol = 1e-10);

}  // namespace aet
