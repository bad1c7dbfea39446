#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aet/adjoint.hpp"
#include "aet/fem.hpp"

namespace aet {

struct NlcgConfig {
    double alpha = 0.1;          // regularization weight
    int s = 1;                   // 0: L2, 1: H1
    double sigma_lower = 0.01;
    double sigma_upper = 4.0;
    double sigma_background = 1.0;
    double sigma_init = 1.0;
    double armijo_delta = 0.1;       // sufficient-decrease parameter, in (0, 1/2)
    double armijo_backtrack = 0.5;   // step shrink factor
    double alpha0 = 1.0;             // first trial step
    bool bb_warm_start = true;       // Barzilai-Borwein trial step after iteration 1
    int k_max = 200;
    double tol = 1e-4;               // stop on ||sigma_{k+1} - sigma_k||_X < tol
    double restart_threshold = 1e-12;
    int max_backtracks = 40;
    double solver_tol = 1e-10;
    Exec exec = Exec::par;

    void validate() const;
};

struct IterationRecord {
    int k = 0;
    double cost = 0.0;
    double grad_norm = 0.0;  // X_h norm
    double step = 0.0;
    double beta = 0.0;
    int backtracks = 0;
    double active_set_fraction = 0.0;
    double descent_product = 0.0;  // <g, d>_X of the direction actually used
    bool restarted = false;
    double sigma_min = 0.0;  // iterate range after projection
    double sigma_max = 0.0;
};

enum class Termination { converged, max_iterations, line_search_failure };

std::string to_string(Termination t);

struct ReconstructionResult {
    ScalarField sigma;
    std::vector<IterationRecord> history;
    Termination termination = Termination::max_iterations;
    double final_cost = 0.0;
    double initial_cost = 0.0;
    // ||sigma - P[sigma - g]||_X at the final iterate (gamma = 1).
    double projected_gradient_measure = 0.0;
};

using InnerProductFn = std::function<double(std::span<const double>, std::span<const double>)>;

/// Hager-Zhang conjugacy coefficient in the given inner product. Returns
/// nullopt (the restart signal) when |<d, y>| < threshold * ||d|| * ||y||.
std::optional<double> hager_zhang_beta(std::span<const double> g_new,
                                       std::span<const double> g_old, std::span<const double> d,
                                       const InnerProductFn& inner, double restart_threshold);

struct ArmijoResult {
    double step = 0.0;
    double cost = 0.0;
    int backtracks = 0;
};

/// Backtracking line search on the sufficient-decrease condition
///   cost(step) <= f0 + delta * step * dir_derivative.
/// `cost_of_step` evaluates the objective at the (projected) trial point for
/// a given step length. Throws LineSearchFailureError after max_backtracks
/// and InvalidParameterError when dir_derivative is not a descent slope.
ArmijoResult armijo_search(double f0, double dir_derivative,
                           const std::function<double(double)>& cost_of_step, double alpha0,
                           double delta, double backtrack, int max_backtracks);

/// Dof-wise clamp to [lower, upper].
std::vector<double> project_box(std::span<const double> values, double lower, double upper);
ScalarField project_box(const ScalarField& field, double lower, double upper);

/// Projected nonlinear conjugate gradient reconstruction from power-density
/// data. The sigma space is taken from the data fields; potentials use P2 on
/// the same mesh.
ReconstructionResult run_nlcg(const PowerDensity& data, const NlcgConfig& config);

/// Same, on a caller-provided evaluator (the evaluator's alpha/s/tolerances
/// take precedence; config supplies the optimizer knobs).
ReconstructionResult run_nlcg(ObjectiveEvaluator& evaluator, const NlcgConfig& config);

}  // namespace aet
