#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "aet/fem.hpp"

namespace aet {

enum class BcSet { bc1, bc2, bc3 };

BcSet bc_set_from_string(const std::string& name);
std::string to_string(BcSet set);

struct BoundaryCondition {
    std::string id;  // e.g. "bc1-a"
    std::function<double(double, double)> trace;
};

/// The boundary excitations of a set: bc1 = {x, (x+y)/sqrt2},
/// bc2 = {x, y}, bc3 = {x, y, (x+y)/sqrt2}.
std::vector<BoundaryCondition> boundary_conditions(BcSet set);

/// Trace value of excitation `which` of `set` at angle theta on the circle.
double eval_boundary(BcSet set, int which, double theta);

/// Interior data: one power-density field per excitation, on the
/// reconstruction space.
struct PowerDensity {
    std::vector<ScalarField> fields;
    std::vector<std::string> bc_ids;
    BcSet bc_set = BcSet::bc1;
    double noise_delta = 0.0;
    std::uint64_t seed = 0;
    double fine_h = 0.0;  // mesh size used to synthesize the data
};

/// Conductivity equation with Dirichlet trace `bc`: assembles the
/// sigma-weighted stiffness on `potential_space` and solves.
ScalarField solve_forward(const ScalarField& sigma, const BoundaryCondition& bc,
                          std::shared_ptr<const FunctionSpace> potential_space,
                          double rel_tol = 1e-10, Exec ex = Exec::par,
                          SolveReport* report = nullptr);

/// Pointwise power density sigma * |grad u|^2 represented on sigma's space.
/// The gradient at a shared dof is averaged over adjacent elements with
/// area weights.
ScalarField power_density(const ScalarField& sigma, const ScalarField& u, Exec ex = Exec::par);

struct DeterminantDiagnostic {
    std::vector<double> per_element_min;
    double global_min = 0.0;
};

/// Minimum of det[grad u1, grad u2] over the quadrature points of each
/// element. A health check for the non-collinearity of the excitations.
DeterminantDiagnostic determinant_diagnostic(const ScalarField& u1, const ScalarField& u2,
                                             Exec ex = Exec::par);

/// Multiplicative Gaussian noise: H_d (1 + delta N_d) with N_d standard
/// normal draws from the seeded generator documented in the README.
ScalarField add_noise(const ScalarField& h, double delta, std::uint64_t seed,
                      std::uint64_t stream = 0);

/// Synthesize power densities for a ground-truth conductivity: solve each
/// excitation on a fine mesh (P2 potentials), form H there, project onto the
/// reconstruction space, then add noise. Requires fine_h <= coarse_h / 2.
PowerDensity generate_data(const std::function<double(double, double)>& truth_sigma, BcSet set,
                           double fine_h, std::shared_ptr<const FunctionSpace> coarse_space,
                           double noise_delta, std::uint64_t seed, Exec ex = Exec::par,
                           double rel_tol = 1e-10);

// Deterministic seeded normal sampler: SplitMix64 stream split by (seed,
// stream), normals via an explicit Box-Muller transform. Fully specified, no
// dependence on the platform's distribution implementations.
class NormalSampler {
public:
    NormalSampler(std::uint64_t seed, std::uint64_t stream);
    double next();

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;

    std::uint64_t next_u64();
    double next_unit();  // uniform in (0, 1]
};

}  // namespace aet
