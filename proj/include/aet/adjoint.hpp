#pragma once

#include <memory>
#include <span>
#include <vector>

#include "aet/fem.hpp"
#include "aet/forward.hpp"

namespace aet {

struct ObjectiveOptions {
    double alpha = 0.1;
    int s = 1;  // 0: L2 regularization/gradient, 1: H1
    double solver_tol = 1e-10;
    Exec exec = Exec::par;
    bool warm_start = true;
};

/// Reduced data-misfit functional
///   J(sigma) = sum_i 1/2 || sigma |grad u_i|^2 - H_i ||_L2^2
///            + alpha/2 || sigma - sigma_b ||_X^2,   X = L2 (s=0) or H1 (s=1),
/// with u_i(sigma) the discrete forward solutions. The gradient is assembled
/// from the forward/adjoint pair with the same quadrature as the cost, so it
/// is the exact derivative of the discrete functional up to solver tolerance.
///
/// Caches: boundary values, data at quadrature points, the sigma-space mass /
/// stiffness systems, and (optionally) warm starts for all linear solves.
class ObjectiveEvaluator {
public:
    ObjectiveEvaluator(std::shared_ptr<const FunctionSpace> sigma_space,
                       std::shared_ptr<const FunctionSpace> potential_space, PowerDensity data,
                       ScalarField sigma_background, ObjectiveOptions options);

    /// Cost only (forward solves, no adjoints).
    double cost(const ScalarField& sigma);

    struct Evaluation {
        double cost = 0.0;
        double misfit = 0.0;
        double regularization = 0.0;
        ScalarField gradient;     // X_h gradient driving the optimizer
        ScalarField gradient_l2;  // L2 Riesz representative
        std::vector<ScalarField> potentials;
        std::vector<ScalarField> adjoints;
        std::vector<std::vector<double>> residual_at_quad;  // per excitation
    };
    Evaluation evaluate(const ScalarField& sigma);

    // X_h inner product / norm on sigma-space coefficient vectors.
    double x_inner(std::span<const double> a, std::span<const double> b) const;
    double x_norm(std::span<const double> a) const;
    InnerKind x_kind() const { return opts_.s == 0 ? InnerKind::L2 : InnerKind::H1; }

    const std::shared_ptr<const FunctionSpace>& sigma_space() const { return sspace_; }
    const std::shared_ptr<const FunctionSpace>& potential_space() const { return uspace_; }
    const PowerDensity& data() const { return data_; }
    const ScalarField& sigma_background() const { return sigma_b_; }
    const ObjectiveOptions& options() const { return opts_; }
    int forward_solve_count() const { return n_forward_solves_; }

private:
    std::shared_ptr<const FunctionSpace> sspace_;
    std::shared_ptr<const FunctionSpace> uspace_;
    PowerDensity data_;
    ScalarField sigma_b_;
    ObjectiveOptions opts_;
    std::vector<BoundaryCondition> bcs_;

    const QuadRule* rule_ = nullptr;
    std::vector<std::vector<double>> bc_values_;  // per bc, on potential space
    std::vector<std::vector<double>> h_at_quad_;  // per bc, [element * nq + q]

    const SparseMatrix* mass_ = nullptr;   // sigma-space consistent mass
    const SparseMatrix* stiff_ = nullptr;  // sigma-space unit stiffness
    SparseMatrix mass_dirichlet_;          // s=1 Riesz system
    SparseMatrix smooth_dirichlet_;        // s=1 smoothing system (K + M)

    // Forward cache keyed by the exact sigma coefficients.
    std::vector<double> cached_sigma_;
    SparseMatrix cached_op_;  // eliminated stiffness for cached sigma
    std::vector<ScalarField> cached_u_;
    bool have_cache_ = false;

    std::vector<std::vector<double>> warm_u_, warm_v_;
    std::vector<double> warm_g_, warm_gs_;
    int n_forward_solves_ = 0;

    void solve_forward_all(const ScalarField& sigma);
    double misfit(const ScalarField& sigma, std::vector<std::vector<double>>* residuals) const;
    double regularization(const ScalarField& sigma) const;
};

/// One-shot cost evaluation (builds a throwaway evaluator).
double evaluate_cost(const ScalarField& sigma, const PowerDensity& data, double alpha, int s,
                     const ScalarField& sigma_background, double solver_tol = 1e-10,
                     Exec ex = Exec::par);

/// Adjoint problem for one excitation: A(sigma) v = rhs with
/// rhs(phi) = -2 int sigma (sigma |grad u|^2 - H) grad u . grad phi and a
/// homogeneous Dirichlet trace.
ScalarField solve_adjoint(const ScalarField& sigma, const ScalarField& u, const ScalarField& h_data,
                          double rel_tol = 1e-10, Exec ex = Exec::par, SolveReport* report = nullptr);

/// L2 Riesz representative of the reduced derivative at sigma.
ScalarField reduced_gradient_l2(const ScalarField& sigma, const PowerDensity& data, double alpha,
                                int s, const ScalarField& sigma_background,
                                double solver_tol = 1e-10, Exec ex = Exec::par);

/// Sobolev smoothing: solve (K + M) g_h1 = M g_l2 with zero boundary values.
ScalarField smooth_to_h1(const ScalarField& g_l2, double rel_tol = 1e-10, Exec ex = Exec::par);

}  // namespace aet
