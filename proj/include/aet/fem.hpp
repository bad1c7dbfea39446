#pragma once

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "aet/mesh.hpp"
#include "aet/parallel.hpp"
#include "aet/quadrature.hpp"

namespace aet {

/// Compressed-row sparse matrix with a fixed symmetric pattern.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::vector<int> row_ptr, std::vector<int> col_idx)
        : row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
          values_(col_idx_.size(), 0.0) {}

    int rows() const { return static_cast<int>(row_ptr_.size()) - 1; }
    std::size_t nnz() const { return col_idx_.size(); }

    std::span<const int> row_ptr() const { return row_ptr_; }
    std::span<const int> col_idx() const { return col_idx_; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    // Index of entry (i, j) in the value array; -1 if outside the pattern.
    int slot(int i, int j) const;
    double at(int i, int j) const;

    void set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

    // y = A x, parallel over rows (deterministic: per-row order is fixed).
    void multiply(std::span<const double> x, std::span<double> y, Exec ex = Exec::par) const;

    std::vector<double> diagonal() const;
    double symmetry_defect() const;  // max |a_ij - a_ji| / max |a_ij|

private:
    std::vector<int> row_ptr_;
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b);

/// Continuous Lagrange space of degree 1 (vertex dofs) or 2 (vertex + edge
/// midpoint dofs) on a triangle mesh. Immutable; matrices are cached lazily.
class FunctionSpace : public std::enable_shared_from_this<FunctionSpace> {
public:
    static std::shared_ptr<const FunctionSpace> create(std::shared_ptr<const Mesh> mesh, int degree);

    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
    int degree() const { return degree_; }
    int dof_count() const { return static_cast<int>(dof_coords_.size()); }
    int dofs_per_element() const { return degree_ == 1 ? 3 : 6; }

    const std::vector<std::array<double, 2>>& dof_coords() const { return dof_coords_; }
    const std::vector<int>& boundary_dofs() const { return boundary_dofs_; }
    bool is_boundary_dof(int d) const { return boundary_mask_[static_cast<std::size_t>(d)] != 0; }

    // Global dof of local node `k` of element `t`. Local order: 3 vertices,
    // then midpoints of edges (0,1), (1,2), (2,0) for degree 2.
    int element_dof(int t, int k) const;

    // Reference coordinates of the local nodes.
    static std::array<double, 2> local_node_ref(int degree, int k);

    // Basis values / reference gradients at a reference point.
    void basis_values(double xi, double eta, double* vals) const;
    void basis_ref_gradients(double xi, double eta, double grads[][2]) const;

    // Consistent mass matrix and unit-coefficient stiffness matrix (cached).
    const SparseMatrix& mass_matrix() const;
    const SparseMatrix& unit_stiffness_matrix() const;

    // Shared CSR pattern of all matrices on this space, plus per-element
    // scatter slots (dofs_per_element^2 entries per element).
    const SparseMatrix& pattern() const;
    std::span<const int> element_slots(int t) const;

private:
    FunctionSpace() = default;

    std::shared_ptr<const Mesh> mesh_;
    int degree_ = 1;
    std::vector<std::array<double, 2>> dof_coords_;
    std::vector<int> boundary_dofs_;
    std::vector<char> boundary_mask_;

    mutable std::once_flag pattern_once_, mass_once_, stiff_once_;
    mutable std::unique_ptr<SparseMatrix> pattern_, mass_, stiff_;
    mutable std::vector<int> slots_;

    void build_pattern() const;
};

/// FEM function: coefficient vector bound to a function space.
struct ScalarField {
    std::shared_ptr<const FunctionSpace> space;
    std::vector<double> coeffs;

    ScalarField() = default;
    ScalarField(std::shared_ptr<const FunctionSpace> s, double fill = 0.0)
        : space(std::move(s)), coeffs(static_cast<std::size_t>(space->dof_count()), fill) {}

    // Value / gradient of the piecewise polynomial inside element t.
    double value_at(int t, double xi, double eta) const;
    std::array<double, 2> gradient_at(int t, double xi, double eta) const;
};

ScalarField interpolate(std::shared_ptr<const FunctionSpace> space,
                        const std::function<double(double, double)>& f);

enum class InnerKind { L2, H1 };

/// sigma-weighted stiffness: A_ij = sum_K int_K sigma grad(phi_i).grad(phi_j).
/// sigma may live on a different space over the same mesh; it is evaluated at
/// quadrature points and must be positive there.
SparseMatrix assemble_stiffness(const FunctionSpace& space, const ScalarField& sigma,
                                Exec ex = Exec::par);

SparseMatrix assemble_mass(const FunctionSpace& space, Exec ex = Exec::par);

/// Assemble the load vector b_i = int f(x) phi_i dx with f given at quadrature
/// points per element (row-major [element][quad]).
std::vector<double> assemble_load(const FunctionSpace& space, const QuadRule& rule,
                                  std::span<const double> f_at_quad, Exec ex = Exec::par);

/// Symmetric Dirichlet elimination. Boundary rows/columns are zeroed with a
/// unit diagonal; for each provided right-hand side the column contribution
/// is moved across first, and the boundary entries are set to the boundary
/// values. `boundary_values` are full-length vectors (only boundary entries
/// are read).
void eliminate_dirichlet(SparseMatrix& A, const FunctionSpace& space,
                         std::span<std::vector<double>> rhss,
                         std::span<const std::vector<double>> boundary_values);

struct SolveReport {
    int iterations = 0;
    double rel_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. Convergence is declared at
/// ||b - Ax|| <= rel_tol * ||b||; throws SolverFailureError at max_iter.
std::vector<double> pcg_solve(const SparseMatrix& A, std::span<const double> b,
                              double rel_tol, int max_iter, Exec ex,
                              SolveReport* report = nullptr,
                              const std::vector<double>* initial_guess = nullptr);

/// One-call constrained solve: copies A, eliminates, solves.
ScalarField solve_dirichlet(const SparseMatrix& A, std::span<const double> rhs,
                            std::shared_ptr<const FunctionSpace> space,
                            const std::function<double(double, double)>& boundary_value,
                            double rel_tol = 1e-10, Exec ex = Exec::par,
                            SolveReport* report = nullptr);

/// Gradients of u at the quadrature points of `rule`, flattened
/// [element * rule.n + q].
std::vector<std::array<double, 2>> gradient_at_quadrature(const ScalarField& u,
                                                          const QuadRule& rule,
                                                          Exec ex = Exec::par);

/// Interpolation projection: destination dof values are point evaluations of
/// the source field (cross-mesh, via locate_point).
ScalarField project_between_meshes(const ScalarField& src,
                                   std::shared_ptr<const FunctionSpace> dst_space,
                                   Exec ex = Exec::par);

/// Discrete inner products: L2 = a^T M b, H1 = a^T (M + K) b with K the unit
/// stiffness. Fields must share a space.
double inner_product(const ScalarField& a, const ScalarField& b, InnerKind kind);

/// Quadrature rule matching the polynomial content of a form on `space` with
/// coefficient degree `coeff_degree` (0 for none).
inline const QuadRule& form_rule(const FunctionSpace& space, int coeff_degree) {
    return (space.degree() >= 2 || coeff_degree >= 2) ? quad_rule_deg5() : quad_rule_deg2();
}

}  // namespace aet
