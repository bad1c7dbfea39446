#include "aet/fem.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>

#include "aet/errors.hpp"

namespace aet {

namespace {

struct ElementGeometry {
    double j[2][2];   // columns: v1 - v0, v2 - v0
    double det;
    double area;

    void physical_gradient(const double ref[2], double out[2]) const {
        out[0] = (j[1][1] * ref[0] - j[1][0] * ref[1]) / det;
        out[1] = (-j[0][1] * ref[0] + j[0][0] * ref[1]) / det;
    }
};

ElementGeometry element_geometry(const Mesh& mesh, int t) {
    const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
    const auto& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
    const auto& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
    const auto& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
    ElementGeometry g;
    g.j[0][0] = p1[0] - p0[0];
    g.j[0][1] = p2[0] - p0[0];
    g.j[1][0] = p1[1] - p0[1];
    g.j[1][1] = p2[1] - p0[1];
    g.det = g.j[0][0] * g.j[1][1] - g.j[0][1] * g.j[1][0];
    g.area = 0.5 * g.det;
    return g;
}

void p1_values(double xi, double eta, double* v) {
    v[0] = 1.0 - xi - eta;
    v[1] = xi;
    v[2] = eta;
}

void p1_ref_gradients(double g[][2]) {
    g[0][0] = -1.0; g[0][1] = -1.0;
    g[1][0] = 1.0;  g[1][1] = 0.0;
    g[2][0] = 0.0;  g[2][1] = 1.0;
}

void p2_values(double xi, double eta, double* v) {
    const double l0 = 1.0 - xi - eta, l1 = xi, l2 = eta;
    v[0] = l0 * (2.0 * l0 - 1.0);
    v[1] = l1 * (2.0 * l1 - 1.0);
    v[2] = l2 * (2.0 * l2 - 1.0);
    v[3] = 4.0 * l0 * l1;
    v[4] = 4.0 * l1 * l2;
    v[5] = 4.0 * l2 * l0;
}

void p2_ref_gradients(double xi, double eta, double g[][2]) {
    const double l0 = 1.0 - xi - eta, l1 = xi, l2 = eta;
    // grad l0 = (-1,-1), grad l1 = (1,0), grad l2 = (0,1)
    g[0][0] = -(4.0 * l0 - 1.0); g[0][1] = -(4.0 * l0 - 1.0);
    g[1][0] = 4.0 * l1 - 1.0;    g[1][1] = 0.0;
    g[2][0] = 0.0;               g[2][1] = 4.0 * l2 - 1.0;
    g[3][0] = 4.0 * (l0 - l1);   g[3][1] = -4.0 * l1;
    g[4][0] = 4.0 * l2;          g[4][1] = 4.0 * l1;
    g[5][0] = -4.0 * l2;         g[5][1] = 4.0 * (l0 - l2);
}

// Basis tables sampled at the points of a rule.
struct BasisTable {
    int nloc = 0;
    int nq = 0;
    double vals[7][6];
    double ref_grads[7][6][2];
};

BasisTable tabulate(int degree, const QuadRule& rule) {
    BasisTable t;
    t.nloc = degree == 1 ? 3 : 6;
    t.nq = rule.n;
    for (int q = 0; q < rule.n; ++q) {
        if (degree == 1) {
            p1_values(rule.pts[q].xi, rule.pts[q].eta, t.vals[q]);
            double g[3][2];
            p1_ref_gradients(g);
            for (int k = 0; k < 3; ++k) {
                t.ref_grads[q][k][0] = g[k][0];
                t.ref_grads[q][k][1] = g[k][1];
            }
        } else {
            p2_values(rule.pts[q].xi, rule.pts[q].eta, t.vals[q]);
            double g[6][2];
            p2_ref_gradients(rule.pts[q].xi, rule.pts[q].eta, g);
            for (int k = 0; k < 6; ++k) {
                t.ref_grads[q][k][0] = g[k][0];
                t.ref_grads[q][k][1] = g[k][1];
            }
        }
    }
    return t;
}

constexpr std::size_t kAssemblyBlock = 16384;

// Two-phase assembly: local element matrices in parallel, then a serial
// scatter in element order so the result is independent of the thread count.
template <class LocalKernel>
void assemble_matrix(const FunctionSpace& space, SparseMatrix& out, Exec ex, LocalKernel&& kernel) {
    const std::size_t nt = space.mesh().num_triangles();
    const int nloc = space.dofs_per_element();
    const std::size_t entries = static_cast<std::size_t>(nloc) * static_cast<std::size_t>(nloc);
    std::vector<double> block(kAssemblyBlock * entries);
    auto values = out.values();

    for (std::size_t lo = 0; lo < nt; lo += kAssemblyBlock) {
        const std::size_t hi = std::min(nt, lo + kAssemblyBlock);
        parallel_for(hi - lo, ex, [&](std::size_t r) {
            kernel(static_cast<int>(lo + r), &block[r * entries]);
        });
        for (std::size_t t = lo; t < hi; ++t) {
            const auto slots = space.element_slots(static_cast<int>(t));
            const double* local = &block[(t - lo) * entries];
            for (std::size_t e = 0; e < entries; ++e) values[static_cast<std::size_t>(slots[e])] += local[e];
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// SparseMatrix

int SparseMatrix::slot(int i, int j) const {
    const int lo = row_ptr_[static_cast<std::size_t>(i)];
    const int hi = row_ptr_[static_cast<std::size_t>(i) + 1];
    auto it = std::lower_bound(col_idx_.begin() + lo, col_idx_.begin() + hi, j);
    if (it == col_idx_.begin() + hi || *it != j) return -1;
    return static_cast<int>(it - col_idx_.begin());
}

double SparseMatrix::at(int i, int j) const {
    const int s = slot(i, j);
    return s < 0 ? 0.0 : values_[static_cast<std::size_t>(s)];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y, Exec ex) const {
    const int n = rows();
    parallel_for(static_cast<std::size_t>(n), ex, [&](std::size_t i) {
        double s = 0.0;
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            s += values_[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col_idx_[static_cast<std::size_t>(k)])];
        }
        y[i] = s;
    });
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(static_cast<std::size_t>(rows()), 0.0);
    for (int i = 0; i < rows(); ++i) d[static_cast<std::size_t>(i)] = at(i, i);
    return d;
}

double SparseMatrix::symmetry_defect() const {
    double max_abs = 0.0, max_diff = 0.0;
    for (int i = 0; i < rows(); ++i) {
        for (int k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
            const int j = col_idx_[static_cast<std::size_t>(k)];
            const double a = values_[static_cast<std::size_t>(k)];
            max_abs = std::max(max_abs, std::abs(a));
            max_diff = std::max(max_diff, std::abs(a - at(j, i)));
        }
    }
    return max_abs > 0.0 ? max_diff / max_abs : 0.0;
}

SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.rows() != b.rows() || a.nnz() != b.nnz() ||
        !std::equal(a.col_idx().begin(), a.col_idx().end(), b.col_idx().begin())) {
        throw InvalidParameterError("SparseMatrix: pattern mismatch in operator+");
    }
    SparseMatrix out = a;
    auto v = out.values();
    auto bv = b.values();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += bv[k];
    return out;
}

// ---------------------------------------------------------------------------
// FunctionSpace

std::shared_ptr<const FunctionSpace> FunctionSpace::create(std::shared_ptr<const Mesh> mesh,
                                                           int degree) {
    if (degree != 1 && degree != 2) {
        throw InvalidParameterError("FunctionSpace: degree must be 1 or 2");
    }
    auto space = std::shared_ptr<FunctionSpace>(new FunctionSpace());
    space->mesh_ = std::move(mesh);
    space->degree_ = degree;

    const Mesh& m = *space->mesh_;
    const int nv = static_cast<int>(m.num_vertices());
    space->dof_coords_.assign(m.vertices.begin(), m.vertices.end());
    space->boundary_mask_.assign(static_cast<std::size_t>(nv), 0);
    for (int v : m.boundary_vertices) space->boundary_mask_[static_cast<std::size_t>(v)] = 1;

    if (degree == 2) {
        // Edge-midpoint dofs sit on the chord midpoint: the discrete domain is
        // the polygon, and using the geometric node keeps interpolation and
        // the solve consistent.
        space->dof_coords_.reserve(static_cast<std::size_t>(nv) + m.num_edges());
        space->boundary_mask_.resize(static_cast<std::size_t>(nv) + m.num_edges(), 0);
        for (std::size_t e = 0; e < m.num_edges(); ++e) {
            const auto& a = m.vertices[static_cast<std::size_t>(m.edges[e][0])];
            const auto& b = m.vertices[static_cast<std::size_t>(m.edges[e][1])];
            space->dof_coords_.push_back({0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])});
            if (m.is_boundary_edge(static_cast<int>(e))) {
                space->boundary_mask_[static_cast<std::size_t>(nv) + e] = 1;
            }
        }
    }
    for (int d = 0; d < static_cast<int>(space->boundary_mask_.size()); ++d) {
        if (space->boundary_mask_[static_cast<std::size_t>(d)]) space->boundary_dofs_.push_back(d);
    }
    return space;
}

int FunctionSpace::element_dof(int t, int k) const {
    const auto& tri = mesh_->triangles[static_cast<std::size_t>(t)];
    if (k < 3) return tri[static_cast<std::size_t>(k)];
    return static_cast<int>(mesh_->num_vertices()) +
           mesh_->tri_edges[static_cast<std::size_t>(t)][static_cast<std::size_t>(k - 3)];
}

std::array<double, 2> FunctionSpace::local_node_ref(int degree, int k) {
    static constexpr std::array<std::array<double, 2>, 6> nodes{{
        {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5},
    }};
    (void)degree;
    return nodes[static_cast<std::size_t>(k)];
}

void FunctionSpace::basis_values(double xi, double eta, double* vals) const {
    if (degree_ == 1) p1_values(xi, eta, vals);
    else p2_values(xi, eta, vals);
}

void FunctionSpace::basis_ref_gradients(double xi, double eta, double grads[][2]) const {
    if (degree_ == 1) p1_ref_gradients(grads);
    else p2_ref_gradients(xi, eta, grads);
}

void FunctionSpace::build_pattern() const {
    const std::size_t nt = mesh_->num_triangles();
    const int nloc = dofs_per_element();
    const int n = dof_count();

    std::vector<std::int64_t> pairs;
    pairs.reserve(nt * static_cast<std::size_t>(nloc) * static_cast<std::size_t>(nloc));
    for (std::size_t t = 0; t < nt; ++t) {
        int dofs[6];
        for (int k = 0; k < nloc; ++k) dofs[k] = element_dof(static_cast<int>(t), k);
        for (int a = 0; a < nloc; ++a)
            for (int b = 0; b < nloc; ++b)
                pairs.push_back(static_cast<std::int64_t>(dofs[a]) * n + dofs[b]);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    std::vector<int> row_ptr(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> col_idx(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const int i = static_cast<int>(pairs[k] / n);
        col_idx[k] = static_cast<int>(pairs[k] % n);
        ++row_ptr[static_cast<std::size_t>(i) + 1];
    }
    for (int i = 0; i < n; ++i) row_ptr[static_cast<std::size_t>(i) + 1] += row_ptr[static_cast<std::size_t>(i)];
    pattern_ = std::make_unique<SparseMatrix>(std::move(row_ptr), std::move(col_idx));

    slots_.resize(nt * static_cast<std::size_t>(nloc) * static_cast<std::size_t>(nloc));
    for (std::size_t t = 0; t < nt; ++t) {
        int dofs[6];
        for (int k = 0; k < nloc; ++k) dofs[k] = element_dof(static_cast<int>(t), k);
        for (int a = 0; a < nloc; ++a) {
            for (int b = 0; b < nloc; ++b) {
                slots_[(t * static_cast<std::size_t>(nloc) + static_cast<std::size_t>(a)) * static_cast<std::size_t>(nloc) +
                       static_cast<std::size_t>(b)] = pattern_->slot(dofs[a], dofs[b]);
            }
        }
    }
}

const SparseMatrix& FunctionSpace::pattern() const {
    std::call_once(pattern_once_, [this] { build_pattern(); });
    return *pattern_;
}

std::span<const int> FunctionSpace::element_slots(int t) const {
    pattern();
    const int nloc = dofs_per_element();
    const std::size_t entries = static_cast<std::size_t>(nloc) * static_cast<std::size_t>(nloc);
    return {slots_.data() + static_cast<std::size_t>(t) * entries, entries};
}

const SparseMatrix& FunctionSpace::mass_matrix() const {
    std::call_once(mass_once_, [this] {
        mass_ = std::make_unique<SparseMatrix>(assemble_mass(*this, Exec::par));
    });
    return *mass_;
}

const SparseMatrix& FunctionSpace::unit_stiffness_matrix() const {
    std::call_once(stiff_once_, [this] {
        ScalarField one(shared_from_this(), 1.0);
        stiff_ = std::make_unique<SparseMatrix>(assemble_stiffness(*this, one, Exec::par));
    });
    return *stiff_;
}

// ---------------------------------------------------------------------------
// ScalarField

double ScalarField::value_at(int t, double xi, double eta) const {
    double vals[6];
    space->basis_values(xi, eta, vals);
    const int nloc = space->dofs_per_element();
    double s = 0.0;
    for (int k = 0; k < nloc; ++k) {
        s += vals[k] * coeffs[static_cast<std::size_t>(space->element_dof(t, k))];
    }
    return s;
}

std::array<double, 2> ScalarField::gradient_at(int t, double xi, double eta) const {
    double grads[6][2];
    space->basis_ref_gradients(xi, eta, grads);
    const auto geom = element_geometry(space->mesh(), t);
    const int nloc = space->dofs_per_element();
    double gref[2] = {0.0, 0.0};
    for (int k = 0; k < nloc; ++k) {
        const double c = coeffs[static_cast<std::size_t>(space->element_dof(t, k))];
        gref[0] += c * grads[k][0];
        gref[1] += c * grads[k][1];
    }
    double out[2];
    geom.physical_gradient(gref, out);
    return {out[0], out[1]};
}

ScalarField interpolate(std::shared_ptr<const FunctionSpace> space,
                        const std::function<double(double, double)>& f) {
    ScalarField field(space);
    const auto& coords = space->dof_coords();
    for (std::size_t d = 0; d < coords.size(); ++d) field.coeffs[d] = f(coords[d][0], coords[d][1]);
    return field;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

template <class SigmaAtQuad>
SparseMatrix assemble_stiffness_impl(const FunctionSpace& space, const QuadRule& rule, Exec ex,
                                     SigmaAtQuad&& sigma_at, bool check_coercivity) {
    SparseMatrix A = space.pattern();  // zero values, shared sparsity
    A.set_zero();
    const BasisTable table = tabulate(space.degree(), rule);
    const Mesh& mesh = space.mesh();
    std::atomic<bool> coercivity_ok{true};

    assemble_matrix(space, A, ex, [&](int t, double* local) {
        const auto geom = element_geometry(mesh, t);
        double phys[7][6][2];
        for (int q = 0; q < table.nq; ++q)
            for (int k = 0; k < table.nloc; ++k) geom.physical_gradient(table.ref_grads[q][k], phys[q][k]);

        const int nloc = table.nloc;
        for (int e = 0; e < nloc * nloc; ++e) local[e] = 0.0;
        for (int q = 0; q < table.nq; ++q) {
            const double sigma = sigma_at(t, q);
            if (check_coercivity && !(sigma > 0.0)) coercivity_ok.store(false, std::memory_order_relaxed);
            const double w = rule.pts[q].w * geom.area * sigma;
            for (int a = 0; a < nloc; ++a) {
                for (int b = 0; b < nloc; ++b) {
                    local[a * nloc + b] +=
                        w * (phys[q][a][0] * phys[q][b][0] + phys[q][a][1] * phys[q][b][1]);
                }
            }
        }
    });

    if (check_coercivity && !coercivity_ok.load()) {
        throw CoercivityError("assemble_stiffness: nonpositive sigma at a quadrature point");
    }
    return A;
}

}  // namespace

SparseMatrix assemble_stiffness(const FunctionSpace& space, const ScalarField& sigma, Exec ex) {
    if (&sigma.space->mesh() != &space.mesh()) {
        throw InvalidParameterError("assemble_stiffness: sigma must live on the same mesh");
    }
    const QuadRule& rule = form_rule(space, sigma.space->degree());
    // Coefficient basis sampled once at the rule points.
    const BasisTable sig_table = tabulate(sigma.space->degree(), rule);
    const FunctionSpace& sig_space = *sigma.space;
    auto sigma_at = [&](int t, int q) {
        double s = 0.0;
        for (int k = 0; k < sig_table.nloc; ++k) {
            s += sig_table.vals[q][k] * sigma.coeffs[static_cast<std::size_t>(sig_space.element_dof(t, k))];
        }
        return s;
    };
    return assemble_stiffness_impl(space, rule, ex, sigma_at, true);
}

SparseMatrix assemble_mass(const FunctionSpace& space, Exec ex) {
    const QuadRule& rule = form_rule(space, 0);
    SparseMatrix M = space.pattern();
    M.set_zero();
    const BasisTable table = tabulate(space.degree(), rule);
    const Mesh& mesh = space.mesh();

    assemble_matrix(space, M, ex, [&](int t, double* local) {
        const auto geom = element_geometry(mesh, t);
        const int nloc = table.nloc;
        for (int e = 0; e < nloc * nloc; ++e) local[e] = 0.0;
        for (int q = 0; q < table.nq; ++q) {
            const double w = rule.pts[q].w * geom.area;
            for (int a = 0; a < nloc; ++a)
                for (int b = 0; b < nloc; ++b) local[a * nloc + b] += w * table.vals[q][a] * table.vals[q][b];
        }
    });
    return M;
}

std::vector<double> assemble_load(const FunctionSpace& space, const QuadRule& rule,
                                  std::span<const double> f_at_quad, Exec ex) {
    const std::size_t nt = space.mesh().num_triangles();
    const int nloc = space.dofs_per_element();
    const BasisTable table = tabulate(space.degree(), rule);
    std::vector<double> b(static_cast<std::size_t>(space.dof_count()), 0.0);
    std::vector<double> block(kAssemblyBlock * static_cast<std::size_t>(nloc));
    const Mesh& mesh = space.mesh();

    for (std::size_t lo = 0; lo < nt; lo += kAssemblyBlock) {
        const std::size_t hi = std::min(nt, lo + kAssemblyBlock);
        parallel_for(hi - lo, ex, [&](std::size_t r) {
            const int t = static_cast<int>(lo + r);
            const auto geom = element_geometry(mesh, t);
            double* local = &block[r * static_cast<std::size_t>(nloc)];
            for (int k = 0; k < nloc; ++k) local[k] = 0.0;
            for (int q = 0; q < rule.n; ++q) {
                const double w = rule.pts[q].w * geom.area *
                                 f_at_quad[static_cast<std::size_t>(t) * static_cast<std::size_t>(rule.n) +
                                           static_cast<std::size_t>(q)];
                for (int k = 0; k < nloc; ++k) local[k] += w * table.vals[q][k];
            }
        });
        for (std::size_t t = lo; t < hi; ++t) {
            const double* local = &block[(t - lo) * static_cast<std::size_t>(nloc)];
            for (int k = 0; k < nloc; ++k) {
                b[static_cast<std::size_t>(space.element_dof(static_cast<int>(t), k))] += local[k];
            }
        }
    }
    return b;
}

void eliminate_dirichlet(SparseMatrix& A, const FunctionSpace& space,
                         std::span<std::vector<double>> rhss,
                         std::span<const std::vector<double>> boundary_values) {
    if (rhss.size() != boundary_values.size()) {
        throw InvalidParameterError("eliminate_dirichlet: rhs/bc count mismatch");
    }
    const int n = A.rows();
    auto row_ptr = A.row_ptr();
    auto col_idx = A.col_idx();
    auto values = A.values();

    for (int i = 0; i < n; ++i) {
        const bool bi = space.is_boundary_dof(i);
        for (int k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const int j = col_idx[static_cast<std::size_t>(k)];
            const bool bj = space.is_boundary_dof(j);
            if (!bi && !bj) continue;
            if (bi) {
                values[static_cast<std::size_t>(k)] = (i == j) ? 1.0 : 0.0;
            } else {
                // interior row, boundary column: move to the right-hand sides
                for (std::size_t r = 0; r < rhss.size(); ++r) {
                    rhss[r][static_cast<std::size_t>(i)] -=
                        values[static_cast<std::size_t>(k)] * boundary_values[r][static_cast<std::size_t>(j)];
                }
                values[static_cast<std::size_t>(k)] = 0.0;
            }
        }
    }
    for (std::size_t r = 0; r < rhss.size(); ++r) {
        for (int d : space.boundary_dofs()) {
            rhss[r][static_cast<std::size_t>(d)] = boundary_values[r][static_cast<std::size_t>(d)];
        }
    }
}

std::vector<double> pcg_solve(const SparseMatrix& A, std::span<const double> b, double rel_tol,
                              int max_iter, Exec ex, SolveReport* report,
                              const std::vector<double>* initial_guess) {
    const std::size_t n = static_cast<std::size_t>(A.rows());
    std::vector<double> x(n, 0.0);
    const double bnorm = std::sqrt(dot_chunked(b, b, ex));
    if (bnorm == 0.0) {
        if (report) *report = {0, 0.0};
        return x;
    }
    if (initial_guess && initial_guess->size() == n) x = *initial_guess;

    std::vector<double> inv_diag = A.diagonal();
    for (double& d : inv_diag) d = d != 0.0 ? 1.0 / d : 1.0;

    std::vector<double> r(n), z(n), p(n), q(n);
    A.multiply(x, r, ex);
    parallel_for(n, ex, [&](std::size_t i) { r[i] = b[i] - r[i]; });

    double rnorm = std::sqrt(dot_chunked(r, r, ex));
    if (rnorm <= rel_tol * bnorm) {
        if (report) *report = {0, rnorm / bnorm};
        return x;
    }

    parallel_for(n, ex, [&](std::size_t i) { z[i] = inv_diag[i] * r[i]; });
    p = z;
    double rz = dot_chunked(r, z, ex);

    for (int it = 1; it <= max_iter; ++it) {
        A.multiply(p, q, ex);
        const double pq = dot_chunked(p, q, ex);
        if (!(pq > 0.0)) {
            throw SolverFailureError("pcg: breakdown (non-SPD operator)", it, rnorm / bnorm);
        }
        const double alpha = rz / pq;
        parallel_for(n, ex, [&](std::size_t i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        });
        rnorm = std::sqrt(dot_chunked(r, r, ex));
        if (rnorm <= rel_tol * bnorm) {
            if (report) *report = {it, rnorm / bnorm};
            return x;
        }
        parallel_for(n, ex, [&](std::size_t i) { z[i] = inv_diag[i] * r[i]; });
        const double rz_new = dot_chunked(r, z, ex);
        const double beta = rz_new / rz;
        rz = rz_new;
        parallel_for(n, ex, [&](std::size_t i) { p[i] = z[i] + beta * p[i]; });
    }
    throw SolverFailureError("pcg: no convergence within iteration budget", max_iter,
                             rnorm / bnorm);
}

ScalarField solve_dirichlet(const SparseMatrix& A, std::span<const double> rhs,
                            std::shared_ptr<const FunctionSpace> space,
                            const std::function<double(double, double)>& boundary_value,
                            double rel_tol, Exec ex, SolveReport* report) {
    SparseMatrix Ac = A;
    std::vector<std::vector<double>> rhss(1, std::vector<double>(rhs.begin(), rhs.end()));
    std::vector<std::vector<double>> bvals(1, std::vector<double>(static_cast<std::size_t>(space->dof_count()), 0.0));
    const auto& coords = space->dof_coords();
    for (int d : space->boundary_dofs()) {
        const auto& p = coords[static_cast<std::size_t>(d)];
        const double v = boundary_value(p[0], p[1]);
        if (!std::isfinite(v)) throw InvalidParameterError("solve_dirichlet: non-finite boundary value");
        bvals[0][static_cast<std::size_t>(d)] = v;
    }
    eliminate_dirichlet(Ac, *space, rhss, bvals);

    ScalarField u(space);
    u.coeffs = pcg_solve(Ac, rhss[0], rel_tol, 10 * space->dof_count(), ex, report);
    return u;
}

std::vector<std::array<double, 2>> gradient_at_quadrature(const ScalarField& u,
                                                          const QuadRule& rule, Exec ex) {
    const FunctionSpace& space = *u.space;
    const std::size_t nt = space.mesh().num_triangles();
    const BasisTable table = tabulate(space.degree(), rule);
    std::vector<std::array<double, 2>> out(nt * static_cast<std::size_t>(rule.n));

    parallel_for(nt, ex, [&](std::size_t t) {
        const auto geom = element_geometry(space.mesh(), static_cast<int>(t));
        double cl[6];
        for (int k = 0; k < table.nloc; ++k) {
            cl[k] = u.coeffs[static_cast<std::size_t>(space.element_dof(static_cast<int>(t), k))];
        }
        for (int q = 0; q < rule.n; ++q) {
            double gref[2] = {0.0, 0.0};
            for (int k = 0; k < table.nloc; ++k) {
                gref[0] += cl[k] * table.ref_grads[q][k][0];
                gref[1] += cl[k] * table.ref_grads[q][k][1];
            }
            double g[2];
            geom.physical_gradient(gref, g);
            out[t * static_cast<std::size_t>(rule.n) + static_cast<std::size_t>(q)] = {g[0], g[1]};
        }
    });
    return out;
}

ScalarField project_between_meshes(const ScalarField& src,
                                   std::shared_ptr<const FunctionSpace> dst_space, Exec ex) {
    ScalarField out(dst_space);
    const auto& coords = dst_space->dof_coords();
    const Mesh& src_mesh = src.space->mesh();
    std::atomic<bool> outside{false};

    parallel_for(coords.size(), ex, [&](std::size_t d) {
        try {
            const auto loc = locate_point(src_mesh, coords[d][0], coords[d][1]);
            // Evaluate at the query point itself. For dofs in the sliver
            // between the source hull and the circle this extrapolates the
            // element polynomial (exact for polynomials; the located element
            // is the nearest one).
            const auto l = src_mesh.barycentric(loc.triangle, coords[d][0], coords[d][1]);
            out.coeffs[d] = src.value_at(loc.triangle, l[1], l[2]);
        } catch (const PointOutsideDomainError&) {
            outside.store(true, std::memory_order_relaxed);
        }
    });
    if (outside.load()) {
        throw PointOutsideDomainError("project_between_meshes: destination dof outside source mesh");
    }
    return out;
}

double inner_product(const ScalarField& a, const ScalarField& b, InnerKind kind) {
    if (a.space != b.space) {
        throw InvalidParameterError("inner_product: fields must share a space");
    }
    const std::size_t n = a.coeffs.size();
    std::vector<double> tmp(n);
    a.space->mass_matrix().multiply(b.coeffs, tmp, Exec::par);
    double result = dot_chunked(a.coeffs, tmp, Exec::par);
    if (kind == InnerKind::H1) {
        a.space->unit_stiffness_matrix().multiply(b.coeffs, tmp, Exec::par);
        result += dot_chunked(a.coeffs, tmp, Exec::par);
    }
    return result;
}

}  // namespace aet
