#include "aet/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "aet/errors.hpp"

namespace aet {

namespace {

constexpr std::size_t kBlock = 16384;

struct ElementGeometry {
    double j[2][2];
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

// Values (and physical gradients) of a field at the rule points of one
// element, gathered from its local coefficients.
struct LocalField {
    int nloc;
    double coeff[6];

    void gather(const ScalarField& f, int t) {
        nloc = f.space->dofs_per_element();
        for (int k = 0; k < nloc; ++k) {
            coeff[k] = f.coeffs[static_cast<std::size_t>(f.space->element_dof(t, k))];
        }
    }
};

struct BasisCache {
    int nloc = 0;
    int nq = 0;
    double vals[7][6];
    double ref_grads[7][6][2];

    BasisCache() = default;
    BasisCache(const FunctionSpace& space, const QuadRule& rule) {
        nloc = space.dofs_per_element();
        nq = rule.n;
        for (int q = 0; q < rule.n; ++q) {
            space.basis_values(rule.pts[q].xi, rule.pts[q].eta, vals[q]);
            double g[6][2];
            space.basis_ref_gradients(rule.pts[q].xi, rule.pts[q].eta, g);
            for (int k = 0; k < nloc; ++k) {
                ref_grads[q][k][0] = g[k][0];
                ref_grads[q][k][1] = g[k][1];
            }
        }
    }

    double value(const LocalField& f, int q) const {
        double s = 0.0;
        for (int k = 0; k < nloc; ++k) s += vals[q][k] * f.coeff[k];
        return s;
    }

    void gradient(const LocalField& f, int q, const ElementGeometry& geom, double out[2]) const {
        double gref[2] = {0.0, 0.0};
        for (int k = 0; k < nloc; ++k) {
            gref[0] += f.coeff[k] * ref_grads[q][k][0];
            gref[1] += f.coeff[k] * ref_grads[q][k][1];
        }
        geom.physical_gradient(gref, out);
    }
};

// Scatter per-element local vectors into a global vector in element order.
template <class Kernel>
void assemble_vector(const FunctionSpace& space, std::vector<double>& out, Exec ex,
                     Kernel&& kernel) {
    const std::size_t nt = space.mesh().num_triangles();
    const int nloc = space.dofs_per_element();
    std::vector<double> block(kBlock * static_cast<std::size_t>(nloc));
    for (std::size_t lo = 0; lo < nt; lo += kBlock) {
        const std::size_t hi = std::min(nt, lo + kBlock);
        parallel_for(hi - lo, ex, [&](std::size_t r) {
            kernel(static_cast<int>(lo + r), &block[r * static_cast<std::size_t>(nloc)]);
        });
        for (std::size_t t = lo; t < hi; ++t) {
            const double* local = &block[(t - lo) * static_cast<std::size_t>(nloc)];
            for (int k = 0; k < nloc; ++k) {
                out[static_cast<std::size_t>(space.element_dof(static_cast<int>(t), k))] += local[k];
            }
        }
    }
}

SparseMatrix dirichlet_identity_copy(const SparseMatrix& matrix, const FunctionSpace& space) {
    SparseMatrix out = matrix;
    std::vector<std::vector<double>> rhs(1, std::vector<double>(static_cast<std::size_t>(out.rows()), 0.0));
    std::vector<std::vector<double>> bv(1, std::vector<double>(static_cast<std::size_t>(out.rows()), 0.0));
    eliminate_dirichlet(out, space, rhs, bv);
    return out;
}

}  // namespace

ObjectiveEvaluator::ObjectiveEvaluator(std::shared_ptr<const FunctionSpace> sigma_space,
                                       std::shared_ptr<const FunctionSpace> potential_space,
                                       PowerDensity data, ScalarField sigma_background,
                                       ObjectiveOptions options)
    : sspace_(std::move(sigma_space)),
      uspace_(std::move(potential_space)),
      data_(std::move(data)),
      sigma_b_(std::move(sigma_background)),
      opts_(options) {
    if (&sspace_->mesh() != &uspace_->mesh()) {
        throw InvalidParameterError("ObjectiveEvaluator: spaces must share a mesh");
    }
    if (sigma_b_.space != sspace_) {
        throw InvalidParameterError("ObjectiveEvaluator: background must live on the sigma space");
    }
    for (const auto& f : data_.fields) {
        if (f.space != sspace_) {
            throw InvalidParameterError("ObjectiveEvaluator: data must live on the sigma space");
        }
    }
    if (opts_.s != 0 && opts_.s != 1) {
        throw InvalidParameterError("ObjectiveEvaluator: s must be 0 or 1");
    }

    bcs_ = boundary_conditions(data_.bc_set);
    if (bcs_.size() != data_.fields.size()) {
        throw InvalidParameterError("ObjectiveEvaluator: field count does not match the bc set");
    }

    rule_ = &form_rule(*uspace_, sspace_->degree());

    // Boundary traces at the potential-space boundary nodes (fixed per run).
    const auto& coords = uspace_->dof_coords();
    for (const auto& bc : bcs_) {
        std::vector<double> bv(static_cast<std::size_t>(uspace_->dof_count()), 0.0);
        for (int d : uspace_->boundary_dofs()) {
            bv[static_cast<std::size_t>(d)] = bc.trace(coords[static_cast<std::size_t>(d)][0],
                                                       coords[static_cast<std::size_t>(d)][1]);
        }
        bc_values_.push_back(std::move(bv));
    }

    // Data at quadrature points (fixed per run).
    const std::size_t nt = sspace_->mesh().num_triangles();
    const BasisCache scache(*sspace_, *rule_);
    const int nq = rule_->n;
    for (const auto& field : data_.fields) {
        std::vector<double> hq(nt * static_cast<std::size_t>(nq));
        parallel_for(nt, opts_.exec, [&](std::size_t t) {
            LocalField lf;
            lf.gather(field, static_cast<int>(t));
            for (int q = 0; q < nq; ++q) {
                hq[t * static_cast<std::size_t>(nq) + static_cast<std::size_t>(q)] = scache.value(lf, q);
            }
        });
        h_at_quad_.push_back(std::move(hq));
    }

    mass_ = &sspace_->mass_matrix();
    stiff_ = &sspace_->unit_stiffness_matrix();
    if (opts_.s == 1) {
        mass_dirichlet_ = dirichlet_identity_copy(*mass_, *sspace_);
        smooth_dirichlet_ = dirichlet_identity_copy(*stiff_ + *mass_, *sspace_);
    }
}

void ObjectiveEvaluator::solve_forward_all(const ScalarField& sigma) {
    if (sigma.space != sspace_) {
        throw InvalidParameterError("ObjectiveEvaluator: sigma must live on the sigma space");
    }
    if (have_cache_ && cached_sigma_ == sigma.coeffs) return;

    SparseMatrix A = assemble_stiffness(*uspace_, sigma, opts_.exec);
    std::vector<std::vector<double>> rhss(bcs_.size(),
                                          std::vector<double>(static_cast<std::size_t>(uspace_->dof_count()), 0.0));
    eliminate_dirichlet(A, *uspace_, rhss, bc_values_);

    cached_u_.assign(bcs_.size(), ScalarField{});
    warm_u_.resize(bcs_.size());
    const int max_iter = 10 * uspace_->dof_count();
    for (std::size_t i = 0; i < bcs_.size(); ++i) {
        SolveReport rep;
        const std::vector<double>* guess =
            opts_.warm_start && !warm_u_[i].empty() ? &warm_u_[i] : nullptr;
        ScalarField u(uspace_);
        u.coeffs = pcg_solve(A, rhss[i], opts_.solver_tol, max_iter, opts_.exec, &rep, guess);
        ++n_forward_solves_;
        if (opts_.warm_start) warm_u_[i] = u.coeffs;
        cached_u_[i] = std::move(u);
    }
    cached_op_ = std::move(A);
    cached_sigma_ = sigma.coeffs;
    have_cache_ = true;
}

double ObjectiveEvaluator::misfit(const ScalarField& sigma,
                                  std::vector<std::vector<double>>* residuals) const {
    const Mesh& mesh = sspace_->mesh();
    const std::size_t nt = mesh.num_triangles();
    const int nq = rule_->n;
    const BasisCache scache(*sspace_, *rule_);
    const BasisCache ucache(*uspace_, *rule_);
    const std::size_t nbc = bcs_.size();

    if (residuals) {
        residuals->assign(nbc, std::vector<double>(nt * static_cast<std::size_t>(nq), 0.0));
    }

    const double total = reduce_chunked(nt, opts_.exec, [&](std::size_t t) {
        const auto geom = element_geometry(mesh, static_cast<int>(t));
        LocalField ls;
        ls.gather(sigma, static_cast<int>(t));
        LocalField lu[3];
        for (std::size_t i = 0; i < nbc; ++i) lu[i].gather(cached_u_[i], static_cast<int>(t));

        double acc = 0.0;
        for (int q = 0; q < nq; ++q) {
            const double sig = scache.value(ls, q);
            const double w = rule_->pts[q].w * geom.area;
            for (std::size_t i = 0; i < nbc; ++i) {
                double g[2];
                ucache.gradient(lu[i], q, geom, g);
                const double r = sig * (g[0] * g[0] + g[1] * g[1]) -
                                 h_at_quad_[i][t * static_cast<std::size_t>(nq) + static_cast<std::size_t>(q)];
                if (residuals) {
                    (*residuals)[i][t * static_cast<std::size_t>(nq) + static_cast<std::size_t>(q)] = r;
                }
                acc += w * r * r;
            }
        }
        return acc;
    });
    return 0.5 * total;
}

double ObjectiveEvaluator::regularization(const ScalarField& sigma) const {
    if (opts_.alpha == 0.0) return 0.0;
    const std::size_t n = sigma.coeffs.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = sigma.coeffs[i] - sigma_b_.coeffs[i];
    std::vector<double> tmp(n);
    mass_->multiply(d, tmp, opts_.exec);
    double val = dot_chunked(d, tmp, opts_.exec);
    if (opts_.s == 1) {
        stiff_->multiply(d, tmp, opts_.exec);
        val += dot_chunked(d, tmp, opts_.exec);
    }
    return 0.5 * opts_.alpha * val;
}

double ObjectiveEvaluator::cost(const ScalarField& sigma) {
    solve_forward_all(sigma);
    return misfit(sigma, nullptr) + regularization(sigma);
}

ObjectiveEvaluator::Evaluation ObjectiveEvaluator::evaluate(const ScalarField& sigma) {
    solve_forward_all(sigma);

    Evaluation ev;
    ev.misfit = misfit(sigma, &ev.residual_at_quad);
    ev.regularization = regularization(sigma);
    ev.cost = ev.misfit + ev.regularization;
    ev.potentials = cached_u_;

    const Mesh& mesh = sspace_->mesh();
    const int nq = rule_->n;
    const BasisCache scache(*sspace_, *rule_);
    const BasisCache ucache(*uspace_, *rule_);
    const std::size_t nbc = bcs_.size();
    const int max_iter = 10 * uspace_->dof_count();

    // Adjoint solves share the eliminated forward operator.
    warm_v_.resize(nbc);
    ev.adjoints.assign(nbc, ScalarField{});
    for (std::size_t i = 0; i < nbc; ++i) {
        std::vector<double> rhs(static_cast<std::size_t>(uspace_->dof_count()), 0.0);
        assemble_vector(*uspace_, rhs, opts_.exec, [&](int t, double* local) {
            const auto geom = element_geometry(mesh, t);
            LocalField ls, lu;
            ls.gather(sigma, t);
            lu.gather(cached_u_[i], t);
            for (int k = 0; k < ucache.nloc; ++k) local[k] = 0.0;
            for (int q = 0; q < nq; ++q) {
                const double sig = scache.value(ls, q);
                const double r = ev.residual_at_quad[i][static_cast<std::size_t>(t) * static_cast<std::size_t>(nq) +
                                                        static_cast<std::size_t>(q)];
                double gu[2];
                ucache.gradient(lu, q, geom, gu);
                const double factor = -2.0 * rule_->pts[q].w * geom.area * sig * r;
                for (int k = 0; k < ucache.nloc; ++k) {
                    double gphi[2];
                    geom.physical_gradient(ucache.ref_grads[q][k], gphi);
                    local[k] += factor * (gu[0] * gphi[0] + gu[1] * gphi[1]);
                }
            }
        });
        for (int d : uspace_->boundary_dofs()) rhs[static_cast<std::size_t>(d)] = 0.0;

        const std::vector<double>* guess =
            opts_.warm_start && !warm_v_[i].empty() ? &warm_v_[i] : nullptr;
        ScalarField v(uspace_);
        v.coeffs = pcg_solve(cached_op_, rhs, opts_.solver_tol, max_iter, opts_.exec, nullptr, guess);
        if (opts_.warm_start) warm_v_[i] = v.coeffs;
        ev.adjoints[i] = std::move(v);
    }

    // Misfit part of the derivative against sigma-space test functions.
    std::vector<double> b(static_cast<std::size_t>(sspace_->dof_count()), 0.0);
    assemble_vector(*sspace_, b, opts_.exec, [&](int t, double* local) {
        const auto geom = element_geometry(mesh, t);
        LocalField lu[3], lv[3];
        for (std::size_t i = 0; i < nbc; ++i) {
            lu[i].gather(cached_u_[i], t);
            lv[i].gather(ev.adjoints[i], t);
        }
        for (int k = 0; k < scache.nloc; ++k) local[k] = 0.0;
        for (int q = 0; q < nq; ++q) {
            double common = 0.0;
            for (std::size_t i = 0; i < nbc; ++i) {
                double gu[2], gv[2];
                ucache.gradient(lu[i], q, geom, gu);
                ucache.gradient(lv[i], q, geom, gv);
                const double r = ev.residual_at_quad[i][static_cast<std::size_t>(t) * static_cast<std::size_t>(nq) +
                                                        static_cast<std::size_t>(q)];
                common += r * (gu[0] * gu[0] + gu[1] * gu[1]) + gu[0] * gv[0] + gu[1] * gv[1];
            }
            const double w = rule_->pts[q].w * geom.area * common;
            for (int k = 0; k < scache.nloc; ++k) local[k] += w * scache.vals[q][k];
        }
    });

    // Regularization part, assembled weakly from the cached matrices.
    if (opts_.alpha != 0.0) {
        const std::size_t n = b.size();
        std::vector<double> d(n), tmp(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = sigma.coeffs[i] - sigma_b_.coeffs[i];
        mass_->multiply(d, tmp, opts_.exec);
        for (std::size_t i = 0; i < n; ++i) b[i] += opts_.alpha * tmp[i];
        if (opts_.s == 1) {
            stiff_->multiply(d, tmp, opts_.exec);
            for (std::size_t i = 0; i < n; ++i) b[i] += opts_.alpha * tmp[i];
        }
    }

    // Riesz solves.
    const int max_iter_s = 10 * sspace_->dof_count();
    ScalarField g_l2(sspace_);
    if (opts_.s == 0) {
        const std::vector<double>* guess = opts_.warm_start && !warm_g_.empty() ? &warm_g_ : nullptr;
        g_l2.coeffs = pcg_solve(*mass_, b, opts_.solver_tol, max_iter_s, opts_.exec, nullptr, guess);
        if (opts_.warm_start) warm_g_ = g_l2.coeffs;
        ev.gradient_l2 = g_l2;
        ev.gradient = std::move(g_l2);
    } else {
        std::vector<double> rhs = b;
        for (int d : sspace_->boundary_dofs()) rhs[static_cast<std::size_t>(d)] = 0.0;
        const std::vector<double>* guess = opts_.warm_start && !warm_g_.empty() ? &warm_g_ : nullptr;
        g_l2.coeffs = pcg_solve(mass_dirichlet_, rhs, opts_.solver_tol, max_iter_s, opts_.exec, nullptr, guess);
        if (opts_.warm_start) warm_g_ = g_l2.coeffs;
        ev.gradient_l2 = g_l2;

        std::vector<double> rhs2(b.size());
        mass_->multiply(g_l2.coeffs, rhs2, opts_.exec);
        for (int d : sspace_->boundary_dofs()) rhs2[static_cast<std::size_t>(d)] = 0.0;
        const std::vector<double>* guess2 = opts_.warm_start && !warm_gs_.empty() ? &warm_gs_ : nullptr;
        ScalarField g_h1(sspace_);
        g_h1.coeffs = pcg_solve(smooth_dirichlet_, rhs2, opts_.solver_tol, max_iter_s, opts_.exec, nullptr, guess2);
        if (opts_.warm_start) warm_gs_ = g_h1.coeffs;
        ev.gradient = std::move(g_h1);
    }
    return ev;
}

double ObjectiveEvaluator::x_inner(std::span<const double> a, std::span<const double> b) const {
    std::vector<double> tmp(b.size());
    mass_->multiply(b, tmp, opts_.exec);
    double val = dot_chunked(a, tmp, opts_.exec);
    if (opts_.s == 1) {
        stiff_->multiply(b, tmp, opts_.exec);
        val += dot_chunked(a, tmp, opts_.exec);
    }
    return val;
}

double ObjectiveEvaluator::x_norm(std::span<const double> a) const {
    return std::sqrt(std::max(0.0, x_inner(a, a)));
}

// ---------------------------------------------------------------------------
// Free-function entry points

double evaluate_cost(const ScalarField& sigma, const PowerDensity& data, double alpha, int s,
                     const ScalarField& sigma_background, double solver_tol, Exec ex) {
    auto uspace = FunctionSpace::create(sigma.space->mesh_ptr(), 2);
    ObjectiveEvaluator evaluator(sigma.space, uspace, data, sigma_background,
                                 ObjectiveOptions{alpha, s, solver_tol, ex, false});
    return evaluator.cost(sigma);
}

ScalarField solve_adjoint(const ScalarField& sigma, const ScalarField& u, const ScalarField& h_data,
                          double rel_tol, Exec ex, SolveReport* report) {
    const auto& uspace = u.space;
    if (&sigma.space->mesh() != &uspace->mesh() || &h_data.space->mesh() != &uspace->mesh()) {
        throw InvalidParameterError("solve_adjoint: fields must live on the same mesh");
    }
    const QuadRule& rule = form_rule(*uspace, std::max(sigma.space->degree(), h_data.space->degree()));
    const Mesh& mesh = uspace->mesh();
    const BasisCache ucache(*uspace, rule);
    const BasisCache scache(*sigma.space, rule);
    const BasisCache hcache(*h_data.space, rule);

    std::vector<double> rhs(static_cast<std::size_t>(uspace->dof_count()), 0.0);
    assemble_vector(*uspace, rhs, ex, [&](int t, double* local) {
        const auto geom = element_geometry(mesh, t);
        LocalField ls, lu, lh;
        ls.gather(sigma, t);
        lu.gather(u, t);
        lh.gather(h_data, t);
        for (int k = 0; k < ucache.nloc; ++k) local[k] = 0.0;
        for (int q = 0; q < rule.n; ++q) {
            const double sig = scache.value(ls, q);
            double gu[2];
            ucache.gradient(lu, q, geom, gu);
            const double r = sig * (gu[0] * gu[0] + gu[1] * gu[1]) - hcache.value(lh, q);
            const double factor = -2.0 * rule.pts[q].w * geom.area * sig * r;
            for (int k = 0; k < ucache.nloc; ++k) {
                double gphi[2];
                geom.physical_gradient(ucache.ref_grads[q][k], gphi);
                local[k] += factor * (gu[0] * gphi[0] + gu[1] * gphi[1]);
            }
        }
    });

    SparseMatrix A = assemble_stiffness(*uspace, sigma, ex);
    std::vector<std::vector<double>> rhss(1, std::move(rhs));
    std::vector<std::vector<double>> bv(1, std::vector<double>(static_cast<std::size_t>(uspace->dof_count()), 0.0));
    eliminate_dirichlet(A, *uspace, rhss, bv);

    ScalarField v(uspace);
    v.coeffs = pcg_solve(A, rhss[0], rel_tol, 10 * uspace->dof_count(), ex, report);
    return v;
}

ScalarField reduced_gradient_l2(const ScalarField& sigma, const PowerDensity& data, double alpha,
                                int s, const ScalarField& sigma_background, double solver_tol,
                                Exec ex) {
    auto uspace = FunctionSpace::create(sigma.space->mesh_ptr(), 2);
    ObjectiveEvaluator evaluator(sigma.space, uspace, data, sigma_background,
                                 ObjectiveOptions{alpha, s, solver_tol, ex, false});
    return evaluator.evaluate(sigma).gradient_l2;
}

ScalarField smooth_to_h1(const ScalarField& g_l2, double rel_tol, Exec ex) {
    const auto& space = g_l2.space;
    SparseMatrix system = dirichlet_identity_copy(
        space->unit_stiffness_matrix() + space->mass_matrix(), *space);
    std::vector<double> rhs(g_l2.coeffs.size());
    space->mass_matrix().multiply(g_l2.coeffs, rhs, ex);
    for (int d : space->boundary_dofs()) rhs[static_cast<std::size_t>(d)] = 0.0;

    ScalarField out(space);
    out.coeffs = pcg_solve(system, rhs, rel_tol, 10 * space->dof_count(), ex);
    return out;
}

}  // namespace aet
