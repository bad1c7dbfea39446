#include "aet/forward.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "aet/errors.hpp"

namespace aet {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

}  // namespace

BcSet bc_set_from_string(const std::string& name) {
    if (name == "bc1" || name == "BC1") return BcSet::bc1;
    if (name == "bc2" || name == "BC2") return BcSet::bc2;
    if (name == "bc3" || name == "BC3") return BcSet::bc3;
    throw InvalidParameterError("unknown boundary-condition set: " + name);
}

std::string to_string(BcSet set) {
    switch (set) {
        case BcSet::bc1: return "bc1";
        case BcSet::bc2: return "bc2";
        case BcSet::bc3: return "bc3";
    }
    return "bc1";
}

std::vector<BoundaryCondition> boundary_conditions(BcSet set) {
    const BoundaryCondition fx{"f=x", [](double x, double) { return x; }};
    const BoundaryCondition fy{"f=y", [](double, double y) { return y; }};
    const BoundaryCondition fxy{"f=(x+y)/sqrt2",
                                [](double x, double y) { return (x + y) * kInvSqrt2; }};
    switch (set) {
        case BcSet::bc1: return {fx, fxy};
        case BcSet::bc2: return {fx, fy};
        case BcSet::bc3: return {fx, fy, fxy};
    }
    return {};
}

double eval_boundary(BcSet set, int which, double theta) {
    const auto bcs = boundary_conditions(set);
    if (which < 0 || which >= static_cast<int>(bcs.size())) {
        throw InvalidParameterError("eval_boundary: excitation index out of range");
    }
    return bcs[static_cast<std::size_t>(which)].trace(std::cos(theta), std::sin(theta));
}

ScalarField solve_forward(const ScalarField& sigma, const BoundaryCondition& bc,
                          std::shared_ptr<const FunctionSpace> potential_space, double rel_tol,
                          Exec ex, SolveReport* report) {
    const SparseMatrix A = assemble_stiffness(*potential_space, sigma, ex);
    const std::vector<double> rhs(static_cast<std::size_t>(potential_space->dof_count()), 0.0);
    return solve_dirichlet(A, rhs, potential_space, bc.trace, rel_tol, ex, report);
}

ScalarField power_density(const ScalarField& sigma, const ScalarField& u, Exec ex) {
    if (&sigma.space->mesh() != &u.space->mesh()) {
        throw InvalidParameterError("power_density: fields must live on the same mesh");
    }
    const FunctionSpace& hspace = *sigma.space;
    const Mesh& mesh = hspace.mesh();
    const std::size_t nd = static_cast<std::size_t>(hspace.dof_count());
    const int nloc = hspace.dofs_per_element();

    // |grad u|^2 at each H dof, area-averaged over the elements sharing it.
    std::vector<double> num(nd, 0.0), den(nd, 0.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const double area = mesh.tri_areas[t];
        for (int k = 0; k < nloc; ++k) {
            const auto ref = FunctionSpace::local_node_ref(hspace.degree(), k);
            const auto g = u.gradient_at(static_cast<int>(t), ref[0], ref[1]);
            const int d = hspace.element_dof(static_cast<int>(t), k);
            num[static_cast<std::size_t>(d)] += area * (g[0] * g[0] + g[1] * g[1]);
            den[static_cast<std::size_t>(d)] += area;
        }
    }

    ScalarField h(sigma.space);
    parallel_for(nd, ex, [&](std::size_t d) { h.coeffs[d] = sigma.coeffs[d] * num[d] / den[d]; });
    return h;
}

DeterminantDiagnostic determinant_diagnostic(const ScalarField& u1, const ScalarField& u2,
                                             Exec ex) {
    if (u1.space != u2.space) {
        throw InvalidParameterError("determinant_diagnostic: fields must share a space");
    }
    const QuadRule& rule = form_rule(*u1.space, 0);
    const auto g1 = gradient_at_quadrature(u1, rule, ex);
    const auto g2 = gradient_at_quadrature(u2, rule, ex);
    const std::size_t nt = u1.space->mesh().num_triangles();

    DeterminantDiagnostic diag;
    diag.per_element_min.assign(nt, 0.0);
    parallel_for(nt, ex, [&](std::size_t t) {
        double mn = std::numeric_limits<double>::infinity();
        for (int q = 0; q < rule.n; ++q) {
            const auto& a = g1[t * static_cast<std::size_t>(rule.n) + static_cast<std::size_t>(q)];
            const auto& b = g2[t * static_cast<std::size_t>(rule.n) + static_cast<std::size_t>(q)];
            mn = std::min(mn, a[0] * b[1] - a[1] * b[0]);
        }
        diag.per_element_min[t] = mn;
    });
    diag.global_min = *std::min_element(diag.per_element_min.begin(), diag.per_element_min.end());
    return diag;
}

// ---------------------------------------------------------------------------
// Noise

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

NormalSampler::NormalSampler(std::uint64_t seed, std::uint64_t stream) {
    // Stream split: fold the stream index into the state before use.
    std::uint64_t s = seed;
    std::uint64_t mixed = splitmix64(s);
    s = mixed ^ (0xA0761D6478BD642FULL * (stream + 1));
    state_ = s;
}

std::uint64_t NormalSampler::next_u64() { return splitmix64(state_); }

double NormalSampler::next_unit() {
    // 53-bit mantissa, shifted into (0, 1].
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double NormalSampler::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
}

ScalarField add_noise(const ScalarField& h, double delta, std::uint64_t seed, std::uint64_t stream) {
    if (delta < 0.0) {
        throw InvalidParameterError("add_noise: noise level must be nonnegative");
    }
    ScalarField out = h;
    if (delta == 0.0) return out;
    NormalSampler sampler(seed, stream);
    for (double& v : out.coeffs) v *= 1.0 + delta * sampler.next();
    return out;
}

PowerDensity generate_data(const std::function<double(double, double)>& truth_sigma, BcSet set,
                           double fine_h, std::shared_ptr<const FunctionSpace> coarse_space,
                           double noise_delta, std::uint64_t seed, Exec ex, double rel_tol) {
    const double coarse_h = coarse_space->mesh().target_h;
    if (!(fine_h <= coarse_h / 2.0 + 1e-12)) {
        throw ConfigError("generate_data: data mesh must be at least twice finer than the "
                          "reconstruction mesh");
    }

    auto fine_mesh = std::make_shared<const Mesh>(generate_disk_mesh(fine_h));
    auto fine_potential = FunctionSpace::create(fine_mesh, 2);
    auto fine_hspace = FunctionSpace::create(fine_mesh, coarse_space->degree());
    const ScalarField sigma_fine = interpolate(fine_hspace, truth_sigma);

    const SparseMatrix A = assemble_stiffness(*fine_potential, sigma_fine, ex);
    const std::vector<double> zero_rhs(static_cast<std::size_t>(fine_potential->dof_count()), 0.0);

    PowerDensity data;
    data.bc_set = set;
    data.noise_delta = noise_delta;
    data.seed = seed;
    data.fine_h = fine_h;
    const auto bcs = boundary_conditions(set);
    for (std::size_t i = 0; i < bcs.size(); ++i) {
        const ScalarField u =
            solve_dirichlet(A, zero_rhs, fine_potential, bcs[i].trace, rel_tol, ex);
        const ScalarField h_fine = power_density(sigma_fine, u, ex);
        ScalarField h = project_between_meshes(h_fine, coarse_space, ex);
        h = add_noise(h, noise_delta, seed, i);
        data.fields.push_back(std::move(h));
        data.bc_ids.push_back(bcs[i].id);
    }
    return data;
}

}  // namespace aet
