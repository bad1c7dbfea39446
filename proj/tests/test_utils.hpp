#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "aet/fem.hpp"
#include "aet/mesh.hpp"
#include "aet/quadrature.hpp"

namespace aet::testutil {

inline std::shared_ptr<const Mesh> disk(double h) {
    return std::make_shared<const Mesh>(generate_disk_mesh(h));
}

// L2 norm of (u_h - exact) by quadrature over the mesh.
inline double l2_error(const ScalarField& u, const std::function<double(double, double)>& exact) {
    const FunctionSpace& space = *u.space;
    const Mesh& mesh = space.mesh();
    const QuadRule& rule = quad_rule_deg5();
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto& p0 = mesh.vertices[static_cast<std::size_t>(tri[0])];
        const auto& p1 = mesh.vertices[static_cast<std::size_t>(tri[1])];
        const auto& p2 = mesh.vertices[static_cast<std::size_t>(tri[2])];
        for (int q = 0; q < rule.n; ++q) {
            const double xi = rule.pts[q].xi, eta = rule.pts[q].eta;
            const double x = p0[0] + xi * (p1[0] - p0[0]) + eta * (p2[0] - p0[0]);
            const double y = p0[1] + xi * (p1[1] - p0[1]) + eta * (p2[1] - p0[1]);
            const double diff = u.value_at(static_cast<int>(t), xi, eta) - exact(x, y);
            total += rule.pts[q].w * mesh.tri_areas[t] * diff * diff;
        }
    }
    return std::sqrt(total);
}

inline double l2_norm(const ScalarField& u) {
    return std::sqrt(inner_product(u, u, InnerKind::L2));
}

// Least-squares slope of log(err) vs log(h).
inline double observed_order(const std::vector<double>& hs, const std::vector<double>& errs) {
    const std::size_t n = hs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(hs[i]), y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (static_cast<double>(n) * sxy - sx * sy) / (static_cast<double>(n) * sxx - sx * sx);
}

// Vertex/triangle-order permutation of a mesh (same geometry, new indexing).
inline Mesh permute_mesh(const Mesh& mesh, std::uint64_t seed) {
    const std::size_t nv = mesh.num_vertices();
    std::vector<int> perm(nv);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    Mesh out;
    out.target_h = mesh.target_h;
    out.vertices.resize(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        out.vertices[static_cast<std::size_t>(perm[v])] = mesh.vertices[v];
    }
    out.triangles.resize(mesh.num_triangles());
    std::vector<int> tri_order(mesh.num_triangles());
    std::iota(tri_order.begin(), tri_order.end(), 0);
    std::shuffle(tri_order.begin(), tri_order.end(), rng);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& src = mesh.triangles[static_cast<std::size_t>(tri_order[t])];
        out.triangles[t] = {perm[static_cast<std::size_t>(src[0])],
                            perm[static_cast<std::size_t>(src[1])],
                            perm[static_cast<std::size_t>(src[2])]};
    }
    for (int b : mesh.boundary_vertices) out.boundary_vertices.push_back(perm[static_cast<std::size_t>(b)]);
    std::sort(out.boundary_vertices.begin(), out.boundary_vertices.end());
    out.finalize();
    return out;
}

}  // namespace aet::testutil
