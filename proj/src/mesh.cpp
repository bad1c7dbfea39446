#include "aet/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <stdexcept>

#include "aet/errors.hpp"

namespace aet {

namespace {

double signed_area(const std::array<double, 2>& a, const std::array<double, 2>& b,
                   const std::array<double, 2>& c) {
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

// Squared distance from p to segment [a,b] and the closest point's parameter.
double segment_dist2(const std::array<double, 2>& p, const std::array<double, 2>& a,
                     const std::array<double, 2>& b, double& t_out) {
    const double abx = b[0] - a[0], aby = b[1] - a[1];
    const double apx = p[0] - a[0], apy = p[1] - a[1];
    const double denom = abx * abx + aby * aby;
    double t = denom > 0.0 ? (apx * abx + apy * aby) / denom : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = apx - t * abx, dy = apy - t * aby;
    t_out = t;
    return dx * dx + dy * dy;
}

}  // namespace

void Mesh::finalize() {
    const std::size_t nv = vertices.size();
    const std::size_t nt = triangles.size();

    boundary_mask_.assign(nv, 0);
    for (int v : boundary_vertices) boundary_mask_[static_cast<std::size_t>(v)] = 1;

    // Edge table: lexicographically sorted unique (min,max) pairs.
    std::map<std::array<int, 2>, int> edge_ids;
    edges.clear();
    tri_edges.assign(nt, {-1, -1, -1});
    for (std::size_t t = 0; t < nt; ++t) {
        for (int k = 0; k < 3; ++k) {
            int a = triangles[t][static_cast<std::size_t>(k)];
            int b = triangles[t][static_cast<std::size_t>((k + 1) % 3)];
            std::array<int, 2> key{std::min(a, b), std::max(a, b)};
            auto [it, inserted] = edge_ids.try_emplace(key, static_cast<int>(edge_ids.size()));
            tri_edges[t][static_cast<std::size_t>(k)] = it->second;
            (void)inserted;
        }
    }
    edges.resize(edge_ids.size());
    for (const auto& [key, id] : edge_ids) edges[static_cast<std::size_t>(id)] = key;

    // Edge -> incident triangles, then neighbors across each edge.
    std::vector<std::array<int, 2>> edge_tris(edges.size(), {-1, -1});
    edge_tri_count_.assign(edges.size(), 0);
    for (std::size_t t = 0; t < nt; ++t) {
        for (int k = 0; k < 3; ++k) {
            int e = tri_edges[t][static_cast<std::size_t>(k)];
            auto& et = edge_tris[static_cast<std::size_t>(e)];
            char& cnt = edge_tri_count_[static_cast<std::size_t>(e)];
            if (cnt >= 2) throw std::runtime_error("mesh: edge shared by more than 2 triangles");
            et[static_cast<std::size_t>(cnt)] = static_cast<int>(t);
            ++cnt;
        }
    }
    tri_neighbors.assign(nt, {-1, -1, -1});
    for (std::size_t t = 0; t < nt; ++t) {
        for (int k = 0; k < 3; ++k) {
            int e = tri_edges[t][static_cast<std::size_t>(k)];
            const auto& et = edge_tris[static_cast<std::size_t>(e)];
            tri_neighbors[t][static_cast<std::size_t>(k)] =
                et[0] == static_cast<int>(t) ? et[1] : et[0];
        }
    }

    tri_areas.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        tri_areas[t] = signed_area(vertices[static_cast<std::size_t>(triangles[t][0])],
                                   vertices[static_cast<std::size_t>(triangles[t][1])],
                                   vertices[static_cast<std::size_t>(triangles[t][2])]);
    }

    // Bucket grid over the bounding square.
    grid_n_ = target_h > 0.0 ? static_cast<int>(std::ceil(2.0 / target_h)) : 32;
    grid_n_ = std::clamp(grid_n_, 4, 512);
    const int gn = grid_n_;
    std::vector<std::vector<int>> cells(static_cast<std::size_t>(gn) * static_cast<std::size_t>(gn));
    auto cell_of = [gn](double coord) {
        int c = static_cast<int>((coord + 1.0) * 0.5 * gn);
        return std::clamp(c, 0, gn - 1);
    };
    for (std::size_t t = 0; t < nt; ++t) {
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (int v : triangles[t]) {
            const auto& p = vertices[static_cast<std::size_t>(v)];
            xmin = std::min(xmin, p[0]);
            xmax = std::max(xmax, p[0]);
            ymin = std::min(ymin, p[1]);
            ymax = std::max(ymax, p[1]);
        }
        for (int cy = cell_of(ymin); cy <= cell_of(ymax); ++cy)
            for (int cx = cell_of(xmin); cx <= cell_of(xmax); ++cx)
                cells[static_cast<std::size_t>(cy) * static_cast<std::size_t>(gn) +
                      static_cast<std::size_t>(cx)]
                    .push_back(static_cast<int>(t));
    }
    cell_start_.assign(cells.size() + 1, 0);
    for (std::size_t c = 0; c < cells.size(); ++c)
        cell_start_[c + 1] = cell_start_[c] + static_cast<int>(cells[c].size());
    cell_tris_.resize(static_cast<std::size_t>(cell_start_.back()));
    for (std::size_t c = 0; c < cells.size(); ++c)
        std::copy(cells[c].begin(), cells[c].end(),
                  cell_tris_.begin() + cell_start_[c]);
}

double Mesh::total_area() const {
    double s = 0.0;
    for (double a : tri_areas) s += a;
    return s;
}

std::array<double, 3> Mesh::barycentric(int t, double x, double y) const {
    const auto& tri = triangles[static_cast<std::size_t>(t)];
    const auto& p0 = vertices[static_cast<std::size_t>(tri[0])];
    const auto& p1 = vertices[static_cast<std::size_t>(tri[1])];
    const auto& p2 = vertices[static_cast<std::size_t>(tri[2])];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    const double l1 = ((x - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (y - p0[1])) / det;
    const double l2 = ((p1[0] - p0[0]) * (y - p0[1]) - (x - p0[0]) * (p1[1] - p0[1])) / det;
    return {1.0 - l1 - l2, l1, l2};
}

std::array<double, 2> Mesh::point_from_barycentric(int t, const std::array<double, 3>& l) const {
    const auto& tri = triangles[static_cast<std::size_t>(t)];
    const auto& p0 = vertices[static_cast<std::size_t>(tri[0])];
    const auto& p1 = vertices[static_cast<std::size_t>(tri[1])];
    const auto& p2 = vertices[static_cast<std::size_t>(tri[2])];
    return {l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0],
            l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1]};
}

Mesh generate_disk_mesh(double h) {
    if (!(h > 0.0) || !(h < 1.0)) {
        throw InvalidParameterError("generate_disk_mesh: h must lie in (0, 1)");
    }
    const int n_rings = std::max(1, static_cast<int>(std::llround(1.0 / h)));

    Mesh mesh;
    mesh.target_h = h;
    mesh.vertices.push_back({0.0, 0.0});
    std::vector<int> ring_start(static_cast<std::size_t>(n_rings) + 1, 0);
    for (int i = 1; i <= n_rings; ++i) {
        ring_start[static_cast<std::size_t>(i)] = static_cast<int>(mesh.vertices.size());
        const int m = 6 * i;
        const double r = static_cast<double>(i) / n_rings;
        for (int j = 0; j < m; ++j) {
            const double theta = 2.0 * std::numbers::pi * j / m;
            mesh.vertices.push_back({r * std::cos(theta), r * std::sin(theta)});
        }
    }

    auto add_triangle = [&mesh](int a, int b, int c) {
        if (signed_area(mesh.vertices[static_cast<std::size_t>(a)],
                        mesh.vertices[static_cast<std::size_t>(b)],
                        mesh.vertices[static_cast<std::size_t>(c)]) < 0.0) {
            std::swap(b, c);
        }
        mesh.triangles.push_back({a, b, c});
    };

    // Innermost ring: fan around the center vertex.
    for (int j = 0; j < 6; ++j) {
        add_triangle(0, ring_start[1] + j, ring_start[1] + (j + 1) % 6);
    }

    // Annulus i-1 -> i: advance whichever pointer has the smaller next angle.
    // Angles are j/m turns, so the comparison is exact in integers.
    for (int i = 2; i <= n_rings; ++i) {
        const int m = 6 * (i - 1);
        const int M = 6 * i;
        const int in0 = ring_start[static_cast<std::size_t>(i - 1)];
        const int out0 = ring_start[static_cast<std::size_t>(i)];
        int a = 0, b = 0;
        while (a < m || b < M) {
            const bool advance_outer =
                b < M &&
                (a >= m || static_cast<long long>(b + 1) * m <= static_cast<long long>(a + 1) * M);
            if (advance_outer) {
                add_triangle(in0 + a % m, out0 + b % M, out0 + (b + 1) % M);
                ++b;
            } else {
                add_triangle(in0 + a % m, out0 + b % M, in0 + (a + 1) % m);
                ++a;
            }
        }
    }

    const int bstart = ring_start[static_cast<std::size_t>(n_rings)];
    for (int j = 0; j < 6 * n_rings; ++j) mesh.boundary_vertices.push_back(bstart + j);

    mesh.finalize();
    validate_mesh(mesh);
    return mesh;
}

PointLocation locate_point(const Mesh& mesh, double x, double y) {
    constexpr double kInsideTol = -1e-12;
    constexpr double kDomainTol = 1e-9;

    const int gn = mesh.grid_n_;
    auto cell_of = [gn](double coord) {
        int c = static_cast<int>((coord + 1.0) * 0.5 * gn);
        return std::clamp(c, 0, gn - 1);
    };

    auto candidates_in_cell = [&](int cx, int cy, auto&& fn) {
        if (cx < 0 || cy < 0 || cx >= gn || cy >= gn) return;
        const std::size_t c =
            static_cast<std::size_t>(cy) * static_cast<std::size_t>(gn) + static_cast<std::size_t>(cx);
        for (int k = mesh.cell_start_[c]; k < mesh.cell_start_[c + 1]; ++k) fn(mesh.cell_tris_[k]);
    };

    // Exact containment test over the point's bucket.
    PointLocation best;
    double best_min_bary = -std::numeric_limits<double>::infinity();
    candidates_in_cell(cell_of(x), cell_of(y), [&](int t) {
        const auto l = mesh.barycentric(t, x, y);
        const double mn = std::min({l[0], l[1], l[2]});
        if (mn > best_min_bary) {
            best_min_bary = mn;
            best.triangle = t;
            best.barycentric = l;
        }
    });
    if (best.triangle >= 0 && best_min_bary >= kInsideTol) return best;

    if (x * x + y * y > (1.0 + kDomainTol) * (1.0 + kDomainTol)) {
        throw PointOutsideDomainError("locate_point: point outside the unit disk");
    }

    // Nearest-element snap: search expanding rings of buckets, keep the
    // closest point on any candidate triangle.
    const std::array<double, 2> p{x, y};
    int best_tri = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    std::array<double, 3> best_bary{0, 0, 0};

    auto consider = [&](int t) {
        const auto l = mesh.barycentric(t, x, y);
        if (std::min({l[0], l[1], l[2]}) >= kInsideTol) {
            best_tri = t;
            best_d2 = 0.0;
            best_bary = l;
            return;
        }
        const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
        for (int k = 0; k < 3; ++k) {
            double tpar;
            const double d2 = segment_dist2(p, mesh.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])],
                                            mesh.vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>((k + 1) % 3)])], tpar);
            if (d2 < best_d2) {
                best_d2 = d2;
                best_tri = t;
                best_bary = {0, 0, 0};
                best_bary[static_cast<std::size_t>(k)] = 1.0 - tpar;
                best_bary[static_cast<std::size_t>((k + 1) % 3)] = tpar;
            }
        }
    };

    const int cx = cell_of(x), cy = cell_of(y);
    int settled_after = -1;
    for (int ring = 0; ring < 2 * gn; ++ring) {
        for (int dy = -ring; dy <= ring; ++dy) {
            for (int dx = -ring; dx <= ring; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                candidates_in_cell(cx + dx, cy + dy, consider);
            }
        }
        if (best_tri >= 0 && settled_after < 0) settled_after = ring + 1;
        // One extra ring after the first hit guards against a closer triangle
        // in an adjacent bucket.
        if (settled_after >= 0 && ring >= settled_after) break;
    }
    if (best_tri < 0) {
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t) consider(static_cast<int>(t));
    }
    if (best_tri < 0) throw PointOutsideDomainError("locate_point: empty mesh");

    PointLocation out;
    out.triangle = best_tri;
    out.barycentric = best_bary;
    out.snapped = best_d2 > 0.0;
    return out;
}

void validate_mesh(const Mesh& mesh) {
    if (mesh.vertices.empty() || mesh.triangles.empty()) {
        throw std::runtime_error("mesh: empty");
    }
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        if (mesh.tri_areas[t] <= 0.0) throw std::runtime_error("mesh: nonpositive triangle area");
    }
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        if (mesh.is_boundary_edge(static_cast<int>(e))) {
            const auto& ed = mesh.edges[e];
            if (!mesh.is_boundary_vertex(ed[0]) || !mesh.is_boundary_vertex(ed[1])) {
                throw std::runtime_error("mesh: boundary edge with interior endpoint");
            }
        }
    }
    for (int v : mesh.boundary_vertices) {
        const auto& p = mesh.vertices[static_cast<std::size_t>(v)];
        const double r = std::hypot(p[0], p[1]);
        if (std::abs(r - 1.0) > 1e-10) {
            throw std::runtime_error("mesh: boundary vertex off the unit circle");
        }
    }
    // Connectivity via triangle adjacency.
    std::vector<char> seen(mesh.num_triangles(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    std::size_t visited = 1;
    while (!q.empty()) {
        const int t = q.front();
        q.pop();
        for (int nb : mesh.tri_neighbors[static_cast<std::size_t>(t)]) {
            if (nb >= 0 && !seen[static_cast<std::size_t>(nb)]) {
                seen[static_cast<std::size_t>(nb)] = 1;
                ++visited;
                q.push(nb);
            }
        }
    }
    if (visited != mesh.num_triangles()) throw std::runtime_error("mesh: disconnected");
}

double average_edge_length(const Mesh& mesh) {
    double total = 0.0;
    for (const auto& e : mesh.edges) {
        const auto& a = mesh.vertices[static_cast<std::size_t>(e[0])];
        const auto& b = mesh.vertices[static_cast<std::size_t>(e[1])];
        total += std::hypot(b[0] - a[0], b[1] - a[1]);
    }
    return total / static_cast<double>(mesh.num_edges());
}

}  // namespace aet
