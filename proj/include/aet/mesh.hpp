#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace aet {

struct PointLocation {
    int triangle = -1;
    std::array<double, 3> barycentric{0.0, 0.0, 0.0};
    // True when the query point was outside the triangulated hull and had to
    // be projected onto the nearest element (clamped barycentrics).
    bool snapped = false;
};

/// Conforming triangulation of the unit disk. All triangles are
/// counterclockwise; boundary vertices sit exactly on the unit circle.
/// Immutable after finalize(); safe to read from multiple threads.
class Mesh {
public:
    std::vector<std::array<double, 2>> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> boundary_vertices;  // sorted vertex indices
    double target_h = 0.0;

    // Derived connectivity, filled by finalize().
    std::vector<std::array<int, 2>> edges;        // (min,max) vertex pairs, sorted
    std::vector<std::array<int, 3>> tri_edges;    // edge k joins local vertices k,(k+1)%3
    std::vector<std::array<int, 3>> tri_neighbors;  // across edge k, -1 at boundary
    std::vector<double> tri_areas;

    void finalize();

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }
    std::size_t num_edges() const { return edges.size(); }
    bool is_boundary_vertex(int v) const { return boundary_mask_[static_cast<std::size_t>(v)] != 0; }
    bool is_boundary_edge(int e) const { return edge_tri_count_[static_cast<std::size_t>(e)] == 1; }

    double total_area() const;

    // Barycentric coordinates of p with respect to triangle t (may be negative).
    std::array<double, 3> barycentric(int t, double x, double y) const;
    std::array<double, 2> point_from_barycentric(int t, const std::array<double, 3>& lambda) const;

private:
    std::vector<char> boundary_mask_;
    std::vector<char> edge_tri_count_;

    // Uniform bucket grid over [-1,1]^2 used to seed point location.
    int grid_n_ = 0;
    std::vector<int> cell_start_;
    std::vector<int> cell_tris_;

    friend PointLocation locate_point(const Mesh&, double, double);
};

/// Structured polar-ring triangulation: ring i carries 6*i vertices, annuli
/// are triangulated by an angular two-pointer march that keeps near-unit
/// aspect ratio. Deterministic for a given h.
Mesh generate_disk_mesh(double h);

/// Find the element containing (x, y) and its barycentric coordinates.
/// Points inside the disk but outside the polygonal hull (possible near the
/// boundary, where chords cut the circle) are snapped to the nearest element.
/// Points with ||p|| > 1 + 1e-9 raise PointOutsideDomainError.
PointLocation locate_point(const Mesh& mesh, double x, double y);

/// Check all structural invariants (orientation, edge sharing, boundary
/// placement, connectivity); throws on violation.
void validate_mesh(const Mesh& mesh);

double average_edge_length(const Mesh& mesh);

}  // namespace aet
