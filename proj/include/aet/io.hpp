#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "aet/fem.hpp"
#include "aet/forward.hpp"
#include "aet/mesh.hpp"

namespace aet {

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64(const std::string& s);

/// Canonical plain-text mesh serialization:
///   header line "aet-mesh 1 <target_h>"
///   "<nv> <nt>"
///   nv lines "x y"
///   nt lines "i j k"
///   one line with the boundary vertex indices
std::string mesh_to_text(const Mesh& mesh);
Mesh mesh_from_text(const std::string& text);
void write_mesh_text(const Mesh& mesh, const std::filesystem::path& path);
Mesh read_mesh_text(const std::filesystem::path& path);

/// Hash of the canonical text serialization.
std::uint64_t mesh_hash(const Mesh& mesh);

/// Legacy ASCII VTK (triangles; fields as point data). P2 fields are written
/// as quadratic triangles.
void write_mesh_vtk(const Mesh& mesh, const std::filesystem::path& path);
void write_field_vtk(const ScalarField& field, const std::filesystem::path& path,
                     const std::string& name = "value");

/// CSV export "dof_index,x,y,value".
void write_field_csv(const ScalarField& field, const std::filesystem::path& path);

/// Versioned power-density container:
///   aet-powerdensity 1
///   mesh_hash <hex>  degree <d>  coarse_h <h>  fine_h <h>
///   bc_set <id>  noise_delta <v>  seed <u>
///   fields <m>, then per field a "dof_index,x,y,value" CSV block.
void write_power_density(const PowerDensity& data, const std::filesystem::path& path);

/// Reads a power-density file; the reconstruction space is rebuilt from the
/// header (deterministic mesh generator) and checked against the stored hash.
PowerDensity read_power_density(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace aet
