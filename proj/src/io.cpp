#include "aet/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aet/errors.hpp"

namespace aet {

namespace {

// Lossless, locale-independent double formatting.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string mesh_to_text(const Mesh& mesh) {
    std::string out;
    out.reserve(mesh.num_vertices() * 48 + mesh.num_triangles() * 24);
    out += "aet-mesh 1 " + fmt(mesh.target_h) + "\n";
    out += std::to_string(mesh.num_vertices()) + " " + std::to_string(mesh.num_triangles()) + "\n";
    for (const auto& v : mesh.vertices) {
        out += fmt(v[0]) + " " + fmt(v[1]) + "\n";
    }
    for (const auto& t : mesh.triangles) {
        out += std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + "\n";
    }
    for (std::size_t i = 0; i < mesh.boundary_vertices.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(mesh.boundary_vertices[i]);
    }
    out += "\n";
    return out;
}

Mesh mesh_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    Mesh mesh;
    in >> magic >> version >> mesh.target_h;
    if (magic != "aet-mesh" || version != 1) throw IoError("mesh file: bad header");
    std::size_t nv = 0, nt = 0;
    in >> nv >> nt;
    mesh.vertices.resize(nv);
    for (auto& v : mesh.vertices) in >> v[0] >> v[1];
    mesh.triangles.resize(nt);
    for (auto& t : mesh.triangles) in >> t[0] >> t[1] >> t[2];
    if (!in) throw IoError("mesh file: truncated");
    int b;
    while (in >> b) mesh.boundary_vertices.push_back(b);
    mesh.finalize();
    validate_mesh(mesh);
    return mesh;
}

void write_mesh_text(const Mesh& mesh, const std::filesystem::path& path) {
    write_text_file(path, mesh_to_text(mesh));
}

Mesh read_mesh_text(const std::filesystem::path& path) {
    return mesh_from_text(read_text_file(path));
}

std::uint64_t mesh_hash(const Mesh& mesh) { return fnv1a64(mesh_to_text(mesh)); }

void write_mesh_vtk(const Mesh& mesh, const std::filesystem::path& path) {
    std::string out;
    out += "# vtk DataFile Version 3.0\nmesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out += "POINTS " + std::to_string(mesh.num_vertices()) + " double\n";
    for (const auto& v : mesh.vertices) out += fmt(v[0]) + " " + fmt(v[1]) + " 0\n";
    out += "CELLS " + std::to_string(mesh.num_triangles()) + " " +
           std::to_string(4 * mesh.num_triangles()) + "\n";
    for (const auto& t : mesh.triangles) {
        out += "3 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " +
               std::to_string(t[2]) + "\n";
    }
    out += "CELL_TYPES " + std::to_string(mesh.num_triangles()) + "\n";
    for (std::size_t i = 0; i < mesh.num_triangles(); ++i) out += "5\n";
    write_text_file(path, out);
}

void write_field_vtk(const ScalarField& field, const std::filesystem::path& path,
                     const std::string& name) {
    const FunctionSpace& space = *field.space;
    const Mesh& mesh = space.mesh();
    const bool quadratic = space.degree() == 2;
    std::string out;
    out += "# vtk DataFile Version 3.0\nfield\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out += "POINTS " + std::to_string(space.dof_count()) + " double\n";
    for (const auto& p : space.dof_coords()) out += fmt(p[0]) + " " + fmt(p[1]) + " 0\n";
    const int nloc = space.dofs_per_element();
    out += "CELLS " + std::to_string(mesh.num_triangles()) + " " +
           std::to_string(static_cast<std::size_t>(nloc + 1) * mesh.num_triangles()) + "\n";
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        out += std::to_string(nloc);
        for (int k = 0; k < nloc; ++k) {
            out += " " + std::to_string(space.element_dof(static_cast<int>(t), k));
        }
        out += "\n";
    }
    out += "CELL_TYPES " + std::to_string(mesh.num_triangles()) + "\n";
    for (std::size_t i = 0; i < mesh.num_triangles(); ++i) out += quadratic ? "22\n" : "5\n";
    out += "POINT_DATA " + std::to_string(space.dof_count()) + "\n";
    out += "SCALARS " + name + " double 1\nLOOKUP_TABLE default\n";
    for (double v : field.coeffs) out += fmt(v) + "\n";
    write_text_file(path, out);
}

void write_field_csv(const ScalarField& field, const std::filesystem::path& path) {
    std::string out = "dof_index,x,y,value\n";
    const auto& coords = field.space->dof_coords();
    for (std::size_t d = 0; d < field.coeffs.size(); ++d) {
        out += std::to_string(d) + "," + fmt(coords[d][0]) + "," + fmt(coords[d][1]) + "," +
               fmt(field.coeffs[d]) + "\n";
    }
    write_text_file(path, out);
}

void write_power_density(const PowerDensity& data, const std::filesystem::path& path) {
    if (data.fields.empty()) throw InvalidParameterError("write_power_density: no fields");
    const auto& space = data.fields[0].space;
    const Mesh& mesh = space->mesh();
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016" PRIx64, mesh_hash(mesh));

    std::string out;
    out += "aet-powerdensity 1\n";
    out += "mesh_hash " + std::string(hash_hex) + "\n";
    out += "degree " + std::to_string(space->degree()) + "\n";
    out += "coarse_h " + fmt(mesh.target_h) + "\n";
    out += "fine_h " + fmt(data.fine_h) + "\n";
    out += "bc_set " + to_string(data.bc_set) + "\n";
    out += "noise_delta " + fmt(data.noise_delta) + "\n";
    out += "seed " + std::to_string(data.seed) + "\n";
    out += "fields " + std::to_string(data.fields.size()) + "\n";

    const auto& coords = space->dof_coords();
    for (std::size_t i = 0; i < data.fields.size(); ++i) {
        out += "field " + std::to_string(i) + " " + data.bc_ids[i] + " " +
               std::to_string(data.fields[i].coeffs.size()) + "\n";
        out += "dof_index,x,y,value\n";
        for (std::size_t d = 0; d < data.fields[i].coeffs.size(); ++d) {
            out += std::to_string(d) + "," + fmt(coords[d][0]) + "," + fmt(coords[d][1]) + "," +
                   fmt(data.fields[i].coeffs[d]) + "\n";
        }
    }
    write_text_file(path, out);
}

PowerDensity read_power_density(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::string magic, key;
    int version = 0;
    in >> magic >> version;
    if (magic != "aet-powerdensity" || version != 1) {
        throw IoError("power-density file: bad header");
    }

    std::string hash_hex, bc_name;
    int degree = 0;
    double coarse_h = 0.0;
    std::size_t nfields = 0;
    PowerDensity data;

    auto expect = [&](const char* want) {
        in >> key;
        if (key != want) throw IoError(std::string("power-density file: expected '") + want + "'");
    };
    expect("mesh_hash");
    in >> hash_hex;
    expect("degree");
    in >> degree;
    expect("coarse_h");
    in >> coarse_h;
    expect("fine_h");
    in >> data.fine_h;
    expect("bc_set");
    in >> bc_name;
    expect("noise_delta");
    in >> data.noise_delta;
    expect("seed");
    in >> data.seed;
    expect("fields");
    in >> nfields;
    if (!in) throw IoError("power-density file: truncated header");
    data.bc_set = bc_set_from_string(bc_name);

    auto mesh = std::make_shared<const Mesh>(generate_disk_mesh(coarse_h));
    char hash_hex2[32];
    std::snprintf(hash_hex2, sizeof(hash_hex2), "%016" PRIx64, mesh_hash(*mesh));
    if (hash_hex != hash_hex2) {
        throw ConfigError("power-density file: mesh hash mismatch (file " + hash_hex +
                          ", regenerated " + hash_hex2 + ")");
    }
    auto space = FunctionSpace::create(mesh, degree);

    for (std::size_t i = 0; i < nfields; ++i) {
        std::size_t index = 0, ndof = 0;
        std::string bc_id, header;
        expect("field");
        in >> index >> bc_id >> ndof;
        in >> header;  // csv header line
        if (static_cast<int>(ndof) != space->dof_count()) {
            throw IoError("power-density file: dof count mismatch");
        }
        ScalarField f(space);
        for (std::size_t d = 0; d < ndof; ++d) {
            std::string line;
            in >> line;
            // dof,x,y,value
            const auto last = line.find_last_of(',');
            if (last == std::string::npos) throw IoError("power-density file: bad csv row");
            f.coeffs[d] = std::stod(line.substr(last + 1));
        }
        data.fields.push_back(std::move(f));
        data.bc_ids.push_back(bc_id);
    }
    if (!in) throw IoError("power-density file: truncated");
    return data;
}

}  // namespace aet
