#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "aet/errors.hpp"
#include "aet/io.hpp"
#include "aet/render.hpp"
#include "test_utils.hpp"

using namespace aet;

TEST_SUITE_BEGIN("io");

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "aet_io_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("mesh text round trip is exact") {
    const Mesh mesh = generate_disk_mesh(0.15);
    const std::string text = mesh_to_text(mesh);
    const Mesh back = mesh_from_text(text);
    CHECK(back.vertices == mesh.vertices);
    CHECK(back.triangles == mesh.triangles);
    CHECK(back.boundary_vertices == mesh.boundary_vertices);
    CHECK(back.target_h == mesh.target_h);
    CHECK(mesh_hash(back) == mesh_hash(mesh));

    CHECK_THROWS_AS(mesh_from_text("bogus 1 0.1\n"), IoError);
}

TEST_CASE("mesh file I/O") {
    const auto dir = temp_dir();
    const Mesh mesh = generate_disk_mesh(0.2);
    write_mesh_text(mesh, dir / "m.txt");
    const Mesh back = read_mesh_text(dir / "m.txt");
    CHECK(back.num_vertices() == mesh.num_vertices());
    write_mesh_vtk(mesh, dir / "m.vtk");
    const std::string vtk = read_text_file(dir / "m.vtk");
    CHECK(vtk.rfind("# vtk", 0) == 0);
    CHECK(vtk.find("CELL_TYPES") != std::string::npos);
}

TEST_CASE("field CSV and VTK exports") {
    const auto dir = temp_dir();
    auto mesh = testutil::disk(0.25);
    for (int degree : {1, 2}) {
        auto space = FunctionSpace::create(mesh, degree);
        const ScalarField f = interpolate(space, [](double x, double y) { return x + 2.0 * y; });
        write_field_csv(f, dir / "f.csv");
        const std::string csv = read_text_file(dir / "f.csv");
        CHECK(csv.rfind("dof_index,x,y,value\n", 0) == 0);
        const auto lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
        CHECK(lines == f.coeffs.size() + 1);

        write_field_vtk(f, dir / "f.vtk");
        const std::string vtk = read_text_file(dir / "f.vtk");
        CHECK(vtk.find(degree == 2 ? "\n22\n" : "\n5\n") != std::string::npos);
        CHECK(vtk.find("POINT_DATA") != std::string::npos);
    }
}

TEST_CASE("power-density file round trip") {
    const auto dir = temp_dir();
    auto space = FunctionSpace::create(testutil::disk(0.1), 2);
    auto truth = [](double x, double y) { return 1.0 + 0.3 * x + 0.1 * y * y; };
    const PowerDensity data = generate_data(truth, BcSet::bc2, 0.05, space, 0.1, 77);

    const auto path = dir / "data.pd";
    write_power_density(data, path);
    const PowerDensity back = read_power_density(path);
    CHECK(back.bc_set == data.bc_set);
    CHECK(back.noise_delta == data.noise_delta);
    CHECK(back.seed == data.seed);
    CHECK(back.fine_h == data.fine_h);
    REQUIRE(back.fields.size() == data.fields.size());
    for (std::size_t i = 0; i < data.fields.size(); ++i) {
        CHECK(back.fields[i].coeffs == data.fields[i].coeffs);
        CHECK(back.bc_ids[i] == data.bc_ids[i]);
    }
    CHECK(back.fields[0].space->degree() == 2);

    // Tampering with the header is detected via the mesh hash.
    std::string text = read_text_file(path);
    const auto pos = text.find("coarse_h 0.1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 12, "coarse_h 0.2");
    write_text_file(dir / "tampered.pd", text);
    CHECK_THROWS_AS(read_power_density(dir / "tampered.pd"), ConfigError);
}

TEST_CASE("png rendering is deterministic and well-formed") {
    const auto dir = temp_dir();
    auto space = FunctionSpace::create(testutil::disk(0.2), 1);
    const ScalarField f = interpolate(space, [](double x, double y) { return 1.0 + x + y; });
    render_field_png(f, dir / "a.png", 0.0, 3.2, 160, 120);
    render_field_png(f, dir / "b.png", 0.0, 3.2, 160, 120);
    const std::string a = read_text_file(dir / "a.png");
    const std::string b = read_text_file(dir / "b.png");
    CHECK(a == b);
    REQUIRE(a.size() > 8);
    const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    for (int i = 0; i < 8; ++i) CHECK(static_cast<unsigned char>(a[static_cast<std::size_t>(i)]) == sig[i]);
}

TEST_CASE("fnv1a is stable") {
    CHECK(fnv1a64(std::string("")) == 0xCBF29CE484222325ULL);
    CHECK(fnv1a64(std::string("a")) != fnv1a64(std::string("b")));
}

TEST_SUITE_END();
