// Benchmark comparing the serial reference lane against the OpenMP lane for
// the data-parallel kernels: assembly, sparse matrix-vector products, the
// PCG solve, the misfit quadrature reduction, cross-mesh projection, and the
// heatmap rasterizer. Also reports the maximum deviation between the lanes
// (expected: 0, all kernels are deterministic by construction).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aet/adjoint.hpp"
#include "aet/fem.hpp"
#include "aet/forward.hpp"
#include "aet/io.hpp"
#include "aet/mesh.hpp"
#include "aet/parallel.hpp"
#include "aet/render.hpp"

using namespace aet;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_seconds();
        fn();
        best = std::min(best, now_seconds() - t0);
    }
    return best;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void report(const char* name, double serial_s, double par_s, double diff) {
    std::printf("%-22s %10.1f ms %10.1f ms   x%-6.2f   max|diff| = %.3g\n", name,
                1e3 * serial_s, 1e3 * par_s, serial_s / par_s, diff);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial vs OpenMP kernel benchmark"};
    double h = 0.02;
    double fine_h = 0.01;
    int reps = 3;
    app.add_option("--h", h, "Reconstruction mesh size");
    app.add_option("--fine-h", fine_h, "Data mesh size for the projection kernel");
    app.add_option("--reps", reps, "Repetitions (best-of timing)");
    CLI11_PARSE(app, argc, argv);

    std::printf("threads available: %d\n", max_threads());

    auto mesh = std::make_shared<const Mesh>(generate_disk_mesh(h));
    auto fine_mesh = std::make_shared<const Mesh>(generate_disk_mesh(fine_h));
    auto uspace = FunctionSpace::create(mesh, 2);
    auto sspace = FunctionSpace::create(mesh, 1);
    auto fine_space = FunctionSpace::create(fine_mesh, 1);
    std::printf("mesh h=%g: %zu triangles, P2 dofs=%d; fine h=%g: %zu triangles\n", h,
                mesh->num_triangles(), uspace->dof_count(), fine_h, fine_mesh->num_triangles());

    const ScalarField sigma = interpolate(sspace, [](double x, double y) {
        return 1.0 + 0.5 * std::exp(-((x - 0.2) * (x - 0.2) + (y - 0.2) * (y - 0.2)) / 0.09);
    });

    uspace->pattern();  // exclude one-time sparsity construction from timings

    // Stiffness assembly.
    SparseMatrix A_serial, A_par;
    {
        const double ts = time_best_of(reps, [&] { A_serial = assemble_stiffness(*uspace, sigma, Exec::serial); });
        const double tp = time_best_of(reps, [&] { A_par = assemble_stiffness(*uspace, sigma, Exec::par); });
        report("assemble_stiffness", ts, tp, max_abs_diff(A_serial.values(), A_par.values()));
    }

    // Sparse matvec.
    {
        std::vector<double> x(static_cast<std::size_t>(uspace->dof_count()));
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.01 * static_cast<double>(i));
        std::vector<double> ys(x.size()), yp(x.size());
        const double ts = time_best_of(reps, [&] {
            for (int k = 0; k < 20; ++k) A_serial.multiply(x, ys, Exec::serial);
        });
        const double tp = time_best_of(reps, [&] {
            for (int k = 0; k < 20; ++k) A_par.multiply(x, yp, Exec::par);
        });
        report("spmv (20x)", ts, tp, max_abs_diff(ys, yp));
    }

    // Forward solve (assembly + elimination + PCG).
    std::vector<double> us, up;
    {
        const auto bc = boundary_conditions(BcSet::bc1)[0];
        const double ts = time_best_of(1, [&] {
            us = solve_forward(sigma, bc, uspace, 1e-10, Exec::serial).coeffs;
        });
        const double tp = time_best_of(1, [&] {
            up = solve_forward(sigma, bc, uspace, 1e-10, Exec::par).coeffs;
        });
        report("forward solve (pcg)", ts, tp, max_abs_diff(us, up));
    }

    // Misfit quadrature reduction (cost without the solves).
    {
        PowerDensity data;
        data.bc_set = BcSet::bc1;
        data.fine_h = fine_h;
        data.bc_ids = {"f=x", "f=(x+y)/sqrt2"};
        data.fields = {ScalarField(sspace, 1.0), ScalarField(sspace, 1.0)};
        const ScalarField background(sspace, 1.0);
        double cs = 0.0, cp = 0.0;
        ObjectiveEvaluator ev_serial(sspace, uspace, data, background,
                                     ObjectiveOptions{0.1, 0, 1e-10, Exec::serial, true});
        ObjectiveEvaluator ev_par(sspace, uspace, data, background,
                                  ObjectiveOptions{0.1, 0, 1e-10, Exec::par, true});
        ev_serial.cost(sigma);  // pay the forward solves once
        ev_par.cost(sigma);
        const double ts = time_best_of(reps, [&] { cs = ev_serial.cost(sigma); });
        const double tp = time_best_of(reps, [&] { cp = ev_par.cost(sigma); });
        report("misfit quadrature", ts, tp, std::abs(cs - cp));
    }

    // Cross-mesh projection (fine -> coarse).
    {
        const ScalarField fine_field = interpolate(fine_space, [](double x, double y) {
            return std::sin(x + y);
        });
        std::vector<double> ps, pp;
        const double ts = time_best_of(reps, [&] {
            ps = project_between_meshes(fine_field, sspace, Exec::serial).coeffs;
        });
        const double tp = time_best_of(reps, [&] {
            pp = project_between_meshes(fine_field, sspace, Exec::par).coeffs;
        });
        report("projection", ts, tp, max_abs_diff(ps, pp));
    }

    // Rasterizer.
    {
        const auto dir = std::filesystem::temp_directory_path();
        const auto f_serial = dir / "aet_bench_serial.png";
        const auto f_par = dir / "aet_bench_par.png";
        const double ts =
            time_best_of(reps, [&] { render_field_png(sigma, f_serial, 0, 3.2, 800, 800, Exec::serial); });
        const double tp =
            time_best_of(reps, [&] { render_field_png(sigma, f_par, 0, 3.2, 800, 800, Exec::par); });
        const bool same = read_text_file(f_serial) == read_text_file(f_par);
        report("rasterize 800x800", ts, tp, same ? 0.0 : 1.0);
        std::filesystem::remove(f_serial);
        std::filesystem::remove(f_par);
    }
    return 0;
}
