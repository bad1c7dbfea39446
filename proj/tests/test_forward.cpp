#include <doctest.h>

#include <cmath>
#include <numbers>

#include "aet/errors.hpp"
#include "aet/forward.hpp"
#include "aet/phantoms.hpp"
#include "test_utils.hpp"

using namespace aet;

TEST_SUITE_BEGIN("forward");

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

ScalarField constant_sigma(std::shared_ptr<const FunctionSpace> space, double value) {
    return ScalarField(std::move(space), value);
}

}  // namespace

TEST_CASE("homogeneous conductivity reproduces linear potentials") {
    auto mesh = testutil::disk(0.08);
    auto uspace = FunctionSpace::create(mesh, 2);
    auto sspace = FunctionSpace::create(mesh, 1);
    const ScalarField sigma = constant_sigma(sspace, 1.0);

    const auto bcs = boundary_conditions(BcSet::bc1);
    const ScalarField u1 = solve_forward(sigma, bcs[0], uspace, 1e-11);
    const ScalarField u2 = solve_forward(sigma, bcs[1], uspace, 1e-11);
    for (int d = 0; d < uspace->dof_count(); ++d) {
        const auto& p = uspace->dof_coords()[static_cast<std::size_t>(d)];
        CHECK(std::abs(u1.coeffs[static_cast<std::size_t>(d)] - p[0]) <= 1e-9);
        CHECK(std::abs(u2.coeffs[static_cast<std::size_t>(d)] - (p[0] + p[1]) * kInvSqrt2) <= 1e-9);
    }
}

TEST_CASE("two-layer inclusion matches the analytic transmission solution") {
    // sigma = 2 inside r < rho about the origin, 1 outside, trace x on the
    // circle. Matching continuity of u and of the radial flux at rho and the
    // trace at 1 gives u = A r cos(theta) inside, (B r + C / r) cos(theta)
    // outside with B = 1 / (1 - k rho^2), C = -k rho^2 B, A = (1 - k) B,
    // k = (2 - 1) / (2 + 1).
    const double rho = 0.3;
    const double k = 1.0 / 3.0;
    const double B = 1.0 / (1.0 - k * rho * rho);
    const double C = -k * rho * rho * B;
    const double A = (1.0 - k) * B;

    auto mesh = testutil::disk(0.02);
    auto uspace = FunctionSpace::create(mesh, 2);
    auto sspace = FunctionSpace::create(mesh, 1);
    const ScalarField sigma = interpolate(sspace, [&](double x, double y) {
        return x * x + y * y < rho * rho ? 2.0 : 1.0;
    });

    const BoundaryCondition bc{"f=x", [](double x, double) { return x; }};
    const ScalarField u = solve_forward(sigma, bc, uspace, 1e-11);

    auto exact = [&](double x, double y) {
        const double r2 = x * x + y * y;
        if (r2 < rho * rho) return A * x;
        return B * x + C * x / r2;
    };
    CHECK(testutil::l2_error(u, exact) <= 1e-3);
}

TEST_CASE("power density of simple fields") {
    auto mesh = testutil::disk(0.1);
    auto uspace = FunctionSpace::create(mesh, 2);
    auto sspace = FunctionSpace::create(mesh, 2);

    const ScalarField x_field = interpolate(uspace, [](double x, double) { return x; });
    {
        const ScalarField h = power_density(constant_sigma(sspace, 1.0), x_field);
        for (double v : h.coeffs) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        const ScalarField h = power_density(constant_sigma(sspace, 2.0), x_field);
        for (double v : h.coeffs) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
    }
    {
        const ScalarField u = interpolate(uspace, [](double x, double y) { return x * x - y * y; });
        const ScalarField h = power_density(constant_sigma(sspace, 1.0), u);
        for (int d = 0; d < sspace->dof_count(); ++d) {
            const auto& p = sspace->dof_coords()[static_cast<std::size_t>(d)];
            const double want = 4.0 * (p[0] * p[0] + p[1] * p[1]);
            CHECK(std::abs(h.coeffs[static_cast<std::size_t>(d)] - want) <= 1e-8);
        }
    }
}

TEST_CASE("determinant diagnostic on the standard excitations") {
    auto mesh = testutil::disk(0.08);
    auto uspace = FunctionSpace::create(mesh, 2);
    auto sspace = FunctionSpace::create(mesh, 1);
    const ScalarField sigma = constant_sigma(sspace, 1.0);

    {
        const auto bcs = boundary_conditions(BcSet::bc1);
        const ScalarField u1 = solve_forward(sigma, bcs[0], uspace, 1e-11);
        const ScalarField u2 = solve_forward(sigma, bcs[1], uspace, 1e-11);
        const auto det = determinant_diagnostic(u1, u2);
        CHECK(det.global_min == doctest::Approx(kInvSqrt2).epsilon(1e-9));
        for (double v : det.per_element_min) CHECK(v > 0.0);
    }
    {
        const auto bcs = boundary_conditions(BcSet::bc2);
        const ScalarField u1 = solve_forward(sigma, bcs[0], uspace, 1e-11);
        const ScalarField u2 = solve_forward(sigma, bcs[1], uspace, 1e-11);
        const auto det = determinant_diagnostic(u1, u2);
        CHECK(det.global_min == doctest::Approx(1.0).epsilon(1e-9));

        const auto collinear = determinant_diagnostic(u1, u1);
        CHECK(std::abs(collinear.global_min) <= 1e-12);
    }
}

TEST_CASE("scaling sigma leaves u fixed and scales H") {
    auto mesh = testutil::disk(0.1);
    auto uspace = FunctionSpace::create(mesh, 2);
    auto sspace = FunctionSpace::create(mesh, 1);
    const ScalarField sigma = interpolate(sspace, [](double x, double y) {
        return 1.0 + 0.5 * std::exp(-(x * x + y * y) / 0.2);
    });
    ScalarField sigma3 = sigma;
    for (double& v : sigma3.coeffs) v *= 3.0;

    const BoundaryCondition bc{"f=x", [](double x, double) { return x; }};
    const ScalarField u1 = solve_forward(sigma, bc, uspace, 1e-12);
    const ScalarField u3 = solve_forward(sigma3, bc, uspace, 1e-12);
    for (std::size_t d = 0; d < u1.coeffs.size(); ++d) {
        CHECK(std::abs(u1.coeffs[d] - u3.coeffs[d]) <= 1e-9);
    }

    const ScalarField h1 = power_density(sigma, u1);
    const ScalarField h3 = power_density(sigma3, u3);
    for (std::size_t d = 0; d < h1.coeffs.size(); ++d) {
        CHECK(h3.coeffs[d] == doctest::Approx(3.0 * h1.coeffs[d]).epsilon(1e-9));
    }
}

TEST_CASE("noise model: determinism, zero level, statistics") {
    auto space = FunctionSpace::create(testutil::disk(0.015), 1);
    const ScalarField h = constant_sigma(space, 1.0);
    REQUIRE(space->dof_count() >= 10000);

    const ScalarField clean = add_noise(h, 0.0, 1234, 0);
    CHECK(clean.coeffs == h.coeffs);

    const ScalarField a = add_noise(h, 0.1, 2024, 0);
    const ScalarField b = add_noise(h, 0.1, 2024, 0);
    CHECK(a.coeffs == b.coeffs);
    const ScalarField c = add_noise(h, 0.1, 2025, 0);
    CHECK(a.coeffs != c.coeffs);

    double mean = 0.0;
    for (std::size_t d = 0; d < a.coeffs.size(); ++d) mean += a.coeffs[d] - 1.0;
    mean /= static_cast<double>(a.coeffs.size());
    double var = 0.0;
    for (std::size_t d = 0; d < a.coeffs.size(); ++d) {
        const double x = a.coeffs[d] - 1.0 - mean;
        var += x * x;
    }
    var /= static_cast<double>(a.coeffs.size() - 1);
    const double stddev = std::sqrt(var);
    CHECK(stddev >= 0.095);
    CHECK(stddev <= 0.105);

    CHECK_THROWS_AS(add_noise(h, -0.1, 1, 0), InvalidParameterError);
}

TEST_CASE("data generation for the homogeneous phantom") {
    auto coarse_space = FunctionSpace::create(testutil::disk(0.05), 2);
    auto truth = [](double, double) { return 1.0; };
    const PowerDensity data = generate_data(truth, BcSet::bc2, 0.025, coarse_space, 0.0, 7);
    REQUIRE(data.fields.size() == 2);
    for (const auto& field : data.fields) {
        for (double v : field.coeffs) CHECK(std::abs(v - 1.0) <= 5e-3);
    }

    const PowerDensity again = generate_data(truth, BcSet::bc2, 0.025, coarse_space, 0.0, 99);
    for (std::size_t i = 0; i < data.fields.size(); ++i) {
        CHECK(data.fields[i].coeffs == again.fields[i].coeffs);  // noise-free determinism
    }
}

TEST_CASE("inverse-crime guard rejects equal mesh sizes") {
    auto coarse_space = FunctionSpace::create(testutil::disk(0.1), 1);
    auto truth = [](double, double) { return 1.0; };
    CHECK_THROWS_AS(generate_data(truth, BcSet::bc1, 0.1, coarse_space, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(generate_data(truth, BcSet::bc1, 0.06, coarse_space, 0.0, 1), ConfigError);
}

TEST_CASE("power density at the truth approaches the projected data under refinement") {
    // Smooth truth so the interpolation/projection errors control the rate.
    auto truth = [](double x, double y) {
        return 1.0 + 0.6 * std::exp(-((x - 0.1) * (x - 0.1) + y * y) / 0.18);
    };
    std::vector<double> hs{0.08, 0.04};
    std::vector<double> errs;
    for (double h : hs) {
        auto sspace = FunctionSpace::create(testutil::disk(h), 1);
        auto uspace = FunctionSpace::create(sspace->mesh_ptr(), 2);
        const PowerDensity data = generate_data(truth, BcSet::bc2, 0.02, sspace, 0.0, 3);
        const ScalarField sigma = interpolate(sspace, truth);
        const BoundaryCondition bcx{"f=x", [](double x, double) { return x; }};
        const BoundaryCondition bcy{"f=y", [](double, double y) { return y; }};
        const ScalarField u1 = solve_forward(sigma, bcx, uspace, 1e-11);
        const ScalarField u2 = solve_forward(sigma, bcy, uspace, 1e-11);
        const ScalarField h1 = power_density(sigma, u1);
        const ScalarField h2 = power_density(sigma, u2);
        ScalarField d1(sspace), d2(sspace);
        for (std::size_t i = 0; i < d1.coeffs.size(); ++i) {
            d1.coeffs[i] = h1.coeffs[i] - data.fields[0].coeffs[i];
            d2.coeffs[i] = h2.coeffs[i] - data.fields[1].coeffs[i];
        }
        errs.push_back(std::hypot(testutil::l2_norm(d1), testutil::l2_norm(d2)));
    }
    CHECK(testutil::observed_order(hs, errs) >= 1.0);
}

TEST_CASE("boundary trace evaluation and arity checks") {
    CHECK(eval_boundary(BcSet::bc1, 1, 0.0) == doctest::Approx(kInvSqrt2).epsilon(1e-15));
    CHECK(eval_boundary(BcSet::bc2, 1, std::numbers::pi / 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval_boundary(BcSet::bc3, 2, std::numbers::pi) == doctest::Approx(-kInvSqrt2).epsilon(1e-12));
    CHECK_THROWS_AS(eval_boundary(BcSet::bc1, 2, 0.0), InvalidParameterError);
    CHECK_THROWS_AS(eval_boundary(BcSet::bc3, 3, 0.0), InvalidParameterError);
}

TEST_SUITE_END();
