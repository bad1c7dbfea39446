#include <doctest.h>

#include <cmath>

#include "aet/errors.hpp"
#include "aet/optimizer.hpp"
#include "aet/phantoms.hpp"
#include "test_utils.hpp"

using namespace aet;

TEST_SUITE_BEGIN("optimizer");

namespace {

const InnerProductFn kDot = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
};

PowerDensity small_data(const std::function<double(double, double)>& truth, double coarse_h,
                        double fine_h, int degree, BcSet set = BcSet::bc1, double delta = 0.0) {
    auto sspace = FunctionSpace::create(testutil::disk(coarse_h), degree);
    return generate_data(truth, set, fine_h, sspace, delta, 31);
}

}  // namespace

TEST_CASE("Hager-Zhang coefficient on a two-dof toy problem") {
    const std::vector<double> g_old{1.0, 0.0};
    const std::vector<double> g_new{0.0, 1.0};
    const std::vector<double> d{1.0, 0.0};
    const auto beta = hager_zhang_beta(g_new, g_old, d, kDot, 1e-12);
    REQUIRE(beta.has_value());
    CHECK(*beta == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("Hager-Zhang degeneracies") {
    const std::vector<double> g{0.3, -0.7};
    const std::vector<double> d{1.0, 0.5};
    CHECK_FALSE(hager_zhang_beta(g, g, d, kDot, 1e-12).has_value());  // y = 0

    const std::vector<double> zero{0.0, 0.0};
    const std::vector<double> g_old{1.0, 0.0};
    const auto beta = hager_zhang_beta(zero, g_old, g_old, kDot, 1e-12);
    REQUIRE(beta.has_value());
    CHECK(*beta == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("Armijo backtracking on a 1-dof quadratic") {
    // J(sigma) = sigma^2 at sigma = 1 along d = -2: the unit step overshoots
    // to J = 1, the halved step lands on the minimum.
    auto cost_of_step = [](double step) {
        const double sigma = 1.0 - 2.0 * step;
        return sigma * sigma;
    };
    const auto res = armijo_search(1.0, -4.0, cost_of_step, 1.0, 0.1, 0.5, 40);
    CHECK(res.step == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(res.cost == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(res.backtracks == 1);
    CHECK(res.cost < 1.0);  // strict decrease
}

TEST_CASE("Armijo rejects non-descent slopes and reports exhaustion") {
    auto flat = [](double) { return 1.0; };
    CHECK_THROWS_AS(armijo_search(1.0, 0.0, flat, 1.0, 0.1, 0.5, 40), InvalidParameterError);
    try {
        armijo_search(1.0, -1.0, [](double) { return 2.0; }, 1.0, 0.1, 0.5, 40);
        FAIL("expected LineSearchFailureError");
    } catch (const LineSearchFailureError& e) {
        CHECK(e.backtracks == 40);
    }
}

TEST_CASE("box projection clamps to the admissible bounds") {
    const std::vector<double> values{5.0, 0.001, 1.7, 0.01, 4.0};
    const auto clamped = project_box(values, 0.01, 4.0);
    CHECK(clamped[0] == 4.0);
    CHECK(clamped[1] == 0.01);
    CHECK(clamped[2] == 1.7);  // untouched
    CHECK(clamped[3] == 0.01);
    CHECK(clamped[4] == 4.0);
    CHECK_THROWS_AS(project_box(values, 2.0, 1.0), InvalidParameterError);
}

TEST_CASE("config validation") {
    NlcgConfig config;
    CHECK_NOTHROW(config.validate());
    NlcgConfig bad = config;
    bad.armijo_delta = 0.5;
    CHECK_THROWS_AS(bad.validate(), InvalidParameterError);
    bad = config;
    bad.sigma_lower = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameterError);
    bad = config;
    bad.sigma_lower = 5.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameterError);
    bad = config;
    bad.tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameterError);
}

TEST_CASE("k_max = 0 returns the initial guess with empty history") {
    const PowerDensity data = small_data(disk_phantom().evaluator(), 0.1, 0.05, 2);
    NlcgConfig config;
    config.k_max = 0;
    config.exec = Exec::par;
    const auto result = run_nlcg(data, config);
    CHECK(result.history.empty());
    for (double v : result.sigma.coeffs) CHECK(v == 1.0);
    CHECK(result.termination == Termination::max_iterations);
}

TEST_CASE("starting at the optimum of the misfit converges immediately") {
    auto truth = [](double, double) { return 1.0; };
    const PowerDensity data = small_data(truth, 0.08, 0.04, 2);
    NlcgConfig config;
    config.alpha = 0.1;
    config.s = 1;
    config.tol = 1e-4;
    const auto result = run_nlcg(data, config);
    CHECK(result.termination == Termination::converged);
    CHECK(result.history.size() <= 2);
}

TEST_CASE("short reconstruction run satisfies the optimizer invariants") {
    const PowerDensity data = small_data(disk_phantom().evaluator(), 0.07, 0.035, 2);
    NlcgConfig config;
    config.s = 1;
    config.alpha = 0.1;
    config.k_max = 12;
    config.tol = 1e-7;  // keep iterating; we want history to inspect
    const auto result = run_nlcg(data, config);
    REQUIRE(!result.history.empty());

    double prev = result.initial_cost;
    for (const auto& rec : result.history) {
        CHECK(rec.cost < prev);  // strict decrease from the Armijo condition
        prev = rec.cost;
        CHECK(rec.descent_product < 0.0);
        CHECK(rec.step > 0.0);
        CHECK(rec.active_set_fraction >= 0.0);
        CHECK(rec.active_set_fraction <= 1.0);
    }
    for (double v : result.sigma.coeffs) {
        CHECK(v >= config.sigma_lower);
        CHECK(v <= config.sigma_upper);
    }
    CHECK(result.projected_gradient_measure >= 0.0);
    CHECK(std::isfinite(result.projected_gradient_measure));
}

TEST_CASE("the run's norms use the configured inner product") {
    const PowerDensity data_p1 = small_data(disk_phantom().evaluator(), 0.08, 0.04, 1);
    const PowerDensity data_p2 = small_data(disk_phantom().evaluator(), 0.08, 0.04, 2);

    for (int s : {0, 1}) {
        CAPTURE(s);
        const PowerDensity& data = s == 0 ? data_p1 : data_p2;
        auto sspace = data.fields[0].space;
        auto uspace = FunctionSpace::create(sspace->mesh_ptr(), 2);
        const ScalarField background(sspace, 1.0);
        ObjectiveEvaluator evaluator(sspace, uspace, data, background,
                                     ObjectiveOptions{0.1, s, 1e-10, Exec::par, true});
        CHECK(evaluator.x_kind() == (s == 0 ? InnerKind::L2 : InnerKind::H1));

        NlcgConfig config;
        config.s = s;
        config.k_max = 3;
        config.tol = 1e-9;
        const auto result = run_nlcg(evaluator, config);
        REQUIRE(!result.history.empty());

        // Recompute the gradient at the final iterate and compare the norm the
        // run reported with the norm in each candidate inner product.
        ObjectiveEvaluator fresh(sspace, uspace, data, background,
                                 ObjectiveOptions{0.1, s, 1e-10, Exec::par, true});
        const auto ev = fresh.evaluate(result.sigma);
        const double l2 = std::sqrt(inner_product(ev.gradient, ev.gradient, InnerKind::L2));
        const double h1 = std::sqrt(inner_product(ev.gradient, ev.gradient, InnerKind::H1));
        const double reported = result.history.back().grad_norm;
        const double match = s == 0 ? l2 : h1;
        const double other = s == 0 ? h1 : l2;
        CHECK(std::abs(reported - match) <= 1e-6 * std::max(1.0, match));
        CHECK(std::abs(match - other) > 1e-6 * match);  // the two kinds differ
    }
}

TEST_SUITE_END();
