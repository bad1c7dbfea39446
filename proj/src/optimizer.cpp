#include "aet/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "aet/errors.hpp"

namespace aet {

void NlcgConfig::validate() const {
    if (!(sigma_lower > 0.0) || !(sigma_lower < sigma_upper)) {
        throw InvalidParameterError("NlcgConfig: require 0 < sigma_lower < sigma_upper");
    }
    if (!(armijo_delta > 0.0) || !(armijo_delta < 0.5)) {
        throw InvalidParameterError("NlcgConfig: armijo_delta must lie in (0, 1/2)");
    }
    if (!(armijo_backtrack > 0.0) || !(armijo_backtrack < 1.0)) {
        throw InvalidParameterError("NlcgConfig: armijo_backtrack must lie in (0, 1)");
    }
    if (!(tol > 0.0)) throw InvalidParameterError("NlcgConfig: tol must be positive");
    if (!(alpha0 > 0.0)) throw InvalidParameterError("NlcgConfig: alpha0 must be positive");
    if (k_max < 0) throw InvalidParameterError("NlcgConfig: k_max must be nonnegative");
    if (alpha < 0.0) throw InvalidParameterError("NlcgConfig: alpha must be nonnegative");
    if (s != 0 && s != 1) throw InvalidParameterError("NlcgConfig: s must be 0 or 1");
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iterations: return "max_iterations";
        case Termination::line_search_failure: return "line_search_failure";
    }
    return "max_iterations";
}

std::optional<double> hager_zhang_beta(std::span<const double> g_new,
                                       std::span<const double> g_old, std::span<const double> d,
                                       const InnerProductFn& inner, double restart_threshold) {
    const std::size_t n = g_new.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = g_new[i] - g_old[i];

    const double dy = inner(d, y);
    const double dnorm = std::sqrt(std::max(0.0, inner(d, d)));
    const double ynorm2 = inner(y, y);
    const double ynorm = std::sqrt(std::max(0.0, ynorm2));
    if (std::abs(dy) < restart_threshold * dnorm * ynorm || dy == 0.0) {
        return std::nullopt;
    }

    // beta = < y - 2 d ||y||^2 / <d,y>, g_new > / <d,y>
    const double yg = inner(y, g_new);
    const double dg = inner(d, g_new);
    return (yg - 2.0 * dg * ynorm2 / dy) / dy;
}

ArmijoResult armijo_search(double f0, double dir_derivative,
                           const std::function<double(double)>& cost_of_step, double alpha0,
                           double delta, double backtrack, int max_backtracks) {
    if (!(dir_derivative < 0.0)) {
        throw InvalidParameterError("armijo_search: direction is not a descent direction");
    }
    double step = alpha0;
    for (int j = 0; j <= max_backtracks; ++j) {
        const double trial = cost_of_step(step);
        if (trial <= f0 + delta * step * dir_derivative) {
            return {step, trial, j};
        }
        step *= backtrack;
    }
    throw LineSearchFailureError("armijo_search: no sufficient decrease within backtracking budget",
                                 max_backtracks);
}

std::vector<double> project_box(std::span<const double> values, double lower, double upper) {
    if (!(lower < upper)) throw InvalidParameterError("project_box: require lower < upper");
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) v = std::clamp(v, lower, upper);
    return out;
}

ScalarField project_box(const ScalarField& field, double lower, double upper) {
    ScalarField out = field;
    out.coeffs = project_box(std::span<const double>(field.coeffs), lower, upper);
    return out;
}

namespace {

double active_fraction(std::span<const double> x, double lower, double upper) {
    std::size_t active = 0;
    for (double v : x) {
        if (v == lower || v == upper) ++active;
    }
    return x.empty() ? 0.0 : static_cast<double>(active) / static_cast<double>(x.size());
}

}  // namespace

ReconstructionResult run_nlcg(const PowerDensity& data, const NlcgConfig& config) {
    config.validate();
    if (data.fields.empty()) throw InvalidParameterError("run_nlcg: data has no fields");
    auto sigma_space = data.fields[0].space;
    auto potential_space = FunctionSpace::create(sigma_space->mesh_ptr(), 2);
    ScalarField background(sigma_space, config.sigma_background);
    ObjectiveEvaluator evaluator(sigma_space, potential_space, data, background,
                                 ObjectiveOptions{config.alpha, config.s, config.solver_tol,
                                                  config.exec, true});
    return run_nlcg(evaluator, config);
}

ReconstructionResult run_nlcg(ObjectiveEvaluator& evaluator, const NlcgConfig& config) {
    config.validate();
    const auto& space = evaluator.sigma_space();
    const std::size_t n = static_cast<std::size_t>(space->dof_count());
    const double lo = config.sigma_lower, up = config.sigma_upper;

    auto inner = [&evaluator](std::span<const double> a, std::span<const double> b) {
        return evaluator.x_inner(a, b);
    };

    ReconstructionResult result;
    ScalarField sigma(space, config.sigma_init);
    sigma = project_box(sigma, lo, up);

    auto ev = evaluator.evaluate(sigma);
    result.initial_cost = ev.cost;
    std::vector<double> g = ev.gradient.coeffs;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];

    double cost = ev.cost;
    std::vector<double> sigma_prev, g_prev;
    double prev_step = config.alpha0;
    result.termination = Termination::max_iterations;

    for (int k = 0; k < config.k_max; ++k) {
        double gd = inner(g, d);
        bool restarted = false;
        if (!(gd < 0.0)) {
            // Conjugacy produced an ascent direction: fall back to steepest
            // descent for this step.
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            gd = inner(g, d);
            restarted = true;
            if (!(gd < 0.0)) {
                // Zero gradient: already stationary.
                result.termination = Termination::converged;
                break;
            }
        }

        // Trial step: Barzilai-Borwein warm start once history exists.
        double trial0 = config.alpha0;
        if (config.bb_warm_start && !sigma_prev.empty()) {
            std::vector<double> ds(n), dy(n);
            for (std::size_t i = 0; i < n; ++i) {
                ds[i] = sigma.coeffs[i] - sigma_prev[i];
                dy[i] = g[i] - g_prev[i];
            }
            const double sy = inner(ds, dy);
            if (sy > 0.0) {
                trial0 = std::clamp(inner(ds, ds) / sy, 1e-12, 1e12);
            } else {
                trial0 = prev_step;
            }
        }

        // The accepted step cannot exceed the first trial, and projection only
        // shrinks the move: if even that is below the stopping tolerance the
        // step-norm criterion is already met.
        const double dnorm = std::sqrt(std::max(0.0, inner(d, d)));
        if (trial0 * dnorm < config.tol) {
            result.termination = Termination::converged;
            break;
        }

        auto cost_of_step = [&](double step) {
            ScalarField trial(space);
            for (std::size_t i = 0; i < n; ++i) {
                trial.coeffs[i] = std::clamp(sigma.coeffs[i] + step * d[i], lo, up);
            }
            return evaluator.cost(trial);
        };

        ArmijoResult ls;
        try {
            ls = armijo_search(cost, gd, cost_of_step, trial0, config.armijo_delta,
                               config.armijo_backtrack, config.max_backtracks);
        } catch (const LineSearchFailureError&) {
            result.termination = Termination::line_search_failure;
            break;
        }
        prev_step = ls.step;

        ScalarField sigma_new(space);
        for (std::size_t i = 0; i < n; ++i) {
            sigma_new.coeffs[i] = std::clamp(sigma.coeffs[i] + ls.step * d[i], lo, up);
        }
        auto ev_new = evaluator.evaluate(sigma_new);

        std::vector<double> step_vec(n);
        for (std::size_t i = 0; i < n; ++i) step_vec[i] = sigma_new.coeffs[i] - sigma.coeffs[i];
        const double step_norm = std::sqrt(std::max(0.0, inner(step_vec, step_vec)));

        const auto beta_opt =
            hager_zhang_beta(ev_new.gradient.coeffs, g, d, inner, config.restart_threshold);
        const double beta = beta_opt.value_or(0.0);

        IterationRecord rec;
        rec.k = k + 1;
        rec.cost = ev_new.cost;
        rec.grad_norm = evaluator.x_norm(ev_new.gradient.coeffs);
        rec.step = ls.step;
        rec.beta = beta;
        rec.backtracks = ls.backtracks;
        rec.active_set_fraction = active_fraction(sigma_new.coeffs, lo, up);
        rec.descent_product = gd;
        rec.restarted = restarted;
        const auto [mn, mx] = std::minmax_element(sigma_new.coeffs.begin(), sigma_new.coeffs.end());
        rec.sigma_min = *mn;
        rec.sigma_max = *mx;
        result.history.push_back(rec);

        sigma_prev = std::move(sigma.coeffs);
        g_prev = g;
        sigma = std::move(sigma_new);
        cost = ev_new.cost;
        g = ev_new.gradient.coeffs;
        for (std::size_t i = 0; i < n; ++i) d[i] = -g[i] + beta * d[i];

        if (step_norm < config.tol) {
            result.termination = Termination::converged;
            break;
        }
    }

    // Projected-gradient stationarity measure at the final iterate.
    std::vector<double> pg(n);
    for (std::size_t i = 0; i < n; ++i) {
        pg[i] = sigma.coeffs[i] - std::clamp(sigma.coeffs[i] - g[i], lo, up);
    }
    result.projected_gradient_measure = std::sqrt(std::max(0.0, inner(pg, pg)));
    result.final_cost = cost;
    result.sigma = std::move(sigma);
    return result;
}

}  // namespace aet
