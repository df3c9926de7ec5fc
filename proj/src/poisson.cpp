#include "refdiff/poisson.hpp"

#include "refdiff/errors.hpp"
#include "refdiff/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace refdiff {

namespace {

double domain_extent(const DiffusionModel& model, double x_max) {
    if (model.is_two_barrier()) return model.b_barrier();
    if (!(x_max > 0) || !std::isfinite(x_max)) {
        throw ValidationError("single-barrier computations need a positive truncation point x_max");
    }
    return x_max;
}

// exp(Λ − max Λ) / σ² on the grid, plus the shift max Λ.
struct SpeedDensity {
    std::vector<double> values;
    double shift = 0.0;
};

SpeedDensity speed_density(const IntegratingFactor& factor) {
    SpeedDensity s;
    s.shift = *std::max_element(factor.log_scale.begin(), factor.log_scale.end());
    s.values.resize(factor.grid.size());
    for (std::size_t i = 0; i < factor.grid.size(); ++i) {
        s.values[i] = std::exp(factor.log_scale[i] - s.shift) / factor.sigma2[i];
    }
    return s;
}

std::vector<double> sample_cost(const AdditiveFunctional& functional, std::span<const double> grid) {
    std::vector<double> f(grid.size());
    std::transform(grid.begin(), grid.end(), f.begin(), [&](double x) { return functional.cost(x); });
    return f;
}

// Relative increment of the speed-measure partial integral over the last step.
double tail_increment(const CumulativeTable& partial) {
    const auto n = partial.values.size();
    const double total = partial.values[n - 1];
    if (!(total > 0)) return 1.0;
    return (partial.values[n - 1] - partial.values[n - 2]) / total;
}

// α from the ratio formula; `rb_weight` is zero for a single barrier.
double alpha_ratio(const IntegratingFactor& factor, const SpeedDensity& speed, std::span<const double> cost,
                   double r0, double rb_weight) {
    std::vector<double> weighted(speed.values.size());
    for (std::size_t i = 0; i < weighted.size(); ++i) weighted[i] = 2.0 * cost[i] * speed.values[i];
    const double numer_integral = definite_integral(weighted, factor.grid);
    const double denom = 2.0 * definite_integral(speed.values, factor.grid);
    double numer = numer_integral;
    if (r0 != 0.0) numer += r0 * std::exp(-speed.shift);
    if (rb_weight != 0.0) numer += rb_weight * std::exp(factor.log_scale.back() - speed.shift);
    return numer / denom;
}

}  // namespace

std::vector<double> solver_grid(const DiffusionModel& model, const SolverConfig& config, double x_max) {
    check_config(config);
    return uniform_grid(0.0, domain_extent(model, x_max), config.grid_points);
}

IntegratingFactor integrating_factor(const DiffusionModel& model, std::span<const double> grid) {
    IntegratingFactor factor;
    factor.grid.assign(grid.begin(), grid.end());
    factor.sigma2.resize(grid.size());
    std::vector<double> ratio(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        factor.sigma2[i] = model.variance(grid[i]);
        ratio[i] = 2.0 * model.drift(grid[i]) / factor.sigma2[i];
    }
    factor.log_scale = cumulative_integral(ratio, grid).values;
    return factor;
}

double compute_alpha_two_barrier(const DiffusionModel& model, const AdditiveFunctional& functional,
                                 const SolverConfig& config) {
    require_admissible(model, functional);
    if (!model.is_two_barrier()) throw ValidationError("compute_alpha_two_barrier needs a two-barrier model");
    const auto grid = solver_grid(model, config);
    const auto factor = integrating_factor(model, grid);
    const auto speed = speed_density(factor);
    const auto cost = sample_cost(functional, grid);
    return alpha_ratio(factor, speed, cost, functional.r0, functional.rb);
}

SingleBarrierAlpha compute_alpha_single_barrier(const DiffusionModel& model, const AdditiveFunctional& functional,
                                                const SolverConfig& config, double x_max) {
    require_admissible(model, functional);
    if (model.is_two_barrier()) throw ValidationError("compute_alpha_single_barrier needs a single-barrier model");
    if (x_max > sampled_extent(model, functional)) {
        throw ValidationError("x_max exceeds the extent of a sampled coefficient");
    }
    const auto grid = solver_grid(model, config, x_max);
    const auto factor = integrating_factor(model, grid);
    const auto speed = speed_density(factor);
    const double increment = tail_increment(cumulative_integral(speed.values, grid));
    if (!(increment < config.quad_tol)) return NonErgodic{x_max, increment};
    const auto cost = sample_cost(functional, grid);
    return alpha_ratio(factor, speed, cost, functional.r0, 0.0);
}

double auto_truncation(const DiffusionModel& model, const AdditiveFunctional& functional, const SolverConfig& config) {
    const double cap = std::min(1e4, sampled_extent(model, functional));
    double last_increment = 1.0;
    for (double x_max = std::min(10.0, cap);; x_max = std::min(2.0 * x_max, cap)) {
        const auto result = compute_alpha_single_barrier(model, functional, config, x_max);
        if (std::holds_alternative<double>(result)) return x_max;
        last_increment = std::get<NonErgodic>(result).relative_increment;
        if (x_max >= cap) break;
    }
    throw NonErgodicError("no stationary distribution: speed-measure integral still growing at x_max=" +
                          std::to_string(cap) + " (relative increment " + std::to_string(last_increment) + ")");
}

UPrime compute_u_prime(const DiffusionModel& model, const AdditiveFunctional& functional, double alpha,
                       const SolverConfig& config, double x_max) {
    require_admissible(model, functional);
    const auto grid = solver_grid(model, config, x_max);
    const auto factor = integrating_factor(model, grid);
    const auto speed = speed_density(factor);
    const auto cost = sample_cost(functional, grid);
    const std::size_t n = grid.size();

    std::vector<double> source(n);
    for (std::size_t i = 0; i < n; ++i) source[i] = 2.0 * (cost[i] - alpha) * speed.values[i];
    const auto running = cumulative_integral(source, grid);

    UPrime out;
    out.grid = grid;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lam = factor.log_scale[i];
        out.values[i] = functional.r0 * std::exp(-lam) + running.values[i] * std::exp(speed.shift - lam);
    }

    out.residuals.bc0 = std::abs(out.values.front() - functional.r0);
    if (model.is_two_barrier()) out.residuals.bcb = std::abs(out.values.back() + functional.rb);

    // μu′ + (σ²/2)u″ − (f − α), with u″ from centered differences.
    const double h = grid[1] - grid[0];
    double sup = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double u2 = (out.values[i + 1] - out.values[i - 1]) / (2.0 * h);
        const double rhs = cost[i] - alpha;
        const double lhs = model.drift(grid[i]) * out.values[i] + 0.5 * factor.sigma2[i] * u2;
        sup = std::max(sup, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
    }
    out.residuals.ode_sup = sup;
    return out;
}

Density stationary_density(const DiffusionModel& model, const SolverConfig& config, double x_max) {
    const auto grid = solver_grid(model, config, x_max);
    const auto factor = integrating_factor(model, grid);
    auto speed = speed_density(factor);
    const auto partial = cumulative_integral(speed.values, grid);
    if (!model.is_two_barrier()) {
        const double increment = tail_increment(partial);
        if (!(increment < config.quad_tol)) {
            throw NonErgodicError("no stationary distribution: speed-measure integral still growing at x_max=" +
                                  std::to_string(x_max));
        }
    }
    const double mass = partial.total();
    for (auto& v : speed.values) v /= mass;
    return Density{grid, std::move(speed.values)};
}

double compute_eta2(const DiffusionModel& model, const UPrime& u_prime, const Density& density) {
    if (u_prime.grid != density.grid || u_prime.values.size() != u_prime.grid.size() ||
        density.values.size() != density.grid.size()) {
        throw std::invalid_argument("u′ and density must share one solver grid");
    }
    std::vector<double> integrand(u_prime.grid.size());
    for (std::size_t i = 0; i < integrand.size(); ++i) {
        const double up = u_prime.values[i];
        integrand[i] = up * up * model.variance(u_prime.grid[i]) * density.values[i];
    }
    return std::max(0.0, definite_integral(integrand, u_prime.grid));
}

PoissonSolution solve_poisson(const DiffusionModel& model, const AdditiveFunctional& functional,
                              const SolverConfig& config, double x_max) {
    double alpha = 0.0;
    if (model.is_two_barrier()) {
        alpha = compute_alpha_two_barrier(model, functional, config);
    } else {
        const auto result = compute_alpha_single_barrier(model, functional, config, x_max);
        if (const auto* bad = std::get_if<NonErgodic>(&result)) {
            throw NonErgodicError("no stationary distribution: speed-measure integral still growing at x_max=" +
                                  std::to_string(bad->x_max));
        }
        alpha = std::get<double>(result);
    }
    auto up = compute_u_prime(model, functional, alpha, config, x_max);
    auto density = stationary_density(model, config, x_max);

    PoissonSolution out;
    out.alpha = alpha;
    out.eta2 = compute_eta2(model, up, density);
    out.grid = std::move(up.grid);
    out.u_prime = std::move(up.values);
    out.density = std::move(density.values);
    out.residuals = up.residuals;
    return out;
}

}  // namespace refdiff
