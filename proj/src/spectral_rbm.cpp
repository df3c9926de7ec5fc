// Closed-form ψ(θ), h_θ for two-sided reflected Brownian motion with r0 = 0,
// rb = 1 and f = 0: h solves (σ²/2)h″ + μh′ = ψh, h′(0) = 0, h′(b) = θh(b).

#include "refdiff/errors.hpp"
#include "refdiff/poisson.hpp"
#include "refdiff/quadrature.hpp"
#include "refdiff/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace refdiff {

namespace {

// Bisection for g(lo) < 0 < g(hi); g may be infinite at an end point.
template <class F>
double bisect(F&& g, double lo, double hi, double tol) {
    for (int iter = 0; iter < 400; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi || hi - lo <= tol * std::max(1.0, std::abs(mid))) return mid;
        if (g(mid) < 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// (1/β) log[(β−μ)(β+μ+θσ²) / ((β+μ)(β−μ−θσ²))] − 2b/σ², written with log1p:
// the ratio minus one is 2βθσ² / ((β+μ)(β−μ−θσ²)).
double hyperbolic_equation(double beta, double theta, double mu, double sigma2, double b) {
    const double ts = theta * sigma2;
    const double denom = (beta + mu) * (beta - mu - ts);
    return std::log1p(2.0 * beta * ts / denom) / beta - 2.0 * b / sigma2;
}

// bξ/σ² − arccos[(ξ² + m) / √((ξ² + m)² + ξ²θ²σ⁴)], m = μ(μ+θσ²); for θ < 0
// the arccos equals atan2(−θσ²ξ, ξ² + m).
double trigonometric_equation(double xi, double theta, double mu, double sigma2, double b) {
    const double m = mu * (mu + theta * sigma2);
    return b * xi / sigma2 - std::atan2(-theta * sigma2 * xi, xi * xi + m);
}

}  // namespace

RbmRegion classify_rbm_region(double theta, double mu, double sigma2, double b, double region_eps) {
    const double speed = std::max(std::abs(mu), sigma2 / b);
    if (std::abs(theta) * sigma2 <= region_eps * speed) return {RegionTag::B1, std::nullopt};
    if (theta > 0) return {RegionTag::R1, std::nullopt};
    const double m = mu * (mu + theta * sigma2);
    if (m <= 0) return {RegionTag::R2, std::nullopt};
    const double gap = b * m + theta * sigma2 * sigma2;
    const double scale = b * std::abs(m) + std::abs(theta) * sigma2 * sigma2;
    if (std::abs(gap) <= region_eps * scale) return {RegionTag::B2, std::nullopt};
    return {gap > 0 ? RegionTag::R3 : RegionTag::R4, std::nullopt};
}

SpectralSolution rbm_closed_form_psi(double theta, double mu, double sigma2, double b, const SolverConfig& config) {
    if (!(sigma2 > 0) || !(b > 0)) throw ValidationError("rbm_closed_form_psi needs σ² > 0 and b > 0");
    check_config(config);

    SpectralSolution out;
    out.theta = theta;
    out.region = classify_rbm_region(theta, mu, sigma2, b, config.region_eps);

    std::function<double(double)> h;
    std::function<double(double)> dh;
    const double s = sigma2;
    switch (out.region.tag) {
        case RegionTag::B1:
            out.psi = 0.0;
            h = [](double) { return 1.0; };
            dh = [](double) { return 0.0; };
            break;
        case RegionTag::B2:
            out.psi = -mu * mu / (2.0 * s);
            h = [=](double x) { return std::exp(-mu * x / s) * (mu * x / s + 1.0); };
            dh = [=](double x) { return -std::exp(-mu * x / s) * mu * mu * x / (s * s); };
            break;
        case RegionTag::R1:
        case RegionTag::R3: {
            auto g = [&](double beta) { return hyperbolic_equation(beta, theta, mu, s, b); };
            double beta = 0.0;
            if (out.region.tag == RegionTag::R1) {
                const double lo = std::max(std::abs(mu), std::abs(mu + theta * s));
                double hi = 2.0 * lo + 1.0;
                while (g(hi) > 0) hi *= 2.0;
                // g → +∞ at lo and decreases to −2b/σ²: reversed orientation.
                beta = bisect([&](double x) { return -g(x); }, lo, hi, config.root_tol);
            } else {
                const double hi = std::min(std::abs(mu), std::abs(mu + theta * s));
                beta = bisect(g, 0.0, hi, config.root_tol);
            }
            out.region.auxiliary_root = beta;
            out.psi = (beta * beta - mu * mu) / (2.0 * s);
            h = [=](double x) {
                return std::exp(-mu * x / s) / (2.0 * beta) *
                       ((beta - mu) * std::exp(-beta * x / s) + (beta + mu) * std::exp(beta * x / s));
            };
            dh = [=](double x) {
                return (beta * beta - mu * mu) / (2.0 * beta * s) * std::exp(-mu * x / s) *
                       (std::exp(beta * x / s) - std::exp(-beta * x / s));
            };
            break;
        }
        case RegionTag::R2:
        case RegionTag::R4: {
            auto g = [&](double xi) { return trigonometric_equation(xi, theta, mu, s, b); };
            const double xi = bisect(g, 0.0, std::numbers::pi * s / b, config.root_tol);
            out.region.auxiliary_root = xi;
            out.psi = -(xi * xi + mu * mu) / (2.0 * s);
            h = [=](double x) {
                return std::exp(-mu * x / s) * (std::cos(xi * x / s) + mu / xi * std::sin(xi * x / s));
            };
            dh = [=](double x) { return -std::exp(-mu * x / s) * (mu * mu + xi * xi) / (xi * s) * std::sin(xi * x / s); };
            break;
        }
        case RegionTag::Numeric:
            break;
    }

    // Same node set as solve_principal: even nodes of the solver grid.
    const auto full = uniform_grid(0.0, b, config.grid_points);
    for (std::size_t i = 0; i < full.size(); i += 2) {
        out.grid.push_back(full[i]);
        out.h_grid.push_back(h(full[i]));
    }
    for (std::size_t i = 1; i < out.h_grid.size(); ++i) {
        if ((out.h_grid[i] > 0) != (out.h_grid[i - 1] > 0)) ++out.interior_sign_changes;
    }
    out.bc_residuals.left = std::abs(dh(0.0));
    out.bc_residuals.right = std::abs(-dh(b) + theta * h(b));
    return out;
}

SpectralSolution rbm_closed_form_psi(const DiffusionModel& model, const AdditiveFunctional& functional, double theta,
                                     const SolverConfig& config) {
    const auto* drift = std::get_if<ConstantDrift>(&model.mu);
    const auto* var = std::get_if<ConstantSq>(&model.sigma2);
    if (drift == nullptr || var == nullptr || !model.is_two_barrier()) {
        throw ValidationError("closed-form ψ needs a constant-coefficient two-barrier model");
    }
    const bool zero_cost = std::holds_alternative<ZeroCost>(functional.f) ||
                           (std::holds_alternative<ConstantCost>(functional.f) &&
                            std::get<ConstantCost>(functional.f).value == 0.0);
    if (!zero_cost || functional.r0 != 0.0 || functional.rb != 1.0) {
        throw ValidationError("closed-form ψ covers only f = 0, r0 = 0, rb = 1; use solve_principal");
    }
    return rbm_closed_form_psi(theta, drift->mu, var->sigma2, model.b_barrier(), config);
}

}  // namespace refdiff
