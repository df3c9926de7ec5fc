#include "refdiff/spectral.hpp"

#include "refdiff/errors.hpp"
#include "refdiff/poisson.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>

namespace refdiff {

namespace {

constexpr double kPi = std::numbers::pi;

// Coefficients of the (h, h′) Prüfer system:
//   φ′      = cos²φ + s sinφ cosφ + (t + λw) sin²φ
//   (ln ρ)′ = sinφ cosφ (1 − t − λw) − s cos²φ
// with s = a′/a = 2μ/σ², w = c/a = 2/σ², t = −q/a = 2θf/σ².
struct PruferSystem {
    std::vector<double> grid;
    std::vector<double> slope;
    std::vector<double> weight;
    std::vector<double> tilt;
    double left_angle = 0.0;   // atan2(1, −θ r0)
    double right_angle = 0.0;  // atan2(1, θ rb)
    double theta = 0.0;
    double r0 = 0.0;
    double rb = 0.0;
};

struct AngleDerivative {
    double angle;
    double log_radius;
};

inline AngleDerivative rhs(double phi, double s, double k) {
    const double sn = std::sin(phi);
    const double cs = std::cos(phi);
    return {cs * cs + s * sn * cs + k * sn * sn, sn * cs * (1.0 - k) - s * cs * cs};
}

PruferSystem make_system(const DiffusionModel& model, const AdditiveFunctional& functional, double theta,
                         const SolverConfig& config) {
    const auto sl = sl_coefficients(model, functional, theta, config);
    PruferSystem sys;
    sys.grid = sl.grid;
    const std::size_t n = sl.grid.size();
    sys.slope.resize(n);
    sys.weight.resize(n);
    sys.tilt.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = sl.grid[i];
        sys.slope[i] = 2.0 * model.drift(x) / model.variance(x);
        sys.weight[i] = sl.sl_density_c[i] / sl.sl_weight_a[i];
        sys.tilt[i] = -sl.sl_potential[i] / sl.sl_weight_a[i];
    }
    sys.theta = theta;
    sys.r0 = functional.r0;
    sys.rb = functional.rb;
    sys.left_angle = std::atan2(1.0, -theta * functional.r0);
    sys.right_angle = std::atan2(1.0, theta * functional.rb);
    return sys;
}

// One RK4 step of width 2Δx from node i to i+2 with midpoint node i+1.
inline void rk4_step(const PruferSystem& sys, double lambda, std::size_t i, double& phi, double& log_rho) {
    const double h = sys.grid[i + 2] - sys.grid[i];
    const double k0 = sys.tilt[i] + lambda * sys.weight[i];
    const double k1 = sys.tilt[i + 1] + lambda * sys.weight[i + 1];
    const double k2 = sys.tilt[i + 2] + lambda * sys.weight[i + 2];
    const auto d1 = rhs(phi, sys.slope[i], k0);
    const auto d2 = rhs(phi + 0.5 * h * d1.angle, sys.slope[i + 1], k1);
    const auto d3 = rhs(phi + 0.5 * h * d2.angle, sys.slope[i + 1], k1);
    const auto d4 = rhs(phi + h * d3.angle, sys.slope[i + 2], k2);
    phi += h / 6.0 * (d1.angle + 2.0 * d2.angle + 2.0 * d3.angle + d4.angle);
    log_rho += h / 6.0 * (d1.log_radius + 2.0 * d2.log_radius + 2.0 * d3.log_radius + d4.log_radius);
}

double terminal_angle(const PruferSystem& sys, double lambda) {
    double phi = sys.left_angle;
    double log_rho = 0.0;
    for (std::size_t i = 0; i + 2 < sys.grid.size(); i += 2) rk4_step(sys, lambda, i, phi, log_rho);
    return phi;
}

// λ whose terminal angle equals right_angle + index·π.
double shoot_eigenvalue(const PruferSystem& sys, const DiffusionModel& model, const AdditiveFunctional& functional,
                        int index, const SolverConfig& config) {
    const double target = sys.right_angle + index * kPi;
    auto mismatch = [&](double lambda) {
        const double m = terminal_angle(sys, lambda) - target;
        if (!std::isfinite(m)) throw SolverError("Prüfer integration produced a non-finite angle");
        return m;
    };

    double sup_f = 0.0;
    double sup_var = 0.0;
    for (double x : sys.grid) {
        sup_f = std::max(sup_f, std::abs(functional.cost(x)));
        sup_var = std::max(sup_var, model.variance(x));
    }
    const double b = sys.grid.back();
    const double base = std::abs(sys.theta) * (sup_f + (functional.r0 + functional.rb) * sup_var / b) + 1.0;
    const double limit = 1e8 * base;

    double lo = -base;
    double hi = base;
    double f_lo = mismatch(lo);
    while (f_lo > 0) {
        lo *= 2.0;
        if (-lo > limit) throw SolverError("could not bracket the eigenvalue from below");
        f_lo = mismatch(lo);
    }
    double f_hi = mismatch(hi);
    while (f_hi < 0) {
        hi *= 2.0;
        if (hi > limit) throw SolverError("could not bracket the eigenvalue from above");
        f_hi = mismatch(hi);
    }

    while (hi - lo > config.eig_tol * (1.0 + std::abs(0.5 * (lo + hi)))) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = mismatch(mid);
        if (f_mid < 0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }

    // Illinois regula falsi inside the final bracket; the angle is smooth and
    // nearly linear in λ at this scale.
    double best = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
    double best_f = std::min(std::abs(f_lo), std::abs(f_hi));
    int side = 0;
    for (int iter = 0; iter < 30 && best_f > 1e-15 && f_hi != f_lo; ++iter) {
        const double x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if (!(x > lo && x < hi)) break;
        const double fx = mismatch(x);
        if (std::abs(fx) < best_f) {
            best = x;
            best_f = std::abs(fx);
        }
        if (fx < 0) {
            lo = x;
            f_lo = fx;
            if (side == -1) f_hi *= 0.5;
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if (side == 1) f_lo *= 0.5;
            side = 1;
        }
    }
    return best;
}

void require_compact(const DiffusionModel& model) {
    if (!model.is_two_barrier()) {
        throw ValidationError("large deviations requires a compact domain (two reflecting barriers)");
    }
}

}  // namespace

std::string_view to_string(RegionTag tag) {
    switch (tag) {
        case RegionTag::R1: return "R1";
        case RegionTag::R2: return "R2";
        case RegionTag::R3: return "R3";
        case RegionTag::R4: return "R4";
        case RegionTag::B1: return "B1";
        case RegionTag::B2: return "B2";
        case RegionTag::Numeric: return "numeric";
    }
    return "unknown";
}

SlCoefficients sl_coefficients(const DiffusionModel& model, const AdditiveFunctional& functional, double theta,
                               const SolverConfig& config) {
    require_compact(model);
    require_admissible(model, functional);
    const auto grid = solver_grid(model, config);
    const auto factor = integrating_factor(model, grid);
    SlCoefficients sl;
    sl.grid = grid;
    const std::size_t n = grid.size();
    sl.sl_weight_a.resize(n);
    sl.sl_potential.resize(n);
    sl.sl_density_c.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::exp(factor.log_scale[i]);
        sl.sl_weight_a[i] = a;
        sl.sl_potential[i] = -2.0 * theta * functional.cost(grid[i]) / factor.sigma2[i] * a;
        sl.sl_density_c[i] = 2.0 / factor.sigma2[i] * a;
    }
    return sl;
}

SpectralSolution solve_principal(const DiffusionModel& model, const AdditiveFunctional& functional, double theta,
                                 const SolverConfig& config) {
    const auto sys = make_system(model, functional, theta, config);

    SpectralSolution out;
    out.theta = theta;
    for (std::size_t i = 0; i < sys.grid.size(); i += 2) out.grid.push_back(sys.grid[i]);

    if (theta == 0.0) {
        out.psi = 0.0;
        out.h_grid.assign(out.grid.size(), 1.0);
        out.region.tag = RegionTag::B1;
        return out;
    }

    const double lambda = shoot_eigenvalue(sys, model, functional, 0, config);
    out.psi = -lambda;
    out.region.tag = RegionTag::Numeric;

    // Reconstruct h = ρ sinφ with h(0) = 1.
    double phi = sys.left_angle;
    double log_rho = -std::log(std::sin(phi));
    out.h_grid.reserve(out.grid.size());
    out.h_grid.push_back(std::exp(log_rho) * std::sin(phi));
    const double start_turns = std::floor(phi / kPi);
    for (std::size_t i = 0; i + 2 < sys.grid.size(); i += 2) {
        rk4_step(sys, lambda, i, phi, log_rho);
        out.h_grid.push_back(std::exp(log_rho) * std::sin(phi));
    }
    out.interior_sign_changes = static_cast<int>(std::floor(phi / kPi) - start_turns);

    const double rho0 = 1.0 / std::sin(sys.left_angle);
    out.bc_residuals.left = std::abs(rho0 * std::cos(sys.left_angle) + theta * functional.r0);
    out.bc_residuals.right = std::exp(log_rho) * std::abs(-std::cos(phi) + theta * functional.rb * std::sin(phi));

    const bool positive = std::all_of(out.h_grid.begin(), out.h_grid.end(), [](double h) { return h > 0; });
    if (!positive || out.interior_sign_changes != 0) {
        throw SolverError("principal eigenfunction is not positive; Prüfer shooting selected the wrong branch");
    }
    return out;
}

double sl_eigenvalue(const DiffusionModel& model, const AdditiveFunctional& functional, double theta,
                     const SolverConfig& config, int index) {
    if (index < 0) throw std::invalid_argument("eigenvalue index must be nonnegative");
    const auto sys = make_system(model, functional, theta, config);
    return shoot_eigenvalue(sys, model, functional, index, config);
}

std::vector<double> default_theta_grid() {
    std::vector<double> thetas(61);
    for (int k = 0; k <= 60; ++k) thetas[static_cast<std::size_t>(k)] = -3.0 + 6.0 * k / 60.0;
    return thetas;
}

int count_convexity_violations(std::span<const double> thetas, std::span<const double> psis) {
    int violations = 0;
    for (std::size_t k = 1; k + 1 < thetas.size(); ++k) {
        const double left = thetas[k] - thetas[k - 1];
        const double right = thetas[k + 1] - thetas[k];
        // Equals ψ_{k+1} − 2ψ_k + ψ_{k−1} on a uniform grid.
        const double second = (left * (psis[k + 1] - psis[k]) - right * (psis[k] - psis[k - 1])) / (0.5 * (left + right));
        if (second < -1e-8 * std::max(1.0, std::abs(psis[k]))) ++violations;
    }
    return violations;
}

namespace {

void check_theta_grid(std::span<const double> thetas) {
    if (thetas.size() < 3) throw std::invalid_argument("θ grid needs at least 3 points");
    for (std::size_t i = 1; i < thetas.size(); ++i) {
        if (!(thetas[i] > thetas[i - 1])) throw std::invalid_argument("θ grid must be strictly ascending");
    }
    if (std::find(thetas.begin(), thetas.end(), 0.0) == thetas.end()) {
        throw std::invalid_argument("θ grid must contain 0");
    }
}

PsiCurve finish_curve(const DiffusionModel& model, const AdditiveFunctional& functional,
                      std::span<const double> thetas, std::vector<double> psis, const SolverConfig& config) {
    PsiCurve curve;
    curve.thetas.assign(thetas.begin(), thetas.end());
    curve.psis = std::move(psis);
    constexpr double step = 1e-3;
    const double up = solve_principal(model, functional, step, config).psi;
    const double down = solve_principal(model, functional, -step, config).psi;
    curve.alpha_check = (up - down) / (2.0 * step);
    curve.convexity_violations = count_convexity_violations(curve.thetas, curve.psis);
    return curve;
}

}  // namespace

PsiCurve psi_curve_serial(const DiffusionModel& model, const AdditiveFunctional& functional,
                          std::span<const double> thetas, const SolverConfig& config) {
    check_theta_grid(thetas);
    std::vector<double> psis(thetas.size());
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        psis[k] = solve_principal(model, functional, thetas[k], config).psi;
    }
    return finish_curve(model, functional, thetas, std::move(psis), config);
}

PsiCurve psi_curve(const DiffusionModel& model, const AdditiveFunctional& functional, std::span<const double> thetas,
                   const SolverConfig& config) {
    check_theta_grid(thetas);
    require_compact(model);
    const auto n = static_cast<std::ptrdiff_t>(thetas.size());
    std::vector<double> psis(thetas.size());
    std::vector<std::exception_ptr> errors(thetas.size());

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        try {
            psis[idx] = solve_principal(model, functional, thetas[idx], config).psi;
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return finish_curve(model, functional, thetas, std::move(psis), config);
}

}  // namespace refdiff
