#pragma once

// Scaled cumulant generating function ψ(θ) = lim (1/t) log E exp(θA(t)) as
// minus the principal eigenvalue of the tilted Sturm–Liouville problem
//
//   −(a h′)′ + q h = λ c h,   h′(0) = −θ r0 h(0),   h′(b) = θ rb h(b),
//
// with a = e^Λ, q = −(2θf/σ²) e^Λ, c = (2/σ²) e^Λ and ψ = −λ₁.

#include "refdiff/model.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace refdiff {

struct SlCoefficients {
    std::vector<double> grid;
    std::vector<double> sl_weight_a;
    std::vector<double> sl_potential;
    std::vector<double> sl_density_c;
};

/// Throws ValidationError for single-barrier models (large deviations need a
/// compact domain).
SlCoefficients sl_coefficients(const DiffusionModel& model, const AdditiveFunctional& functional, double theta,
                               const SolverConfig& config);

enum class RegionTag { R1, R2, R3, R4, B1, B2, Numeric };

std::string_view to_string(RegionTag tag);

struct RbmRegion {
    RegionTag tag = RegionTag::Numeric;
    std::optional<double> auxiliary_root;  // β for R1/R3, ξ for R2/R4
};

struct BoundaryResiduals {
    double left = 0.0;   // |h′(0) + θ r0 h(0)|
    double right = 0.0;  // |−h′(b) + θ rb h(b)|
};

struct SpectralSolution {
    double theta = 0.0;
    double psi = 0.0;
    std::vector<double> grid;    // nodes where h is sampled
    std::vector<double> h_grid;  // h(0) = 1
    int interior_sign_changes = 0;
    BoundaryResiduals bc_residuals;
    RbmRegion region;
};

/// Principal eigenpair by Prüfer shooting plus bisection on λ.
///
/// The Prüfer angle is taken for (h, h′), i.e. the modified transformation
/// with scale function a(x); it is strictly increasing in λ and crosses
/// multiples of π only upwards, so the principal eigenvalue is the unique λ
/// whose terminal angle matches the right Robin angle without an extra
/// half-turn. RK4 runs with step 2Δx so that midpoints fall on grid nodes;
/// h is therefore returned on the even-indexed nodes.
///
/// θ = 0 returns ψ = 0, h ≡ 1 directly. Throws SolverError if the λ bracket
/// cannot be established or the converged eigenfunction is not positive.
SpectralSolution solve_principal(const DiffusionModel& model, const AdditiveFunctional& functional, double theta,
                                 const SolverConfig& config);

/// λ_{index+1} of the same problem (index 0 is the principal eigenvalue).
double sl_eigenvalue(const DiffusionModel& model, const AdditiveFunctional& functional, double theta,
                     const SolverConfig& config, int index);

/// Region of parameter space for reflected Brownian motion with r0 = 0,
/// rb = 1, f = 0. Points within region_eps (relative) of θ = 0 or of the
/// B2 manifold are routed to B1 / B2.
RbmRegion classify_rbm_region(double theta, double mu, double sigma2, double b_barrier, double region_eps);

/// Closed-form ψ(θ) and h_θ for reflected Brownian motion with r0 = 0,
/// rb = 1, f = 0, solving the region's transcendental equation by bisection.
SpectralSolution rbm_closed_form_psi(double theta, double mu, double sigma2, double b_barrier,
                                     const SolverConfig& config = {});

/// Same, extracting parameters from a model; throws ValidationError unless
/// the model is a constant-coefficient two-barrier RBM with f = 0, r0 = 0,
/// rb = 1.
SpectralSolution rbm_closed_form_psi(const DiffusionModel& model, const AdditiveFunctional& functional, double theta,
                                     const SolverConfig& config = {});

struct PsiCurve {
    std::vector<double> thetas;
    std::vector<double> psis;
    double alpha_check = 0.0;  // central difference of ψ at 0, step 1e-3
    int convexity_violations = 0;
};

/// 61 points on [−3, 3].
std::vector<double> default_theta_grid();

/// ψ on an ascending grid containing 0. θ points are solved in parallel
/// with OpenMP; the result is identical to psi_curve_serial.
PsiCurve psi_curve(const DiffusionModel& model, const AdditiveFunctional& functional, std::span<const double> thetas,
                   const SolverConfig& config);

/// Serial reference for psi_curve.
PsiCurve psi_curve_serial(const DiffusionModel& model, const AdditiveFunctional& functional,
                          std::span<const double> thetas, const SolverConfig& config);

/// Number of points whose normalized second difference falls below
/// −1e-8·max(1, |ψ|).
int count_convexity_violations(std::span<const double> thetas, std::span<const double> psis);

}  // namespace refdiff
