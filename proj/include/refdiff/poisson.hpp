#pragma once

// Law-of-large-numbers and CLT constants for one-dimensional reflecting
// diffusions: α, u′, the stationary density p and η², all computed from the
// integrating factor exp(Λ), Λ(x) = ∫₀ˣ 2μ/σ².

#include "refdiff/model.hpp"

#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace refdiff {

/// Λ and σ² sampled on a solver grid.
struct IntegratingFactor {
    std::vector<double> grid;
    std::vector<double> log_scale;  // Λ(x)
    std::vector<double> sigma2;
};

/// Uniform grid with config.grid_points nodes on [0, b] (two barriers) or
/// [0, x_max] (single barrier; x_max must then be positive).
std::vector<double> solver_grid(const DiffusionModel& model, const SolverConfig& config, double x_max = 0.0);

IntegratingFactor integrating_factor(const DiffusionModel& model, std::span<const double> grid);

struct PoissonResiduals {
    double ode_sup = 0.0;  // sup |μu′ + σ²u″/2 − (f−α)| / (1 + |f−α|) over interior nodes
    double bc0 = 0.0;      // |u′(0) − r0|
    double bcb = 0.0;      // |u′(b) + rb|, two barriers only
};

struct UPrime {
    std::vector<double> grid;
    std::vector<double> values;
    PoissonResiduals residuals;
};

struct Density {
    std::vector<double> grid;
    std::vector<double> values;
};

struct PoissonSolution {
    double alpha = 0.0;
    std::vector<double> grid;
    std::vector<double> u_prime;
    std::vector<double> density;
    double eta2 = 0.0;
    PoissonResiduals residuals;
};

/// Returned instead of α when the single-barrier speed measure does not
/// converge on [0, x_max].
struct NonErgodic {
    double x_max = 0.0;
    double relative_increment = 0.0;  // of the partial integral over the last grid step
};

using SingleBarrierAlpha = std::variant<double, NonErgodic>;

double compute_alpha_two_barrier(const DiffusionModel& model, const AdditiveFunctional& functional,
                                 const SolverConfig& config);

/// α with the improper integrals truncated at x_max. The partial integral of
/// e^Λ/σ² is declared convergent when its relative increment over the final
/// grid step falls below quad_tol; otherwise NonErgodic is returned.
SingleBarrierAlpha compute_alpha_single_barrier(const DiffusionModel& model, const AdditiveFunctional& functional,
                                                const SolverConfig& config, double x_max);

/// Smallest x_max = 10·2^k (capped at 1e4 and at any sampled-coefficient
/// extent) at which the convergence test passes. Throws NonErgodicError
/// if none does.
double auto_truncation(const DiffusionModel& model, const AdditiveFunctional& functional, const SolverConfig& config);

/// u′ on the solver grid from the integrating-factor formula with u′(0)=r0.
/// x_max is used only for single-barrier models.
UPrime compute_u_prime(const DiffusionModel& model, const AdditiveFunctional& functional, double alpha,
                       const SolverConfig& config, double x_max = 0.0);

/// Normalized stationary density. Throws NonErgodicError for a divergent
/// single-barrier model.
Density stationary_density(const DiffusionModel& model, const SolverConfig& config, double x_max = 0.0);

/// η² = ∫ u′² σ² p. Throws std::invalid_argument if the grids differ.
double compute_eta2(const DiffusionModel& model, const UPrime& u_prime, const Density& density);

/// α → u′ → p → η² in one call. Throws NonErgodicError for a divergent
/// single-barrier model, ValidationError for an inadmissible one.
PoissonSolution solve_poisson(const DiffusionModel& model, const AdditiveFunctional& functional,
                              const SolverConfig& config, double x_max = 0.0);

// Closed forms for f = 0 (reflected Brownian motion and reflected OU).

struct RbmPoissonClosedForm {
    double alpha = 0.0;
    /// For μ≠0 this is the three-term display evaluated directly; the generic
    /// pipeline always reports η² by quadrature.
    double eta2 = 0.0;
    bool drift_free = false;  // μ=0 formulas used (|μ|b/σ² < region_eps)
    std::function<double(double)> u_prime;
    std::function<double(double)> density;
};

RbmPoissonClosedForm closed_form_rbm(double mu, double sigma2, double b_barrier, double r0, double rb,
                                     double region_eps = 1e-9);

struct OuPoissonClosedForm {
    double alpha = 0.0;
    std::function<double(double)> u_prime;
    std::function<double(double)> density;
};

/// μ(x) = −a(x−c); α and u′ via Gaussian integrals, p a truncated normal.
OuPoissonClosedForm closed_form_ou(double a, double c, double sigma2, double b_barrier, double r0, double rb);

}  // namespace refdiff
