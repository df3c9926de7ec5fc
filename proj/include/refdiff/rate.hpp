#pragma once

// Legendre–Fenchel transform of a sampled ψ curve: I(y) = sup_θ [θy − ψ(θ)].

#include "refdiff/model.hpp"
#include "refdiff/spectral.hpp"

#include <memory>
#include <span>
#include <vector>

namespace refdiff {

/// Smooth interpolant of a sampled ψ curve (Floater–Hormann rational
/// interpolation, order 3). Only ever evaluated inside the sampled range.
class PsiInterpolant {
public:
    explicit PsiInterpolant(const PsiCurve& curve);
    ~PsiInterpolant();
    PsiInterpolant(PsiInterpolant&&) noexcept;
    PsiInterpolant& operator=(PsiInterpolant&&) noexcept;

    double operator()(double theta) const;
    double slope(double theta) const;

    double theta_min() const { return thetas_.front(); }
    double theta_max() const { return thetas_.back(); }
    const std::vector<double>& thetas() const { return thetas_; }
    const std::vector<double>& psis() const { return psis_; }

private:
    struct Impl;
    std::vector<double> thetas_;
    std::vector<double> psis_;
    std::unique_ptr<Impl> impl_;
};

struct LegendrePoint {
    double value = 0.0;
    double arg_theta = 0.0;
    /// Maximizer sits on a grid endpoint: value is only a lower bound.
    bool boundary_flag = false;
};

/// Grid maximizer of θy − ψ(θ), refined by golden section on the two
/// neighbouring intervals (stopping at root_tol). Ties on the grid go to the
/// node closest to θ = 0. Throws std::invalid_argument if the curve has
/// convexity violations.
LegendrePoint legendre(const PsiCurve& psi, double y, const SolverConfig& config = {});
LegendrePoint legendre(const PsiInterpolant& psi, double y, const SolverConfig& config = {});

struct TailExponent {
    double exponent = 0.0;
    double theta_z = 0.0;
};

/// θ_z z − ψ(θ_z) with ψ′(θ_z) = z found by bisection on the interpolant's
/// slope. Throws std::out_of_range if z lies outside [ψ′(θ_min), ψ′(θ_max)].
TailExponent tail_exponent(const PsiCurve& psi, double z, const SolverConfig& config = {});
TailExponent tail_exponent(const PsiInterpolant& psi, double z, const SolverConfig& config = {});

struct RateFunction {
    std::vector<double> ys;
    std::vector<double> values;
    std::vector<double> arg_thetas;
    std::vector<bool> domain_flags;  // y outside the slope range of ψ on the grid
};

RateFunction rate_function(const PsiCurve& psi, std::span<const double> ys, const SolverConfig& config = {});

/// `count` equally spaced y values strictly inside (ψ′(θ_min), ψ′(θ_max)).
std::vector<double> default_rate_points(const PsiCurve& psi, int count);

}  // namespace refdiff
