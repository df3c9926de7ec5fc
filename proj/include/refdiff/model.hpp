#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace refdiff {

// Coefficient families. Every family can be used for μ, σ² or f; validation
// decides whether a given use is admissible.

struct ConstantDrift {
    double mu = 0.0;
    bool operator==(const ConstantDrift&) const = default;
};

/// Mean-reverting drift μ(x) = −a (x − c).
struct OuDrift {
    double a = 1.0;
    double c = 0.0;
    bool operator==(const OuDrift&) const = default;
};

struct ConstantSq {
    double sigma2 = 1.0;
    bool operator==(const ConstantSq&) const = default;
};

/// Piecewise-linear interpolation of samples; xs strictly ascending.
struct SampledGrid {
    std::vector<double> xs;
    std::vector<double> values;
    bool operator==(const SampledGrid&) const = default;
};

struct ConstantCost {
    double value = 0.0;
    bool operator==(const ConstantCost&) const = default;
};

struct ZeroCost {
    bool operator==(const ZeroCost&) const = default;
};

using CoefficientSpec = std::variant<ConstantDrift, OuDrift, ConstantSq, SampledGrid, ConstantCost, ZeroCost>;

/// Value of a coefficient at x. Throws std::out_of_range for a SampledGrid
/// queried outside [xs.front(), xs.back()].
double eval_coefficient(const CoefficientSpec& spec, double x);

/// Exact [min, max] of a coefficient over [lo, hi] (all families are
/// piecewise linear, so extremes sit at endpoints or sample nodes).
std::pair<double, double> coefficient_range(const CoefficientSpec& spec, double lo, double hi);

/// Reflecting barriers at 0 and b_barrier; γ(0)=+1, γ(b)=−1.
struct TwoBarrier {
    double b_barrier = 1.0;
    bool operator==(const TwoBarrier&) const = default;
};

/// Single reflecting barrier at 0, domain [0, ∞).
struct SingleBarrier {
    bool operator==(const SingleBarrier&) const = default;
};

using Domain = std::variant<TwoBarrier, SingleBarrier>;

struct DiffusionModel {
    CoefficientSpec mu = ConstantDrift{0.0};
    CoefficientSpec sigma2 = ConstantSq{1.0};
    Domain domain = TwoBarrier{1.0};

    bool is_two_barrier() const { return std::holds_alternative<TwoBarrier>(domain); }
    /// Upper barrier; throws ValidationError for a single-barrier model.
    double b_barrier() const;

    double drift(double x) const { return eval_coefficient(mu, x); }
    double variance(double x) const { return eval_coefficient(sigma2, x); }

    bool operator==(const DiffusionModel&) const = default;
};

/// A(t) = ∫₀ᵗ f(X(s)) ds + r0 L(t) + rb U(t).
struct AdditiveFunctional {
    CoefficientSpec f = ZeroCost{};
    double r0 = 0.0;
    double rb = 0.0;  // ignored for SingleBarrier
    // On [0, ∞) a linear cost is unbounded; the caller may assert that the
    // truncated problem is what they want.
    bool assert_bounded = false;

    double cost(double x) const { return eval_coefficient(f, x); }

    bool operator==(const AdditiveFunctional&) const = default;
};

struct SolverConfig {
    int grid_points = 4001;
    double quad_tol = 1e-10;
    double root_tol = 1e-12;
    double eig_tol = 1e-10;
    double region_eps = 1e-9;

    bool operator==(const SolverConfig&) const = default;
};

/// Throws ValidationError unless every tolerance is positive and
/// grid_points is odd and at least 3.
void check_config(const SolverConfig& config);

struct ValidationReport {
    std::vector<std::string> violations;

    bool admissible() const { return violations.empty(); }
    std::string summary() const;
};

/// Lists every violated hypothesis (σ² positivity, bounded f, r ≥ 0, domain
/// shape, sampled-grid coverage). Pure; never throws on inadmissible input.
ValidationReport validate(const DiffusionModel& model, const AdditiveFunctional& functional);

/// Throws ValidationError carrying the report summary if the pair is inadmissible.
void require_admissible(const DiffusionModel& model, const AdditiveFunctional& functional);

/// Largest x at which every sampled coefficient of the pair can be evaluated
/// (infinity when none are sampled).
double sampled_extent(const DiffusionModel& model, const AdditiveFunctional& functional);

}  // namespace refdiff
