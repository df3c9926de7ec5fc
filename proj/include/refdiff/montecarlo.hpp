#pragma once

// Monte Carlo oracle: Euler–Maruyama for the reflected SDE
//   dX = μ(X)dt + σ(X)dB + dL − dU
// with A(t) = ∫ f(X) ds + r0 L(t) + rb U(t) accumulated along each path.

#include "refdiff/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace refdiff {

enum class ReflectionScheme {
    /// Project the Euler proposal back onto the domain; the overshoot is the
    /// local-time increment. Carries an O(√dt) boundary bias.
    Projection,
    /// Euler proposal with coefficients frozen over the step, local time from
    /// the sampled extremum of the conditional Brownian bridge (exact
    /// Skorokhod map for a single barrier and constant coefficients).
    BrownianBridge,
};

std::string_view to_string(ReflectionScheme scheme);
ReflectionScheme reflection_scheme_from_string(std::string_view name);

struct McConfig {
    double dt = 1e-4;
    double horizon_t = 100.0;
    std::int64_t replications = 100;
    std::uint64_t seed = 0;
    double x0 = 0.0;
    int batch_count = 32;
    int histogram_bins = 20;
    double histogram_upper = 10.0;  // right edge of the histogram for single-barrier models
    ReflectionScheme scheme = ReflectionScheme::BrownianBridge;

    bool operator==(const McConfig&) const = default;
};

/// Throws ValidationError for non-positive dt/horizon, dt > horizon, x0
/// outside the domain, fewer than 2 replications, or (two barriers) a step
/// so coarse that √(σ²_max dt) exceeds b/10.
void check_mc_config(const DiffusionModel& model, const McConfig& mc);

struct PathRecord {
    double a_final = 0.0;    // A(t)
    double a_per_time = 0.0;  // A(t)/t
    double l_final = 0.0;
    double u_final = 0.0;
    double x_final = 0.0;
    std::vector<std::uint64_t> occupation;  // step counts per histogram bin
};

/// State after each step; used to check path-level invariants.
struct PathState {
    double x = 0.0;
    double l = 0.0;
    double u = 0.0;
    double a = 0.0;         // running A
    double cost_sum = 0.0;  // Σ f(X) over the steps taken so far
};

/// Steps actually taken: ceil(horizon_t / dt); the effective step is horizon_t / steps.
std::int64_t step_count(const McConfig& mc);

/// One path keyed by replication_index. Normals and bridge uniforms for step
/// n come from the Philox block (seed; replication_index, n/2), so a path does
/// not depend on which thread runs it or in what order.
PathRecord simulate_path(const DiffusionModel& model, const AdditiveFunctional& functional, const McConfig& mc,
                         std::uint64_t replication_index);

/// Every state of a path (including the start); for short horizons only.
std::vector<PathState> trace_path(const DiffusionModel& model, const AdditiveFunctional& functional,
                                  const McConfig& mc, std::uint64_t replication_index);

/// All replications, OpenMP-parallel over paths.
std::vector<PathRecord> simulate_replications(const DiffusionModel& model, const AdditiveFunctional& functional,
                                              const McConfig& mc);

/// Serial reference for simulate_replications.
std::vector<PathRecord> simulate_replications_serial(const DiffusionModel& model,
                                                     const AdditiveFunctional& functional, const McConfig& mc);

struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct CgfPoint {
    double theta = 0.0;
    double value = 0.0;
    double se = 0.0;
    double top_weight_fraction = 0.0;  // largest single replication weight / total
    bool unreliable = false;           // top_weight_fraction > 0.5
};

struct Histogram {
    std::vector<double> edges;
    std::vector<double> density;
};

struct McDiagnostics {
    double dt = 0.0;  // effective step
    double horizon = 0.0;
    std::int64_t replications = 0;
    std::uint64_t seed = 0;
    ReflectionScheme scheme = ReflectionScheme::BrownianBridge;
};

struct McEstimate {
    Estimate alpha;
    Estimate eta2;
    std::optional<Estimate> eta2_batch_means;
    Histogram occupation;
    std::vector<CgfPoint> cgf;
    McDiagnostics diagnostics;
};

/// α̂ = mean A(t)/t, η̂² = sample variance of t^{−1/2}(A(t) − α̂t), pooled
/// occupation density, and (batch_count ≥ 2) a batch-means η̂² from one
/// extra path of the same horizon.
McEstimate estimate_lln_clt(const DiffusionModel& model, const AdditiveFunctional& functional, const McConfig& mc);

/// As estimate_lln_clt plus (1/t) log mean exp(θA(t)) for each θ, computed
/// in log-sum-exp form with a delta-method standard error.
McEstimate estimate_scaled_cgf(const DiffusionModel& model, const AdditiveFunctional& functional,
                               const McConfig& mc, std::span<const double> thetas);

/// Aggregation used by both estimators, exposed for tests.
McEstimate summarize_paths(const DiffusionModel& model, const AdditiveFunctional& functional, const McConfig& mc,
                           std::span<const PathRecord> paths, std::span<const double> thetas);

CgfPoint empirical_cgf(std::span<const PathRecord> paths, double theta, double horizon);

/// Batch-means η² from one path of length horizon_t cut into batch_count batches.
Estimate batch_means_eta2(const DiffusionModel& model, const AdditiveFunctional& functional, const McConfig& mc);

}  // namespace refdiff
