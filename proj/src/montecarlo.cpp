#include "refdiff/montecarlo.hpp"

#include "refdiff/errors.hpp"
#include "refdiff/philox.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <string>

namespace refdiff {

namespace {

constexpr std::uint64_t kBatchStream = std::numeric_limits<std::uint64_t>::max();

// Bridge extremum is sampled only when the crossing probability
// exp(−2 d₀ d₁ / (σ²dt)) exceeds e^{−40}.
constexpr double kBridgeCutoff = 40.0;

// Affine coefficients (all parametric families) skip the variant dispatch.
struct FastCoefficient {
    const CoefficientSpec* spec = nullptr;
    bool affine = true;
    double c0 = 0.0;
    double c1 = 0.0;

    double operator()(double x) const {
        if (affine) return c0 + c1 * x;
        const auto& g = std::get<SampledGrid>(*spec);
        if (x > g.xs.back()) throw SolverError("path left the range of a sampled coefficient");
        return eval_coefficient(*spec, x);
    }
};

FastCoefficient compile(const CoefficientSpec& spec) {
    FastCoefficient c;
    c.spec = &spec;
    if (std::holds_alternative<SampledGrid>(spec)) {
        c.affine = false;
    } else if (const auto* ou = std::get_if<OuDrift>(&spec)) {
        c.c0 = ou->a * ou->c;
        c.c1 = -ou->a;
    } else {
        c.c0 = eval_coefficient(spec, 0.0);
    }
    return c;
}

// Neumaier compensated summation.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    double value() const { return sum + carry; }
};

struct PathSetup {
    FastCoefficient drift;
    FastCoefficient variance;
    FastCoefficient cost;
    bool two_barrier = true;
    double b = 0.0;
    double r0 = 0.0;
    double rb = 0.0;
    bool constant_cost = false;
    double hist_upper = 1.0;
    int bins = 1;
};

PathSetup prepare(const DiffusionModel& model, const AdditiveFunctional& functional, const McConfig& mc) {
    PathSetup s;
    s.drift = compile(model.mu);
    s.variance = compile(model.sigma2);
    s.cost = compile(functional.f);
    s.two_barrier = model.is_two_barrier();
    s.b = s.two_barrier ? model.b_barrier() : std::numeric_limits<double>::infinity();
    s.r0 = functional.r0;
    s.rb = s.two_barrier ? functional.rb : 0.0;
    s.constant_cost = s.cost.affine && s.cost.c1 == 0.0;
    s.hist_upper = s.two_barrier ? s.b : mc.histogram_upper;
    s.bins = mc.histogram_bins;
    return s;
}

template <class Observer>
PathRecord run_path(const PathSetup& s, const McConfig& mc, std::uint64_t rep, Observer&& observe) {
    const std::int64_t n = step_count(mc);
    const double dt = mc.horizon_t / static_cast<double>(n);
    const double bin_width = s.hist_upper / s.bins;

    PathRecord rec;
    rec.occupation.assign(static_cast<std::size_t>(s.bins), 0);
    double x = mc.x0;
    double local_lo = 0.0;
    double local_hi = 0.0;
    CompensatedSum cost_sum;
    std::int64_t taken = 0;

    auto step = [&](double z, std::uint32_t word) {
        if (!s.constant_cost) cost_sum.add(s.cost(x));
        if (x < s.hist_upper) {
            const auto bin = std::min(static_cast<int>(x / bin_width), s.bins - 1);
            ++rec.occupation[static_cast<std::size_t>(bin)];
        }
        const double var_dt = s.variance(x) * dt;
        double y = x + s.drift(x) * dt + std::sqrt(var_dt) * z;
        double d_lo = 0.0;
        double d_hi = 0.0;
        if (mc.scheme == ReflectionScheme::Projection) {
            if (y < 0.0) {
                d_lo = -y;
                y = 0.0;
            } else if (y > s.b) {
                d_hi = y - s.b;
                y = s.b;
            }
        } else {
            const bool near_lower = !s.two_barrier || x + y < s.b;
            if (near_lower) {
                if (y <= 0.0 || 2.0 * x * y < kBridgeCutoff * var_dt) {
                    const double spread = std::sqrt((y - x) * (y - x) - 2.0 * var_dt * std::log(Philox4x32::to_unit(word)));
                    const double minimum = 0.5 * (x + y - spread);
                    if (minimum < 0.0) {
                        d_lo = -minimum;
                        y += d_lo;
                    }
                }
            } else {
                const double xb = s.b - x;
                const double yb = s.b - y;
                if (yb <= 0.0 || 2.0 * xb * yb < kBridgeCutoff * var_dt) {
                    const double spread = std::sqrt((y - x) * (y - x) - 2.0 * var_dt * std::log(Philox4x32::to_unit(word)));
                    const double maximum = 0.5 * (x + y + spread);
                    if (maximum > s.b) {
                        d_hi = maximum - s.b;
                        y -= d_hi;
                    }
                }
            }
            // Both barriers within one step: only possible when b is a few √(σ²dt).
            if (y < 0.0) {
                d_lo += -y;
                y = 0.0;
            } else if (y > s.b) {
                d_hi += y - s.b;
                y = s.b;
            }
        }
        local_lo += d_lo;
        local_hi += d_hi;
        x = y;
        ++taken;
        const double sum_f = s.constant_cost ? s.cost.c0 * static_cast<double>(taken) : cost_sum.value();
        observe(PathState{x, local_lo, local_hi, dt * sum_f + s.r0 * local_lo + s.rb * local_hi, sum_f});
    };

    for (std::int64_t k = 0; k < n; k += 2) {
        const auto w = Philox4x32::draw(mc.seed, rep, static_cast<std::uint64_t>(k / 2));
        const double radius = std::sqrt(-2.0 * std::log(Philox4x32::to_unit(w[0])));
        const double angle = 2.0 * std::numbers::pi * Philox4x32::to_unit(w[1]);
        step(radius * std::cos(angle), w[2]);
        if (k + 1 < n) step(radius * std::sin(angle), w[3]);
    }

    const double mean_cost = s.constant_cost ? s.cost.c0 : cost_sum.value() / static_cast<double>(n);
    rec.l_final = local_lo;
    rec.u_final = local_hi;
    rec.x_final = x;
    rec.a_per_time = mean_cost + (s.r0 * local_lo + s.rb * local_hi) / mc.horizon_t;
    rec.a_final = rec.a_per_time * mc.horizon_t;
    return rec;
}

template <class Loop>
std::vector<PathRecord> collect(const DiffusionModel& model, const AdditiveFunctional& functional, const McConfig& mc,
                                Loop&& loop) {
    require_admissible(model, functional);
    check_mc_config(model, mc);
    const auto setup = prepare(model, functional, mc);
    std::vector<PathRecord> paths(static_cast<std::size_t>(mc.replications));
    std::vector<std::exception_ptr> errors(paths.size());
    loop([&](std::size_t i) {
        try {
            paths[i] = run_path(setup, mc, i, [](const PathState&) {});
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return paths;
}

}  // namespace

std::string_view to_string(ReflectionScheme scheme) {
    return scheme == ReflectionScheme::Projection ? "projection" : "brownian_bridge";
}

ReflectionScheme reflection_scheme_from_string(std::string_view name) {
    if (name == "projection") return ReflectionScheme::Projection;
    if (name == "brownian_bridge") return ReflectionScheme::BrownianBridge;
    throw ValidationError("unknown reflection scheme: " + std::string(name));
}

std::int64_t step_count(const McConfig& mc) {
    return static_cast<std::int64_t>(std::ceil(mc.horizon_t / mc.dt - 1e-9));
}

void check_mc_config(const DiffusionModel& model, const McConfig& mc) {
    if (!(mc.dt > 0) || !(mc.horizon_t > 0) || mc.dt > mc.horizon_t) {
        throw ValidationError("Monte Carlo needs 0 < dt <= horizon_t");
    }
    if (mc.replications < 2) throw ValidationError("Monte Carlo needs at least 2 replications");
    if (mc.histogram_bins < 1) throw ValidationError("histogram needs at least one bin");
    const double hi = model.is_two_barrier() ? model.b_barrier() : std::numeric_limits<double>::infinity();
    if (!(mc.x0 >= 0.0 && mc.x0 <= hi)) throw ValidationError("x0 must lie in the domain");
    if (!model.is_two_barrier() && !(mc.histogram_upper > 0)) {
        throw ValidationError("histogram_upper must be positive");
    }
    if (model.is_two_barrier()) {
        const double var_max = coefficient_range(model.sigma2, 0.0, hi).second;
        if (std::sqrt(var_max * mc.dt) > hi / 10.0) {
            throw ValidationError("time step too coarse for the barrier spacing (need √(σ²dt) <= b/10)");
        }
    }
}

PathRecord simulate_path(const DiffusionModel& model, const AdditiveFunctional& functional, const McConfig& mc,
                         std::uint64_t replication_index) {
    require_admissible(model, functional);
    check_mc_config(model, mc);
    return run_path(prepare(model, functional, mc), mc, replication_index, [](const PathState&) {});
}

std::vector<PathState> trace_path(const DiffusionModel& model, const AdditiveFunctional& functional,
                                  const McConfig& mc, std::uint64_t replication_index) {
    require_admissible(model, functional);
    check_mc_config(model, mc);
    std::vector<PathState> states{PathState{mc.x0, 0.0, 0.0, 0.0, 0.0}};
    run_path(prepare(model, functional, mc), mc, replication_index,
             [&states](const PathState& st) { states.push_back(st); });
    return states;
}

std::vector<PathRecord> simulate_replications_serial(const DiffusionModel& model,
                                                     const AdditiveFunctional& functional, const McConfig& mc) {
    return collect(model, functional, mc, [&](auto&& body) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(mc.replications); ++i) body(i);
    });
}

std::vector<PathRecord> simulate_replications(const DiffusionModel& model, const AdditiveFunctional& functional,
                                              const McConfig& mc) {
    return collect(model, functional, mc, [&](auto&& body) {
        const auto n = static_cast<std::ptrdiff_t>(mc.replications);
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
    });
}

CgfPoint empirical_cgf(std::span<const PathRecord> paths, double theta, double horizon) {
    CgfPoint out;
    out.theta = theta;
    if (theta == 0.0) {
        out.top_weight_fraction = 1.0 / static_cast<double>(paths.size());
        return out;
    }
    // Replication with the largest θA anchors the log-sum-exp.
    std::size_t top = 0;
    for (std::size_t i = 1; i < paths.size(); ++i) {
        if (theta * paths[i].a_per_time > theta * paths[top].a_per_time) top = i;
    }
    const double anchor = theta * paths[top].a_per_time;
    CompensatedSum sum;
    CompensatedSum sum_sq;
    for (const auto& p : paths) {
        const double w = std::exp(horizon * (theta * p.a_per_time - anchor));
        sum.add(w);
        sum_sq.add(w * w);
    }
    const auto r = static_cast<double>(paths.size());
    const double mean = sum.value() / r;
    const double var = std::max(0.0, (sum_sq.value() - r * mean * mean) / (r - 1.0));
    out.value = anchor + std::log(mean) / horizon;
    out.se = std::sqrt(var / r) / mean / horizon;
    out.top_weight_fraction = 1.0 / sum.value();
    out.unreliable = out.top_weight_fraction > 0.5;
    return out;
}

McEstimate summarize_paths(const DiffusionModel& model, const AdditiveFunctional& functional, const McConfig& mc,
                           std::span<const PathRecord> paths, std::span<const double> thetas) {
    (void)functional;
    if (paths.size() < 2) throw ValidationError("Monte Carlo needs at least 2 replications");
    const auto r = static_cast<double>(paths.size());
    const double t = mc.horizon_t;

    McEstimate est;
    // Shifted by the first replication so that identical values average exactly.
    const double shift = paths.front().a_per_time;
    CompensatedSum mean_acc;
    for (const auto& p : paths) mean_acc.add(p.a_per_time - shift);
    const double alpha_hat = shift + mean_acc.value() / r;

    CompensatedSum sq;
    CompensatedSum quart;
    for (const auto& p : paths) {
        const double z = std::sqrt(t) * (p.a_per_time - alpha_hat);
        sq.add(z * z);
        quart.add(z * z * z * z);
    }
    const double eta2 = sq.value() / (r - 1.0);
    const double m4 = quart.value() / r;
    est.alpha = {alpha_hat, std::sqrt(eta2 / t / r)};
    est.eta2 = {eta2, std::sqrt(std::max(0.0, m4 - eta2 * eta2 * (r - 3.0) / (r - 1.0)) / r)};

    const int bins = mc.histogram_bins;
    const double upper = model.is_two_barrier() ? model.b_barrier() : mc.histogram_upper;
    const double width = upper / bins;
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(bins), 0);
    for (const auto& p : paths) {
        for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += p.occupation[k];
    }
    const double total = static_cast<double>(step_count(mc)) * r;
    est.occupation.edges.resize(counts.size() + 1);
    for (std::size_t k = 0; k <= counts.size(); ++k) est.occupation.edges[k] = upper * static_cast<double>(k) / bins;
    for (auto c : counts) est.occupation.density.push_back(static_cast<double>(c) / (total * width));

    for (double theta : thetas) est.cgf.push_back(empirical_cgf(paths, theta, t));

    est.diagnostics = {t / static_cast<double>(step_count(mc)), t, static_cast<std::int64_t>(paths.size()), mc.seed,
                       mc.scheme};
    return est;
}

Estimate batch_means_eta2(const DiffusionModel& model, const AdditiveFunctional& functional, const McConfig& mc) {
    require_admissible(model, functional);
    check_mc_config(model, mc);
    if (mc.batch_count < 2) throw ValidationError("batch means need at least 2 batches");
    const std::int64_t n = step_count(mc);
    if (n < mc.batch_count) throw ValidationError("fewer steps than batches");
    const double dt = mc.horizon_t / static_cast<double>(n);

    const auto setup = prepare(model, functional, mc);
    std::vector<PathState> marks;
    std::int64_t step = 0;
    std::int64_t next_batch = 1;
    auto boundary = [&](std::int64_t j) { return n * j / mc.batch_count; };
    run_path(setup, mc, kBatchStream, [&](const PathState& st) {
        ++step;
        if (next_batch <= mc.batch_count && step == boundary(next_batch)) {
            marks.push_back(st);
            ++next_batch;
        }
    });

    std::vector<double> rates;
    PathState prev;
    for (int j = 0; j < mc.batch_count; ++j) {
        const auto& cur = marks[static_cast<std::size_t>(j)];
        const auto steps = boundary(j + 1) - boundary(j);
        const double tau = static_cast<double>(steps) * dt;
        const double mean_cost =
            setup.constant_cost ? setup.cost.c0 : (cur.cost_sum - prev.cost_sum) / static_cast<double>(steps);
        rates.push_back(mean_cost + (setup.r0 * (cur.l - prev.l) + setup.rb * (cur.u - prev.u)) / tau);
        prev = cur;
    }
    const auto nb = static_cast<double>(rates.size());
    double mean = 0.0;
    for (double v : rates) mean += v;
    mean /= nb;
    double var = 0.0;
    for (double v : rates) var += (v - mean) * (v - mean);
    var /= (nb - 1.0);
    const double tau = mc.horizon_t / nb;
    const double eta2 = tau * var;
    return {eta2, eta2 * std::sqrt(2.0 / (nb - 1.0))};
}

McEstimate estimate_lln_clt(const DiffusionModel& model, const AdditiveFunctional& functional, const McConfig& mc) {
    return estimate_scaled_cgf(model, functional, mc, {});
}

McEstimate estimate_scaled_cgf(const DiffusionModel& model, const AdditiveFunctional& functional,
                               const McConfig& mc, std::span<const double> thetas) {
    const auto paths = simulate_replications(model, functional, mc);
    auto est = summarize_paths(model, functional, mc, paths, thetas);
    if (mc.batch_count >= 2 && step_count(mc) >= mc.batch_count) {
        est.eta2_batch_means = batch_means_eta2(model, functional, mc);
    }
    return est;
}

}  // namespace refdiff
