#include "refdiff/model.hpp"

#include "refdiff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace refdiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double interpolate(const SampledGrid& g, double x) {
    if (g.xs.empty() || x < g.xs.front() || x > g.xs.back()) {
        throw std::out_of_range("sampled coefficient queried outside its grid");
    }
    auto it = std::upper_bound(g.xs.begin(), g.xs.end(), x);
    if (it == g.xs.end()) return g.values.back();
    const auto hi = static_cast<std::size_t>(it - g.xs.begin());
    const auto lo = hi - 1;
    if (x == g.xs[lo]) return g.values[lo];
    const double w = (x - g.xs[lo]) / (g.xs[hi] - g.xs[lo]);
    return g.values[lo] + w * (g.values[hi] - g.values[lo]);
}

bool sampled_well_formed(const SampledGrid& g) {
    if (g.xs.size() < 2 || g.xs.size() != g.values.size()) return false;
    for (std::size_t i = 1; i < g.xs.size(); ++i) {
        if (!(g.xs[i] > g.xs[i - 1])) return false;
    }
    return std::all_of(g.values.begin(), g.values.end(), [](double v) { return std::isfinite(v); }) &&
           std::all_of(g.xs.begin(), g.xs.end(), [](double v) { return std::isfinite(v); });
}

bool parameters_finite(const CoefficientSpec& spec) {
    return std::visit(Overloaded{
                          [](const ConstantDrift& s) { return std::isfinite(s.mu); },
                          [](const OuDrift& s) { return std::isfinite(s.a) && std::isfinite(s.c); },
                          [](const ConstantSq& s) { return std::isfinite(s.sigma2); },
                          [](const SampledGrid&) { return true; },
                          [](const ConstantCost& s) { return std::isfinite(s.value); },
                          [](const ZeroCost&) { return true; },
                      },
                      spec);
}

// Whether a sampled coefficient covers [0, hi]; non-sampled specs always do.
bool covers(const CoefficientSpec& spec, double hi) {
    const auto* g = std::get_if<SampledGrid>(&spec);
    if (g == nullptr || g->xs.empty()) return true;
    return g->xs.front() <= 0.0 && g->xs.back() >= hi;
}

}  // namespace

double eval_coefficient(const CoefficientSpec& spec, double x) {
    return std::visit(Overloaded{
                          [](const ConstantDrift& s) { return s.mu; },
                          [x](const OuDrift& s) { return -s.a * (x - s.c); },
                          [](const ConstantSq& s) { return s.sigma2; },
                          [x](const SampledGrid& s) { return interpolate(s, x); },
                          [](const ConstantCost& s) { return s.value; },
                          [](const ZeroCost&) { return 0.0; },
                      },
                      spec);
}

std::pair<double, double> coefficient_range(const CoefficientSpec& spec, double lo, double hi) {
    return std::visit(
        Overloaded{
            [](const ConstantDrift& s) { return std::pair{s.mu, s.mu}; },
            [lo, hi](const OuDrift& s) {
                const double slope = -s.a;
                const double at_lo = -s.a * (lo - s.c);
                if (slope == 0.0) return std::pair{at_lo, at_lo};
                const double at_hi = std::isinf(hi) ? (slope > 0 ? kInf : -kInf) : -s.a * (hi - s.c);
                return std::pair{std::min(at_lo, at_hi), std::max(at_lo, at_hi)};
            },
            [](const ConstantSq& s) { return std::pair{s.sigma2, s.sigma2}; },
            [lo, hi](const SampledGrid& s) {
                const double a = std::max(lo, s.xs.front());
                const double b = std::min(hi, s.xs.back());
                double mn = std::min(interpolate(s, a), interpolate(s, b));
                double mx = std::max(interpolate(s, a), interpolate(s, b));
                for (std::size_t i = 0; i < s.xs.size(); ++i) {
                    if (s.xs[i] > a && s.xs[i] < b) {
                        mn = std::min(mn, s.values[i]);
                        mx = std::max(mx, s.values[i]);
                    }
                }
                return std::pair{mn, mx};
            },
            [](const ConstantCost& s) { return std::pair{s.value, s.value}; },
            [](const ZeroCost&) { return std::pair{0.0, 0.0}; },
        },
        spec);
}

double DiffusionModel::b_barrier() const {
    if (const auto* two = std::get_if<TwoBarrier>(&domain)) return two->b_barrier;
    throw ValidationError("model has a single barrier; no upper barrier position");
}

void check_config(const SolverConfig& c) {
    if (c.grid_points < 3 || c.grid_points % 2 == 0) {
        throw ValidationError("grid_points must be odd and at least 3");
    }
    if (!(c.quad_tol > 0) || !(c.root_tol > 0) || !(c.eig_tol > 0) || !(c.region_eps > 0)) {
        throw ValidationError("solver tolerances must be strictly positive");
    }
}

std::string ValidationReport::summary() const {
    if (violations.empty()) return "admissible";
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v;
    }
    return out;
}

ValidationReport validate(const DiffusionModel& model, const AdditiveFunctional& functional) {
    ValidationReport report;
    auto flag = [&report](std::string msg) {
        if (std::find(report.violations.begin(), report.violations.end(), msg) == report.violations.end()) {
            report.violations.push_back(std::move(msg));
        }
    };

    const CoefficientSpec* specs[] = {&model.mu, &model.sigma2, &functional.f};
    bool structurally_ok = true;
    for (const auto* spec : specs) {
        if (!parameters_finite(*spec)) {
            flag("coefficients must be finite");
            structurally_ok = false;
        }
        if (const auto* g = std::get_if<SampledGrid>(spec); g != nullptr && !sampled_well_formed(*g)) {
            flag("sampled grid xs must be strictly ascending and match values in length");
            structurally_ok = false;
        }
    }
    if (const auto* ou = std::get_if<OuDrift>(&model.mu); ou != nullptr && !(ou->a > 0)) {
        flag("OU mean-reversion rate a must be positive");
    }

    double hi = kInf;
    if (const auto* two = std::get_if<TwoBarrier>(&model.domain)) {
        if (!(two->b_barrier > 0) || !std::isfinite(two->b_barrier)) {
            flag("b_barrier must be positive and finite");
            structurally_ok = false;
        } else {
            hi = two->b_barrier;
        }
    }

    if (structurally_ok) {
        for (const auto* spec : specs) {
            if (!covers(*spec, std::isinf(hi) ? 0.0 : hi)) flag("sampled grid must cover the domain");
        }
        const auto [s_min, s_max] = coefficient_range(model.sigma2, 0.0, hi);
        (void)s_max;
        if (!(s_min > 0)) flag("σ² must be positive");
        if (std::isinf(hi) && !functional.assert_bounded) {
            const auto [f_min, f_max] = coefficient_range(functional.f, 0.0, hi);
            if (std::isinf(f_min) || std::isinf(f_max)) flag("f must be bounded on the domain");
        }
    }

    const bool rb_used = model.is_two_barrier();
    if (!std::isfinite(functional.r0) || (rb_used && !std::isfinite(functional.rb))) {
        flag("boundary weights must be finite");
    } else if (functional.r0 < 0 || (rb_used && functional.rb < 0)) {
        flag("boundary weights must be nonnegative");
    }
    return report;
}

void require_admissible(const DiffusionModel& model, const AdditiveFunctional& functional) {
    const auto report = validate(model, functional);
    if (!report.admissible()) throw ValidationError(report.summary());
}

double sampled_extent(const DiffusionModel& model, const AdditiveFunctional& functional) {
    double extent = kInf;
    for (const auto* spec : {&model.mu, &model.sigma2, &functional.f}) {
        if (const auto* g = std::get_if<SampledGrid>(spec); g != nullptr && !g->xs.empty()) {
            extent = std::min(extent, g->xs.back());
        }
    }
    return extent;
}

}  // namespace refdiff
