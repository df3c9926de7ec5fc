#include "refdiff/rate.hpp"

#include <boost/math/interpolators/barycentric_rational.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace refdiff {

struct PsiInterpolant::Impl {
    boost::math::barycentric_rational<double> interp;
};

PsiInterpolant::PsiInterpolant(const PsiCurve& curve) : thetas_(curve.thetas), psis_(curve.psis) {
    if (thetas_.size() < 4 || thetas_.size() != psis_.size()) {
        throw std::invalid_argument("ψ curve needs at least 4 matching samples");
    }
    impl_ = std::make_unique<Impl>(Impl{boost::math::barycentric_rational<double>(
        thetas_.data(), psis_.data(), thetas_.size(), 3)});
}

PsiInterpolant::~PsiInterpolant() = default;
PsiInterpolant::PsiInterpolant(PsiInterpolant&&) noexcept = default;
PsiInterpolant& PsiInterpolant::operator=(PsiInterpolant&&) noexcept = default;

double PsiInterpolant::operator()(double theta) const { return impl_->interp(theta); }
double PsiInterpolant::slope(double theta) const { return impl_->interp.prime(theta); }

namespace {

void require_convex(const PsiCurve& psi) {
    if (psi.convexity_violations > 0) {
        throw std::invalid_argument("ψ curve failed convexity validation; Legendre transform refused");
    }
}

}  // namespace

LegendrePoint legendre(const PsiInterpolant& psi, double y, const SolverConfig& config) {
    const auto& th = psi.thetas();
    const auto& ps = psi.psis();
    const std::size_t n = th.size();

    std::size_t best = 0;
    double best_val = th[0] * y - ps[0];
    for (std::size_t k = 1; k < n; ++k) {
        const double v = th[k] * y - ps[k];
        if (v > best_val || (v == best_val && std::abs(th[k]) < std::abs(th[best]))) {
            best = k;
            best_val = v;
        }
    }

    // Golden-section maximization of the concave objective on the grid cells
    // next to the best node. The node wins ties.
    auto objective = [&](double t) { return t * y - psi(t); };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = th[best == 0 ? 0 : best - 1];
    double b = th[best == n - 1 ? n - 1 : best + 1];
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > config.root_tol * std::max(1.0, std::abs(c))) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    LegendrePoint out{best_val, th[best], false};
    const double t = 0.5 * (a + b);
    const double noise = 8 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(t * y), std::abs(best_val)});
    if (const double v = objective(t); v > best_val + noise) {
        out.value = v;
        out.arg_theta = t;
    }
    // At an end of the grid the supremum lies outside it unless the slope there
    // already brackets y.
    if (best == 0) out.boundary_flag = psi.slope(th.front()) >= y;
    if (best == n - 1) out.boundary_flag = psi.slope(th.back()) <= y;
    return out;
}

LegendrePoint legendre(const PsiCurve& psi, double y, const SolverConfig& config) {
    require_convex(psi);
    return legendre(PsiInterpolant(psi), y, config);
}

TailExponent tail_exponent(const PsiInterpolant& psi, double z, const SolverConfig& config) {
    double lo = psi.theta_min();
    double hi = psi.theta_max();
    const double s_lo = psi.slope(lo);
    const double s_hi = psi.slope(hi);
    if (!(z >= s_lo && z <= s_hi)) {
        throw std::out_of_range("z lies outside the attainable slope range of ψ on the θ grid");
    }
    for (int iter = 0; iter < 400 && hi - lo > config.root_tol * std::max(1.0, std::abs(lo)); ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (psi.slope(mid) < z) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double theta_z = 0.5 * (lo + hi);
    return {theta_z * z - psi(theta_z), theta_z};
}

TailExponent tail_exponent(const PsiCurve& psi, double z, const SolverConfig& config) {
    require_convex(psi);
    return tail_exponent(PsiInterpolant(psi), z, config);
}

RateFunction rate_function(const PsiCurve& psi, std::span<const double> ys, const SolverConfig& config) {
    require_convex(psi);
    const PsiInterpolant interp(psi);
    const double s_lo = interp.slope(interp.theta_min());
    const double s_hi = interp.slope(interp.theta_max());

    RateFunction out;
    out.ys.assign(ys.begin(), ys.end());
    for (double y : ys) {
        const auto point = legendre(interp, y, config);
        out.values.push_back(std::max(0.0, point.value));
        out.arg_thetas.push_back(point.arg_theta);
        out.domain_flags.push_back(point.boundary_flag || y < s_lo || y > s_hi);
    }
    return out;
}

std::vector<double> default_rate_points(const PsiCurve& psi, int count) {
    if (count < 2) throw std::invalid_argument("rate grid needs at least 2 points");
    const PsiInterpolant interp(psi);
    const double lo = interp.slope(interp.theta_min());
    const double hi = interp.slope(interp.theta_max());
    std::vector<double> ys(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        ys[static_cast<std::size_t>(i)] = lo + (hi - lo) * (i + 1.0) / (count + 1.0);
    }
    return ys;
}

}  // namespace refdiff
