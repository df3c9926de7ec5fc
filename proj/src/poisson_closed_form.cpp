#include "refdiff/errors.hpp"
#include "refdiff/poisson.hpp"

#include <cmath>
#include <numbers>

namespace refdiff {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

RbmPoissonClosedForm closed_form_rbm(double mu, double sigma2, double b, double r0, double rb, double region_eps) {
    if (!(sigma2 > 0) || !(b > 0)) throw ValidationError("closed_form_rbm needs σ² > 0 and b > 0");
    RbmPoissonClosedForm out;
    if (std::abs(mu) * b / sigma2 < region_eps) {
        out.drift_free = true;
        out.alpha = sigma2 * (r0 + rb) / (2.0 * b);
        out.eta2 = (r0 + rb) > 0 ? sigma2 * (r0 * r0 * r0 + rb * rb * rb) / (3.0 * (r0 + rb)) : 0.0;
        out.u_prime = [=](double x) { return r0 - (r0 + rb) / b * x; };
        out.density = [=](double) { return 1.0 / b; };
        return out;
    }
    const double xi = 2.0 * mu / sigma2;
    const double grow = std::expm1(xi * b);            // e^{ξb} − 1
    const double decay = -std::expm1(-xi * b);         // 1 − e^{−ξb}
    const double e_minus = std::exp(-xi * b);
    out.alpha = mu * (r0 + rb * std::exp(xi * b)) / grow;

    const double lead = (r0 + rb) / decay;
    const double offset = (r0 * e_minus + rb) / decay;
    out.u_prime = [=](double x) { return lead * std::exp(-xi * x) - offset; };
    out.density = [=](double x) { return xi * std::exp(xi * x) / grow; };
    out.eta2 = sigma2 * (lead * lead * e_minus - offset * lead * 2.0 * xi * b / grow + offset * offset);
    return out;
}

OuPoissonClosedForm closed_form_ou(double a, double c, double sigma2, double b, double r0, double rb) {
    if (!(a > 0) || !(sigma2 > 0) || !(b > 0)) throw ValidationError("closed_form_ou needs a, σ², b > 0");
    const double k = std::sqrt(2.0 * a / sigma2);
    const double root2pi = std::sqrt(2.0 * std::numbers::pi);
    const double phi_lo = normal_cdf(-c * k);
    const double mass = normal_cdf((b - c) * k) - phi_lo;
    // ∫₀ˣ exp(−a(y−c)²/σ²) dy
    auto gauss = [=](double x) { return root2pi / k * (normal_cdf((x - c) * k) - phi_lo); };
    auto quad_exp = [=](double x) { return a * (x - c) * (x - c) / sigma2; };
    const double shift = a * c * c / sigma2;

    OuPoissonClosedForm out;
    out.alpha = (r0 + rb * std::exp(-(quad_exp(b) - shift))) / (2.0 / sigma2 * std::exp(shift) * gauss(b));
    const double alpha = out.alpha;
    out.u_prime = [=](double x) {
        return r0 * std::exp(quad_exp(x) - shift) - 2.0 * alpha / sigma2 * std::exp(quad_exp(x)) * gauss(x);
    };
    out.density = [=](double x) { return k * normal_pdf((x - c) * k) / mass; };
    return out;
}

}  // namespace refdiff
