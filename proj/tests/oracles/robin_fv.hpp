#pragma once

// Reference principal eigenvalue for
//   −(a h′)′ + q h = λ c h,  a h′(0) = −θ r0 a h(0),  a h′(b) = θ rb a h(b),
// from a lumped-mass P1 finite-volume discretization. The symmetric
// tridiagonal pencil is reduced to standard form and λ₁ is located by Sturm
// bisection, so nothing here shares code with the shooting solver.

#include <functional>

namespace refdiff::oracle {

struct RobinProblem {
    std::function<double(double)> mu;
    std::function<double(double)> sigma2;
    std::function<double(double)> f;
    double b_barrier = 1.0;
    double r0 = 0.0;
    double rb = 0.0;
    double theta = 0.0;
};

/// ψ = −λ₁ on `cells` uniform cells.
double fv_psi(const RobinProblem& problem, int cells);

/// Richardson extrapolation of fv_psi(cells) and fv_psi(2·cells) (second order).
double fv_psi_extrapolated(const RobinProblem& problem, int cells);

}  // namespace refdiff::oracle
