#include "robin_fv.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace refdiff::oracle {

double fv_psi(const RobinProblem& p, int cells) {
    const int n = cells + 1;
    const double h = p.b_barrier / cells;

    // Λ at nodes and cell midpoints by the midpoint rule on half cells.
    std::vector<double> lam_node(n), lam_mid(cells);
    for (int i = 0; i < cells; ++i) {
        const double x = i * h;
        const double half = h / 2;
        const auto ratio = [&](double y) { return 2.0 * p.mu(y) / p.sigma2(y); };
        lam_mid[i] = lam_node[i] + half * ratio(x + half / 2);
        lam_node[i + 1] = lam_mid[i] + half * ratio(x + 3 * half / 2);
    }
    const double shift = std::max(*std::max_element(lam_node.begin(), lam_node.end()),
                                  *std::max_element(lam_mid.begin(), lam_mid.end()));

    std::vector<double> stiff(cells);
    for (int i = 0; i < cells; ++i) stiff[i] = std::exp(lam_mid[i] - shift) / h;

    std::vector<double> diag(n, 0.0), off(cells), mass(n);
    for (int i = 0; i < n; ++i) {
        const double x = i * h;
        const double w = (i == 0 || i == n - 1) ? h / 2 : h;
        const double a = std::exp(lam_node[i] - shift);
        const double s2 = p.sigma2(x);
        mass[i] = 2.0 / s2 * a * w;
        diag[i] = -2.0 * p.theta * p.f(x) / s2 * a * w;
        if (i > 0) diag[i] += stiff[i - 1];
        if (i < cells) diag[i] += stiff[i];
    }
    diag[0] -= p.theta * p.r0 * std::exp(lam_node[0] - shift);
    diag[n - 1] -= p.theta * p.rb * std::exp(lam_node[n - 1] - shift);
    for (int i = 0; i < cells; ++i) off[i] = -stiff[i];

    // M^{-1/2} K M^{-1/2}
    for (int i = 0; i < n; ++i) diag[i] /= mass[i];
    for (int i = 0; i < cells; ++i) off[i] /= std::sqrt(mass[i] * mass[i + 1]);

    double lo = diag[0], hi = diag[0];
    for (int i = 0; i < n; ++i) {
        double radius = 0.0;
        if (i > 0) radius += std::abs(off[i - 1]);
        if (i < cells) radius += std::abs(off[i]);
        lo = std::min(lo, diag[i] - radius);
        hi = std::max(hi, diag[i] + radius);
    }

    const auto count_below = [&](double x) {
        int count = 0;
        double pivot = diag[0] - x;
        if (pivot < 0) ++count;
        for (int i = 1; i < n; ++i) {
            if (pivot == 0.0) pivot = 1e-300;
            pivot = diag[i] - x - off[i - 1] * off[i - 1] / pivot;
            if (pivot < 0) ++count;
        }
        return count;
    };
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (count_below(mid) >= 1) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return -0.5 * (lo + hi);
}

double fv_psi_extrapolated(const RobinProblem& problem, int cells) {
    const double coarse = fv_psi(problem, cells);
    const double fine = fv_psi(problem, 2 * cells);
    return (4.0 * fine - coarse) / 3.0;
}

}  // namespace refdiff::oracle
