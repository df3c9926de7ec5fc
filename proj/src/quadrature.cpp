#include "refdiff/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace refdiff {

namespace {

double check_uniform(std::span<const double> grid) {
    if (grid.size() < 3) throw std::invalid_argument("quadrature grid needs at least 3 nodes");
    const double h = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
    if (!(h > 0)) throw std::invalid_argument("quadrature grid must be strictly ascending");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double step = grid[i] - grid[i - 1];
        if (!(step > 0)) throw std::invalid_argument("quadrature grid must be strictly ascending");
        if (std::abs(step - h) > 1e-6 * h) throw std::invalid_argument("quadrature grid must be uniform");
    }
    return h;
}

}  // namespace

std::vector<double> uniform_grid(double lo, double hi, int n) {
    if (n < 2 || !(hi > lo)) throw std::invalid_argument("uniform_grid needs hi > lo and n >= 2");
    std::vector<double> xs(static_cast<std::size_t>(n));
    const double span = hi - lo;
    for (int i = 0; i < n; ++i) {
        xs[static_cast<std::size_t>(i)] = lo + span * (static_cast<double>(i) / static_cast<double>(n - 1));
    }
    xs.back() = hi;
    return xs;
}

CumulativeTable cumulative_integral(std::span<const double> g, std::span<const double> grid) {
    if (g.size() != grid.size()) throw std::invalid_argument("integrand and grid sizes differ");
    const double h = check_uniform(grid);
    const std::size_t n = grid.size();
    const std::size_t last_even = (n % 2 == 1) ? n - 1 : n - 2;

    CumulativeTable table{std::vector<double>(grid.begin(), grid.end()), std::vector<double>(n, 0.0)};
    auto& v = table.values;
    // Neumaier-compensated running sum over Simpson panels.
    double sum = 0.0;
    double carry = 0.0;
    for (std::size_t k = 2; k <= last_even; k += 2) {
        const double panel = h / 3.0 * (g[k - 2] + 4.0 * g[k - 1] + g[k]);
        const double next = sum + panel;
        carry += std::abs(sum) >= std::abs(panel) ? (sum - next) + panel : (panel - next) + sum;
        sum = next;
        v[k] = sum + carry;
    }
    // Odd nodes close with one trapezoid panel, so every prefix of the table
    // agrees with definite_integral over that prefix of the grid.
    for (std::size_t k = 1; k < n; k += 2) {
        v[k] = v[k - 1] + 0.5 * h * (g[k - 1] + g[k]);
    }
    return table;
}

double definite_integral(std::span<const double> integrand, std::span<const double> grid) {
    return cumulative_integral(integrand, grid).total();
}

}  // namespace refdiff
