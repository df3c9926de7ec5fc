#pragma once

#include <span>
#include <vector>

namespace refdiff {

/// Running integral ∫_{xs[0]}^{xs[k]} g on a solver grid; values[0] == 0.
struct CumulativeTable {
    std::vector<double> xs;
    std::vector<double> values;

    double total() const { return values.back(); }
};

/// `n` equally spaced nodes on [lo, hi], endpoints exact.
std::vector<double> uniform_grid(double lo, double hi, int n);

/// Composite Simpson on a uniform grid, exact for cubics at even nodes. An
/// odd node closes its last panel with the trapezoid rule, which is also what
/// an even node count does, so values[k] equals definite_integral over the
/// first k + 1 nodes.
///
/// Throws std::invalid_argument for fewer than 3 nodes, size mismatch, or a
/// grid that is not strictly ascending and uniform.
CumulativeTable cumulative_integral(std::span<const double> integrand, std::span<const double> grid);

/// Terminal value of cumulative_integral.
double definite_integral(std::span<const double> integrand, std::span<const double> grid);

}  // namespace refdiff
