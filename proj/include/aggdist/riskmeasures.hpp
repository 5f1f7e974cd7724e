#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "aggdist/grid.hpp"
#include "aggdist/numeric.hpp"

namespace aggdist {

struct RiskReport {
    double alpha = 0.0;
    double var = 0.0;
    /// Empty when ES is undefined or was not requested.
    std::optional<double> es;
    std::string engine;
    std::map<std::string, std::string> meta;
};

/// Smallest lattice point n step with H_n >= alpha.
inline std::size_t var_index(const CompoundGrid& grid, double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("var_from_grid: alpha must lie in (0,1)");
    const auto it = std::lower_bound(grid.cdf.begin(), grid.cdf.end(), alpha);
    if (it == grid.cdf.end())
        throw GridTooShortError("grid ends at H = " + std::to_string(grid.cdf.empty() ? 0.0 : grid.cdf.back()) +
                                " below alpha; use a longer grid");
    return static_cast<std::size_t>(it - grid.cdf.begin());
}

inline double var_from_grid(const CompoundGrid& grid, double alpha)
{
    return grid.point(var_index(grid, alpha));
}

/// E[Z | Z >= q] on the lattice, from the point `threshold` (default: the
/// alpha-quantile). Mass missing beyond the end of the grid must not exceed
/// `max_missing_mass`.
inline double es_from_grid(const CompoundGrid& grid, double alpha, double max_missing_mass = 1e-6,
                           std::optional<double> threshold = std::nullopt)
{
    const double missing = grid.cdf.empty() ? 1.0 : 1.0 - grid.cdf.back();
    if (missing > max_missing_mass)
        throw GridTooShortError("es_from_grid: grid is missing tail mass " + std::to_string(missing) +
                                " beyond its last point (allowed " + std::to_string(max_missing_mass) + ")");
    const double q = threshold ? *threshold : var_from_grid(grid, alpha);
    CompensatedSum num;
    CompensatedSum den;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const double x = grid.point(n);
        if (x < q)
            continue;
        num += x * grid.density[n];
        den += grid.density[n];
    }
    if (!(den.value() > 0.0))
        throw std::runtime_error("es_from_grid: no mass at or above the threshold");
    return num.value() / den.value();
}

/// Index of the largest lattice point whose upper-bound cdf is still below
/// alpha, so the quantile lies strictly above it.
inline double quantile_lower_bound(const CompoundGrid& upper_cdf_grid, double alpha)
{
    const std::size_t n = var_index(upper_cdf_grid, alpha);
    return n == 0 ? 0.0 : upper_cdf_grid.point(n - 1);
}

struct QuantileBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Bounds from grids built with forward (cdf upper bound) and backward (cdf
/// lower bound) discretisation: the quantile lies in (lower, upper].
inline QuantileBounds quantile_bounds(const CompoundGrid& forward_grid, const CompoundGrid& backward_grid,
                                      double alpha)
{
    return {quantile_lower_bound(forward_grid, alpha), var_from_grid(backward_grid, alpha)};
}

} // namespace aggdist
