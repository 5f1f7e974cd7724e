#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "aggdist/numeric.hpp"

namespace aggdist {

/// Compound distribution on the lattice {0, step, 2 step, ...}:
/// density[n] = Pr[Z = n step], cdf[n] = sum_{i <= n} density[i].
struct CompoundGrid {
    double step = 1.0;
    std::vector<double> density;
    std::vector<double> cdf;
    std::string engine;
    std::map<std::string, std::string> settings;

    [[nodiscard]] std::size_t size() const noexcept { return density.size(); }
    [[nodiscard]] double point(std::size_t n) const noexcept
    {
        return static_cast<double>(n) * step;
    }
};

/// Clamps round-off negatives (down to -1e-14) to zero and rebuilds the
/// running cdf with compensated summation, keeping it nondecreasing.
inline void finalise_grid(CompoundGrid& grid)
{
    grid.cdf.resize(grid.density.size());
    CompensatedSum acc;
    for (std::size_t n = 0; n < grid.density.size(); ++n) {
        double& h = grid.density[n];
        if (h < 0.0)
            h = 0.0;
        acc += h;
        grid.cdf[n] = acc.value();
        if (n > 0 && grid.cdf[n] < grid.cdf[n - 1])
            grid.cdf[n] = grid.cdf[n - 1];
    }
}

inline CompoundGrid make_grid(double step, std::vector<double> density, std::string engine)
{
    CompoundGrid g;
    g.step = step;
    g.density = std::move(density);
    g.engine = std::move(engine);
    finalise_grid(g);
    return g;
}

} // namespace aggdist
