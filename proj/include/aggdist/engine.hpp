#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "aggdist/approx.hpp"
#include "aggdist/discretise.hpp"
#include "aggdist/distributions.hpp"
#include "aggdist/fft.hpp"
#include "aggdist/grid.hpp"
#include "aggdist/numeric.hpp"
#include "aggdist/panjer.hpp"
#include "aggdist/riskmeasures.hpp"

namespace aggdist {

/// Lattice lengths beyond this are refused by the drivers below.
inline constexpr std::size_t kMaxLattice = std::size_t{1} << 27;

namespace detail {

inline std::size_t initial_length(const FrequencyModel& freq, const SeverityModel& sev, double step,
                                  double alpha)
{
    const double guess = quantile_guess(freq, sev, alpha);
    const double n = std::ceil(1.5 * guess / step) + 2.0;
    if (!(n < static_cast<double>(kMaxLattice)))
        throw GridTooShortError("lattice for step " + format_number(step) + " would exceed " +
                                std::to_string(kMaxLattice) + " points; use a larger step");
    return std::max<std::size_t>(64, static_cast<std::size_t>(n));
}

inline void check_length(std::size_t len)
{
    if (len > kMaxLattice)
        throw GridTooShortError("lattice would exceed " + std::to_string(kMaxLattice) + " points");
}

} // namespace detail

/// Panjer recursion run until H_n >= alpha, growing the severity lattice as
/// needed. Falls back to the scaled path when h0 underflows.
inline CompoundGrid panjer_to_quantile(const FrequencyModel& freq, const SeverityModel& sev, double step,
                                       double alpha, DiscretisationMode mode = DiscretisationMode::Central)
{
    std::size_t len = detail::initial_length(freq, sev, step, alpha);
    const double f0 = lattice_mass(sev, step, 0, mode);
    std::optional<PanjerParams> params;
    try {
        params = panjer_params(freq, f0);
    } catch (const UnderflowError&) {
    }

    if (params) {
        auto disc = discretise(sev, step, len, mode, TailPolicy::Ignore);
        PanjerRecursion rec(params->a, params->b, 0.0, params->h0);
        while (!rec.advance(disc, StopAtQuantile{alpha})) {
            len *= 2;
            detail::check_length(len);
            extend(disc, sev, len);
        }
        auto g = detail::grid_from_recursion(rec, step, "panjer");
        g.settings["step"] = detail::format_number(step);
        g.settings["mode"] = std::string(to_string(mode));
        if (params->a < 0.0)
            g.settings["warning"] = "binomial frequency: Panjer recursion may be numerically unstable";
        return g;
    }

    for (;;) {
        const auto disc = discretise(sev, step, len, mode, TailPolicy::Ignore);
        try {
            return stabilised_compound(freq, disc, StopAtQuantile{alpha});
        } catch (const GridTooShortError&) {
            len *= 2;
            detail::check_length(len);
        }
    }
}

struct FftOptions {
    /// Transform length; empty means doubling from 2x a quantile guess until
    /// two successive quantiles agree.
    std::optional<std::size_t> m;
    /// Tilt rate; empty means 20/M.
    std::optional<double> theta;
    TailPolicy tail = TailPolicy::AbsorbLast;
    DiscretisationMode mode = DiscretisationMode::Central;
};

inline CompoundGrid fft_to_quantile(const FrequencyModel& freq, const SeverityModel& sev, double step,
                                    double alpha, const FftOptions& opt = {})
{
    auto run = [&](std::size_t m) {
        const double theta = opt.theta ? *opt.theta : default_tilt(m);
        return compound_via_fft(discretise(sev, step, m, opt.mode, opt.tail), freq, m, theta);
    };
    if (opt.m)
        return run(*opt.m);

    const double guess = quantile_guess(freq, sev, alpha);
    std::size_t m = next_power_of_two(std::max<std::size_t>(
        1024, static_cast<std::size_t>(std::min(2.0 * guess / step, static_cast<double>(kMaxLattice)))));
    auto grid = run(m);
    for (;;) {
        const double q = var_from_grid(grid, alpha);
        m *= 2;
        if (m > kMaxLattice)
            return grid;
        auto next = run(m);
        if (std::fabs(var_from_grid(next, alpha) - q) <= 1e-5 * std::max(q, step))
            return next;
        grid = std::move(next);
    }
}

/// Halves the step from `start` until two successive quantiles differ by
/// less than `rel_tol` relative, or `max_halvings` is reached. Returns the
/// last grid.
template <class Engine>
CompoundGrid refine_step(Engine&& engine, double start, double alpha, double rel_tol = 1e-5,
                         int max_halvings = 10)
{
    double step = start;
    auto grid = engine(step);
    double q = var_from_grid(grid, alpha);
    for (int i = 0; i < max_halvings; ++i) {
        step *= 0.5;
        auto next = engine(step);
        const double qn = var_from_grid(next, alpha);
        const bool converged = std::fabs(qn - q) < rel_tol * std::max(std::fabs(qn), step);
        grid = std::move(next);
        q = qn;
        if (converged)
            break;
    }
    grid.settings["step"] = detail::format_number(step);
    return grid;
}

/// Power-of-two step putting roughly `points` lattice points below the
/// quantile guess.
inline double auto_start_step(const FrequencyModel& freq, const SeverityModel& sev, double alpha,
                              double points = 1024.0)
{
    const double guess = quantile_guess(freq, sev, alpha);
    return std::exp2(std::floor(std::log2(guess / points)));
}

} // namespace aggdist
