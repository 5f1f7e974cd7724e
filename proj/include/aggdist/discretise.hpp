#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aggdist/distributions.hpp"

namespace aggdist {

enum class DiscretisationMode { Central, Forward, Backward };

/// What happens to the severity mass beyond the last lattice point.
enum class TailPolicy { AbsorbLast, Ignore };

inline std::string_view to_string(DiscretisationMode m)
{
    switch (m) {
    case DiscretisationMode::Central: return "central";
    case DiscretisationMode::Forward: return "forward";
    case DiscretisationMode::Backward: return "backward";
    }
    return "?";
}

inline std::string_view to_string(TailPolicy t)
{
    return t == TailPolicy::AbsorbLast ? "absorb" : "ignore";
}

inline DiscretisationMode parse_mode(std::string_view s)
{
    if (s == "central") return DiscretisationMode::Central;
    if (s == "forward") return DiscretisationMode::Forward;
    if (s == "backward") return DiscretisationMode::Backward;
    throw std::invalid_argument("unknown discretisation mode '" + std::string(s) + "'");
}

inline TailPolicy parse_tail_policy(std::string_view s)
{
    if (s == "absorb") return TailPolicy::AbsorbLast;
    if (s == "ignore") return TailPolicy::Ignore;
    throw std::invalid_argument("unknown tail policy '" + std::string(s) + "'");
}

/// Severity concentrated on {0, step, 2 step, ...}.
struct DiscreteSeverity {
    double step = 1.0;
    std::vector<double> probs;
    DiscretisationMode mode = DiscretisationMode::Central;
    TailPolicy tail_policy = TailPolicy::Ignore;
    /// Mass lost to negative-difference clamping (zero unless the tail is
    /// deep in cancellation territory).
    double clamped_mass = 0.0;

    [[nodiscard]] std::size_t size() const noexcept { return probs.size(); }
    [[nodiscard]] double operator[](std::size_t i) const noexcept
    {
        return i < probs.size() ? probs[i] : 0.0;
    }
};

namespace detail {

/// Lattice cell [lo, hi) owning mass for index n under each mode.
inline std::pair<double, double> cell_bounds(DiscretisationMode mode, std::size_t n, double step)
{
    const double x = static_cast<double>(n) * step;
    switch (mode) {
    case DiscretisationMode::Central: return {x - 0.5 * step, x + 0.5 * step};
    case DiscretisationMode::Forward: return {x, x + step};
    case DiscretisationMode::Backward: return {x - step, x};
    }
    return {x, x};
}

} // namespace detail

/// Mass assigned to lattice point n (without tail handling).
inline double lattice_mass(const SeverityModel& sev, double step, std::size_t n,
                           DiscretisationMode mode)
{
    auto [lo, hi] = detail::cell_bounds(mode, n, step);
    if (n == 0 && mode == DiscretisationMode::Central)
        return sev.cdf(hi);
    return sev.interval_mass(lo, hi);
}

/// Central: f_0 = F(step/2), f_n = F(n step + step/2) - F(n step - step/2).
/// Forward: f_n = F((n+1) step) - F(n step).
/// Backward: f_n = F(n step) - F((n-1) step), so f_0 = 0 for positive support.
/// With AbsorbLast the remaining 1 - sum goes to f_{M-1}.
inline DiscreteSeverity discretise(const SeverityModel& sev, double step, std::size_t length,
                                   DiscretisationMode mode = DiscretisationMode::Central,
                                   TailPolicy tail = TailPolicy::Ignore)
{
    if (!(step > 0.0) || !std::isfinite(step))
        throw std::invalid_argument("discretise: step must be > 0");
    if (length < 2)
        throw std::invalid_argument("discretise: need at least two lattice points");

    DiscreteSeverity out;
    out.step = step;
    out.mode = mode;
    out.tail_policy = tail;
    out.probs.resize(length);
    for (std::size_t n = 0; n < length; ++n) {
        double f = lattice_mass(sev, step, n, mode);
        if (f < 0.0) {
            out.clamped_mass += -f;
            f = 0.0;
        }
        out.probs[n] = f;
    }
    if (tail == TailPolicy::AbsorbLast) {
        // Residual beyond the upper edge of the last cell, taken from the
        // survival function rather than 1 - sum to avoid cancellation.
        const auto upper = detail::cell_bounds(mode, length - 1, step).second;
        out.probs.back() += sev.sf(upper);
    }
    return out;
}

/// Extends an Ignore-policy discretisation in place to `new_length` points.
inline void extend(DiscreteSeverity& disc, const SeverityModel& sev, std::size_t new_length)
{
    if (disc.tail_policy != TailPolicy::Ignore)
        throw std::logic_error("only tail-ignoring discretisations can be extended");
    const std::size_t old = disc.probs.size();
    if (new_length <= old)
        return;
    disc.probs.resize(new_length);
    for (std::size_t n = old; n < new_length; ++n) {
        double f = lattice_mass(sev, disc.step, n, disc.mode);
        if (f < 0.0) {
            disc.clamped_mass += -f;
            f = 0.0;
        }
        disc.probs[n] = f;
    }
}

} // namespace aggdist
