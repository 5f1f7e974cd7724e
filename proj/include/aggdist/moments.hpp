#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "aggdist/distributions.hpp"

namespace aggdist {

struct CompoundMoments {
    Moment mean = Moment::infinite();
    Moment variance = Moment::infinite();
    Moment central3 = Moment::infinite();
    Moment central4 = Moment::infinite();
    Moment skewness = Moment::infinite();
    Moment kurtosis = Moment::infinite();
};

struct SeverityCentralMoments {
    std::optional<double> mean;
    std::optional<double> variance;
    std::optional<double> central3;
    std::optional<double> central4;
};

/// Central moments of X from its raw moments; a moment is absent when the
/// corresponding raw moment is infinite.
inline SeverityCentralMoments severity_central_moments(const SeverityModel& sev)
{
    SeverityCentralMoments out;
    double m[5] = {1.0, 0.0, 0.0, 0.0, 0.0};
    int available = 0;
    for (int k = 1; k <= 4; ++k) {
        const auto mk = sev.raw_moment(k);
        if (mk.is_infinite() || !std::isfinite(mk.value()))
            break;
        m[k] = mk.value();
        available = k;
    }
    const double m1 = m[1];
    if (available >= 1)
        out.mean = m1;
    if (available >= 2)
        out.variance = std::max(0.0, m[2] - m1 * m1);
    if (available >= 3)
        out.central3 = m[3] - 3.0 * m1 * m[2] + 2.0 * m1 * m1 * m1;
    if (available >= 4)
        out.central4 = m[4] - 4.0 * m1 * m[3] + 6.0 * m1 * m1 * m[2] - 3.0 * m1 * m1 * m1 * m1;
    return out;
}

namespace detail {

inline Moment finite_or_infinite(double v)
{
    return std::isfinite(v) ? Moment::finite(v) : Moment::infinite();
}

} // namespace detail

/// First four moments of Z = X_1 + ... + X_N:
///   E[Z]  = E[N] E[X]
///   Var Z = E[N] Var X + Var N (E X)^2
///   mu3   = E[N] mu3(X) + 3 Var N Var X E X + mu3(N) (E X)^3
///   mu4   = E[N] mu4(X) + 4 Var N mu3(X) E X + 3 (Var N + E N (E N - 1)) (Var X)^2
///           + 6 (mu3(N) + E N Var N) (E X)^2 Var X + mu4(N) (E X)^4
/// Moments that need an infinite severity moment are returned as infinite.
inline CompoundMoments compound_central_moments(const FrequencyModel& freq, const SeverityModel& sev)
{
    const auto fn = freq.central_moments();
    const auto sx = severity_central_moments(sev);
    CompoundMoments out;
    const double en = fn.mean;
    const double vn = fn.variance;
    if (sx.mean) {
        const double ex = *sx.mean;
        out.mean = detail::finite_or_infinite(en * ex);
        if (sx.variance) {
            const double vx = *sx.variance;
            out.variance = detail::finite_or_infinite(en * vx + vn * ex * ex);
            if (sx.central3) {
                const double c3 = *sx.central3;
                out.central3 = detail::finite_or_infinite(en * c3 + 3.0 * vn * vx * ex +
                                                          fn.central3 * ex * ex * ex);
                if (sx.central4) {
                    const double c4 = *sx.central4;
                    out.central4 = detail::finite_or_infinite(
                        en * c4 + 4.0 * vn * c3 * ex + 3.0 * (vn + en * (en - 1.0)) * vx * vx +
                        6.0 * (fn.central3 + en * vn) * ex * ex * vx + fn.central4 * ex * ex * ex * ex);
                }
            }
        }
    }
    if (out.variance.is_finite() && out.variance.value() > 0.0) {
        const double v = out.variance.value();
        if (out.central3.is_finite())
            out.skewness = Moment::finite(out.central3.value() / std::pow(v, 1.5));
        if (out.central4.is_finite())
            out.kurtosis = Moment::finite(-3.0 + out.central4.value() / (v * v));
    }
    return out;
}

/// k-th cumulant of a compound Poisson law: lambda E[X^k].
inline Moment compound_poisson_cumulant(double lambda, const SeverityModel& sev, int k)
{
    if (k < 1 || k > 4)
        throw std::invalid_argument("compound_poisson_cumulant: k must be 1..4");
    if (!(lambda > 0.0))
        throw std::invalid_argument("compound_poisson_cumulant: lambda must be > 0");
    const auto mk = sev.raw_moment(k);
    if (mk.is_infinite())
        return Moment::infinite();
    return detail::finite_or_infinite(lambda * mk.value());
}

} // namespace aggdist
