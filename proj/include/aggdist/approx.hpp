#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/math/special_functions/gamma.hpp>

#include "aggdist/distributions.hpp"
#include "aggdist/moments.hpp"
#include "aggdist/numeric.hpp"

namespace aggdist {

enum class ApproxQuality { MomentMatched, Asymptotic };

inline std::string_view to_string(ApproxQuality q)
{
    return q == ApproxQuality::MomentMatched ? "moment-matched" : "asymptotic";
}

/// Approximate quantile, or the reason it is unavailable.
struct ApproxQuantile {
    std::optional<double> value;
    ApproxQuality quality = ApproxQuality::MomentMatched;
    std::string method;
    std::string note;

    [[nodiscard]] bool available() const noexcept { return value.has_value(); }
};

namespace detail {

inline void check_level(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("approximation: alpha must lie in (0,1)");
}

inline ApproxQuantile unavailable(std::string method, ApproxQuality q, std::string why)
{
    return {std::nullopt, q, std::move(method), std::move(why)};
}

} // namespace detail

/// E[Z] + Phi^{-1}(alpha) sqrt(Var Z).
inline ApproxQuantile normal_approx_quantile(const FrequencyModel& freq, const SeverityModel& sev,
                                             double alpha)
{
    detail::check_level(alpha);
    const auto m = compound_central_moments(freq, sev);
    if (m.mean.is_infinite() || m.variance.is_infinite())
        return detail::unavailable("normal", ApproxQuality::MomentMatched,
                                   "compound mean or variance is infinite");
    const double q = m.mean.value() + normal::quantile(alpha) * std::sqrt(m.variance.value());
    return {q, ApproxQuality::MomentMatched, "normal", {}};
}

/// Z ~ a + Gamma(alpha, beta) matched on mean, variance and skewness:
///   a + alpha beta = E[Z], alpha beta^2 = Var Z, 2 / sqrt(alpha) = skewness.
struct TranslatedGammaFit {
    double shift = 0.0;
    double shape = 0.0;
    double scale = 0.0;

    static TranslatedGammaFit from_moments(double mean, double variance, double skewness)
    {
        if (!(variance > 0.0))
            throw std::domain_error("translated gamma: variance must be > 0");
        if (!(skewness > 0.0) || !std::isfinite(skewness))
            throw std::domain_error("translated gamma: skewness must be finite and > 0");
        TranslatedGammaFit f;
        f.shape = 4.0 / (skewness * skewness);
        f.scale = std::sqrt(variance / f.shape);
        f.shift = mean - f.shape * f.scale;
        return f;
    }

    [[nodiscard]] double mean() const { return shift + shape * scale; }
    [[nodiscard]] double variance() const { return shape * scale * scale; }
    [[nodiscard]] double skewness() const { return 2.0 / std::sqrt(shape); }

    [[nodiscard]] double quantile(double alpha) const
    {
        detail::check_level(alpha);
        const double g = alpha > 0.5 ? boost::math::gamma_q_inv(shape, 1.0 - alpha)
                                     : boost::math::gamma_p_inv(shape, alpha);
        return shift + scale * g;
    }
};

/// Fit to the compound moments; nullopt when the third moment is infinite
/// or the skewness is not positive.
inline std::optional<TranslatedGammaFit> translated_gamma_fit(const FrequencyModel& freq,
                                                              const SeverityModel& sev)
{
    const auto m = compound_central_moments(freq, sev);
    if (m.skewness.is_infinite() || !(m.skewness.value() > 0.0))
        return std::nullopt;
    return TranslatedGammaFit::from_moments(m.mean.value(), m.variance.value(), m.skewness.value());
}

inline ApproxQuantile translated_gamma_quantile(const FrequencyModel& freq,
                                                const SeverityModel& sev, double alpha)
{
    detail::check_level(alpha);
    const auto fit = translated_gamma_fit(freq, sev);
    if (!fit)
        return detail::unavailable("translated-gamma", ApproxQuality::MomentMatched,
                                   "third moment infinite or skewness not positive");
    return {fit->quantile(alpha), ApproxQuality::MomentMatched, "translated-gamma", {}};
}

/// Sub-exponential asymptotic VaR: F^{-1}(1 - (1 - alpha)/E[N]); for a
/// Poisson-GPD pair the scaling form (beta/xi) (lambda/(1-alpha))^xi.
inline ApproxQuantile heavy_tail_var(const FrequencyModel& freq, const SeverityModel& sev,
                                     double alpha)
{
    detail::check_level(alpha);
    if (sev.kind() != SeverityKind::Lognormal && sev.kind() != SeverityKind::GPD)
        return detail::unavailable("heavy-tail", ApproxQuality::Asymptotic,
                                   "severity is not heavy-tailed (lognormal or GPD required)");
    const double en = freq.mean();
    const double tail = (1.0 - alpha) / en;
    if (!(tail < 1.0))
        return detail::unavailable("heavy-tail", ApproxQuality::Asymptotic,
                                   "(1 - alpha)/E[N] >= 1");
    if (sev.kind() == SeverityKind::GPD && freq.kind() == FrequencyKind::Poisson) {
        const auto& g = std::get<GpdParams>(sev.params());
        if (g.xi > 0.0)
            return {g.beta / g.xi * std::pow(en / (1.0 - alpha), g.xi), ApproxQuality::Asymptotic,
                    "heavy-tail", {}};
    }
    return {sev.tail_quantile(tail), ApproxQuality::Asymptotic, "heavy-tail", {}};
}

/// Rough quantile scale used to size grids and brackets: the larger of the
/// available heavy-tail and normal approximations, falling back to the
/// severity tail quantile.
inline double quantile_guess(const FrequencyModel& freq, const SeverityModel& sev, double alpha)
{
    double g = 0.0;
    for (const auto& a : {heavy_tail_var(freq, sev, alpha), normal_approx_quantile(freq, sev, alpha)})
        if (a.available() && std::isfinite(*a.value))
            g = std::max(g, *a.value);
    if (!(g > 0.0)) {
        const double en = std::max(freq.mean(), 1.0);
        const double tail = std::min(0.5, (1.0 - alpha) / en);
        g = en * std::max(sev.tail_quantile(tail), 1e-12);
    }
    return g;
}

} // namespace aggdist
