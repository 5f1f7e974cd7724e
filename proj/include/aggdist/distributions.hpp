#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "aggdist/numeric.hpp"

namespace aggdist {

/// A moment that may diverge. Divergence is a value, not an error: the
/// approximations downstream need to detect it and bow out.
class Moment {
public:
    static Moment finite(double v) { return Moment(v, false); }
    static Moment infinite() { return Moment(std::numeric_limits<double>::infinity(), true); }

    [[nodiscard]] bool is_finite() const noexcept { return !infinite_; }
    [[nodiscard]] bool is_infinite() const noexcept { return infinite_; }

    [[nodiscard]] double value() const
    {
        if (infinite_)
            throw std::domain_error("moment is infinite");
        return v_;
    }

    friend bool operator==(const Moment&, const Moment&) = default;

private:
    Moment(double v, bool inf) : v_(v), infinite_(inf) {}
    double v_;
    bool infinite_;
};

struct FrequencyMoments {
    double mean;
    double variance;
    double central3;
    double central4;
};

namespace detail {

inline std::string format_number(double x)
{
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc{})
        throw std::runtime_error("number formatting failed");
    return std::string(buf.data(), ptr);
}

inline std::vector<double> parse_params(std::string_view text, std::string_view what)
{
    std::vector<double> out;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const auto piece = text.substr(0, comma);
        double v = 0.0;
        const auto* first = piece.data();
        const auto* last = piece.data() + piece.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last || piece.empty())
            throw std::invalid_argument("bad numeric parameter '" + std::string(piece) + "' in " +
                                        std::string(what));
        out.push_back(v);
        if (comma == std::string_view::npos)
            break;
        text.remove_prefix(comma + 1);
        if (text.empty())
            throw std::invalid_argument("trailing comma in " + std::string(what));
    }
    return out;
}

inline std::pair<std::string, std::vector<double>> split_spec(std::string_view spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos || colon == 0)
        throw std::invalid_argument("distribution spec must look like 'name:p1,p2', got '" +
                                    std::string(spec) + "'");
    std::string name(spec.substr(0, colon));
    for (auto& c : name)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return {name, parse_params(spec.substr(colon + 1), spec)};
}

inline void expect_count(const std::vector<double>& p, std::size_t n, std::string_view name)
{
    if (p.size() != n)
        throw std::invalid_argument(std::string(name) + " expects " + std::to_string(n) +
                                    " parameter(s), got " + std::to_string(p.size()));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Frequency
// ---------------------------------------------------------------------------

enum class FrequencyKind { Poisson, Binomial, NegBin };

struct PoissonParams {
    double lambda;
};
struct BinomialParams {
    long n;
    double p;
};
/// pmf Gamma(k+r)/(k! Gamma(r)) p^r (1-p)^k.
struct NegBinParams {
    double r;
    double p;
};

class FrequencyModel {
public:
    using Params = std::variant<PoissonParams, BinomialParams, NegBinParams>;

    static FrequencyModel poisson(double lambda)
    {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw std::invalid_argument("poisson: lambda must be > 0");
        return FrequencyModel(PoissonParams{lambda});
    }

    static FrequencyModel binomial(long n, double p)
    {
        if (n < 1)
            throw std::invalid_argument("binomial: n must be a positive integer");
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("binomial: p must lie in (0,1)");
        return FrequencyModel(BinomialParams{n, p});
    }

    static FrequencyModel negbin(double r, double p)
    {
        if (!(r > 0.0) || !std::isfinite(r))
            throw std::invalid_argument("negbin: r must be > 0");
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("negbin: p must lie in (0,1)");
        return FrequencyModel(NegBinParams{r, p});
    }

    /// Parses `poisson:100`, `binomial:10,0.3`, `negbin:2,0.5`.
    static FrequencyModel parse(std::string_view spec)
    {
        auto [name, p] = detail::split_spec(spec);
        if (name == "poisson") {
            detail::expect_count(p, 1, name);
            return poisson(p[0]);
        }
        if (name == "binomial" || name == "bin") {
            detail::expect_count(p, 2, name);
            if (p[0] != std::floor(p[0]))
                throw std::invalid_argument("binomial: n must be an integer");
            return binomial(static_cast<long>(p[0]), p[1]);
        }
        if (name == "negbin") {
            detail::expect_count(p, 2, name);
            return negbin(p[0], p[1]);
        }
        throw std::invalid_argument("unknown frequency distribution '" + name + "'");
    }

    [[nodiscard]] std::string to_string() const
    {
        using detail::format_number;
        return std::visit(
            [](const auto& q) -> std::string {
                using T = std::decay_t<decltype(q)>;
                if constexpr (std::is_same_v<T, PoissonParams>)
                    return "poisson:" + format_number(q.lambda);
                else if constexpr (std::is_same_v<T, BinomialParams>)
                    return "binomial:" + std::to_string(q.n) + "," + format_number(q.p);
                else
                    return "negbin:" + format_number(q.r) + "," + format_number(q.p);
            },
            params_);
    }

    [[nodiscard]] FrequencyKind kind() const noexcept
    {
        return static_cast<FrequencyKind>(params_.index());
    }
    [[nodiscard]] const Params& params() const noexcept { return params_; }

    [[nodiscard]] double pmf(long k) const
    {
        if (k < 0)
            return 0.0;
        return std::exp(log_pmf(k));
    }

    /// log p_k; -inf where p_k = 0.
    [[nodiscard]] double log_pmf(long k) const
    {
        using std::lgamma;
        const double kd = static_cast<double>(k);
        if (k < 0)
            return -std::numeric_limits<double>::infinity();
        switch (kind()) {
        case FrequencyKind::Poisson: {
            const double l = std::get<PoissonParams>(params_).lambda;
            return kd * std::log(l) - l - lgamma(kd + 1.0);
        }
        case FrequencyKind::Binomial: {
            const auto& q = std::get<BinomialParams>(params_);
            if (k > q.n)
                return -std::numeric_limits<double>::infinity();
            const double n = static_cast<double>(q.n);
            return lgamma(n + 1.0) - lgamma(kd + 1.0) - lgamma(n - kd + 1.0) + kd * std::log(q.p) +
                   (n - kd) * std::log1p(-q.p);
        }
        case FrequencyKind::NegBin: {
            const auto& q = std::get<NegBinParams>(params_);
            return lgamma(kd + q.r) - lgamma(kd + 1.0) - lgamma(q.r) + q.r * std::log(q.p) +
                   kd * std::log1p(-q.p);
        }
        }
        return 0.0;
    }

    /// log psi(s) for real s in [0,1]; never underflows.
    [[nodiscard]] double log_pgf(double s) const
    {
        switch (kind()) {
        case FrequencyKind::Poisson:
            return std::get<PoissonParams>(params_).lambda * (s - 1.0);
        case FrequencyKind::Binomial: {
            const auto& q = std::get<BinomialParams>(params_);
            return static_cast<double>(q.n) * std::log1p(q.p * (s - 1.0));
        }
        case FrequencyKind::NegBin: {
            const auto& q = std::get<NegBinParams>(params_);
            return q.r * (std::log(q.p) - std::log1p(-(1.0 - q.p) * s));
        }
        }
        return 0.0;
    }

    /// psi(s) = E[s^N]. Throws UnderflowError when the closed form is not
    /// representable; use log_pgf or the scaled Panjer path in that case.
    [[nodiscard]] double pgf(double s) const
    {
        if (!(s >= 0.0 && s <= 1.0))
            throw std::domain_error("pgf: argument must lie in [0,1]");
        const double v = std::exp(log_pgf(s));
        if (v == 0.0)
            throw UnderflowError("pgf underflows in double precision (log psi = " +
                                 std::to_string(log_pgf(s)) + ")");
        return v;
    }

    /// psi on complex arguments with |s| <= 1, principal branch for the
    /// non-integer NegBin power.
    [[nodiscard]] std::complex<double> pgf(std::complex<double> s) const
    {
        return std::exp(log_pgf(s));
    }

    [[nodiscard]] std::complex<double> log_pgf(std::complex<double> s) const
    {
        switch (kind()) {
        case FrequencyKind::Poisson:
            return std::get<PoissonParams>(params_).lambda * (s - 1.0);
        case FrequencyKind::Binomial: {
            const auto& q = std::get<BinomialParams>(params_);
            return static_cast<double>(q.n) * std::log(1.0 + q.p * (s - 1.0));
        }
        case FrequencyKind::NegBin: {
            const auto& q = std::get<NegBinParams>(params_);
            return q.r * (std::log(q.p) - std::log(1.0 - (1.0 - q.p) * s));
        }
        }
        return 0.0;
    }

    [[nodiscard]] double mean() const { return central_moments().mean; }

    [[nodiscard]] FrequencyMoments central_moments() const
    {
        switch (kind()) {
        case FrequencyKind::Poisson: {
            const double l = std::get<PoissonParams>(params_).lambda;
            return {l, l, l, l * (1.0 + 3.0 * l)};
        }
        case FrequencyKind::Binomial: {
            const auto& b = std::get<BinomialParams>(params_);
            const double n = static_cast<double>(b.n);
            const double p = b.p;
            const double q = 1.0 - p;
            const double var = n * p * q;
            return {n * p, var, var * (q - p), var * (1.0 + 3.0 * (n - 2.0) * p * q)};
        }
        case FrequencyKind::NegBin: {
            const auto& nb = std::get<NegBinParams>(params_);
            const double r = nb.r;
            const double p = nb.p;
            const double q = 1.0 - p;
            const double p2 = p * p;
            return {r * q / p, r * q / p2, r * q * (1.0 + q) / (p2 * p),
                    r * q * (3.0 * r * q + 6.0 * q + p2) / (p2 * p2)};
        }
        }
        return {};
    }

    /// Smallest K with sum_{k<=K} p_k >= 1 - eps (the upper support end for
    /// Binomial).
    [[nodiscard]] long mass_cutoff(double eps = 1e-14) const
    {
        if (kind() == FrequencyKind::Binomial)
            return std::get<BinomialParams>(params_).n;
        CompensatedSum acc;
        const auto m = central_moments();
        const long hard_cap = static_cast<long>(m.mean + 60.0 * std::sqrt(m.variance) + 200.0);
        for (long k = 0; k <= hard_cap; ++k) {
            acc += pmf(k);
            if (acc.value() >= 1.0 - eps && static_cast<double>(k) >= m.mean)
                return k;
        }
        return hard_cap;
    }

private:
    explicit FrequencyModel(Params p) : params_(p) {}
    Params params_;
};

// ---------------------------------------------------------------------------
// Severity
// ---------------------------------------------------------------------------

enum class SeverityKind { Lognormal, Gamma, GPD, Normal };

struct LognormalParams {
    double mu;
    double sigma;
};
/// Shape alpha, scale beta: density x^(alpha-1) exp(-x/beta) / (Gamma(alpha) beta^alpha).
struct GammaParams {
    double alpha;
    double beta;
};
struct GpdParams {
    double xi;
    double beta;
};
struct NormalParams {
    double mu;
    double sigma;
};

class SeverityModel {
public:
    using Params = std::variant<LognormalParams, GammaParams, GpdParams, NormalParams>;

    static SeverityModel lognormal(double mu, double sigma)
    {
        if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("lognormal: need finite mu and sigma > 0");
        return SeverityModel(LognormalParams{mu, sigma});
    }

    static SeverityModel gamma(double alpha, double beta)
    {
        if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
            throw std::invalid_argument("gamma: need alpha > 0 and beta > 0");
        return SeverityModel(GammaParams{alpha, beta});
    }

    static SeverityModel gpd(double xi, double beta)
    {
        if (!(xi >= 0.0) || !std::isfinite(xi))
            throw std::invalid_argument("gpd: only xi >= 0 is supported");
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw std::invalid_argument("gpd: beta must be > 0");
        return SeverityModel(GpdParams{xi, beta});
    }

    static SeverityModel normal(double mu, double sigma)
    {
        if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("normal: need finite mu and sigma > 0");
        return SeverityModel(NormalParams{mu, sigma});
    }

    /// Parses `lognormal:0,2`, `gamma:2,3`, `gpd:1,1`, `normal:0,1`.
    static SeverityModel parse(std::string_view spec)
    {
        auto [name, p] = detail::split_spec(spec);
        if (name == "lognormal" || name == "ln") {
            detail::expect_count(p, 2, name);
            return lognormal(p[0], p[1]);
        }
        if (name == "gamma") {
            detail::expect_count(p, 2, name);
            return gamma(p[0], p[1]);
        }
        if (name == "gpd") {
            detail::expect_count(p, 2, name);
            return gpd(p[0], p[1]);
        }
        if (name == "normal") {
            detail::expect_count(p, 2, name);
            return normal(p[0], p[1]);
        }
        throw std::invalid_argument("unknown severity distribution '" + name + "'");
    }

    [[nodiscard]] std::string to_string() const
    {
        using detail::format_number;
        return std::visit(
            [](const auto& q) -> std::string {
                using T = std::decay_t<decltype(q)>;
                if constexpr (std::is_same_v<T, LognormalParams>)
                    return "lognormal:" + format_number(q.mu) + "," + format_number(q.sigma);
                else if constexpr (std::is_same_v<T, GammaParams>)
                    return "gamma:" + format_number(q.alpha) + "," + format_number(q.beta);
                else if constexpr (std::is_same_v<T, GpdParams>)
                    return "gpd:" + format_number(q.xi) + "," + format_number(q.beta);
                else
                    return "normal:" + format_number(q.mu) + "," + format_number(q.sigma);
            },
            params_);
    }

    [[nodiscard]] SeverityKind kind() const noexcept
    {
        return static_cast<SeverityKind>(params_.index());
    }
    [[nodiscard]] const Params& params() const noexcept { return params_; }

    [[nodiscard]] bool positive_support() const noexcept { return kind() != SeverityKind::Normal; }

    [[nodiscard]] double cdf(double x) const
    {
        switch (kind()) {
        case SeverityKind::Lognormal: {
            if (x <= 0.0)
                return 0.0;
            const auto& q = std::get<LognormalParams>(params_);
            return normal::cdf((std::log(x) - q.mu) / q.sigma);
        }
        case SeverityKind::Gamma: {
            if (x <= 0.0)
                return 0.0;
            const auto& q = std::get<GammaParams>(params_);
            if (std::isinf(x))
                return 1.0;
            return boost::math::gamma_p(q.alpha, x / q.beta);
        }
        case SeverityKind::GPD: {
            if (x <= 0.0)
                return 0.0;
            const auto& q = std::get<GpdParams>(params_);
            if (q.xi == 0.0)
                return -std::expm1(-x / q.beta);
            return -std::expm1(-std::log1p(q.xi * x / q.beta) / q.xi);
        }
        case SeverityKind::Normal: {
            const auto& q = std::get<NormalParams>(params_);
            return normal::cdf((x - q.mu) / q.sigma);
        }
        }
        return 0.0;
    }

    /// Survival 1 - F(x), computed without cancellation in the right tail.
    [[nodiscard]] double sf(double x) const
    {
        switch (kind()) {
        case SeverityKind::Lognormal: {
            if (x <= 0.0)
                return 1.0;
            const auto& q = std::get<LognormalParams>(params_);
            return normal::sf((std::log(x) - q.mu) / q.sigma);
        }
        case SeverityKind::Gamma: {
            if (x <= 0.0)
                return 1.0;
            const auto& q = std::get<GammaParams>(params_);
            if (std::isinf(x))
                return 0.0;
            return boost::math::gamma_q(q.alpha, x / q.beta);
        }
        case SeverityKind::GPD: {
            if (x <= 0.0)
                return 1.0;
            const auto& q = std::get<GpdParams>(params_);
            if (q.xi == 0.0)
                return std::exp(-x / q.beta);
            return std::exp(-std::log1p(q.xi * x / q.beta) / q.xi);
        }
        case SeverityKind::Normal: {
            const auto& q = std::get<NormalParams>(params_);
            return normal::sf((x - q.mu) / q.sigma);
        }
        }
        return 0.0;
    }

    /// Pr[a < X <= b], taking differences on whichever side of the median
    /// keeps the operands small.
    [[nodiscard]] double interval_mass(double a, double b) const
    {
        if (!(b > a))
            return 0.0;
        const double fa = cdf(a);
        if (fa < 0.5)
            return cdf(b) - fa;
        return sf(a) - sf(b);
    }

    [[nodiscard]] double pdf(double x) const
    {
        switch (kind()) {
        case SeverityKind::Lognormal: {
            if (x <= 0.0)
                return 0.0;
            const auto& q = std::get<LognormalParams>(params_);
            const double z = (std::log(x) - q.mu) / q.sigma;
            return normal::pdf(z) / (x * q.sigma);
        }
        case SeverityKind::Gamma: {
            if (x < 0.0)
                return 0.0;
            const auto& q = std::get<GammaParams>(params_);
            if (x == 0.0) {
                if (q.alpha < 1.0)
                    return std::numeric_limits<double>::infinity();
                return q.alpha == 1.0 ? 1.0 / q.beta : 0.0;
            }
            return boost::math::gamma_p_derivative(q.alpha, x / q.beta) / q.beta;
        }
        case SeverityKind::GPD: {
            if (x < 0.0)
                return 0.0;
            const auto& q = std::get<GpdParams>(params_);
            if (q.xi == 0.0)
                return std::exp(-x / q.beta) / q.beta;
            return std::exp(-(1.0 / q.xi + 1.0) * std::log1p(q.xi * x / q.beta)) / q.beta;
        }
        case SeverityKind::Normal: {
            const auto& q = std::get<NormalParams>(params_);
            return normal::pdf((x - q.mu) / q.sigma) / q.sigma;
        }
        }
        return 0.0;
    }

    [[nodiscard]] double quantile(double u) const
    {
        if (!(u > 0.0 && u < 1.0))
            throw std::domain_error("severity quantile: probability must lie in (0,1)");
        switch (kind()) {
        case SeverityKind::Lognormal: {
            const auto& q = std::get<LognormalParams>(params_);
            return std::exp(q.mu + q.sigma * normal::quantile(u));
        }
        case SeverityKind::Gamma: {
            const auto& q = std::get<GammaParams>(params_);
            if (u > 0.5)
                return q.beta * boost::math::gamma_q_inv(q.alpha, 1.0 - u);
            return q.beta * boost::math::gamma_p_inv(q.alpha, u);
        }
        case SeverityKind::GPD: {
            const auto& q = std::get<GpdParams>(params_);
            if (q.xi == 0.0)
                return -q.beta * std::log1p(-u);
            return q.beta / q.xi * std::expm1(-q.xi * std::log1p(-u));
        }
        case SeverityKind::Normal: {
            const auto& q = std::get<NormalParams>(params_);
            return q.mu + q.sigma * normal::quantile(u);
        }
        }
        return 0.0;
    }

    /// Quantile of the upper tail: x with 1 - F(x) = tail. Keeps precision
    /// when tail is far below machine epsilon.
    [[nodiscard]] double tail_quantile(double tail) const
    {
        if (!(tail > 0.0 && tail < 1.0))
            throw std::domain_error("severity tail quantile: tail probability must lie in (0,1)");
        switch (kind()) {
        case SeverityKind::Lognormal: {
            const auto& q = std::get<LognormalParams>(params_);
            return std::exp(q.mu - q.sigma * normal::quantile(tail));
        }
        case SeverityKind::Gamma: {
            const auto& q = std::get<GammaParams>(params_);
            return q.beta * boost::math::gamma_q_inv(q.alpha, tail);
        }
        case SeverityKind::GPD: {
            const auto& q = std::get<GpdParams>(params_);
            if (q.xi == 0.0)
                return -q.beta * std::log(tail);
            return q.beta / q.xi * std::expm1(-q.xi * std::log(tail));
        }
        case SeverityKind::Normal: {
            const auto& q = std::get<NormalParams>(params_);
            return q.mu - q.sigma * normal::quantile(tail);
        }
        }
        return 0.0;
    }

    /// E[X^k], k >= 1.
    [[nodiscard]] Moment raw_moment(int k) const
    {
        if (k < 1)
            throw std::invalid_argument("raw_moment: k must be >= 1");
        const double kd = k;
        switch (kind()) {
        case SeverityKind::Lognormal: {
            const auto& q = std::get<LognormalParams>(params_);
            const double v = std::exp(kd * q.mu + 0.5 * kd * kd * q.sigma * q.sigma);
            return std::isfinite(v) ? Moment::finite(v) : Moment::infinite();
        }
        case SeverityKind::Gamma: {
            const auto& q = std::get<GammaParams>(params_);
            double v = 1.0;
            for (int j = 0; j < k; ++j)
                v *= q.beta * (q.alpha + j);
            return std::isfinite(v) ? Moment::finite(v) : Moment::infinite();
        }
        case SeverityKind::GPD: {
            const auto& q = std::get<GpdParams>(params_);
            if (kd * q.xi >= 1.0)
                return Moment::infinite();
            double v = 1.0;
            for (int j = 1; j <= k; ++j)
                v *= q.beta * j / (1.0 - j * q.xi);
            return Moment::finite(v);
        }
        case SeverityKind::Normal: {
            const auto& q = std::get<NormalParams>(params_);
            const double m = q.mu;
            const double s2 = q.sigma * q.sigma;
            // E[X^k] = sum_{j even} C(k,j) m^(k-j) s^j (j-1)!!
            double v = 0.0;
            double binom = 1.0;
            double dfact = 1.0;
            for (int j = 0; j <= k; ++j) {
                if (j > 0)
                    binom = binom * (k - j + 1) / j;
                if (j % 2 == 0) {
                    if (j >= 2)
                        dfact *= (j - 1);
                    v += binom * std::pow(m, k - j) * std::pow(s2, j / 2) * dfact;
                }
            }
            return Moment::finite(v);
        }
        }
        return Moment::infinite();
    }

    [[nodiscard]] Moment mean() const { return raw_moment(1); }

private:
    explicit SeverityModel(Params p) : params_(p) {}
    Params params_;
};

} // namespace aggdist
