#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "aggdist/approx.hpp"
#include "aggdist/distributions.hpp"
#include "aggdist/moments.hpp"
#include "aggdist/quadrature.hpp"

namespace aggdist {

/// Forward integral did not reach the requested accuracy.
class ForwardIntegrationError : public std::runtime_error {
public:
    ForwardIntegrationError(const std::string& what, std::complex<double> estimate, double bound)
        : std::runtime_error(what), estimate_(estimate), bound_(bound)
    {
    }
    [[nodiscard]] std::complex<double> estimate() const noexcept { return estimate_; }
    [[nodiscard]] double error_bound() const noexcept { return bound_; }

private:
    std::complex<double> estimate_;
    double bound_;
};

struct CfSettings {
    /// Absolute tolerance on phi(t).
    double forward_tol = 1e-11;
    /// Bisection depth per panel.
    unsigned max_refine = 15;
};

namespace detail {

/// Ray angle for the rotated forward integral x = r exp(i angle) at t > 0.
/// Lognormal densities grow like exp(angle^2 / (2 sigma^2)) off the real
/// axis, so the angle is capped to keep that factor below 10. For gamma,
/// angle = atan(beta t) makes exp(-x/beta + itx) real along the ray: no
/// oscillation, and the integrand peaks at |phi(t)|.
inline double contour_angle(const SeverityModel& sev, double t)
{
    constexpr double half_pi = std::numbers::pi / 2.0;
    switch (sev.kind()) {
    case SeverityKind::Lognormal: {
        const double s = std::get<LognormalParams>(sev.params()).sigma;
        return std::min(half_pi, s * std::sqrt(2.0 * std::log(10.0)));
    }
    case SeverityKind::Gamma: return std::atan(std::get<GammaParams>(sev.params()).beta * t);
    case SeverityKind::GPD: return half_pi;
    case SeverityKind::Normal: return 0.0;
    }
    return 0.0;
}

/// log(x f(x)) for complex x = exp(u + i angle), continued analytically
/// from the positive axis.
inline std::complex<double> log_x_pdf(const SeverityModel& sev, double u, double angle)
{
    const std::complex<double> logx(u, angle);
    switch (sev.kind()) {
    case SeverityKind::Lognormal: {
        const auto& p = std::get<LognormalParams>(sev.params());
        const auto d = (logx - p.mu) / p.sigma;
        return -0.5 * d * d - std::log(p.sigma * std::sqrt(2.0 * std::numbers::pi));
    }
    case SeverityKind::Gamma: {
        // alpha (z - (e^z - 1)) + alpha log alpha - alpha - lgamma(alpha),
        // z = log(x / (alpha beta)); avoids cancelling terms of size alpha log alpha.
        const auto& p = std::get<GammaParams>(sev.params());
        const double a = p.alpha;
        const std::complex<double> z(u - std::log(a * p.beta), angle);
        const std::complex<double> em1(std::expm1(z.real()) * std::cos(z.imag()) -
                                           2.0 * std::pow(std::sin(0.5 * z.imag()), 2),
                                       std::exp(z.real()) * std::sin(z.imag()));
        double c;
        if (a >= 10.0) {
            const double r = 1.0 / a;
            const double r2 = r * r;
            const double stirling =
                r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 / 1188))));
            c = 0.5 * std::log(a / (2.0 * std::numbers::pi)) - stirling;
        } else {
            c = a * std::log(a) - a - std::lgamma(a);
        }
        return a * (z - em1) + c;
    }
    case SeverityKind::GPD: {
        const auto& p = std::get<GpdParams>(sev.params());
        const auto x = std::exp(logx);
        if (p.xi == 0.0)
            return logx - x / p.beta - std::log(p.beta);
        return logx - std::log(p.beta) - (1.0 / p.xi + 1.0) * std::log(1.0 + p.xi * x / p.beta);
    }
    case SeverityKind::Normal: break;
    }
    throw std::logic_error("log_x_pdf: unsupported severity");
}

/// Range of u = log r outside which |x f(x) exp(itx)| < e^-41.5 ~ 1e-18.
inline std::pair<double, double> log_radius_range(const SeverityModel& sev, double t, double angle)
{
    constexpr double cut = 41.5;
    const double s = std::sin(angle);
    const double c = std::cos(angle);
    double lo = -cut;
    double hi = cut;
    double decay = t * s;
    switch (sev.kind()) {
    case SeverityKind::Lognormal: {
        const auto& p = std::get<LognormalParams>(sev.params());
        const double w = std::sqrt(2.0 * p.sigma * p.sigma * cut + angle * angle);
        lo = p.mu - w;
        hi = p.mu + w;
        break;
    }
    case SeverityKind::Gamma: {
        // r^alpha exp(-r decay) peaks at r_p = alpha / decay; it is e^-cut below
        // the peak at r = y r_p with alpha (log y - y + 1) = -cut, one root
        // either side of y = 1.
        const auto& p = std::get<GammaParams>(sev.params());
        const double a = std::max(p.alpha, 1.0);
        decay += c / p.beta;
        // Bisection in v = log y on [v0, v1], v0 < v1, straddling a root.
        auto root = [&](double a, double v0, double v1) {
            const bool rising = v0 < 0.0;
            for (int i = 0; i < 60; ++i) {
                const double v = 0.5 * (v0 + v1);
                const bool inside = a * (v - std::exp(v) + 1.0) + cut > 0.0;
                ((inside == rising) ? v1 : v0) = v;
            }
            return 0.5 * (v0 + v1);
        };
        const double log_peak = std::log(a / decay);
        return {log_peak + root(p.alpha, -700.0, 0.0) - 0.5, log_peak + root(a, 0.0, std::log(2.0 + cut)) + 0.5};
    }
    case SeverityKind::GPD: {
        const auto& p = std::get<GpdParams>(sev.params());
        lo = std::log(p.beta) - cut;
        hi = p.xi > 0.0 ? std::log(p.beta) + cut * p.xi + std::log(1.0 / p.xi + 1.0) + 1.0
                        : std::log(p.beta) + std::log(cut + 10.0) + 1.0;
        break;
    }
    case SeverityKind::Normal: break;
    }
    if (decay > 0.0)
        hi = std::min(hi, std::log(cut / decay) + 1.0);
    if (hi <= lo + 1.0)
        lo = hi - cut;
    return {lo, hi};
}

} // namespace detail

/// Severity characteristic function phi(t) = E[exp(itX)].
///
/// Positive-support severities are integrated numerically along the ray
/// x = r exp(i angle) in the upper half plane (the density is analytic
/// there and exp(itx) decays like exp(-t r sin(angle))), in the variable
/// u = log r, split into unit panels, each by adaptive Gauss-Kronrod.
/// The normal severity uses its closed form.
inline std::complex<double> sev_cf(const SeverityModel& sev, double t, const CfSettings& cfg = {})
{
    if (!std::isfinite(t))
        throw std::domain_error("sev_cf: t must be finite");
    if (t < 0.0)
        return std::conj(sev_cf(sev, -t, cfg));
    if (t == 0.0)
        return {1.0, 0.0};
    if (sev.kind() == SeverityKind::Normal) {
        const auto& p = std::get<NormalParams>(sev.params());
        return std::exp(std::complex<double>(-0.5 * p.sigma * p.sigma * t * t, p.mu * t));
    }

    const double angle = detail::contour_angle(sev, t);
    const std::complex<double> dir = std::polar(1.0, angle);
    auto integrand = [&](double u) -> std::complex<double> {
        const double r = std::exp(u);
        const std::complex<double> itx = std::complex<double>(0.0, t) * (r * dir);
        return std::exp(detail::log_x_pdf(sev, u, angle) + itx);
    };

    const auto [lo, hi] = detail::log_radius_range(sev, t, angle);
    // Gamma mass sits in a log-radius window of width ~ 1/sqrt(alpha).
    const double unit = sev.kind() == SeverityKind::Gamma
                            ? std::min(1.0, 2.0 / std::sqrt(std::get<GammaParams>(sev.params()).alpha))
                            : 1.0;
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / unit)));
    const double width = (hi - lo) / panels;
    std::complex<double> total{};
    double err = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + p * width;
        // Panels already below an absolute share of the budget skip refinement.
        auto r = adaptive_gk15(integrand, a, a + width, 1e-12, 0);
        if (r.error > 1e-3 * cfg.forward_tol / panels)
            r = adaptive_gk15(integrand, a, a + width, 1e-12, cfg.max_refine);
        total += r.value;
        err += r.error;
    }
    if (!(err <= cfg.forward_tol) || !std::isfinite(total.real()) || !std::isfinite(total.imag()))
        throw ForwardIntegrationError("sev_cf: forward integral at t = " + detail::format_number(t) +
                                          " did not converge (error bound " +
                                          detail::format_number(err) + ")",
                                      total, err);
    return total;
}

/// chi = psi(phi). For Poisson the real and imaginary parts are assembled
/// as exp(lambda (Re phi - 1)) (cos, sin)(lambda Im phi) so large lambda
/// cannot overflow an intermediate complex exponential.
inline std::complex<double> compound_cf_from_phi(const FrequencyModel& freq, std::complex<double> phi)
{
    if (freq.kind() == FrequencyKind::Poisson) {
        const double l = std::get<PoissonParams>(freq.params()).lambda;
        const double mod = std::exp(l * (phi.real() - 1.0));
        const double arg = l * phi.imag();
        return {mod * std::cos(arg), mod * std::sin(arg)};
    }
    return freq.pgf(phi);
}

inline std::complex<double> compound_cf(const FrequencyModel& freq, const SeverityModel& sev, double t,
                                        const CfSettings& cfg = {})
{
    return compound_cf_from_phi(freq, sev_cf(sev, t, cfg));
}

/// Memo of phi(t) keyed by the exact bit pattern of t. Safe for concurrent
/// use; cleared when it reaches its capacity.
class CfCache {
public:
    explicit CfCache(std::size_t capacity = 1u << 20) : capacity_(capacity) {}

    template <class F>
    std::complex<double> get_or_compute(double t, F&& compute)
    {
        const auto key = std::bit_cast<std::uint64_t>(t);
        {
            std::lock_guard lock(mutex_);
            if (auto it = map_.find(key); it != map_.end()) {
                ++hits_;
                return it->second;
            }
        }
        const auto v = compute(t);
        std::lock_guard lock(mutex_);
        if (map_.size() >= capacity_)
            map_.clear();
        map_.emplace(key, v);
        return v;
    }

    [[nodiscard]] std::size_t hits() const
    {
        std::lock_guard lock(mutex_);
        return hits_;
    }
    [[nodiscard]] std::size_t size() const
    {
        std::lock_guard lock(mutex_);
        return map_.size();
    }

private:
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::unordered_map<std::uint64_t, std::complex<double>> map_;
    std::size_t hits_ = 0;
};

struct DniSettings {
    /// Integration over 2K pi-cycles, i.e. truncation at 2 K pi.
    int K = 25;
    /// Gauss-7 segments in the first cycle.
    int n0 = 1;
    int max_segments = 64;
    bool tail_correction = true;
    /// Adds -G''(2 K pi) (central differences) to the tail term.
    bool second_order_tail = false;
    CfSettings forward{};
    double quantile_prob_tol = 1e-10;
    double quantile_rel_width = 1e-9;
    int max_bisections = 200;
};

struct DniResult {
    double value = 0.0;
    /// Sum over the 2K cycles.
    double truncated = 0.0;
    /// Tail correction actually added (0 when disabled).
    double tail = 0.0;
    /// Segments used per cycle.
    std::vector<int> segments;
};

namespace detail {

inline void check_dni_settings(const DniSettings& s)
{
    if (s.K < 1 || s.n0 < 1 || s.max_segments < 1 || !(s.forward.forward_tol > 0.0))
        throw std::invalid_argument("DNI settings: need K >= 1, n0 >= 1, forward_tol > 0");
}

/// Integrates m(x) w(x) over consecutive pi-cycles, where m is the slowly
/// varying factor Re chi(x/z) and w the known kernel. Each cycle is split
/// into n_k equal segments with a 7-point Gauss rule. n_k follows the
/// previous cycle's sign changes and steepest slope of m relative to the
/// first cycle: n_k = round(n0 max(count ratio, slope ratio)), clamped to
/// [1, max_segments].
template <class M, class W>
double integrate_pi_cycles(M&& m, W&& w, const std::vector<std::pair<double, double>>& cycles,
                           const DniSettings& s, std::vector<int>& segments)
{
    CompensatedSum sum;
    int n = s.n0;
    double base_count = 1.0;
    double base_slope = 0.0;
    std::vector<double> xs;
    std::vector<double> ms;
    for (std::size_t k = 0; k < cycles.size(); ++k) {
        const auto [a, b] = cycles[k];
        segments.push_back(n);
        xs.clear();
        ms.clear();
        const double d = (b - a) / n;
        for (int j = 0; j < n; ++j) {
            const double lo = a + j * d;
            const double hi = lo + d;
            double acc = 0.0;
            for (std::size_t i = 0; i < 7; ++i) {
                const double x = 0.5 * (lo + hi + Gauss7::nodes[i] * d);
                const double mx = m(x);
                xs.push_back(x);
                ms.push_back(mx);
                acc += Gauss7::weights[i] * mx * w(x);
            }
            sum += 0.5 * d * acc;
        }
        int count = 0;
        double slope = 0.0;
        for (std::size_t i = 1; i < xs.size(); ++i) {
            if ((ms[i] > 0.0) != (ms[i - 1] > 0.0))
                ++count;
            slope = std::max(slope, std::fabs(ms[i] - ms[i - 1]) / (xs[i] - xs[i - 1]));
        }
        if (k == 0) {
            base_count = std::max(count, 1);
            base_slope = slope;
        }
        const double count_ratio = count / base_count;
        const double slope_ratio = base_slope > 0.0 ? slope / base_slope : (slope > 0.0 ? 1.0 : 0.0);
        const double target = std::round(s.n0 * std::max(count_ratio, slope_ratio));
        n = static_cast<int>(std::clamp(target, 1.0, static_cast<double>(s.max_segments)));
    }
    return sum.value();
}

} // namespace detail

/// Distribution function of a compound law with nonnegative support,
///   H(z) = (2/pi) int_0^inf Re chi(x/z) sin(x)/x dx,
/// summed over pi-cycles up to 2 K pi, plus the one-point tail term
/// G(2 K pi) = (2/pi) Re chi(2 K pi / z) / (2 K pi).
inline DniResult dni_cdf_detail(const FrequencyModel& freq, const SeverityModel& sev, double z,
                                const DniSettings& s = {}, CfCache* cache = nullptr)
{
    detail::check_dni_settings(s);
    if (!(z > 0.0) || !std::isfinite(z))
        throw std::domain_error("dni_cdf: z must be > 0");
    if (!sev.positive_support())
        throw std::invalid_argument("dni_cdf: severity must have nonnegative support");

    CfCache local(1u << 16);
    CfCache& memo = cache ? *cache : local;
    auto re_chi = [&](double x) {
        const double t = x / z;
        const auto phi = memo.get_or_compute(t, [&](double tt) { return sev_cf(sev, tt, s.forward); });
        return compound_cf_from_phi(freq, phi).real();
    };

    std::vector<std::pair<double, double>> cycles;
    for (int k = 0; k < 2 * s.K; ++k)
        cycles.emplace_back(k * std::numbers::pi, (k + 1) * std::numbers::pi);

    DniResult out;
    const double integral = detail::integrate_pi_cycles(
        re_chi, [](double x) { return std::sin(x) / x; }, cycles, s, out.segments);
    out.truncated = 2.0 / std::numbers::pi * integral;
    if (s.tail_correction) {
        const double x = 2.0 * s.K * std::numbers::pi;
        auto g = [&](double y) { return 2.0 / std::numbers::pi * re_chi(y) / y; };
        out.tail = g(x);
        if (s.second_order_tail) {
            const double h = std::numbers::pi / 8.0;
            out.tail -= (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
        }
    }
    out.value = out.truncated + out.tail;
    return out;
}

inline double dni_cdf(const FrequencyModel& freq, const SeverityModel& sev, double z,
                      const DniSettings& s = {})
{
    return dni_cdf_detail(freq, sev, z, s).value;
}

struct DniQuantile {
    double value = 0.0;
    double cdf = 0.0;
    /// alpha <= Pr[Z = 0]: the quantile is the atom at zero.
    bool atom_at_zero = false;
    int iterations = 0;
};

/// Bisection on dni_cdf. The bracket starts at [0, 10 g] with g the larger
/// of the heavy-tail and normal approximations and doubles until it
/// contains the quantile.
inline DniQuantile dni_quantile(const FrequencyModel& freq, const SeverityModel& sev, double alpha,
                                const DniSettings& s = {})
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("dni_quantile: alpha must lie in (0,1)");
    DniQuantile out;
    const double p0 = freq.pmf(0);
    if (alpha <= p0) {
        out.atom_at_zero = true;
        out.cdf = p0;
        return out;
    }
    double lo = 0.0;
    double hi = 10.0 * quantile_guess(freq, sev, alpha);
    double h_hi = dni_cdf(freq, sev, hi, s);
    for (int i = 0; h_hi < alpha; ++i) {
        if (i == 60)
            throw std::runtime_error("dni_quantile: could not bracket the quantile");
        lo = hi;
        hi *= 2.0;
        h_hi = dni_cdf(freq, sev, hi, s);
    }
    double mid = hi;
    double h_mid = h_hi;
    for (int it = 0; it < s.max_bisections; ++it) {
        out.iterations = it + 1;
        mid = 0.5 * (lo + hi);
        h_mid = dni_cdf(freq, sev, mid, s);
        if (std::fabs(h_mid - alpha) < s.quantile_prob_tol)
            break;
        if (h_mid >= alpha)
            hi = mid;
        else
            lo = mid;
        if (hi - lo < s.quantile_rel_width * hi) {
            mid = 0.5 * (lo + hi);
            h_mid = dni_cdf(freq, sev, mid, s);
            break;
        }
    }
    out.value = mid;
    out.cdf = h_mid;
    return out;
}

struct DniRefined {
    DniQuantile quantile;
    /// Settings of the last (accepted) run.
    DniSettings settings;
    bool converged = false;
};

/// Doubles K and n0 from `start` until two successive quantiles differ by
/// less than `rel_tol` relative.
inline DniRefined dni_quantile_refined(const FrequencyModel& freq, const SeverityModel& sev, double alpha,
                                       DniSettings start = {}, double rel_tol = 1e-6, int max_doublings = 4)
{
    DniRefined out;
    out.settings = start;
    out.quantile = dni_quantile(freq, sev, alpha, start);
    if (out.quantile.atom_at_zero) {
        out.converged = true;
        return out;
    }
    for (int i = 0; i < max_doublings; ++i) {
        DniSettings next = out.settings;
        next.K *= 2;
        next.n0 = std::min(2 * next.n0, next.max_segments);
        const auto q = dni_quantile(freq, sev, alpha, next);
        const bool done = std::fabs(q.value - out.quantile.value) < rel_tol * q.value;
        out.quantile = q;
        out.settings = next;
        if (done) {
            out.converged = true;
            break;
        }
    }
    return out;
}

/// Expected shortfall above q given H(q):
///   ES = [E Z - H(q) q + (2q/pi) int_0^inf Re chi(x/q) (1 - cos x)/x^2 dx] / (1 - H(q)).
/// The integral runs over pi-cycles up to X = (2K - 1/2) pi, where cos X = 0;
/// the remainder is int_X^inf g dx - g(X) with g = Re chi(x/q)/x^2, the
/// first part integrated numerically after x = X/s.
inline double es_via_cf(const FrequencyModel& freq, const SeverityModel& sev, double q, double hq,
                        const DniSettings& s = {})
{
    detail::check_dni_settings(s);
    if (!(q > 0.0))
        throw std::domain_error("es_via_cf: q must be > 0");
    if (!(hq >= 0.0 && hq < 1.0))
        throw std::domain_error("es_via_cf: H(q) must lie in [0,1)");
    const auto mean_x = sev.mean();
    if (mean_x.is_infinite())
        throw std::domain_error("ES undefined: severity mean is infinite");
    const double ez = freq.mean() * mean_x.value();

    CfCache memo(1u << 16);
    auto re_chi = [&](double x) {
        const auto phi = memo.get_or_compute(x / q, [&](double tt) { return sev_cf(sev, tt, s.forward); });
        return compound_cf_from_phi(freq, phi).real();
    };
    auto kernel = [](double x) {
        const double sh = std::sin(0.5 * x);
        return 2.0 * sh * sh / (x * x);
    };

    std::vector<std::pair<double, double>> cycles;
    for (int k = 0; k < 2 * s.K - 1; ++k)
        cycles.emplace_back(k * std::numbers::pi, (k + 1) * std::numbers::pi);
    const double x_end = (2.0 * s.K - 0.5) * std::numbers::pi;
    cycles.emplace_back((2.0 * s.K - 1.0) * std::numbers::pi, x_end);
    std::vector<int> segs;
    double integral = detail::integrate_pi_cycles(re_chi, kernel, cycles, s, segs);

    const double p0 = freq.pmf(0);
    auto remainder = [&](double sv) {
        if (sv <= 0.0)
            return 0.0;
        return (re_chi(x_end / sv) - p0) / x_end;
    };
    const double smooth =
        p0 / x_end + adaptive_gk15(remainder, 0.0, 1.0, 1e-10, 12).value;
    integral += smooth - re_chi(x_end) / (x_end * x_end);

    return (ez - hq * q + 2.0 * q / std::numbers::pi * integral) / (1.0 - hq);
}

} // namespace aggdist
