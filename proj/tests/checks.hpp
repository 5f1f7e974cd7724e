#pragma once

// Engine-independent property checks shared by the unit tests and the
// acceptance runner. Each returns a verdict plus a one-line detail.

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "aggdist/aggdist.hpp"

namespace checks {

struct Verdict {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why)
    {
        if (ok)
            detail = why;
        ok = false;
    }
};

inline std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

/// x rounded to `digits` significant figures.
inline double round_sig(double x, int digits)
{
    if (x == 0.0)
        return 0.0;
    const double e = std::floor(std::log10(std::fabs(x))) + 1.0 - digits;
    const double scale = std::pow(10.0, e);
    return std::round(x / scale) * scale;
}

inline bool same_sig(double x, double target, int digits)
{
    const double a = round_sig(x, digits);
    const double b = round_sig(target, digits);
    return std::fabs(a - b) <= 1e-9 * std::fabs(b);
}

/// x agrees with a printed `digits`-figure value that may be rounded or
/// truncated: x in [target - u/2, target + u), u one unit of the last digit.
inline bool matches_printed(double x, double target, int digits)
{
    const double u = std::pow(10.0, std::floor(std::log10(std::fabs(target))) + 1.0 - digits);
    const double slack = 1e-9 * std::fabs(target);
    return x >= target - 0.5 * u - slack && x < target + u + slack;
}

/// O(M^2) DFT with the library's sign convention (+i forward).
inline std::vector<std::complex<double>> direct_dft(const std::vector<std::complex<double>>& x)
{
    const std::size_t m = x.size();
    std::vector<std::complex<double>> out(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::complex<double> acc{};
        for (std::size_t j = 0; j < m; ++j) {
            const double ang = 2.0 * std::numbers::pi * static_cast<double>((j * k) % m) / static_cast<double>(m);
            acc += x[j] * std::polar(1.0, ang);
        }
        out[k] = acc;
    }
    return out;
}

struct RandomCase {
    aggdist::FrequencyModel freq;
    aggdist::SeverityModel sev;
    double step;
    aggdist::DiscretisationMode mode;
};

inline RandomCase random_case(std::mt19937_64& rng)
{
    using namespace aggdist;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto pick = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    const int fk = static_cast<int>(rng() % 3);
    const int sk = static_cast<int>(rng() % 3);
    const int mk = static_cast<int>(rng() % 3);
    const double steps[] = {0.25, 0.5, 1.0, 2.0};
    const FrequencyModel freq = fk == 0   ? FrequencyModel::poisson(pick(0.5, 20.0))
                                : fk == 1 ? FrequencyModel::negbin(pick(0.5, 5.0), pick(0.2, 0.8))
                                          : FrequencyModel::binomial(1 + static_cast<long>(rng() % 30),
                                                                     pick(0.05, 0.6));
    const SeverityModel sev = sk == 0   ? SeverityModel::lognormal(pick(-1.0, 1.0), pick(0.5, 2.0))
                              : sk == 1 ? SeverityModel::gamma(pick(0.5, 3.0), pick(0.5, 2.0))
                                        : SeverityModel::gpd(pick(0.1, 1.0), pick(0.5, 2.0));
    const DiscretisationMode mode = mk == 0   ? DiscretisationMode::Central
                                    : mk == 1 ? DiscretisationMode::Forward
                                              : DiscretisationMode::Backward;
    return {freq, sev, steps[rng() % 4], mode};
}

/// Panjer recursion equals brute-force convolution pointwise.
inline Verdict panjer_matches_brute_force(int cases = 20, std::size_t n_max = 50, double tol = 1e-12,
                                          std::uint64_t seed = 20240607)
{
    using namespace aggdist;
    Verdict v;
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const auto rc = random_case(rng);
        const auto disc = discretise(rc.sev, rc.step, n_max + 1, rc.mode, TailPolicy::Ignore);
        const auto pan = panjer_recursion(disc, panjer_params(rc.freq, disc[0]), StopAtIndex{n_max});
        const auto bf = brute_force_convolution(disc, rc.freq, n_max);
        for (std::size_t n = 0; n <= n_max; ++n) {
            const double d = std::fabs(pan.density[n] - bf.density[n]);
            worst = std::max(worst, d);
            if (!(d <= tol))
                v.fail(rc.freq.to_string() + " / " + rc.sev.to_string() + fmt(": |diff| %.3g at n = %.0f", d, n));
        }
    }
    if (v.ok)
        v.detail = fmt("%.0f cases, max |diff| %.2g", cases, worst);
    return v;
}

/// Roundtrip, direct DFT and FFT convolution against direct convolution,
/// the latter also through tilted sequences.
inline Verdict fft_identities(std::uint64_t seed = 7)
{
    using namespace aggdist;
    Verdict v;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t m = 64;
    std::vector<std::complex<double>> x(m);
    for (auto& c : x)
        c = {u(rng), u(rng)};

    SpectralBuffer buf(x);
    fft_transform(buf, FftDirection::Forward);
    const auto ref = direct_dft(x);
    double dft_err = 0.0;
    for (std::size_t k = 0; k < m; ++k)
        dft_err = std::max(dft_err, std::abs(buf[k] - ref[k]));
    fft_transform(buf, FftDirection::Inverse);
    double rt_err = 0.0;
    for (std::size_t k = 0; k < m; ++k)
        rt_err = std::max(rt_err, std::abs(buf[k] - x[k]));
    if (!(dft_err <= 1e-10))
        v.fail(fmt("direct DFT mismatch %.3g", dft_err));
    if (!(rt_err <= 1e-12))
        v.fail(fmt("roundtrip error %.3g", rt_err));

    std::uniform_real_distribution<double> p(0.0, 1.0);
    std::vector<double> a(40), b(25);
    for (auto& t : a)
        t = p(rng);
    for (auto& t : b)
        t = p(rng);
    const std::size_t len = a.size() + b.size() - 1;
    const auto direct = direct_convolve(a, b, len);
    const auto viafft = fft_convolve(a, b, len);
    const double theta = 0.1;
    const auto tilted = untilt(fft_convolve(tilt(a, theta), tilt(b, theta), len), theta);
    double conv_err = 0.0;
    double tilt_err = 0.0;
    for (std::size_t n = 0; n < len; ++n) {
        conv_err = std::max(conv_err, std::fabs(direct[n] - viafft[n]));
        tilt_err = std::max(tilt_err, std::fabs(direct[n] - tilted[n]));
    }
    if (!(conv_err <= 1e-10))
        v.fail(fmt("FFT convolution off by %.3g", conv_err));
    if (!(tilt_err <= 1e-10))
        v.fail(fmt("tilted convolution off by %.3g", tilt_err));
    if (v.ok)
        v.detail = fmt("DFT %.2g, roundtrip %.2g, convolution %.2g", dft_err, rt_err, std::max(conv_err, tilt_err));
    return v;
}

/// untilt(tilt(f, theta), theta) == f for theta M <= 40.
inline Verdict tilt_roundtrip(std::uint64_t seed = 11)
{
    using namespace aggdist;
    Verdict v;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t m = 1024;
    std::vector<double> f(m);
    for (auto& t : f)
        t = u(rng);
    double worst = 0.0;
    for (double tm : {1.0, 20.0, 40.0}) {
        const double theta = tm / static_cast<double>(m);
        const auto back = untilt(tilt(f, theta), theta);
        for (std::size_t j = 0; j < m; ++j)
            worst = std::max(worst, std::fabs(back[j] - f[j]) / std::max(f[j], 1e-300));
    }
    if (!(worst <= 1e-12))
        v.fail(fmt("relative roundtrip error %.3g", worst));
    else
        v.detail = fmt("max relative error %.2g", worst);
    return v;
}

/// H^L_n <= H_n <= H^U_n from backward / central / forward lattices.
inline Verdict bound_ordering(std::size_t n_max = 6000)
{
    using namespace aggdist;
    Verdict v;
    const auto freq = FrequencyModel::poisson(100);
    const auto sev = SeverityModel::lognormal(0, 2);
    auto grid = [&](DiscretisationMode mode) {
        const auto disc = discretise(sev, 1.0, n_max + 1, mode, TailPolicy::Ignore);
        return panjer_recursion(disc, panjer_params(freq, disc[0]), StopAtIndex{n_max});
    };
    const auto lo = grid(DiscretisationMode::Backward);
    const auto mid = grid(DiscretisationMode::Central);
    const auto hi = grid(DiscretisationMode::Forward);
    for (std::size_t n = 0; n <= n_max; ++n)
        if (!(lo.cdf[n] <= mid.cdf[n] && mid.cdf[n] <= hi.cdf[n])) {
            v.fail(fmt("ordering broken at n = %.0f: %.12g, %.12g", n, lo.cdf[n], mid.cdf[n]));
            break;
        }
    if (v.ok)
        v.detail = fmt("%.0f lattice points", n_max + 1);
    return v;
}

/// chi(0) = 1 and |chi(t)| <= 1 + 1e-12 on a t ladder.
inline Verdict cf_bounded()
{
    using namespace aggdist;
    Verdict v;
    const std::pair<FrequencyModel, SeverityModel> models[] = {
        {FrequencyModel::poisson(100), SeverityModel::lognormal(0, 2)},
        {FrequencyModel::poisson(2), SeverityModel::gamma(2, 1)},
        {FrequencyModel::negbin(2, 0.5), SeverityModel::gpd(1, 1)},
        {FrequencyModel::binomial(10, 0.3), SeverityModel::lognormal(1, 1)}};
    double worst = 0.0;
    for (const auto& [f, s] : models) {
        const auto c0 = compound_cf(f, s, 0.0);
        if (c0 != std::complex<double>(1.0, 0.0))
            v.fail(f.to_string() + " / " + s.to_string() + ": chi(0) != 1");
        for (double t = 1e-4; t < 1e3; t *= 1.7) {
            const double a = std::abs(compound_cf(f, s, t));
            worst = std::max(worst, a);
            if (!(a <= 1.0 + 1e-12))
                v.fail(f.to_string() + " / " + s.to_string() + fmt(": |chi(%.4g)| = %.15g", t, a));
        }
    }
    if (v.ok)
        v.detail = fmt("max |chi| %.15g", worst);
    return v;
}

/// H(0) = Pr[N = 0]: the backward lattice has f0 = 0, so h0 = p0 exactly,
/// and Re chi(t) -> p0 as t grows.
inline Verdict atom_at_zero()
{
    using namespace aggdist;
    Verdict v;
    const auto sev = SeverityModel::gamma(2, 1);
    for (const auto& f : {FrequencyModel::poisson(3), FrequencyModel::negbin(2.5, 0.4)}) {
        const double p0 = f.pmf(0);
        const auto disc = discretise(sev, 0.5, 64, DiscretisationMode::Backward, TailPolicy::Ignore);
        const auto g = panjer_recursion(disc, panjer_params(f, disc[0]), StopAtIndex{63});
        if (!(std::fabs(g.cdf[0] - p0) <= 1e-15 * p0))
            v.fail(f.to_string() + fmt(": H(0) = %.17g vs p0 = %.17g", g.cdf[0], p0));
        const double chi = compound_cf(f, sev, 1e6).real();
        if (!(std::fabs(chi - p0) <= 1e-9))
            v.fail(f.to_string() + fmt(": Re chi(1e6) = %.12g vs p0 = %.12g", chi, p0));
    }
    if (v.ok)
        v.detail = "poisson and negbin";
    return v;
}

/// Poisson(800): scaled Panjer path equals the tilted FFT engine.
inline Verdict stabilised_equals_fft()
{
    using namespace aggdist;
    Verdict v;
    const auto freq = FrequencyModel::poisson(800);
    const auto sev = SeverityModel::lognormal(0, 2);
    const std::size_t len = std::size_t{1} << 15;
    const auto disc = discretise(sev, 1.0, len, DiscretisationMode::Central, TailPolicy::Ignore);
    const auto stab = stabilised_compound(freq, disc, StopAtIndex{len - 1});
    const std::size_t m = std::size_t{1} << 16;
    const auto fft = compound_via_fft(freq, sev, 1.0, m, default_tilt(m));
    if (stab.settings.at("scaling") != "2")
        v.fail("expected scaling m = 2, got " + stab.settings.at("scaling"));
    double worst = 0.0;
    for (std::size_t n = 0; n < len; ++n)
        worst = std::max(worst, std::fabs(stab.cdf[n] - fft.cdf[n]));
    if (!(worst <= 1e-9))
        v.fail(fmt("max cdf difference %.3g", worst));
    if (v.ok)
        v.detail = fmt("max cdf difference %.2g over %.0f points", worst, len);
    return v;
}

} // namespace checks
