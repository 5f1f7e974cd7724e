#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aggdist/discretise.hpp"
#include "aggdist/distributions.hpp"
#include "aggdist/grid.hpp"
#include "aggdist/numeric.hpp"

namespace aggdist {

enum class FftDirection { Forward, Inverse };

/// Power-of-two complex sequence transformed in place.
///
/// Forward: phi_k = sum_m f_m exp(+2 pi i m k / M)
/// Inverse: f_k = (1/M) sum_m phi_m exp(-2 pi i m k / M)
///
/// Note the sign convention: the forward transform uses the characteristic
/// function sign (+i), so a lattice pmf maps to its characteristic function
/// sampled at t_k = 2 pi k / (M step).
class SpectralBuffer {
public:
    explicit SpectralBuffer(std::size_t length) : values_(length)
    {
        check_length(length);
    }

    explicit SpectralBuffer(std::vector<std::complex<double>> values) : values_(std::move(values))
    {
        check_length(values_.size());
    }

    static SpectralBuffer from_real(std::span<const double> x, std::size_t length)
    {
        if (x.size() > length)
            throw std::invalid_argument("input longer than transform length");
        SpectralBuffer b(length);
        for (std::size_t i = 0; i < x.size(); ++i)
            b.values_[i] = x[i];
        return b;
    }

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    std::complex<double>& operator[](std::size_t i) noexcept { return values_[i]; }
    const std::complex<double>& operator[](std::size_t i) const noexcept { return values_[i]; }
    [[nodiscard]] std::span<std::complex<double>> values() noexcept { return values_; }
    [[nodiscard]] std::span<const std::complex<double>> values() const noexcept { return values_; }

private:
    static void check_length(std::size_t n)
    {
        if (n < 2 || !is_power_of_two(n))
            throw std::invalid_argument("FFT length must be a power of two >= 2, got " +
                                        std::to_string(n));
    }
    std::vector<std::complex<double>> values_;
};

namespace detail {

/// exp(+2 pi i k / M) for k < M/2, each entry evaluated directly so the
/// table carries no recurrence error.
inline std::vector<std::complex<double>> twiddles(std::size_t m)
{
    std::vector<std::complex<double>> w(m / 2);
    for (std::size_t k = 0; k < m / 2; ++k) {
        const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
        w[k] = {std::cos(ang), std::sin(ang)};
    }
    return w;
}

inline void bit_reverse_permute(std::span<std::complex<double>> x)
{
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(x[i], x[j]);
    }
}

} // namespace detail

/// Radix-2 decimation-in-time: bit-reversal permutation followed by log2(M)
/// butterfly stages. Twiddles are tabulated once per call.
inline void fft_transform(SpectralBuffer& buf, FftDirection dir)
{
    auto x = buf.values();
    const std::size_t n = x.size();
    const auto w = detail::twiddles(n);
    detail::bit_reverse_permute(x);

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                std::complex<double> tw = w[k * stride];
                if (dir == FftDirection::Inverse)
                    tw = std::conj(tw);
                const auto u = x[start + k];
                const auto v = x[start + k + half] * tw;
                x[start + k] = u + v;
                x[start + k + half] = u - v;
            }
        }
    }
    if (dir == FftDirection::Inverse) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : x)
            v *= scale;
    }
}

/// Linear convolution of two real sequences, truncated to `out_len` terms,
/// via zero-padded FFT.
inline std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b,
                                        std::size_t out_len)
{
    if (a.empty() || b.empty() || out_len == 0)
        return std::vector<double>(out_len, 0.0);
    const std::size_t full = a.size() + b.size() - 1;
    // len >= full leaves no circular wrap-around.
    const std::size_t len = std::max<std::size_t>(2, next_power_of_two(full));
    auto fa = SpectralBuffer::from_real(a, len);
    auto fb = SpectralBuffer::from_real(b, len);
    fft_transform(fa, FftDirection::Forward);
    fft_transform(fb, FftDirection::Forward);
    for (std::size_t i = 0; i < len; ++i)
        fa[i] *= fb[i];
    fft_transform(fa, FftDirection::Inverse);
    std::vector<double> out(out_len, 0.0);
    for (std::size_t i = 0; i < std::min(out_len, full); ++i)
        out[i] = fa[i].real();
    return out;
}

/// Direct O(n m) lattice convolution, truncated to `out_len` terms.
inline std::vector<double> direct_convolve(std::span<const double> a, std::span<const double> b,
                                           std::size_t out_len)
{
    std::vector<double> out(out_len, 0.0);
    for (std::size_t n = 0; n < out_len; ++n) {
        CompensatedSum acc;
        const std::size_t lo = n >= b.size() ? n - b.size() + 1 : 0;
        for (std::size_t i = lo; i <= n && i < a.size(); ++i)
            acc += a[i] * b[n - i];
        out[n] = acc.value();
    }
    return out;
}

/// f_j -> exp(-j theta) f_j (sign = -1) or the inverse map (sign = +1).
inline std::vector<double> tilt(std::span<const double> f, double theta, int sign = -1)
{
    std::vector<double> out(f.size());
    for (std::size_t j = 0; j < f.size(); ++j)
        out[j] = f[j] * std::exp(sign * theta * static_cast<double>(j));
    return out;
}

inline std::vector<double> untilt(std::span<const double> f, double theta)
{
    return tilt(f, theta, +1);
}

/// Default tilt rate for a transform of length M.
inline double default_tilt(std::size_t m) { return 20.0 / static_cast<double>(m); }

/// Compound lattice distribution by FFT with optional exponential tilting:
/// tilt the severity, transform, apply the frequency pgf pointwise,
/// transform back, untilt. theta = 0 disables tilting.
inline CompoundGrid compound_via_fft(const DiscreteSeverity& disc, const FrequencyModel& freq,
                                     std::size_t m, double theta)
{
    if (!is_power_of_two(m) || m < 2)
        throw std::invalid_argument("compound_via_fft: M must be a power of two");
    if (disc.size() > m)
        throw std::invalid_argument("compound_via_fft: discretisation longer than M");
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw std::invalid_argument("compound_via_fft: tilt must be >= 0");
    // exp(theta (M-1)) must stay well inside double range, leaving headroom
    // for the density values it multiplies.
    if (theta * static_cast<double>(m - 1) > 600.0)
        throw std::invalid_argument("compound_via_fft: tilt too large, untilting would overflow");

    const auto tilted = theta > 0.0 ? tilt(disc.probs, theta) : disc.probs;
    auto buf = SpectralBuffer::from_real(tilted, m);
    fft_transform(buf, FftDirection::Forward);

    // The largest spectral modulus is at k = 0; if even that maps to an
    // unrepresentable compound value the whole window carries no mass.
    const double log_top = freq.log_pgf(std::complex<double>(buf[0].real(), 0.0)).real();
    if (log_top < -740.0)
        throw UnderflowError("compound_via_fft: pgf underflows over the whole window (log psi = " +
                             std::to_string(log_top) + "); shorten the tilt or use the scaled Panjer path");

    for (std::size_t k = 0; k < m; ++k)
        buf[k] = freq.pgf(buf[k]);
    fft_transform(buf, FftDirection::Inverse);

    std::vector<double> h(m);
    for (std::size_t j = 0; j < m; ++j)
        h[j] = buf[j].real();
    if (theta > 0.0)
        h = untilt(h, theta);

    auto grid = make_grid(disc.step, std::move(h), "fft");
    grid.settings["M"] = std::to_string(m);
    grid.settings["theta"] = detail::format_number(theta);
    grid.settings["step"] = detail::format_number(disc.step);
    grid.settings["tail"] = std::string(to_string(disc.tail_policy));
    return grid;
}

/// Convenience: discretise (central, tail absorbed into the last point) on
/// M points and run the tilted FFT.
inline CompoundGrid compound_via_fft(const FrequencyModel& freq, const SeverityModel& sev,
                                     double step, std::size_t m, double theta,
                                     DiscretisationMode mode = DiscretisationMode::Central,
                                     TailPolicy tail = TailPolicy::AbsorbLast)
{
    return compound_via_fft(discretise(sev, step, m, mode, tail), freq, m, theta);
}

} // namespace aggdist
