#include <gtest/gtest.h>

#include <cmath>

#include "aggdist/aggdist.hpp"
#include "checks.hpp"

using namespace aggdist;

namespace {

const FrequencyModel kPois100 = FrequencyModel::poisson(100);
const SeverityModel kLn02 = SeverityModel::lognormal(0, 2);

double fft_quantile(int r, double theta, TailPolicy tail)
{
    const std::size_t m = std::size_t{1} << r;
    return var_from_grid(compound_via_fft(kPois100, kLn02, 0.5, m, theta, DiscretisationMode::Central, tail),
                         0.999);
}

} // namespace

TEST(FftTransform, ZerosStayZero)
{
    SpectralBuffer b(16);
    fft_transform(b, FftDirection::Forward);
    for (std::size_t k = 0; k < 16; ++k)
        EXPECT_EQ(b[k], std::complex<double>(0, 0));
}

TEST(FftTransform, ImpulseGivesFlatSpectrum)
{
    SpectralBuffer b(32);
    b[0] = 1.0;
    fft_transform(b, FftDirection::Forward);
    for (std::size_t k = 0; k < 32; ++k)
        EXPECT_NEAR(std::abs(b[k] - std::complex<double>(1, 0)), 0.0, 1e-15);
}

TEST(FftTransform, RoundtripAndDirectDft)
{
    const auto v = checks::fft_identities();
    EXPECT_TRUE(v.ok) << v.detail;
}

TEST(FftTransform, RejectsBadLength)
{
    EXPECT_THROW(SpectralBuffer(12), std::invalid_argument);
    EXPECT_THROW(SpectralBuffer(1), std::invalid_argument);
}

TEST(Tilt, Roundtrip)
{
    const auto v = checks::tilt_roundtrip();
    EXPECT_TRUE(v.ok) << v.detail;
}

TEST(CompoundFft, TiltedQuantileAtEveryLength)
{
    for (int r = 14; r <= 19; ++r) {
        const double theta = default_tilt(std::size_t{1} << r);
        EXPECT_EQ(fft_quantile(r, theta, TailPolicy::AbsorbLast), 5851.5) << r;
        EXPECT_EQ(fft_quantile(r, theta, TailPolicy::Ignore), 5851.5) << r;
    }
}

TEST(CompoundFft, UntiltedAbsorbed)
{
    const double expected[] = {5117, 5703.5, 5828, 5848.5, 5851.5, 5851.5};
    for (int r = 14; r <= 19; ++r)
        EXPECT_EQ(fft_quantile(r, 0.0, TailPolicy::AbsorbLast), expected[r - 14]) << r;
}

TEST(CompoundFft, UntiltedIgnored)
{
    const double expected[] = {5665.5, 5834, 5850, 5851.5, 5851.5, 5851.5};
    for (int r = 14; r <= 19; ++r)
        EXPECT_EQ(fft_quantile(r, 0.0, TailPolicy::Ignore), expected[r - 14]) << r;
}

TEST(CompoundFft, AliasingShiftsLeft)
{
    for (int r = 14; r <= 16; ++r)
        EXPECT_LE(fft_quantile(r, 0.0, TailPolicy::AbsorbLast),
                  fft_quantile(r, default_tilt(std::size_t{1} << r), TailPolicy::AbsorbLast));
}

TEST(CompoundFft, MatchesPanjerUpToQuantile)
{
    const std::size_t m = std::size_t{1} << 15;
    const auto fft = compound_via_fft(kPois100, kLn02, 0.5, m, default_tilt(m));
    const auto pan = panjer_to_quantile(kPois100, kLn02, 0.5, 0.999);
    double worst = 0.0;
    for (std::size_t n = 0; n < pan.size(); ++n)
        worst = std::max(worst, std::fabs(fft.cdf[n] - pan.cdf[n]));
    EXPECT_LE(worst, 1e-9);
}

TEST(CompoundFft, RejectsOverflowingTilt)
{
    const auto disc = discretise(kLn02, 1.0, 1024);
    EXPECT_THROW(compound_via_fft(disc, kPois100, 1024, 1.0), std::invalid_argument);
}

TEST(CompoundFft, AutoLengthConverges)
{
    const auto g = fft_to_quantile(kPois100, kLn02, 0.5, 0.999);
    EXPECT_EQ(var_from_grid(g, 0.999), 5851.5);
}
