#include <gtest/gtest.h>

#include <cmath>

#include "aggdist/aggdist.hpp"

using namespace aggdist;

namespace {

const FrequencyModel kPois100 = FrequencyModel::poisson(100);
const SeverityModel kLn02 = SeverityModel::lognormal(0, 2);

} // namespace

TEST(CompoundMoments, PoissonLognormal)
{
    const auto m = compound_central_moments(kPois100, kLn02);
    EXPECT_NEAR(m.mean.value(), 738.9056, 5e-5);
    EXPECT_NEAR(m.variance.value(), 298095.7987, 5e-5);
    // printed as 40.3428 (truncated); exact e^6 / 10
    EXPECT_NEAR(m.skewness.value(), std::exp(6.0) / 10.0, 1e-9);
    EXPECT_NEAR(m.skewness.value(), 40.3428, 1e-4);
}

TEST(CompoundMoments, SingleLossLimit)
{
    const double eps = 1e-12;
    const auto sev = SeverityModel::gamma(3, 2);
    const auto m = compound_central_moments(FrequencyModel::binomial(1, 1 - eps), sev);
    // Gamma(a, b): mean a b, variance a b^2, skewness 2 / sqrt(a), excess kurtosis 6 / a
    EXPECT_NEAR(m.mean.value(), 6.0, 1e-9);
    EXPECT_NEAR(m.variance.value(), 12.0, 1e-9);
    EXPECT_NEAR(m.skewness.value(), 2.0 / std::sqrt(3.0), 1e-9);
    EXPECT_NEAR(m.kurtosis.value(), 2.0, 1e-9);
}

TEST(CompoundMoments, InfiniteMean)
{
    const auto m = compound_central_moments(FrequencyModel::poisson(10), SeverityModel::gpd(1, 1));
    EXPECT_TRUE(m.mean.is_infinite());
    EXPECT_TRUE(m.variance.is_infinite());
}

TEST(CompoundMoments, PartialFiniteness)
{
    // GPD(0.4) has finite mean and variance but infinite third moment.
    const auto m = compound_central_moments(FrequencyModel::poisson(10), SeverityModel::gpd(0.4, 1));
    EXPECT_TRUE(m.variance.is_finite());
    EXPECT_TRUE(m.central3.is_infinite());
    EXPECT_TRUE(m.skewness.is_infinite());
}

TEST(Cumulants, PoissonVariance)
{
    EXPECT_NEAR(compound_poisson_cumulant(100, kLn02, 2).value(), 100 * std::exp(8.0), 1e-8);
    EXPECT_NEAR(compound_poisson_cumulant(100, kLn02, 2).value(),
                compound_central_moments(kPois100, kLn02).variance.value(), 1e-8);
}

TEST(Cumulants, FirstIsMean)
{
    EXPECT_NEAR(compound_poisson_cumulant(100, kLn02, 1).value(),
                compound_central_moments(kPois100, kLn02).mean.value(), 1e-10);
}

TEST(Cumulants, FourthCentralMoment)
{
    const double k2 = compound_poisson_cumulant(100, kLn02, 2).value();
    const double k4 = compound_poisson_cumulant(100, kLn02, 4).value();
    const double mu4 = compound_central_moments(kPois100, kLn02).central4.value();
    EXPECT_NEAR((k4 + 3 * k2 * k2) / mu4, 1.0, 1e-9);
}

TEST(Cumulants, InfiniteMoment)
{
    EXPECT_TRUE(compound_poisson_cumulant(5, SeverityModel::gpd(0.4, 1), 3).is_infinite());
}

TEST(NormalApprox, Quantile)
{
    const double z = 3.090232306167813;
    const auto q = normal_approx_quantile(kPois100, kLn02, 0.999);
    ASSERT_TRUE(q.available());
    EXPECT_NEAR(*q.value, std::exp(2.0) * 100 + z * std::sqrt(100 * std::exp(8.0)), 1e-8);
    EXPECT_NEAR(*q.value, 2426.1, 0.05);
}

TEST(NormalApprox, MedianIsMean)
{
    EXPECT_NEAR(*normal_approx_quantile(kPois100, kLn02, 0.5).value, 100 * std::exp(2.0), 1e-9);
}

TEST(NormalApprox, InfiniteMomentsUnavailable)
{
    EXPECT_FALSE(normal_approx_quantile(kPois100, SeverityModel::gpd(1, 1), 0.99).available());
}

TEST(TranslatedGamma, ExampleFit)
{
    const auto fit = translated_gamma_fit(kPois100, kLn02);
    ASSERT_TRUE(fit);
    EXPECT_NEAR(fit->shape, 0.002457, 1e-6);
    EXPECT_NEAR(fit->scale, 11013.2329, 1e-4);
    EXPECT_NEAR(fit->shift, 711.8385, 1e-4);
}

TEST(TranslatedGamma, FixedPoint)
{
    const auto fit = TranslatedGammaFit::from_moments(10.0, 4.0, 0.8);
    EXPECT_NEAR(fit.mean(), 10.0, 1e-10);
    EXPECT_NEAR(fit.variance(), 4.0, 1e-10);
    EXPECT_NEAR(fit.skewness(), 0.8, 1e-10);
}

TEST(TranslatedGamma, ZeroSkewRejected)
{
    EXPECT_THROW(TranslatedGammaFit::from_moments(1.0, 1.0, 0.0), std::domain_error);
    EXPECT_FALSE(translated_gamma_quantile(kPois100, SeverityModel::normal(-5, 1), 0.9).available());
}

TEST(HeavyTail, PoissonGpd)
{
    EXPECT_NEAR(*heavy_tail_var(FrequencyModel::poisson(0.1), SeverityModel::gpd(1, 1), 0.999).value, 100.0, 1e-9);
    EXPECT_NEAR(*heavy_tail_var(FrequencyModel::poisson(1000), SeverityModel::gpd(1, 1), 0.999).value, 1e6, 1e-3);
}

TEST(HeavyTail, SingleExpectedLoss)
{
    const auto sev = SeverityModel::lognormal(1, 1.5);
    EXPECT_NEAR(*heavy_tail_var(FrequencyModel::negbin(1, 0.5), sev, 0.99).value, sev.quantile(0.99), 1e-9);
}

TEST(HeavyTail, UndefinedLevel)
{
    EXPECT_FALSE(heavy_tail_var(FrequencyModel::poisson(0.5), kLn02, 0.2).available());
    EXPECT_FALSE(heavy_tail_var(FrequencyModel::poisson(5), SeverityModel::gamma(2, 1), 0.99).available());
}

TEST(RiskMeasures, StepOneVar)
{
    const auto g = panjer_to_quantile(kPois100, kLn02, 1.0, 0.999);
    EXPECT_EQ(var_from_grid(g, 0.999), 5849.0);
}

TEST(RiskMeasures, AtomAtZero)
{
    const auto g = make_grid(0.5, {0.3, 0.2, 0.5}, "test");
    EXPECT_EQ(var_from_grid(g, 0.3), 0.0);
    EXPECT_EQ(var_from_grid(g, 0.1), 0.0);
}

TEST(RiskMeasures, TwoPointGrid)
{
    const auto g = make_grid(2.0, {0.5, 0.5}, "test");
    EXPECT_EQ(var_from_grid(g, 0.75), 2.0);
}

TEST(RiskMeasures, TruncatedGridRejected)
{
    const auto g = make_grid(1.0, {0.5, 0.3}, "test");
    EXPECT_THROW(var_from_grid(g, 0.9), GridTooShortError);
    EXPECT_THROW(es_from_grid(g, 0.5), GridTooShortError);
}

TEST(RiskMeasures, EsPointMass)
{
    const auto g = make_grid(0.25, {0, 0, 0, 0, 0, 0, 1.0}, "test");
    EXPECT_EQ(es_from_grid(g, 0.9), 1.5);
}

TEST(RiskMeasures, EsUniformLattice)
{
    const auto g = make_grid(0.5, {0, 0.25, 0.25, 0.25, 0.25}, "test");
    EXPECT_EQ(var_from_grid(g, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(es_from_grid(g, 0.5), 1.5);
}

TEST(RiskMeasures, MonotoneAndOrdered)
{
    const auto f = FrequencyModel::poisson(2);
    const auto sev = SeverityModel::gamma(2, 1);
    const auto disc = discretise(sev, 0.01, 6001);
    const auto g = panjer_recursion(disc, panjer_params(f, disc[0]), StopAtIndex{6000});
    double prev = -1.0;
    for (double a = 0.2; a < 0.9999; a += 0.01) {
        const double v = var_from_grid(g, a);
        EXPECT_GE(v, prev);
        EXPECT_GE(es_from_grid(g, a), v);
        prev = v;
    }
}
