// 0.999 quantile of Poisson(10)-Lognormal(0,2) from every engine.
#include <cstdio>

#include "aggdist/aggdist.hpp"

int main()
{
    using namespace aggdist;
    const auto freq = FrequencyModel::poisson(10);
    const auto sev = SeverityModel::lognormal(0, 2);
    const double alpha = 0.999;

    const auto panjer = panjer_to_quantile(freq, sev, 0.125, alpha);
    std::printf("panjer   %.6g\n", var_from_grid(panjer, alpha));

    FftOptions opt;
    opt.m = std::size_t{1} << 14;
    const auto fft = fft_to_quantile(freq, sev, 0.125, alpha, opt);
    std::printf("fft      %.6g\n", var_from_grid(fft, alpha));

    DniSettings dni;
    dni.K = 25;
    std::printf("dni      %.6g\n", dni_quantile(freq, sev, alpha, dni).value);

    const auto run = simulate_compound(freq, sev, 200000, 42, 0.99);
    const auto ci = mc_quantile_ci(run, alpha, 0.95);
    std::printf("mc       %.6g  [%.6g, %.6g]\n", mc_quantile(run, alpha), ci.lower, ci.upper);

    std::printf("normal   %.6g\n", *normal_approx_quantile(freq, sev, alpha).value);
    std::printf("tgamma   %.6g\n", *translated_gamma_quantile(freq, sev, alpha).value);
    std::printf("heavy    %.6g\n", *heavy_tail_var(freq, sev, alpha).value);
}
