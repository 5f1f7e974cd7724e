// Upper and lower bounds on the compound cdf from forward and backward
// discretisation, next to the central estimate.
#include <cstdio>

#include "aggdist/aggdist.hpp"

int main()
{
    using namespace aggdist;
    const auto freq = FrequencyModel::poisson(100);
    const auto sev = SeverityModel::lognormal(0, 2);
    const double alpha = 0.999;

    const auto central = panjer_to_quantile(freq, sev, 1.0, alpha, DiscretisationMode::Central);
    const auto upper = panjer_to_quantile(freq, sev, 1.0, alpha, DiscretisationMode::Forward);
    const auto lower = panjer_to_quantile(freq, sev, 1.0, alpha, DiscretisationMode::Backward);

    const auto b = quantile_bounds(upper, lower, alpha);
    std::printf("quantile in (%g, %g], central estimate %g\n", b.lower, b.upper, var_from_grid(central, alpha));
    std::printf("ES (central grid, run to 1 - 1e-7): %.6g\n",
                es_from_grid(panjer_to_quantile(freq, sev, 1.0, 1.0 - 1e-7), alpha));
}
