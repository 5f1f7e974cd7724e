// Acceptance runner: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "aggdist/aggdist.hpp"
#include "checks.hpp"

using namespace aggdist;
using checks::fmt;
using checks::Verdict;

namespace {

const FrequencyModel kPois100 = FrequencyModel::poisson(100);
const SeverityModel kLn02 = SeverityModel::lognormal(0, 2);

Verdict ladder()
{
    Verdict v;
    const double steps[] = {16, 8, 4, 2, 1, 0.5, 0.25, 0.125, 0.0625};
    const double expected[] = {5760, 5800, 5828, 5842, 5849, 5851.5, 5852.75, 5853, 5853.0625};
    for (int i = 0; i < 9; ++i) {
        const double q = var_from_grid(panjer_to_quantile(kPois100, kLn02, steps[i], 0.999), 0.999);
        if (q != expected[i])
            v.fail(fmt("step %g: %.10g, expected %.10g", steps[i], q, expected[i]));
    }
    if (v.ok)
        v.detail = "9 steps exact";
    return v;
}

Verdict bounds()
{
    Verdict v;
    const auto fwd = panjer_to_quantile(kPois100, kLn02, 1.0, 0.999, DiscretisationMode::Forward);
    const auto bwd = panjer_to_quantile(kPois100, kLn02, 1.0, 0.999, DiscretisationMode::Backward);
    const double central = var_from_grid(panjer_to_quantile(kPois100, kLn02, 1.0, 0.999), 0.999);
    const auto b = quantile_bounds(fwd, bwd, 0.999);
    if (b.lower != 5811 || b.upper != 5914 || central != 5849)
        v.fail(fmt("interval [%g, %g], central %g", b.lower, b.upper, central));
    else
        v.detail = fmt("[%g, %g], central %g", b.lower, b.upper, central);
    return v;
}

Verdict fft_table()
{
    Verdict v;
    const double absorbed[] = {5117, 5703.5, 5828, 5848.5, 5851.5, 5851.5};
    const double ignored[] = {5665.5, 5834, 5850, 5851.5, 5851.5, 5851.5};
    auto q = [](int r, double theta, TailPolicy tail) {
        const std::size_t m = std::size_t{1} << r;
        return var_from_grid(
            compound_via_fft(kPois100, kLn02, 0.5, m, theta, DiscretisationMode::Central, tail), 0.999);
    };
    for (int r = 14; r <= 19; ++r) {
        const double theta = default_tilt(std::size_t{1} << r);
        const double got[] = {q(r, theta, TailPolicy::AbsorbLast), q(r, theta, TailPolicy::Ignore),
                              q(r, 0.0, TailPolicy::AbsorbLast), q(r, 0.0, TailPolicy::Ignore)};
        const double want[] = {5851.5, 5851.5, absorbed[r - 14], ignored[r - 14]};
        for (int k = 0; k < 4; ++k)
            if (got[k] != want[k])
                v.fail(fmt("r = %g, variant %g: %.10g", r, k, got[k]) + fmt(", expected %.10g", want[k]));
    }
    if (v.ok)
        v.detail = "24 entries exact";
    return v;
}

Verdict dni_table()
{
    Verdict v;
    const int ks[] = {2, 3, 4, 5, 10, 20, 40, 80};
    const double with[] = {0.9999174, 0.9993260, 0.9991075, 0.9990135, 0.9989910, 0.9990002, 0.9990000, 0.9990000};
    const double without[] = {0.9938318, 1.0093983, 1.0110203, 1.0080086,
                              0.9980471, 0.9990605, 0.9989996, 0.9990000};
    double worst = 0.0;
    for (int i = 0; i < 8; ++i)
        for (bool tail : {true, false}) {
            DniSettings s;
            s.K = ks[i];
            s.n0 = 1;
            s.tail_correction = tail;
            const double h = dni_cdf(kPois100, kLn02, 5853.1, s);
            const double d = std::fabs(h - (tail ? with[i] : without[i]));
            worst = std::max(worst, d);
            if (!(d <= 5e-7))
                v.fail(fmt("K = %g, tail %g: %.9f", ks[i], tail, h));
        }
    if (v.ok)
        v.detail = fmt("16 entries, max |diff| %.2g", worst);
    return v;
}

struct Cell {
    const char* name;
    double lambda;
    SeverityModel sev;
    double target;
    double step;
    bool panjer;
};

Verdict cross_method()
{
    Verdict v;
    const std::vector<Cell> cells = {
        {"LN l=0.1", 0.1, kLn02, 105.36, 1.0 / 512, true},
        {"LN l=10", 10, kLn02, 1779.1, 1.0 / 64, true},
        {"LN l=1000", 1000, kLn02, 21149, 1.0 / 16, true},
        {"GPD l=0.1", 0.1, SeverityModel::gpd(1, 1), 99.352, 1.0 / 512, true},
        {"GPD l=10", 10, SeverityModel::gpd(1, 1), 10081, 1.0 / 16, true},
        {"GPD l=1000", 1000, SeverityModel::gpd(1, 1), 1.0128e6, 0.5, false},
    };
    const double alpha = 0.999;
    const std::uint64_t K = 1000000;
    for (const auto& c : cells) {
        const auto f = FrequencyModel::poisson(c.lambda);
        auto check = [&](const char* engine, double q) {
            if (!checks::matches_printed(q, c.target, 5))
                v.fail(std::string(c.name) + " " + engine + fmt(": %.8g vs %.5g", q, c.target));
        };
        if (c.panjer)
            check("panjer", var_from_grid(panjer_to_quantile(f, c.sev, c.step, alpha), alpha));
        check("fft", var_from_grid(fft_to_quantile(f, c.sev, c.step, alpha), alpha));
        const auto dni = dni_quantile_refined(f, c.sev, alpha);
        check("dni", dni.quantile.value);

        const auto run = simulate_compound(f, c.sev, K, 1, alpha_min_for_ci(K, alpha, 0.95));
        const double q = mc_quantile(run, alpha);
        const double se = mc_quantile_ci(run, alpha, 0.95).stderr_estimate;
        if (!(std::fabs(q - c.target) <= 3.0 * se))
            v.fail(std::string(c.name) + fmt(" mc: %.6g, se %.3g vs %.5g", q, se, c.target));
        std::fprintf(stderr, "  %-11s dni %.8g (K = %d)  mc %.6g (%.3g)\n", c.name, dni.quantile.value,
                     dni.settings.K, q, se);
    }
    if (v.ok)
        v.detail = "6 cells, panjer/fft/dni to 5 s.f., mc within 3 se";
    return v;
}

Verdict moments()
{
    Verdict v;
    const auto m = compound_central_moments(kPois100, kLn02);
    const auto fit = translated_gamma_fit(kPois100, kLn02);
    auto within = [&](const char* what, double x, double printed, double unit) {
        if (!(std::fabs(x - printed) <= unit))
            v.fail(std::string(what) + fmt(": %.10g vs %.10g", x, printed));
    };
    within("mean", m.mean.value(), 738.9056, 1e-4);
    within("variance", m.variance.value(), 298095.7987, 1e-4);
    within("skewness", m.skewness.value(), 40.3428, 1e-4);
    if (!fit) {
        v.fail("no translated gamma fit");
        return v;
    }
    within("shape", fit->shape, 0.002457, 1e-6);
    within("scale", fit->scale, 11013.2329, 1e-4);
    within("shift", fit->shift, 711.8385, 1e-4);
    if (v.ok)
        v.detail = "moments and fit within one printed unit";
    return v;
}

Verdict mc_ci()
{
    Verdict v;
    const auto ci = quantile_ci_indices(50000, 0.999, 0.95);
    if (ci.r != 49936 || ci.s != 49964 || ci.center != 49951)
        v.fail(fmt("indices r %g, s %g, center %g", ci.r, ci.s, ci.center));
    const auto f = kPois100;
    const double q = dni_quantile_refined(f, kLn02, 0.9).quantile.value;
    const std::uint64_t K = 10000;
    const double amin = alpha_min_for_ci(K, 0.9, 0.95);
    int hits = 0;
    for (int rep = 1; rep <= 200; ++rep) {
        const auto c = mc_quantile_ci(simulate_compound(f, kLn02, K, rep, amin), 0.9, 0.95);
        hits += c.lower <= q && q <= c.upper;
    }
    if (hits < 186)
        v.fail(fmt("coverage %g/200 below 93%%", hits));
    if (v.ok)
        v.detail = fmt("indices exact, coverage %g/200", hits);
    return v;
}

Verdict properties()
{
    Verdict v;
    const std::pair<const char*, std::function<Verdict()>> suites[] = {
        {"brute force", [] { return checks::panjer_matches_brute_force(); }},
        {"fft", [] { return checks::fft_identities(); }},
        {"tilt", [] { return checks::tilt_roundtrip(); }},
        {"bounds", [] { return checks::bound_ordering(); }},
        {"cf", [] { return checks::cf_bounded(); }},
        {"atom", [] { return checks::atom_at_zero(); }},
        {"stabilised", [] { return checks::stabilised_equals_fft(); }},
    };
    for (const auto& [name, run] : suites) {
        const auto r = run();
        if (!r.ok)
            v.fail(std::string(name) + ": " + r.detail);
    }
    if (v.ok)
        v.detail = "7 suites";
    return v;
}

} // namespace

int main()
{
    struct Criterion {
        const char* name;
        double budget;
        Verdict (*run)();
    };
    const Criterion criteria[] = {
        {"panjer convergence ladder", 60, ladder},
        {"panjer quantile bounds", 10, bounds},
        {"fft tilting table", 30, fft_table},
        {"dni truncation table", 60, dni_table},
        {"cross-method matrix", 900, cross_method},
        {"moments and translated gamma", 1, moments},
        {"mc confidence intervals", 120, mc_ci},
        {"property suites", 120, properties},
    };
    int failed = 0;
    int i = 0;
    for (const auto& c : criteria) {
        ++i;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (v.ok && secs > c.budget)
            v.fail(fmt("over budget: %.1f s > %g s", secs, c.budget));
        failed += !v.ok;
        std::printf("%s %d %s: %s (%.1f s)\n", v.ok ? "PASS" : "FAIL", i, c.name, v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
