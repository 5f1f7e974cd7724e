#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "aggdist/discretise.hpp"
#include "aggdist/distributions.hpp"
#include "aggdist/fft.hpp"
#include "aggdist/grid.hpp"
#include "aggdist/numeric.hpp"

namespace aggdist {

enum class PanjerClass { AB0, AB1, ABl };

/// Recursion coefficients p_n = (a + b/n) p_{n-1} and the starting value
/// h_0 = psi(f_0).
struct PanjerParams {
    double a = 0.0;
    double b = 0.0;
    double h0 = 0.0;
    PanjerClass cls = PanjerClass::AB0;
    int l = 0;
};

struct StopAtQuantile {
    double alpha;
};
struct StopAtIndex {
    std::size_t index;
};
using StopRule = std::variant<StopAtQuantile, StopAtIndex>;

/// log h0 below this and exp() no longer represents it.
inline constexpr double kUnderflowLog = -700.0;

/// (a, b) and h_0 for the (a,b,0) members:
///   Poisson(l):   a = 0, b = l, h0 = exp(l (f0 - 1))
///   NegBin(r,p):  a = 1 - p, b = (1 - p)(r - 1), h0 = (1 + (1 - f0)(1 - p)/p)^-r
///   Bin(m,p):     a = -p/(1-p), b = p(m+1)/(1-p), h0 = (1 + p(f0 - 1))^m
inline PanjerParams panjer_params(const FrequencyModel& freq, double f0)
{
    if (!(f0 >= 0.0 && f0 < 1.0))
        throw std::domain_error("panjer_params: f0 must lie in [0,1)");
    PanjerParams out;
    switch (freq.kind()) {
    case FrequencyKind::Poisson: {
        const double l = std::get<PoissonParams>(freq.params()).lambda;
        out.a = 0.0;
        out.b = l;
        break;
    }
    case FrequencyKind::NegBin: {
        const auto& q = std::get<NegBinParams>(freq.params());
        out.a = 1.0 - q.p;
        out.b = (1.0 - q.p) * (q.r - 1.0);
        break;
    }
    case FrequencyKind::Binomial: {
        const auto& q = std::get<BinomialParams>(freq.params());
        out.a = -q.p / (1.0 - q.p);
        out.b = q.p * (static_cast<double>(q.n) + 1.0) / (1.0 - q.p);
        break;
    }
    }
    const double log_h0 = freq.log_pgf(f0);
    if (log_h0 < kUnderflowLog || std::exp(log_h0) == 0.0)
        throw UnderflowError("panjer: h0 = psi(f0) underflows (log h0 = " + std::to_string(log_h0) +
                             "); use stabilised_compound");
    out.h0 = std::exp(log_h0);
    return out;
}

/// Frequency in the (a,b,1) class: p_n = (a + b/n) p_{n-1} for n >= 2, with
/// free p0 and p1.
struct AB1Frequency {
    double a = 0.0;
    double b = 0.0;
    double p0 = 0.0;
    double p1 = 0.0;

    /// p_0 .. p_kmax by the recurrence.
    [[nodiscard]] std::vector<double> pmf_sequence(std::size_t kmax) const
    {
        std::vector<double> p(kmax + 1, 0.0);
        p[0] = p0;
        if (kmax >= 1)
            p[1] = p1;
        for (std::size_t k = 2; k <= kmax; ++k)
            p[k] = (a + b / static_cast<double>(k)) * p[k - 1];
        return p;
    }

    /// sum_k s^k p_k by the recurrence, stopped once terms are negligible.
    [[nodiscard]] double pgf(double s) const
    {
        CompensatedSum acc(p0);
        double term = p1;
        double sk = s;
        acc += sk * term;
        for (std::size_t k = 2; k < 1000000; ++k) {
            term *= (a + b / static_cast<double>(k));
            sk *= s;
            const double t = sk * term;
            acc += t;
            if (sk == 0.0 || (static_cast<double>(k) > (b / (1.0 - a) + 10.0) && std::fabs(t) < 1e-18 * acc.value()))
                break;
        }
        return acc.value();
    }
};

inline AB1Frequency zero_truncated(const FrequencyModel& base)
{
    const auto pp = panjer_params(base, 0.0);
    const double p0 = base.pmf(0);
    return {pp.a, pp.b, 0.0, base.pmf(1) / (1.0 - p0)};
}

/// Replaces Pr[N=0] by p0_new and rescales the rest.
inline AB1Frequency zero_modified(const FrequencyModel& base, double p0_new)
{
    if (!(p0_new >= 0.0 && p0_new < 1.0))
        throw std::domain_error("zero_modified: p0 must lie in [0,1)");
    const auto pp = panjer_params(base, 0.0);
    const double p0 = base.pmf(0);
    return {pp.a, pp.b, p0_new, base.pmf(1) * (1.0 - p0_new) / (1.0 - p0)};
}

/// Frequency with p_0 = ... = p_{l-1} = 0 and p_n = (a + b/n) p_{n-1} for
/// n >= l + 1, e.g. an (l-1)-truncated Poisson.
struct ABlFrequency {
    double a = 0.0;
    double b = 0.0;
    int l = 1;
    double pl = 0.0;

    [[nodiscard]] std::vector<double> pmf_sequence(std::size_t kmax) const
    {
        std::vector<double> p(kmax + 1, 0.0);
        if (static_cast<std::size_t>(l) > kmax)
            return p;
        p[l] = pl;
        for (std::size_t k = l + 1; k <= kmax; ++k)
            p[k] = (a + b / static_cast<double>(k)) * p[k - 1];
        return p;
    }
};

/// Poisson(lambda) conditioned on N >= l.
inline ABlFrequency truncated_poisson(double lambda, int l)
{
    if (l < 1)
        throw std::invalid_argument("truncated_poisson: l must be >= 1");
    const auto base = FrequencyModel::poisson(lambda);
    CompensatedSum below;
    for (int k = 0; k < l; ++k)
        below += base.pmf(k);
    return {0.0, lambda, l, base.pmf(l) / (1.0 - below.value())};
}

namespace detail {

/// sum_j x_j y_{n-j} for j = 1..jmax, blocked with independent lanes so the
/// compiler can vectorise, and compensated across blocks.
inline double reversed_dot(const double* x, const double* h, std::size_t n, std::size_t jmax)
{
    CompensatedSum total;
    constexpr std::size_t kBlock = 256;
    std::size_t j = 1;
    while (j <= jmax) {
        const std::size_t end = std::min(jmax + 1, j + kBlock);
        double lane[4] = {0.0, 0.0, 0.0, 0.0};
        std::size_t i = j;
        for (; i + 4 <= end; i += 4) {
            lane[0] += x[i] * h[n - i];
            lane[1] += x[i + 1] * h[n - i - 1];
            lane[2] += x[i + 2] * h[n - i - 2];
            lane[3] += x[i + 3] * h[n - i - 3];
        }
        for (; i < end; ++i)
            lane[0] += x[i] * h[n - i];
        total += (lane[0] + lane[1]) + (lane[2] + lane[3]);
        j = end;
    }
    return total.value();
}

} // namespace detail

/// Resumable Panjer recursion
///   h_n = (c f_n + sum_{j=1..n} (a + b j/n) f_j h_{n-j}) / (1 - a f_0)
/// where c = p1 - (a + b) p0 (zero for the (a,b,0) class).
/// The severity may be extended between calls to advance(): values already
/// computed depend only on f_0..f_n.
class PanjerRecursion {
public:
    PanjerRecursion(double a, double b, double c, double h0) : a_(a), b_(b), c_(c)
    {
        h_.push_back(h0);
        cdf_ += h0;
        cdf_values_.push_back(cdf_.value());
    }

    /// Runs until `stop` is met or index `disc.size() - 1` is reached.
    /// Returns true when the stop rule was satisfied.
    bool advance(const DiscreteSeverity& disc, const StopRule& stop)
    {
        const auto& f = disc.probs;
        if (f.empty())
            throw std::invalid_argument("panjer: empty severity");
        const double denom = 1.0 - a_ * f[0];
        if (denom == 0.0 || !std::isfinite(1.0 / denom))
            throw std::domain_error("panjer: 1 - a f0 vanishes");
        const double inv = 1.0 / denom;

        if (jf_.size() < f.size()) {
            jf_.resize(f.size());
            for (std::size_t j = 0; j < f.size(); ++j)
                jf_[j] = static_cast<double>(j) * f[j];
        }

        if (stop_met(stop))
            return true;
        const std::size_t last = f.size() - 1;
        while (h_.size() - 1 < last) {
            const std::size_t n = h_.size();
            const std::size_t jmax = n;
            double s = c_ * f[n];
            if (a_ != 0.0)
                s += a_ * detail::reversed_dot(f.data(), h_.data(), n, jmax);
            s += b_ / static_cast<double>(n) * detail::reversed_dot(jf_.data(), h_.data(), n, jmax);
            const double hn = s * inv;
            h_.push_back(hn);
            cdf_ += hn;
            cdf_values_.push_back(cdf_.value());
            if (stop_met(stop))
                return true;
        }
        return false;
    }

    [[nodiscard]] const std::vector<double>& density() const noexcept { return h_; }
    [[nodiscard]] const std::vector<double>& cdf() const noexcept { return cdf_values_; }

private:
    [[nodiscard]] bool stop_met(const StopRule& stop) const
    {
        if (const auto* q = std::get_if<StopAtQuantile>(&stop))
            return cdf_values_.back() >= q->alpha;
        return h_.size() - 1 >= std::get<StopAtIndex>(stop).index;
    }

    double a_;
    double b_;
    double c_;
    std::vector<double> h_;
    std::vector<double> jf_;
    std::vector<double> cdf_values_;
    CompensatedSum cdf_;
};

namespace detail {

inline std::string stop_description(const StopRule& stop)
{
    if (const auto* q = std::get_if<StopAtQuantile>(&stop))
        return "quantile:" + format_number(q->alpha);
    return "index:" + std::to_string(std::get<StopAtIndex>(stop).index);
}

inline CompoundGrid grid_from_recursion(const PanjerRecursion& rec, double step,
                                        std::string engine)
{
    CompoundGrid g;
    g.step = step;
    g.density = rec.density();
    g.engine = std::move(engine);
    finalise_grid(g);
    return g;
}

inline void check_stop_reached(bool reached, const StopRule& stop, std::size_t len)
{
    if (!reached)
        throw GridTooShortError("panjer: severity lattice of " + std::to_string(len) +
                                " points exhausted before " + stop_description(stop));
}

} // namespace detail

/// (a,b,0) Panjer recursion. Stops as soon as H_n >= alpha (AtQuantile) or at
/// the given index. f_j beyond the discretisation length are taken as 0, and
/// running out of lattice before the stop rule is an error.
inline CompoundGrid panjer_recursion(const DiscreteSeverity& disc, const PanjerParams& params,
                                     const StopRule& stop)
{
    PanjerRecursion rec(params.a, params.b, 0.0, params.h0);
    const bool reached = rec.advance(disc, stop);
    detail::check_stop_reached(reached, stop, disc.size());
    auto g = detail::grid_from_recursion(rec, disc.step, "panjer");
    g.settings["step"] = detail::format_number(disc.step);
    g.settings["mode"] = std::string(to_string(disc.mode));
    g.settings["stop"] = detail::stop_description(stop);
    if (params.a < 0.0)
        g.settings["warning"] = "binomial frequency: Panjer recursion may be numerically unstable";
    return g;
}

/// (a,b,1) recursion
///   h_n = [(p1 - (a+b) p0) f_n + sum_j (a + b j/n) f_j h_{n-j}] / (1 - a f0),
///   h_0 = sum_k f0^k p_k.
inline CompoundGrid extended_panjer_recursion(const DiscreteSeverity& disc,
                                              const AB1Frequency& freq, const StopRule& stop)
{
    const double f0 = disc[0];
    const double h0 = f0 == 0.0 ? freq.p0 : freq.pgf(f0);
    const double c = freq.p1 - (freq.a + freq.b) * freq.p0;
    PanjerRecursion rec(freq.a, freq.b, c, h0);
    const bool reached = rec.advance(disc, stop);
    detail::check_stop_reached(reached, stop, disc.size());
    auto g = detail::grid_from_recursion(rec, disc.step, "panjer-ab1");
    g.settings["stop"] = detail::stop_description(stop);
    return g;
}

/// (a,b,l) recursion for f_0 = 0:
///   h_n = p_l f^{(l)*}_n + sum_{j=1..n} (a + b j/n) f_j h_{n-j},  n >= l,
/// with h_n = 0 below l. The l-fold convolution is built by l-1 direct
/// lattice convolutions.
inline CompoundGrid generalised_panjer_recursion(const DiscreteSeverity& disc,
                                                 const ABlFrequency& freq, std::size_t n_max)
{
    if (disc[0] != 0.0)
        throw std::invalid_argument("generalised Panjer recursion requires f0 = 0");
    if (freq.l < 1)
        throw std::invalid_argument("generalised Panjer recursion requires l >= 1");
    const std::size_t len = n_max + 1;
    std::vector<double> f(len, 0.0);
    for (std::size_t i = 0; i < len; ++i)
        f[i] = disc[i];
    std::vector<double> fl = f;
    for (int k = 1; k < freq.l; ++k)
        fl = direct_convolve(fl, f, len);

    std::vector<double> jf(len);
    for (std::size_t j = 0; j < len; ++j)
        jf[j] = static_cast<double>(j) * f[j];

    std::vector<double> h(len, 0.0);
    for (std::size_t n = static_cast<std::size_t>(freq.l); n < len; ++n) {
        double s = freq.pl * fl[n];
        if (freq.a != 0.0)
            s += freq.a * detail::reversed_dot(f.data(), h.data(), n, n);
        s += freq.b / static_cast<double>(n) * detail::reversed_dot(jf.data(), h.data(), n, n);
        h[n] = s;
    }
    auto g = make_grid(disc.step, std::move(h), "panjer-abl");
    g.settings["l"] = std::to_string(freq.l);
    return g;
}

/// Direct evaluation h_n = sum_k p_k f^{(k)*}_n, O(K n^2). Ground truth for
/// the recursions. `pmf` must cover k = 0..kmax.
inline CompoundGrid brute_force_convolution(const DiscreteSeverity& disc,
                                            std::span<const double> pmf, std::size_t n_max)
{
    const std::size_t len = n_max + 1;
    std::vector<double> f(len, 0.0);
    for (std::size_t i = 0; i < len; ++i)
        f[i] = disc[i];
    // When f0 = 0 the k-fold power vanishes below index k.
    const std::size_t kmax = f[0] == 0.0 ? std::min(pmf.size() - 1, n_max) : pmf.size() - 1;

    std::vector<CompensatedSum> acc(len);
    std::vector<double> power(len, 0.0);
    power[0] = 1.0;
    for (std::size_t k = 0; k <= kmax; ++k) {
        if (k > 0)
            power = direct_convolve(power, f, len);
        for (std::size_t n = 0; n < len; ++n)
            acc[n] += pmf[k] * power[n];
    }
    std::vector<double> h(len);
    for (std::size_t n = 0; n < len; ++n)
        h[n] = acc[n].value();
    auto g = make_grid(disc.step, std::move(h), "brute-force");
    g.settings["kmax"] = std::to_string(kmax);
    return g;
}

/// Frequency-model overload; for f0 > 0 the k-sum is cut where the
/// cumulative pmf exceeds 1 - 1e-14.
inline CompoundGrid brute_force_convolution(const DiscreteSeverity& disc,
                                            const FrequencyModel& freq, std::size_t n_max)
{
    const std::size_t kmax = disc[0] == 0.0
                                 ? n_max
                                 : static_cast<std::size_t>(std::max<long>(freq.mass_cutoff(1e-14), 1));
    std::vector<double> pmf(kmax + 1);
    for (std::size_t k = 0; k <= kmax; ++k)
        pmf[k] = freq.pmf(static_cast<long>(k));
    return brute_force_convolution(disc, pmf, n_max);
}

/// Scaling applied by the stabilised path: the compound law of `freq` equals
/// the 2^doublings-fold convolution of the compound law of `scaled`
/// (convolved once more with `remainder` for the binomial split).
struct FrequencyScaling {
    int doublings = 0;
    FrequencyModel scaled;
    std::optional<FrequencyModel> remainder;

    [[nodiscard]] long factor() const { return 1L << doublings; }
};

/// Smallest m = 2^k keeping -log psi_scaled(0) <= 700:
///   Poisson: lambda/m, NegBin: r/m, Binomial: M = m m1 + m2.
inline FrequencyScaling choose_scaling(const FrequencyModel& freq)
{
    const double worst = -freq.log_pgf(0.0);
    int k = 0;
    while (worst / static_cast<double>(1L << k) > -kUnderflowLog)
        ++k;
    const long m = 1L << k;
    switch (freq.kind()) {
    case FrequencyKind::Poisson: {
        const double l = std::get<PoissonParams>(freq.params()).lambda;
        return {k, FrequencyModel::poisson(l / static_cast<double>(m)), std::nullopt};
    }
    case FrequencyKind::NegBin: {
        const auto& q = std::get<NegBinParams>(freq.params());
        return {k, FrequencyModel::negbin(q.r / static_cast<double>(m), q.p), std::nullopt};
    }
    case FrequencyKind::Binomial: {
        const auto& q = std::get<BinomialParams>(freq.params());
        if (m == 1)
            return {0, freq, std::nullopt};
        const long m1 = q.n / m;
        const long m2 = q.n - m1 * m;
        std::optional<FrequencyModel> rem;
        if (m2 > 0)
            rem = FrequencyModel::binomial(m2, q.p);
        return {k, FrequencyModel::binomial(m1, q.p), rem};
    }
    }
    return {0, freq, std::nullopt};
}

/// Compound distribution for frequencies whose h0 underflows: run Panjer on
/// the scaled frequency over the whole lattice, then square the result k
/// times by FFT convolution (H^{(2)*}, H^{(4)*}, ...). For AtQuantile the
/// lattice length bounds the search and the grid is cut at the stop index.
inline CompoundGrid stabilised_compound(const FrequencyModel& freq, const DiscreteSeverity& disc,
                                        const StopRule& stop)
{
    const auto scaling = choose_scaling(freq);
    std::size_t len = disc.size();
    if (const auto* si = std::get_if<StopAtIndex>(&stop))
        len = std::min(len, si->index + 1);
    if (len == 0)
        throw std::invalid_argument("stabilised_compound: empty lattice");

    auto run_panjer = [&](const FrequencyModel& f) {
        const auto params = panjer_params(f, disc[0]);
        PanjerRecursion rec(params.a, params.b, 0.0, params.h0);
        rec.advance(disc, StopAtIndex{len - 1});
        auto h = rec.density();
        h.resize(len, 0.0);
        return h;
    };

    std::vector<double> h;
    if (scaling.doublings == 0) {
        auto g = panjer_recursion(disc, panjer_params(freq, disc[0]), stop);
        g.settings["scaling"] = "1";
        return g;
    }

    h = run_panjer(scaling.scaled);
    for (int i = 0; i < scaling.doublings; ++i)
        h = fft_convolve(h, h, len);
    if (scaling.remainder)
        h = fft_convolve(h, run_panjer(*scaling.remainder), len);

    auto g = make_grid(disc.step, std::move(h), "panjer-scaled");
    if (const auto* q = std::get_if<StopAtQuantile>(&stop)) {
        std::size_t n = 0;
        while (n < g.size() && g.cdf[n] < q->alpha)
            ++n;
        if (n == g.size())
            throw GridTooShortError("stabilised_compound: lattice of " + std::to_string(len) +
                                    " points does not reach alpha = " +
                                    detail::format_number(q->alpha));
        g.density.resize(n + 1);
        g.cdf.resize(n + 1);
    }
    g.settings["scaling"] = std::to_string(scaling.factor());
    g.settings["step"] = detail::format_number(disc.step);
    g.settings["stop"] = detail::stop_description(stop);
    if (freq.kind() == FrequencyKind::Binomial)
        g.settings["warning"] = "binomial frequency: Panjer recursion may be numerically unstable";
    return g;
}

} // namespace aggdist
