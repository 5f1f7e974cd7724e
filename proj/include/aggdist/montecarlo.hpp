#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "aggdist/distributions.hpp"
#include "aggdist/numeric.hpp"

namespace aggdist {

/// Samples per chunk. Each chunk has its own generator, so results depend
/// only on (seed, K) and not on the number of workers.
inline constexpr std::uint64_t kMcChunk = 1u << 16;

struct McRun {
    std::uint64_t K = 0;
    std::uint64_t seed = 0;
    double alpha_min = 0.0;
    /// Largest min(K, K - floor(K alpha_min) + 1) samples, ascending.
    std::vector<double> retained;
    CompensatedSum sum;
    CompensatedSum sum_sq;

    [[nodiscard]] double mean() const { return sum.value() / static_cast<double>(K); }
    [[nodiscard]] double variance() const
    {
        if (K < 2)
            return 0.0;
        const double m = mean();
        const double kd = static_cast<double>(K);
        return std::max(0.0, (sum_sq.value() - kd * m * m) / (kd - 1.0));
    }
    /// 1-based index of the smallest retained order statistic.
    [[nodiscard]] std::uint64_t first_retained_rank() const { return K - retained.size() + 1; }
};

inline std::uint64_t retained_capacity(std::uint64_t K, double alpha_min)
{
    const auto below = static_cast<std::uint64_t>(std::floor(static_cast<double>(K) * alpha_min));
    return std::min<std::uint64_t>(K, K - std::min(below, K) + 1);
}

/// Worker count: AGGDIST_THREADS if set and positive, else the hardware
/// concurrency.
inline unsigned mc_workers()
{
    if (const char* env = std::getenv("AGGDIST_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0)
            return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

using McEngine = std::mt19937_64;

inline McEngine chunk_engine(std::uint64_t seed, std::uint64_t chunk)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32),
                      0x5eedu};
    return McEngine(seq);
}

class FrequencySampler {
public:
    explicit FrequencySampler(const FrequencyModel& f) : model_(f)
    {
        switch (f.kind()) {
        case FrequencyKind::Poisson:
            poisson_ = std::poisson_distribution<long>(std::get<PoissonParams>(f.params()).lambda);
            break;
        case FrequencyKind::Binomial: {
            const auto& p = std::get<BinomialParams>(f.params());
            binomial_ = std::binomial_distribution<long>(p.n, p.p);
            break;
        }
        case FrequencyKind::NegBin: {
            // Gamma mixture of Poisson: N | L ~ Poisson(L), L ~ Gamma(r, (1-p)/p).
            const auto& p = std::get<NegBinParams>(f.params());
            mixing_ = std::gamma_distribution<double>(p.r, (1.0 - p.p) / p.p);
            break;
        }
        }
    }

    template <class G>
    long operator()(G& gen)
    {
        switch (model_.kind()) {
        case FrequencyKind::Poisson: return poisson_(gen);
        case FrequencyKind::Binomial: return binomial_(gen);
        case FrequencyKind::NegBin: {
            const double l = mixing_(gen);
            if (l <= 0.0)
                return 0;
            return std::poisson_distribution<long>(l)(gen);
        }
        }
        return 0;
    }

private:
    FrequencyModel model_;
    std::poisson_distribution<long> poisson_;
    std::binomial_distribution<long> binomial_;
    std::gamma_distribution<double> mixing_;
};

class SeveritySampler {
public:
    explicit SeveritySampler(const SeverityModel& s) : model_(s)
    {
        switch (s.kind()) {
        case SeverityKind::Lognormal: {
            const auto& p = std::get<LognormalParams>(s.params());
            normal_ = std::normal_distribution<double>(p.mu, p.sigma);
            break;
        }
        case SeverityKind::Gamma: {
            const auto& p = std::get<GammaParams>(s.params());
            gamma_ = std::gamma_distribution<double>(p.alpha, p.beta);
            break;
        }
        case SeverityKind::GPD: break;
        case SeverityKind::Normal: {
            const auto& p = std::get<NormalParams>(s.params());
            normal_ = std::normal_distribution<double>(p.mu, p.sigma);
            break;
        }
        }
    }

    template <class G>
    double operator()(G& gen)
    {
        switch (model_.kind()) {
        case SeverityKind::Lognormal: return std::exp(normal_(gen));
        case SeverityKind::Gamma: return gamma_(gen);
        case SeverityKind::GPD: {
            const auto& p = std::get<GpdParams>(model_.params());
            // 1 - U in (0, 1] keeps the log finite.
            const double v = 1.0 - std::generate_canonical<double, 53>(gen);
            if (p.xi == 0.0)
                return -p.beta * std::log(v);
            return p.beta / p.xi * std::expm1(-p.xi * std::log(v));
        }
        case SeverityKind::Normal: return normal_(gen);
        }
        return 0.0;
    }

private:
    SeverityModel model_;
    std::normal_distribution<double> normal_;
    std::gamma_distribution<double> gamma_;
};

struct ChunkResult {
    std::vector<double> top;
    CompensatedSum sum;
    CompensatedSum sum_sq;
};

inline ChunkResult simulate_chunk(const FrequencyModel& freq, const SeverityModel& sev,
                                  std::uint64_t seed, std::uint64_t chunk, std::uint64_t count,
                                  std::uint64_t capacity)
{
    auto gen = chunk_engine(seed, chunk);
    FrequencySampler draw_n(freq);
    SeveritySampler draw_x(sev);
    ChunkResult out;
    std::priority_queue<double, std::vector<double>, std::greater<>> heap;
    for (std::uint64_t i = 0; i < count; ++i) {
        const long n = draw_n(gen);
        double z = 0.0;
        for (long j = 0; j < n; ++j)
            z += draw_x(gen);
        out.sum += z;
        out.sum_sq += z * z;
        if (heap.size() < capacity)
            heap.push(z);
        else if (z > heap.top()) {
            heap.pop();
            heap.push(z);
        }
    }
    out.top.reserve(heap.size());
    while (!heap.empty()) {
        out.top.push_back(heap.top());
        heap.pop();
    }
    return out;
}

} // namespace detail

/// Draws K compound losses Z = X_1 + ... + X_N, keeping running sums and the
/// largest K - floor(K alpha_min) + 1 values. Chunks are spread over
/// mc_workers() threads (or `workers` if nonzero) and merged in chunk order.
inline McRun simulate_compound(const FrequencyModel& freq, const SeverityModel& sev, std::uint64_t K,
                               std::uint64_t seed, double alpha_min, unsigned workers = 0)
{
    if (K < 1)
        throw std::invalid_argument("simulate_compound: K must be >= 1");
    if (!(alpha_min >= 0.0 && alpha_min < 1.0))
        throw std::domain_error("simulate_compound: alpha_min must lie in [0,1)");
    McRun run;
    run.K = K;
    run.seed = seed;
    run.alpha_min = alpha_min;
    const std::uint64_t capacity = retained_capacity(K, alpha_min);
    const std::uint64_t chunks = (K + kMcChunk - 1) / kMcChunk;
    std::vector<detail::ChunkResult> results(chunks);

    auto work = [&](std::uint64_t c) {
        const std::uint64_t count = std::min(kMcChunk, K - c * kMcChunk);
        results[c] = detail::simulate_chunk(freq, sev, seed, c, count, capacity);
    };
    const unsigned nw = static_cast<unsigned>(std::min<std::uint64_t>(workers ? workers : mc_workers(), chunks));
    if (nw <= 1) {
        for (std::uint64_t c = 0; c < chunks; ++c)
            work(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nw; ++w)
            pool.emplace_back([&, w] {
                for (std::uint64_t c = w; c < chunks; c += nw)
                    work(c);
            });
        for (auto& t : pool)
            t.join();
    }

    std::vector<double> all;
    for (auto& r : results) {
        run.sum.merge(r.sum);
        run.sum_sq.merge(r.sum_sq);
        all.insert(all.end(), r.top.begin(), r.top.end());
    }
    std::sort(all.begin(), all.end());
    if (all.size() > capacity)
        all.erase(all.begin(), all.end() - static_cast<std::ptrdiff_t>(capacity));
    run.retained = std::move(all);
    return run;
}

/// McRun over a fixed sample set, for estimators applied to external data.
inline McRun run_from_samples(std::vector<double> samples, double alpha_min)
{
    if (samples.empty())
        throw std::invalid_argument("run_from_samples: no samples");
    McRun run;
    run.K = samples.size();
    run.alpha_min = alpha_min;
    for (double z : samples) {
        run.sum += z;
        run.sum_sq += z * z;
    }
    std::sort(samples.begin(), samples.end());
    const auto cap = retained_capacity(run.K, alpha_min);
    samples.erase(samples.begin(), samples.end() - static_cast<std::ptrdiff_t>(cap));
    run.retained = std::move(samples);
    return run;
}

/// Order statistic Z_(j) (1-based, ascending) from the retained tail.
inline double mc_order_statistic(const McRun& run, std::uint64_t j)
{
    if (j < 1 || j > run.K)
        throw std::out_of_range("order statistic index outside 1..K");
    const std::uint64_t first = run.first_retained_rank();
    if (j < first)
        throw std::out_of_range("order statistic " + std::to_string(j) +
                                " not retained (run kept ranks " + std::to_string(first) + ".." +
                                std::to_string(run.K) + "); lower alpha_min");
    return run.retained[j - first];
}

/// Z_(floor(K alpha) + 1).
inline double mc_quantile(const McRun& run, double alpha)
{
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::domain_error("mc_quantile: alpha must lie in [0,1)");
    const auto j = static_cast<std::uint64_t>(std::floor(static_cast<double>(run.K) * alpha)) + 1;
    return mc_order_statistic(run, std::min(j, run.K));
}

struct QuantileCi {
    std::uint64_t r = 0;
    std::uint64_t s = 0;
    std::uint64_t center = 0;
    double exact_coverage = 0.0;
    /// K alpha (1 - alpha) < 50: the normal approximation behind r, s is
    /// unreliable.
    bool approximation_warning = false;
    double lower = 0.0;
    double upper = 0.0;
    /// (upper - lower) / (2 z).
    double stderr_estimate = 0.0;
};

/// sum_{i=r}^{s-1} C(K,i) alpha^i (1-alpha)^(K-i), each term in log space.
inline double binomial_coverage(std::uint64_t K, double alpha, std::uint64_t r, std::uint64_t s)
{
    const double kd = static_cast<double>(K);
    const double la = std::log(alpha);
    const double lb = std::log1p(-alpha);
    CompensatedSum acc;
    for (std::uint64_t i = r; i < s && i <= K; ++i) {
        const double id = static_cast<double>(i);
        acc += std::exp(std::lgamma(kd + 1.0) - std::lgamma(id + 1.0) - std::lgamma(kd - id + 1.0) +
                        id * la + (kd - id) * lb);
    }
    return acc.value();
}

/// Order-statistic indices of the conservative CI for the alpha-quantile:
/// r = floor(K alpha - z w), s = ceil(K alpha + z w), w = sqrt(K alpha (1-alpha)),
/// z = Phi^{-1}((1+gamma)/2). Bounds are left at zero.
inline QuantileCi quantile_ci_indices(std::uint64_t K, double alpha, double gamma)
{
    if (!(alpha > 0.0 && alpha < 1.0) || !(gamma > 0.0 && gamma < 1.0))
        throw std::domain_error("quantile CI: alpha and gamma must lie in (0,1)");
    const double kd = static_cast<double>(K);
    const double z = normal::quantile(0.5 * (1.0 + gamma));
    const double w = std::sqrt(kd * alpha * (1.0 - alpha));
    QuantileCi ci;
    const double lo = std::floor(kd * alpha - z * w);
    const double hi = std::ceil(kd * alpha + z * w);
    ci.r = static_cast<std::uint64_t>(std::max(1.0, lo));
    ci.s = static_cast<std::uint64_t>(std::min(kd, hi));
    if (!(ci.r < ci.s))
        throw std::domain_error("quantile CI: degenerate interval, need 1 <= r < s <= K");
    ci.center = static_cast<std::uint64_t>(std::floor(kd * alpha)) + 1;
    ci.exact_coverage = binomial_coverage(K, alpha, ci.r, ci.s);
    ci.approximation_warning = kd * alpha * (1.0 - alpha) < 50.0;
    return ci;
}

inline QuantileCi mc_quantile_ci(const McRun& run, double alpha, double gamma)
{
    auto ci = quantile_ci_indices(run.K, alpha, gamma);
    ci.lower = mc_order_statistic(run, ci.r);
    ci.upper = mc_order_statistic(run, ci.s);
    ci.stderr_estimate = (ci.upper - ci.lower) / (2.0 * normal::quantile(0.5 * (1.0 + gamma)));
    return ci;
}

/// Smallest alpha_min for which mc_quantile_ci(run, alpha, gamma) has all
/// the order statistics it needs.
inline double alpha_min_for_ci(std::uint64_t K, double alpha, double gamma)
{
    const auto ci = quantile_ci_indices(K, alpha, gamma);
    return std::min(alpha, static_cast<double>(ci.r - 1) / static_cast<double>(K));
}

struct McEs {
    double es = 0.0;
    double stderr_estimate = 0.0;
    std::uint64_t tail_count = 0;
};

/// Mean of the n retained samples >= q. stderr = sqrt((s2 + alpha (es - q)^2) / n),
/// s2 the tail sample variance; the second term accounts for q being an
/// estimate.
inline McEs mc_es(const McRun& run, double alpha, double q)
{
    if (run.K - static_cast<std::uint64_t>(std::floor(static_cast<double>(run.K) * alpha)) >
        run.retained.size())
        throw std::out_of_range("mc_es: alpha below the run's alpha_min");
    const auto first = std::lower_bound(run.retained.begin(), run.retained.end(), q);
    const auto n = static_cast<std::uint64_t>(run.retained.end() - first);
    if (n == 0)
        throw std::runtime_error("mc_es: no samples at or above q");
    CompensatedSum s;
    for (auto it = first; it != run.retained.end(); ++it)
        s += *it;
    McEs out;
    out.tail_count = n;
    out.es = s.value() / static_cast<double>(n);
    CompensatedSum dev;
    for (auto it = first; it != run.retained.end(); ++it)
        dev += (*it - out.es) * (*it - out.es);
    const double nd = static_cast<double>(n);
    const double gap = out.es - q;
    out.stderr_estimate = std::sqrt((dev.value() / nd + alpha * gap * gap) / nd);
    return out;
}

} // namespace aggdist
