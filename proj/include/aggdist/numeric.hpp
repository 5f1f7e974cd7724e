#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/erf.hpp>

namespace aggdist {

/// Raised when a closed form underflows to zero in double precision and the
/// caller has to switch to a scaled/stabilised evaluation.
class UnderflowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a lattice grid does not reach the requested probability level.
class GridTooShortError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    CompensatedSum() = default;
    explicit CompensatedSum(double init) : sum_(init) {}

    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }

    CompensatedSum& operator+=(double x) noexcept
    {
        add(x);
        return *this;
    }

    void merge(const CompensatedSum& other) noexcept
    {
        add(other.sum_);
        add(other.comp_);
    }

    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

namespace normal {

inline double cdf(double x) noexcept
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Upper tail 1 - Phi(x), accurate far into the right tail.
inline double sf(double x) noexcept
{
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

inline double pdf(double x) noexcept
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal quantile. Boost's erfc_inv carries rational
/// approximations accurate to a few ulp over the full (0,1) range.
inline double quantile(double u)
{
    if (!(u > 0.0 && u < 1.0))
        throw std::domain_error("normal quantile: probability must lie in (0,1), got " +
                                std::to_string(u));
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

} // namespace normal

inline bool is_power_of_two(std::size_t n) noexcept { return n >= 1 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) noexcept
{
    std::size_t m = 1;
    while (m < n)
        m <<= 1;
    return m;
}

} // namespace aggdist
