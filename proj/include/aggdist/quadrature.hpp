#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <type_traits>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace aggdist {

/// 7-point Gauss-Legendre rule on [-1, 1].
struct Gauss7 {
    static constexpr std::array<double, 7> nodes = {
        -0.949107912342759, -0.741531185599394, -0.405845151377397, 0.0,
        0.405845151377397,  0.741531185599394,  0.949107912342759};
    static constexpr std::array<double, 7> weights = {
        0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
        0.381830050505119, 0.279705391489277, 0.129484966168870};
};

/// (D/2) sum_i w_i g((a + b + zeta_i D)/2), D = b - a. Exact for polynomials
/// up to degree 13.
template <class F>
auto gauss7(F&& g, double a, double b)
{
    if (!(a < b))
        throw std::invalid_argument("gauss7: need a < b");
    using R = std::decay_t<decltype(g(a))>;
    const double d = b - a;
    R acc{};
    for (std::size_t i = 0; i < 7; ++i)
        acc += Gauss7::weights[i] * g(0.5 * (a + b + Gauss7::nodes[i] * d));
    return acc * (0.5 * d);
}

template <class T>
struct QuadResult {
    T value{};
    double error = 0.0;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b] (real or complex integrands).
/// `rel_tol` is relative to the L1 norm of the integrand.
template <class F>
auto adaptive_gk15(F&& g, double a, double b, double rel_tol, unsigned max_depth)
{
    using R = std::decay_t<decltype(g(a))>;
    QuadResult<R> out;
    double err = 0.0;
    out.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, a, b, max_depth,
                                                                              rel_tol, &err);
    out.error = err;
    return out;
}

} // namespace aggdist
