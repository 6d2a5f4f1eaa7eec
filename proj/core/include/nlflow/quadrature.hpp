#pragma once

#include <array>
#include <cmath>

namespace nlflow {

/// 3-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 3> kGauss3Nodes{-0.7745966692414834, 0.0,
                                                    0.7745966692414834};
inline constexpr std::array<double, 3> kGauss3Weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

/// 3-point Gauss-Legendre rule on [a, b]; exact for quintics.
template <class F>
double gauss3(F&& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t q = 0; q < 3; ++q) {
        sum += kGauss3Weights[q] * f(mid + half * kGauss3Nodes[q]);
    }
    return half * sum;
}

}  // namespace nlflow
