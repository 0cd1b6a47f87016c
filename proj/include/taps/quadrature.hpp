#pragma once

#include <taps/types.hpp>

#include <cmath>
#include <stdexcept>

namespace taps
{

// Gauss-Legendre rule on [-1, 1]
template <typename T>
struct QuadratureRule
{
    VectorX<T> points;
    VectorX<T> weights;
};

// nodes are the roots of the Legendre polynomial P_n, found by Newton
// iteration from the Chebyshev-like initial guess; weights from the
// standard derivative formula w = 2 / ((1 - x^2) P_n'(x)^2)
template <typename T>
QuadratureRule<T> gauss_rule(int n_points)
{
    if (n_points < 1 || n_points > 32)
        throw std::invalid_argument("gauss_rule: point count " + std::to_string(n_points) +
                                    " outside [1, 32]");

    const int n = n_points;
    QuadratureRule<T> rule;
    rule.points.resize(n);
    rule.weights.resize(n);

    for (int i = 0; i < n; i++)
    {
        // root i (descending); symmetric pairs converge to the same values
        T x = std::cos(T(M_PI) * (T(i) + T(0.75)) / (T(n) + T(0.5)));
        T dp = T(0);
        for (int iter = 0; iter < 100; iter++)
        {
            // evaluate P_n and P_n' by the three-term recurrence
            T p0 = T(1), p1 = x;
            for (int k = 2; k <= n; k++)
            {
                T p2 = ((T(2 * k - 1) * x * p1) - T(k - 1) * p0) / T(k);
                p0 = p1;
                p1 = p2;
            }
            T pn = (n == 1) ? x : p1;
            if (n == 1)
                dp = T(1);
            else
                dp = T(n) * (x * p1 - p0) / (x * x - T(1));
            T dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < T(1e-16))
                break;
        }
        rule.points[n - 1 - i] = x;
        rule.weights[n - 1 - i] = T(2) / ((T(1) - x * x) * dp * dp);
    }

    // enforce exact symmetry of the rule
    for (int i = 0; i < n / 2; i++)
    {
        T xm = (rule.points[n - 1 - i] - rule.points[i]) / T(2);
        T wm = (rule.weights[i] + rule.weights[n - 1 - i]) / T(2);
        rule.points[i] = -xm;
        rule.points[n - 1 - i] = xm;
        rule.weights[i] = wm;
        rule.weights[n - 1 - i] = wm;
    }
    if (n % 2 == 1)
        rule.points[n / 2] = T(0);

    return rule;
}

} // namespace taps
