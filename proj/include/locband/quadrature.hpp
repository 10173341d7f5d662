#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace locband {

//! Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule make_gauss_rule(int n)
{
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

//! 12-point rule, exact for polynomials up to degree 23.
inline const GaussRule& gauss12()
{
    static const GaussRule rule = make_gauss_rule(12);
    return rule;
}

//! Integrates f over [a, b] with the 12-point Gauss rule.
template <class F>
double gauss_integrate(F&& f, double a, double b)
{
    const GaussRule& g = gauss12();
    double c = 0.5 * (a + b), r = 0.5 * (b - a), s = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        s += g.weights[i] * f(c + r * g.nodes[i]);
    return s * r;
}

//! Composite Simpson rule with `intervals` (even) subintervals.
template <class F>
double simpson(F&& f, double a, double b, int intervals)
{
    if (intervals % 2)
        ++intervals;
    double h = (b - a) / intervals;
    double s = f(a) + f(b);
    for (int i = 1; i < intervals; ++i)
        s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

} // namespace locband
