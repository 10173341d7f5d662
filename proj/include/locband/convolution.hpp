#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "error.hpp"
#include "kernel.hpp"
#include "piecewise.hpp"
#include "quadrature.hpp"

namespace locband {

namespace detail {

//! Integral of P(x) cos(theta(x)) over [x0, x1] where theta is affine with slope
//! `omega` and the endpoint phases are supplied exactly. Repeated integration by
//! parts: sum_r P^(r) * {sin, cos, -sin, -cos}[r % 4] / omega^(r+1).
inline double oscillatory_poly_integral(const std::vector<double>& poly, double omega,
                                        double x0, double th0, double x1, double th1)
{
    double s0 = std::sin(th0), c0 = std::cos(th0), s1 = std::sin(th1), c1 = std::cos(th1);
    double total = 0.0;
    std::vector<double> d = poly;
    double w = omega;
    for (int r = 0; !d.empty(); ++r) {
        double p0 = poly_eval(d, x0), p1 = poly_eval(d, x1);
        double f1 = 0.0, f0 = 0.0;
        switch (r % 4) {
        case 0: f1 = s1; f0 = s0; break;
        case 1: f1 = c1; f0 = c0; break;
        case 2: f1 = -s1; f0 = -s0; break;
        default: f1 = -c1; f0 = -c0; break;
        }
        total += (p1 * f1 - p0 * f0) / w;
        w *= omega;
        d = poly_derivative(d);
    }
    return total;
}

struct Cut {
    double x; //!< kernel coordinate
    double y; //!< function coordinate s + h x, exact at function breakpoints
};

} // namespace detail

//! (K_h * f)(s) = integral of K(x) f(s + h x) dx.
//!
//! Polynomial parts use a 12-point Gauss rule per smooth subinterval (exact for
//! the degrees involved). Each Weierstrass term is integrated exactly against the
//! kernel polynomial, with phases reduced through the exact power-of-two scaling;
//! low frequencies fall back to the Gauss rule. The only error left is the
//! series truncation tail of f, which is bounded by its tolerance.
inline double convolve_at(const Kernel& k, const PiecewiseFunction& f, double h, double s,
                          double tol = 1e-9)
{
    if (!(tol > 0.0))
        throw Error(Errc::invalid_tolerance, "tolerance must be positive");
    if (!(h > 0.0))
        throw Error(Errc::invalid_bandwidth, "bandwidth must be positive");

    std::vector<detail::Cut> cuts;
    for (double b : k.breakpoints())
        cuts.push_back({b, s + h * b});
    double xlo = k.pieces.front().lo, xhi = k.pieces.back().hi;
    for (double b : f.breakpoints()) {
        double x = (b - s) / h;
        if (x > xlo && x < xhi)
            cuts.push_back({x, b});
    }
    std::sort(cuts.begin(), cuts.end(), [](const detail::Cut& a, const detail::Cut& b) { return a.x < b.x; });

    const GaussRule& g = gauss12();
    const WeierstrassSeries& ws = f.series;
    double total = 0.0;
    for (std::size_t c = 1; c < cuts.size(); ++c) {
        double x0 = cuts[c - 1].x, x1 = cuts[c].x;
        if (!(x1 > x0))
            continue;
        double xm = 0.5 * (x0 + x1);
        const KernelPiece* kp = nullptr;
        for (const KernelPiece& p : k.pieces)
            if (xm >= p.lo && xm <= p.hi) {
                kp = &p;
                break;
            }
        double y0 = cuts[c - 1].y, y1 = cuts[c].y;
        const Piece* fp = f.piece_at(0.5 * (y0 + y1));
        if (!kp || !fp)
            continue;

        double mid = xm, rad = 0.5 * (x1 - x0);
        if (!fp->poly.empty()) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.nodes.size(); ++i) {
                double x = mid + rad * g.nodes[i];
                acc += g.weights[i] * poly_eval(kp->poly, x) * poly_eval(fp->poly, s + h * x);
            }
            total += acc * rad;
        }
        for (const Wave& w : fp->waves) {
            double acc = 0.0;
            for (int n = 0; n < ws.depth(); ++n) {
                double omega = std::ldexp(std::numbers::pi * h, n);
                double term = 0.0;
                if (omega * (x1 - x0) <= 4.0) {
                    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
                        double x = mid + rad * g.nodes[i];
                        term += g.weights[i] * poly_eval(kp->poly, x) *
                                std::cos(WeierstrassSeries::phase(s + h * x - w.shift, n));
                    }
                    term *= rad;
                } else {
                    double th0 = WeierstrassSeries::phase(y0 - w.shift, n);
                    double th1 = WeierstrassSeries::phase(y1 - w.shift, n);
                    term = detail::oscillatory_poly_integral(kp->poly, omega, x0, th0, x1, th1);
                }
                acc += ws.weight(n) * term;
            }
            total += w.scale * acc;
        }
    }
    return total;
}

//! Grid maximum of |K_g * f - f| over {lo, lo + step, ..., hi}; a lower bound
//! for the supremum over [lo, hi].
inline double sup_abs_bias(const Kernel& k, const PiecewiseFunction& f, double g, double lo,
                           double hi, double grid_step, double tol = 1e-9)
{
    if (!(lo < hi))
        throw Error(Errc::invalid_interval, "degenerate interval");
    if (!(grid_step > 0.0) || grid_step > (hi - lo) / 16.0 * (1.0 + 1e-12))
        throw Error(Errc::invalid_interval, "grid step must lie in (0, (hi - lo) / 16]");
    if (!(g > 0.0))
        throw Error(Errc::invalid_bandwidth, "bandwidth must be positive");
    double best = 0.0;
    auto count = static_cast<long>(std::floor((hi - lo) / grid_step * (1.0 + 1e-12)));
    for (long i = 0; i <= count + 1; ++i) {
        double s = i > count ? hi : lo + static_cast<double>(i) * grid_step;
        if (s > hi)
            s = hi;
        best = std::max(best, std::abs(convolve_at(k, f, g, s, tol) - f(s)));
    }
    return best;
}

} // namespace locband
