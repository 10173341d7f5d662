#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"
#include "piecewise.hpp"
#include "quadrature.hpp"

namespace locband {

//! One polynomial piece of a kernel on the closed interval [lo, hi].
struct KernelPiece {
    double lo;
    double hi;
    std::vector<double> poly; //!< ascending coefficients in x
};

//! Compactly supported piecewise-polynomial kernel with frozen metadata.
struct Kernel {
    std::string name;
    std::vector<KernelPiece> pieces;
    double support_radius = 1.0;
    int order = 0;
    double tv = 0.0;
    double norm_l1 = 0.0;
    double norm_l2_sq = 0.0;
    double norm_sup = 0.0;
    bool symmetric = false;

    //! Value at x; at a shared endpoint the left piece wins, and the support is closed.
    double operator()(double x) const
    {
        for (const KernelPiece& p : pieces)
            if (x >= p.lo && x <= p.hi)
                return poly_eval(p.poly, x);
        return 0.0;
    }

    double evaluate(double x) const { return (*this)(x); }

    //! Smoothness ceiling beta* = order + 1.
    int beta_star() const { return order + 1; }

    //! True for a single constant piece, which enables rank-count estimates.
    bool flat() const { return pieces.size() == 1 && poly_degree(pieces[0].poly) <= 0; }

    //! Breakpoints of the piece structure, including the support ends.
    std::vector<double> breakpoints() const
    {
        std::vector<double> b;
        for (const KernelPiece& p : pieces) {
            b.push_back(p.lo);
            b.push_back(p.hi);
        }
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        return b;
    }
};

namespace detail {

constexpr int moment_intervals = 8192;

inline double kernel_integral(const Kernel& k, auto&& g)
{
    double s = 0.0;
    for (const KernelPiece& p : k.pieces)
        s += simpson([&](double x) { return g(p, x); }, p.lo, p.hi, moment_intervals);
    return s;
}

//! Total variation of a polynomial of degree <= 3 on [a, b].
inline double poly_variation(const std::vector<double>& c, double a, double b)
{
    if (poly_degree(c) > 3)
        throw Error(Errc::invalid_kernel, "kernel pieces are limited to degree 3");
    std::vector<double> cuts{a};
    for (double x : poly_roots_low(poly_derivative(c), a, b))
        cuts.push_back(x);
    cuts.push_back(b);
    double v = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i)
        v += std::abs(poly_eval(c, cuts[i]) - poly_eval(c, cuts[i - 1]));
    return v;
}

} // namespace detail

//! Integral of x^j K(x) by composite Simpson; valid for j <= 12.
inline double kernel_moment(const Kernel& k, int j)
{
    if (j < 0 || j > 12)
        throw Error(Errc::unsupported_moment, "moment order must lie in [0, 12]");
    return detail::kernel_integral(k, [j](const KernelPiece& p, double x) {
        return std::pow(x, j) * poly_eval(p.poly, x);
    });
}

//! Builds a kernel from its pieces and computes its metadata once.
inline Kernel make_kernel(std::string name, std::vector<KernelPiece> pieces)
{
    Kernel k;
    k.name = std::move(name);
    std::sort(pieces.begin(), pieces.end(), [](const KernelPiece& a, const KernelPiece& b) { return a.lo < b.lo; });
    k.pieces = std::move(pieces);
    if (k.pieces.empty())
        throw Error(Errc::invalid_kernel, "kernel without pieces");
    for (const KernelPiece& p : k.pieces)
        if (!(p.lo < p.hi))
            throw Error(Errc::invalid_kernel, "empty kernel piece");
    k.support_radius = std::max(std::abs(k.pieces.front().lo), std::abs(k.pieces.back().hi));

    double mass = kernel_moment(k, 0);
    if (std::abs(mass - 1.0) > 1e-10)
        throw Error(Errc::invalid_kernel, "kernel does not integrate to one");

    k.order = 12;
    for (int j = 1; j <= 12; ++j) {
        if (std::abs(kernel_moment(k, j)) > 1e-9) {
            k.order = j - 1;
            break;
        }
    }

    // jumps between one-sided limits, including the drops to zero at the ends
    double tv = 0.0;
    for (double b : k.breakpoints()) {
        double left = 0.0, right = 0.0;
        for (const KernelPiece& p : k.pieces) {
            if (p.hi == b)
                left = poly_eval(p.poly, b);
            if (p.lo == b)
                right = poly_eval(p.poly, b);
        }
        tv += std::abs(right - left);
    }
    for (const KernelPiece& p : k.pieces)
        tv += detail::poly_variation(p.poly, p.lo, p.hi);
    k.tv = tv;

    k.norm_l1 = detail::kernel_integral(k, [](const KernelPiece& p, double x) {
        return std::abs(poly_eval(p.poly, x));
    });
    k.norm_l2_sq = detail::kernel_integral(k, [](const KernelPiece& p, double x) {
        double v = poly_eval(p.poly, x);
        return v * v;
    });
    double sup = 0.0;
    for (const KernelPiece& p : k.pieces) {
        auto r = poly_range(p.poly, p.lo, p.hi);
        sup = std::max({sup, std::abs(r.first), std::abs(r.second)});
    }
    k.norm_sup = sup;

    k.symmetric = true;
    for (int i = 0; i <= 256; ++i) {
        double x = k.support_radius * (1.0 + 1e-3) * i / 256.0;
        if (std::abs(k(x) - k(-x)) > 1e-15) {
            k.symmetric = false;
            break;
        }
    }
    return k;
}

//! K(x) = 1/2 on [-1, 1].
inline Kernel make_rectangular()
{
    return make_kernel("rectangular", {KernelPiece{-1.0, 1.0, {0.5}}});
}

//! K(x) = 3/4 (1 - x^2) on [-1, 1].
inline Kernel make_epanechnikov()
{
    return make_kernel("epanechnikov", {KernelPiece{-1.0, 1.0, {0.75, 0.0, -0.75}}});
}

//! K(x) = 1 - |x| on [-1, 1].
inline Kernel make_triangular_kernel()
{
    return make_kernel("triangular",
                       {KernelPiece{-1.0, 0.0, {1.0, 1.0}}, KernelPiece{0.0, 1.0, {1.0, -1.0}}});
}

} // namespace locband
