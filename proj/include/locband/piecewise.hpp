#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "error.hpp"

namespace locband {

// ---------------------------------------------------------------------------
// polynomials, stored as ascending coefficient vectors in the absolute variable

inline double poly_eval(const std::vector<double>& c, double x)
{
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it)
        v = v * x + *it;
    return v;
}

inline std::vector<double> poly_derivative(const std::vector<double>& c)
{
    std::vector<double> d;
    for (std::size_t i = 1; i < c.size(); ++i)
        d.push_back(c[i] * static_cast<double>(i));
    return d;
}

inline std::vector<double> poly_derivative(std::vector<double> c, int order)
{
    for (int i = 0; i < order; ++i)
        c = poly_derivative(c);
    return c;
}

inline void poly_trim(std::vector<double>& c)
{
    while (!c.empty() && c.back() == 0.0)
        c.pop_back();
}

inline std::vector<double> poly_add(std::vector<double> a, const std::vector<double>& b)
{
    if (a.size() < b.size())
        a.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i)
        a[i] += b[i];
    poly_trim(a);
    return a;
}

inline int poly_degree(const std::vector<double>& c)
{
    int d = static_cast<int>(c.size()) - 1;
    while (d >= 0 && c[d] == 0.0)
        --d;
    return d;
}

//! Real roots of the polynomial inside the open interval (a, b), degree <= 2.
inline std::vector<double> poly_roots_low(const std::vector<double>& c, double a, double b)
{
    std::vector<double> r;
    int d = poly_degree(c);
    if (d == 1) {
        r.push_back(-c[0] / c[1]);
    } else if (d == 2) {
        double disc = c[1] * c[1] - 4.0 * c[2] * c[0];
        if (disc >= 0.0) {
            double q = -0.5 * (c[1] + std::copysign(std::sqrt(disc), c[1]));
            if (q != 0.0) {
                r.push_back(q / c[2]);
                r.push_back(c[0] / q);
            } else {
                r.push_back(0.0);
            }
        }
    }
    std::vector<double> in;
    for (double x : r)
        if (x > a && x < b)
            in.push_back(x);
    std::sort(in.begin(), in.end());
    return in;
}

//! (min, max) of a polynomial on [a, b]; exact up to degree 3, scanned beyond.
inline std::pair<double, double> poly_range(const std::vector<double>& c, double a, double b)
{
    double lo = std::min(poly_eval(c, a), poly_eval(c, b));
    double hi = std::max(poly_eval(c, a), poly_eval(c, b));
    int d = poly_degree(c);
    if (d <= 1)
        return {lo, hi};
    if (d <= 3) {
        for (double x : poly_roots_low(poly_derivative(c), a, b)) {
            double v = poly_eval(c, x);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return {lo, hi};
    }
    const int m = 4096;
    for (int i = 1; i < m; ++i) {
        double v = poly_eval(c, a + (b - a) * i / m);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// Weierstrass series sum_n 2^{-n beta} cos(2^n pi x)

class WeierstrassSeries {
public:
    WeierstrassSeries() = default;

    WeierstrassSeries(double beta, double tol = 1e-12) : beta_(beta), tol_(tol)
    {
        if (!(beta > 0.0 && beta <= 1.0))
            throw Error(Errc::invalid_exponent, "Weierstrass exponent must lie in (0, 1]");
        if (!(tol > 0.0))
            throw Error(Errc::invalid_tolerance, "truncation tolerance must be positive");
        double q = 1.0 - std::exp2(-beta);
        int depth = static_cast<int>(std::ceil(std::log2(1.0 / (tol * q)) / beta));
        depth = std::max(depth, 1);
        while (std::exp2(-depth * beta) / q > tol)
            ++depth;
        weights_.resize(depth);
        for (int n = 0; n < depth; ++n)
            weights_[n] = std::exp2(-n * beta);
    }

    bool empty() const { return weights_.empty(); }
    double beta() const { return beta_; }
    double tol() const { return tol_; }
    int depth() const { return static_cast<int>(weights_.size()); }
    double weight(int n) const { return weights_[n]; }

    //! Geometric tail bound of the dropped terms.
    double tail_bound() const
    {
        return std::exp2(-depth() * beta_) / (1.0 - std::exp2(-beta_));
    }

    //! Value at zero of the truncated sum (its maximum).
    double peak() const
    {
        double s = 0.0;
        for (double w : weights_)
            s += w;
        return s;
    }

    //! Phase pi * (2^n x mod 2); the power-of-two scaling is exact.
    static double phase(double x, int n)
    {
        return std::numbers::pi * std::fmod(std::ldexp(x, n), 2.0);
    }

    double operator()(double x) const
    {
        double s = 0.0;
        for (int n = 0; n < depth(); ++n)
            s += weights_[n] * std::cos(phase(x, n));
        return s;
    }

private:
    double beta_ = 0.0;
    double tol_ = 0.0;
    std::vector<double> weights_;
};

// ---------------------------------------------------------------------------
// piecewise functions: polynomial plus shifted Weierstrass components per piece

struct Wave {
    double scale;
    double shift;

    bool operator==(const Wave&) const = default;
};

struct Piece {
    double lo;
    double hi;
    std::vector<double> poly;
    std::vector<Wave> waves;

    bool has_waves() const { return !waves.empty(); }
    bool same_formula(const Piece& o) const { return poly == o.poly && waves == o.waves; }
};

class PiecewiseFunction {
public:
    std::vector<Piece> pieces; //!< sorted, interiors disjoint
    WeierstrassSeries series;  //!< shared by every wave component

    PiecewiseFunction() = default;
    PiecewiseFunction(std::vector<Piece> p, WeierstrassSeries s = {})
        : pieces(std::move(p)), series(std::move(s))
    {
        normalize();
    }

    bool has_waves() const
    {
        return std::any_of(pieces.begin(), pieces.end(), [](const Piece& p) { return p.has_waves(); });
    }

    //! Evaluates the formula of `p` at x, ignoring the piece's extent.
    double piece_value(const Piece& p, double x) const
    {
        double v = poly_eval(p.poly, x);
        for (const Wave& w : p.waves)
            v += w.scale * series(x - w.shift);
        return v;
    }

    //! First piece whose closed extent contains x, or nullptr.
    const Piece* piece_at(double x) const
    {
        auto it = std::lower_bound(pieces.begin(), pieces.end(), x,
                                   [](const Piece& p, double v) { return p.hi < v; });
        if (it == pieces.end() || it->lo > x)
            return nullptr;
        return &*it;
    }

    double operator()(double x) const
    {
        const Piece* p = piece_at(x);
        return p ? piece_value(*p, x) : 0.0;
    }

    //! k-th derivative at x; requires a wave-free piece.
    double derivative(double x, int k) const
    {
        const Piece* p = piece_at(x);
        if (!p)
            return 0.0;
        if (k > 0 && p->has_waves())
            throw Error(Errc::oracle_unavailable, "derivative of a Weierstrass piece");
        return poly_eval(poly_derivative(p->poly, k), x);
    }

    //! Finite piece endpoints, sorted and unique.
    std::vector<double> breakpoints() const
    {
        std::vector<double> b;
        for (const Piece& p : pieces) {
            if (std::isfinite(p.lo))
                b.push_back(p.lo);
            if (std::isfinite(p.hi))
                b.push_back(p.hi);
        }
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        return b;
    }

    //! (min, max) over [a, b]: exact on polynomial pieces, `scan`-point grid on
    //! Weierstrass pieces, and zero wherever no piece is defined.
    std::pair<double, double> range(double a, double b, int scan = 2048) const
    {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        auto take = [&](double v) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        };
        double covered = a;
        bool gap = false;
        for (const Piece& p : pieces) {
            double x0 = std::max(a, p.lo), x1 = std::min(b, p.hi);
            if (x0 > x1)
                continue;
            if (x0 > covered)
                gap = true;
            covered = std::max(covered, x1);
            if (!p.has_waves()) {
                auto r = poly_range(p.poly, x0, x1);
                take(r.first);
                take(r.second);
            } else {
                for (int i = 0; i <= scan; ++i)
                    take(piece_value(p, i == scan ? x1 : x0 + (x1 - x0) * i / scan));
            }
        }
        if (covered < b || gap || !(lo <= hi))
            take(0.0);
        return {lo, hi};
    }

    //! Certified upper bound of the function: exact polynomial maxima plus the
    //! largest possible contribution of each wave.
    double sup_bound() const
    {
        double s = 0.0;
        double peak = series.empty() ? 0.0 : series.peak();
        for (const Piece& p : pieces) {
            double lo = std::isfinite(p.lo) ? p.lo : -1e6;
            double hi = std::isfinite(p.hi) ? p.hi : 1e6;
            double v = poly_range(p.poly, lo, hi).second;
            for (const Wave& w : p.waves)
                v += std::abs(w.scale) * peak;
            s = std::max(s, v);
        }
        return s;
    }

    //! Adds `poly` and `waves` on [lo, hi], splitting pieces and filling gaps.
    void add(double lo, double hi, const std::vector<double>& poly, const std::vector<Wave>& waves)
    {
        split_at(lo);
        split_at(hi);
        std::vector<Piece> out;
        double cursor = lo;
        for (Piece& p : pieces) {
            if (p.hi <= lo || p.lo >= hi) {
                out.push_back(p);
                continue;
            }
            if (p.lo > cursor)
                out.push_back(Piece{cursor, p.lo, {}, {}});
            out.push_back(p);
            cursor = p.hi;
        }
        if (cursor < hi)
            out.push_back(Piece{cursor, hi, {}, {}});
        std::sort(out.begin(), out.end(), [](const Piece& x, const Piece& y) { return x.lo < y.lo; });
        for (Piece& p : out) {
            if (p.lo >= lo && p.hi <= hi) {
                p.poly = poly_add(p.poly, poly);
                p.waves.insert(p.waves.end(), waves.begin(), waves.end());
            }
        }
        pieces = std::move(out);
        normalize();
    }

    //! Combines waves with equal shifts, drops cancelled terms, merges equal neighbours.
    void normalize()
    {
        std::sort(pieces.begin(), pieces.end(), [](const Piece& x, const Piece& y) { return x.lo < y.lo; });
        for (Piece& p : pieces) {
            poly_trim(p.poly);
            std::vector<Wave> merged;
            for (const Wave& w : p.waves) {
                auto it = std::find_if(merged.begin(), merged.end(),
                                       [&](const Wave& m) { return m.shift == w.shift; });
                if (it == merged.end())
                    merged.push_back(w);
                else
                    it->scale += w.scale;
            }
            merged.erase(std::remove_if(merged.begin(), merged.end(),
                                        [](const Wave& w) { return w.scale == 0.0; }),
                         merged.end());
            p.waves = std::move(merged);
        }
        std::vector<Piece> out;
        for (Piece& p : pieces) {
            if (!(p.lo < p.hi))
                continue;
            if (!out.empty() && out.back().hi == p.lo && out.back().same_formula(p))
                out.back().hi = p.hi;
            else
                out.push_back(std::move(p));
        }
        pieces = std::move(out);
    }

private:
    void split_at(double x)
    {
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            if (pieces[i].lo < x && x < pieces[i].hi) {
                Piece right = pieces[i];
                right.lo = x;
                pieces[i].hi = x;
                pieces.insert(pieces.begin() + static_cast<std::ptrdiff_t>(i) + 1, right);
                return;
            }
        }
    }
};

//! The raw Weierstrass function on the whole line (not a density).
inline PiecewiseFunction make_weierstrass_function(double beta, double tol = 1e-12)
{
    double inf = std::numeric_limits<double>::infinity();
    return PiecewiseFunction({Piece{-inf, inf, {}, {Wave{1.0, 0.0}}}}, WeierstrassSeries(beta, tol));
}

} // namespace locband
