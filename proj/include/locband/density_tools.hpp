#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "calibration.hpp"
#include "convolution.hpp"
#include "densities.hpp"
#include "error.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace locband {

// ---------------------------------------------------------------------------
// sampling

//! Rejection sampling with a uniform proposal over the support. Each proposal
//! consumes two uniforms from the stream: first the location, then the height.
inline std::vector<double> sample(const AnalyticDensity& p, std::int64_t m, std::uint64_t seed)
{
    if (m < 1)
        throw Error(Errc::insufficient_data, "sample size must be at least 1");
    Rng rng(seed);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m));
    double width = p.support_hi - p.support_lo;
    while (static_cast<std::int64_t>(out.size()) < m) {
        double x = p.support_lo + width * rng.uniform();
        double u = p.sup_bound * rng.uniform();
        double v = p(x);
        if (v > p.sup_bound)
            throw Error(Errc::corrupt_density, p.name + " exceeds its sup bound at x = " + format_double(x));
        if (u < v)
            out.push_back(x);
    }
    return out;
}

// ---------------------------------------------------------------------------
// local exponent oracle

//! n-dependent local exponent for piecewise-affine members (distance to the
//! nearest kink against the optimal-bandwidth ladder), or the stored exponent of
//! a Weierstrass composite. Returns +inf for "infinitely smooth".
inline double local_exponent_oracle(const AnalyticDensity& p, double t, const CalibrationPlan& plan)
{
    if (!(t >= 0.0 && t <= 1.0))
        throw Error(Errc::out_of_domain, "oracle point must lie in [0, 1]");
    if (p.exponent)
        return *p.exponent;
    if (!p.piecewise_affine())
        throw Error(Errc::oracle_unavailable, p.name + " has no closed-form local exponent");
    double d = infinity;
    for (double k : p.kinks)
        d = std::min(d, std::abs(t - k));
    double top = std::ldexp(1.0, -plan.j_min);
    if (d >= top)
        return infinity;
    if (d <= optimal_bandwidth(plan, 1.0))
        return 1.0;
    double nt = static_cast<double>(plan.n_tilde);
    double ratio = std::log(d * std::ldexp(1.0, plan.j_min)) / std::log(plan.log_nt() / nt);
    double beta = 0.5 * (1.0 / ratio - 1.0);
    return std::min(beta, plan.params.beta_star_high);
}

// ---------------------------------------------------------------------------
// modified Hoelder norm

//! max{n integer : n < x}.
inline int floor_strict(double x)
{
    return static_cast<int>(std::ceil(x)) - 1;
}

namespace detail {

//! Sup of |f^(k)| over the pieces meeting [lo, hi]; wave pieces only for k = 0.
inline double derivative_sup(const PiecewiseFunction& f, int k, double lo, double hi)
{
    if (k == 0) {
        auto r = f.range(lo, hi);
        return std::max(std::abs(r.first), std::abs(r.second));
    }
    double s = 0.0;
    for (const Piece& p : f.pieces) {
        double a = std::max(lo, p.lo), b = std::min(hi, p.hi);
        if (a >= b)
            continue;
        auto r = poly_range(poly_derivative(p.poly, k), a, b);
        s = std::max({s, std::abs(r.first), std::abs(r.second)});
    }
    return s;
}

//! True if f has r continuous derivatives on (lo, hi) as piecewise polynomials.
inline bool smooth_to_order(const PiecewiseFunction& f, int r, double lo, double hi)
{
    for (const Piece& p : f.pieces) {
        if (p.hi <= lo || p.lo >= hi)
            continue;
        if (p.has_waves())
            return false;
    }
    for (std::size_t i = 0; i + 1 <= f.pieces.size(); ++i) {
        const Piece& p = f.pieces[i];
        for (double b : {p.lo, p.hi}) {
            if (!(b > lo && b < hi))
                continue;
            const Piece* left = nullptr;
            const Piece* right = nullptr;
            for (const Piece& q : f.pieces) {
                if (q.hi == b)
                    left = &q;
                if (q.lo == b)
                    right = &q;
            }
            for (int k = 0; k <= r; ++k) {
                double l = left ? poly_eval(poly_derivative(left->poly, k), b) : 0.0;
                double rr = right ? poly_eval(poly_derivative(right->poly, k), b) : 0.0;
                if (std::abs(l - rr) > 1e-12 * (1.0 + std::abs(l)))
                    return false;
            }
        }
    }
    return true;
}

} // namespace detail

//! Grid estimate of ||f||_{beta, beta*, (lo, hi)}: derivative sup norms from the
//! piece formulas plus the Hoelder quotient of the top derivative over all pairs
//! of `points` interior grid nodes. Infinite when the required derivatives do
//! not exist, or when beta = inf and the top derivative is not constant.
inline double holder_norm_grid(const PiecewiseFunction& f, double beta, double beta_star, double lo,
                               double hi, int points = 512)
{
    if (!(beta > 0.0))
        throw Error(Errc::invalid_exponent, "exponent must be positive");
    if (!(lo < hi))
        throw Error(Errc::invalid_interval, "degenerate interval");
    int r = floor_strict(std::min(beta, beta_star));
    if (r >= 1 && !detail::smooth_to_order(f, r, lo, hi))
        return infinity;
    double norm = 0.0;
    for (int k = 0; k <= r; ++k)
        norm += detail::derivative_sup(f, k, lo, hi);

    std::vector<double> x(points), v(points);
    for (int i = 0; i < points; ++i) {
        x[i] = lo + (hi - lo) * (i + 1) / (points + 1);
        v[i] = r == 0 ? f(x[i]) : f.derivative(x[i], r);
    }
    if (std::isinf(beta)) {
        auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        return (*mx - *mn) > 1e-12 * (1.0 + std::abs(*mx)) ? infinity : norm;
    }
    double e = beta - r, q = 0.0;
    for (int i = 0; i < points; ++i)
        for (int j = i + 1; j < points; ++j)
            q = std::max(q, std::abs(v[i] - v[j]) / std::pow(x[j] - x[i], e));
    return norm + q;
}

//! Largest sampled |f(x) - f(y)| / |x - y|^beta over `pairs` random pairs with
//! x uniform on [lo, hi] and log-uniform separations in [1e-6, hi - lo].
inline double holder_quotient_sample(const PiecewiseFunction& f, double beta, double lo, double hi,
                                     int pairs, std::uint64_t seed)
{
    Rng rng(seed);
    double q = 0.0, span = hi - lo;
    for (int i = 0; i < pairs; ++i) {
        double x = lo + span * rng.uniform();
        double d = 1e-6 * std::pow(span / 1e-6, rng.uniform());
        double y = rng.uniform() < 0.5 ? x - d : x + d;
        q = std::max(q, std::abs(f(x) - f(y)) / std::pow(std::abs(x - y), beta));
    }
    return q;
}

// ---------------------------------------------------------------------------
// admissibility

namespace detail {

inline bool is_dyadic(double h, int& j)
{
    int e = 0;
    double m = std::frexp(h, &e);
    j = 1 - e;
    return m == 0.5;
}

} // namespace detail

//! Conditions of the localized self-similarity assumption for u = h or u = 2h:
//! (a) Hoelder norm on B(t, u) at most L* (stored budget if one covers the ball,
//! grid estimate otherwise) and (b) bias over B(t, u - g) at least g^beta / log n
//! for dyadic g <= u / 8 down to 2^{-j_max}.
inline bool admissibility_check(const PiecewiseFunction& f, const std::vector<HolderBudget>& budgets,
                                const CalibrationPlan& plan, const Kernel& kernel, double t, double h,
                                double beta)
{
    int jh = 0;
    if (!(h > 0.0) || !detail::is_dyadic(h, jh) || jh < plan.j_min)
        throw Error(Errc::invalid_bandwidth, "h must be 2^{-j} with j >= j_min");
    const PlanParams& pp = plan.params;
    bool beta_ok = std::isinf(beta) || (beta >= pp.beta_star_low && beta <= pp.beta_star_high);
    if (!beta_ok)
        throw Error(Errc::invalid_exponent, "exponent outside [beta_*, beta*] and not infinite");
    double log_n = std::log(static_cast<double>(pp.n));

    for (double u : {h, 2.0 * h}) {
        double norm = -1.0;
        for (const HolderBudget& b : budgets)
            if (b.beta == beta && b.lo <= t - u && b.hi >= t + u)
                norm = b.L;
        if (norm < 0.0)
            norm = holder_norm_grid(f, beta, pp.beta_star_high, t - u, t + u);
        if (!(norm <= pp.L_star))
            continue;
        bool bias_ok = true;
        if (!std::isinf(beta)) {
            for (int i = detail::is_dyadic(u, jh) ? jh + 3 : 0; i <= plan.j_max && bias_ok; ++i) {
                double g = std::ldexp(1.0, -i);
                double b = sup_abs_bias(kernel, f, g, t - (u - g), t + (u - g), g / 64.0);
                bias_ok = b >= std::pow(g, beta) / log_n;
            }
        }
        if (bias_ok)
            return true;
    }
    return false;
}

inline bool admissibility_check(const AnalyticDensity& p, const CalibrationPlan& plan, const Kernel& kernel,
                                double t, double h, double beta)
{
    return admissibility_check(p.f, p.budgets, plan, kernel, t, h, beta);
}

// ---------------------------------------------------------------------------
// Kullback-Leibler divergence

struct KlResult {
    double value;
    double error_estimate; //!< sum of last Simpson refinement differences
};

namespace detail {

inline const Piece* piece_over(const PiecewiseFunction& f, double a, double b)
{
    return f.piece_at(0.5 * (a + b));
}

} // namespace detail

//! KL(p, q) = integral of p log(p / q) over {q > 0}. Integrates the pointwise
//! nonnegative form p log(p / q) - p + q, which has the same integral because
//! both densities have unit mass. Works segment by segment on the common
//! refinement of both piece structures, doubling the panel count until
//! successive estimates differ by at most the segment's share of tol (or the
//! panel cap is hit). Polynomial segments use composite Simpson; segments with
//! Weierstrass terms use composite 12-point Gauss, since equispaced nodes alias
//! the dyadic frequencies. Segments on which p and q share a formula contribute
//! exactly zero.
inline KlResult kl_divergence_detail(const AnalyticDensity& p, const AnalyticDensity& q, double tol = 1e-8)
{
    if (!(tol > 0.0))
        throw Error(Errc::invalid_tolerance, "tolerance must be positive");
    std::vector<double> cuts = p.f.breakpoints();
    for (double b : q.f.breakpoints())
        cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // each segment evaluates its own piece formulas, so endpoint nodes do not
    // pick up a neighbouring piece through the closed extents
    const Piece* pp = nullptr;
    const Piece* qp = nullptr;
    auto integrand = [&](double x) {
        double a = pp ? std::max(p.f.piece_value(*pp, x), 0.0) : 0.0;
        double b = qp ? q.f.piece_value(*qp, x) : 0.0;
        if (b <= 0.0) {
            if (a > 0.0)
                throw Error(Errc::divergence_infinite, "p > 0 where q = 0 at x = " + format_double(x));
            return 0.0;
        }
        return a > 0.0 ? a * std::log(a / b) - a + b : b;
    };
    auto composite_gauss = [&](double a, double b, int panels) {
        double w = (b - a) / panels, s = 0.0;
        for (int i = 0; i < panels; ++i)
            s += gauss_integrate(integrand, a + i * w, a + (i + 1) * w);
        return s;
    };

    KlResult res{0.0, 0.0};
    double total_len = cuts.empty() ? 1.0 : cuts.back() - cuts.front();
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        double a = cuts[i - 1], b = cuts[i];
        pp = detail::piece_over(p.f, a, b);
        qp = detail::piece_over(q.f, a, b);
        if (!pp && !qp)
            continue;
        if (pp && qp && pp->same_formula(*qp))
            continue;
        bool waves = (pp && pp->has_waves()) || (qp && qp->has_waves());
        auto rule = [&](int n) { return waves ? composite_gauss(a, b, n) : simpson(integrand, a, b, n); };
        const int cap = waves ? (1 << 12) : (1 << 17);
        double seg_tol = tol * (b - a) / total_len;
        int n = waves ? 8 : 64;
        double prev = rule(n), cur = prev, diff = 0.0;
        while (true) {
            n *= 2;
            cur = rule(n);
            diff = std::abs(cur - prev);
            if (diff <= seg_tol || n >= cap)
                break;
            prev = cur;
        }
        res.value += cur;
        res.error_estimate += diff;
    }
    return res;
}

inline double kl_divergence(const AnalyticDensity& p, const AnalyticDensity& q, double tol = 1e-8)
{
    return kl_divergence_detail(p, q, tol).value;
}

} // namespace locband
