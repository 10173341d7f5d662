#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "piecewise.hpp"

namespace locband {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

//! A Hoelder-norm bound ||p||_{beta, beta*, U} <= L certified on U = (lo, hi).
struct HolderBudget {
    double beta;
    double L;
    double lo;
    double hi;
};

enum class PieceKind { constant, affine, polynomial, weierstrass };

enum class Family { weierstrass_composite, weierstrass_perturbed, tent, tent_perturbed, peak, uniform };

struct AnalyticDensity {
    std::string name;
    Family family;
    PiecewiseFunction f;
    double support_lo = 0.0;
    double support_hi = 0.0;
    double sup_bound = 0.0;
    std::vector<double> kinks;
    std::vector<HolderBudget> budgets;
    std::optional<double> exponent; //!< local exponent, when pinned by construction
    double center = 0.0;            //!< location parameter t of the construction
    double beta = 1.0;              //!< construction exponent

    double operator()(double x) const { return f(x); }
    double evaluate(double x) const { return f(x); }

    static PieceKind kind_of(const Piece& p)
    {
        if (p.has_waves())
            return PieceKind::weierstrass;
        int d = poly_degree(p.poly);
        if (d <= 0)
            return PieceKind::constant;
        return d == 1 ? PieceKind::affine : PieceKind::polynomial;
    }

    //! True when every piece is constant or affine.
    bool piecewise_affine() const
    {
        for (const Piece& p : f.pieces)
            if (kind_of(p) == PieceKind::weierstrass || kind_of(p) == PieceKind::polynomial)
                return false;
        return true;
    }
};

namespace detail {

inline void finish_density(AnalyticDensity& d)
{
    d.f.normalize();
    d.kinks = d.f.breakpoints();
    d.support_lo = d.f.pieces.front().lo;
    d.support_hi = d.f.pieces.back().hi;
    // the tiny relative slack absorbs rounding in the truncated sums
    d.sup_bound = d.f.sup_bound() * (1.0 + 1e-12);
}

inline std::string fmt(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace detail

// ---------------------------------------------------------------------------
// Weierstrass function and its constants

inline double weierstrass_eval(const WeierstrassSeries& spec, double x) { return spec(x); }

//! Certified bound pi / (1 - 2^{beta-1}) + 3 / (1 - 2^{-beta}) on the Hoelder
//! norm of the Weierstrass function.
inline double weierstrass_norm_bound(double beta)
{
    if (!(beta > 0.0))
        throw Error(Errc::invalid_exponent, "exponent must be positive");
    if (beta >= 1.0)
        throw Error(Errc::unbounded_constant, "the constant diverges as beta -> 1");
    return std::numbers::pi / (1.0 - std::exp2(beta - 1.0)) + 3.0 / (1.0 - std::exp2(-beta));
}

//! Bound pi / (1 - 2^{beta-1}) + 2 / (1 - 2^{-beta}) on the Hoelder quotient of
//! the Weierstrass function; infinite at beta = 1.
inline double weierstrass_quotient_bound(double beta)
{
    if (beta >= 1.0)
        return infinity;
    return std::numbers::pi / (1.0 - std::exp2(beta - 1.0)) + 2.0 / (1.0 - std::exp2(-beta));
}

//! (4/pi - 1): the constant of the bias lower bound.
inline double bias_lower_constant() { return 4.0 / std::numbers::pi - 1.0; }

// ---------------------------------------------------------------------------
// constructions

//! 1/6 + ((1 - 2^{-beta}) / 12) W_beta(x - t) on |x - t| <= 2, affine flanks
//! down to zero at t +- 10/3.
inline AnalyticDensity make_weierstrass_composite(double t, double beta, double tol = 1e-12)
{
    if (!(beta > 0.0 && beta < 1.0))
        throw Error(Errc::invalid_exponent, "composite exponent must lie in (0, 1)");
    double c = (1.0 - std::exp2(-beta)) / 12.0;
    std::vector<Piece> pieces{
        Piece{t - 10.0 / 3.0, t - 2.0, {0.25 + 3.0 / 16.0 * (2.0 - t), 3.0 / 16.0}, {}},
        Piece{t - 2.0, t + 2.0, {1.0 / 6.0}, {Wave{c, t}}},
        Piece{t + 2.0, t + 10.0 / 3.0, {0.25 + 3.0 / 16.0 * (t + 2.0), -3.0 / 16.0}, {}},
    };
    AnalyticDensity d;
    d.name = "weierstrass:" + detail::fmt(beta) + ":" + detail::fmt(t);
    d.family = Family::weierstrass_composite;
    d.f = PiecewiseFunction(std::move(pieces), WeierstrassSeries(beta, tol));
    d.center = t;
    d.beta = beta;
    d.exponent = beta;
    d.budgets.push_back({beta, 0.25 + c * weierstrass_norm_bound(beta), t - 2.0, t + 2.0});
    detail::finish_density(d);
    return d;
}

//! 1/4 - |x - t| / 16 on |x - t| <= 4.
inline AnalyticDensity make_triangular_hypothesis(double t)
{
    std::vector<Piece> pieces{
        Piece{t - 4.0, t, {0.25 - t / 16.0, 1.0 / 16.0}, {}},
        Piece{t, t + 4.0, {0.25 + t / 16.0, -1.0 / 16.0}, {}},
    };
    AnalyticDensity d;
    d.name = "tent:" + detail::fmt(t);
    d.family = Family::tent;
    d.f = PiecewiseFunction(std::move(pieces));
    d.center = t;
    d.beta = 1.0;
    d.budgets.push_back({1.0, 5.0 / 16.0, t - 2.0, t + 2.0});
    detail::finish_density(d);
    return d;
}

//! 4x on [0, 1/2], 4(1 - x) on [1/2, 1].
inline AnalyticDensity make_peak_triangular()
{
    std::vector<Piece> pieces{
        Piece{0.0, 0.5, {0.0, 4.0}, {}},
        Piece{0.5, 1.0, {4.0, -4.0}, {}},
    };
    AnalyticDensity d;
    d.name = "peak";
    d.family = Family::peak;
    d.f = PiecewiseFunction(std::move(pieces));
    d.center = 0.5;
    d.beta = 1.0;
    d.budgets.push_back({1.0, 6.0, 0.0, 1.0});
    detail::finish_density(d);
    return d;
}

//! Uniform density on [lo, hi].
inline AnalyticDensity make_uniform(double lo, double hi)
{
    if (!(lo < hi))
        throw Error(Errc::invalid_interval, "uniform support must be a proper interval");
    AnalyticDensity d;
    d.name = "uniform:" + detail::fmt(lo) + ":" + detail::fmt(hi);
    d.family = Family::uniform;
    d.f = PiecewiseFunction({Piece{lo, hi, {1.0 / (hi - lo)}, {}}});
    d.center = 0.5 * (lo + hi);
    d.beta = infinity;
    d.budgets.push_back({infinity, 1.0 / (hi - lo), lo, hi});
    detail::finish_density(d);
    return d;
}

//! Bump radius g_{beta,n} = n^{-1/(2 beta + 1)} / 4.
inline double bump_radius(std::int64_t n, double beta)
{
    return 0.25 * std::pow(static_cast<double>(n), -1.0 / (2.0 * beta + 1.0));
}

//! (2 L_W(beta))^{-1/beta}: radius factor of the narrower variant-two bump.
inline double narrow_bump_factor(double beta) { return std::pow(2.0 * weierstrass_norm_bound(beta), -1.0 / beta); }

//! Moves mass from a bump of radius r at t to a bump at t + 9/4, flattening the
//! density on B(t, r). Works on composite and tent bases.
inline AnalyticDensity make_bump_pair(const AnalyticDensity& base, double radius, const std::string& name)
{
    if (!(radius > 0.0))
        throw Error(Errc::construction_overlap, "bump radius must be positive");
    if (radius >= 2.0)
        throw Error(Errc::construction_overlap, "bump radius must be below 2");
    double t = base.center, a = t + 9.0 / 4.0;
    AnalyticDensity d = base;
    d.name = name;
    d.exponent.reset();
    if (base.family == Family::weierstrass_composite) {
        double c = (1.0 - std::exp2(-base.beta)) / 12.0;
        double wr = base.f.series(radius);
        d.f.add(a - radius, a + radius, {-c * wr}, {Wave{c, a}});
        d.f.add(t - radius, t + radius, {c * wr}, {Wave{-c, t}});
        d.family = Family::weierstrass_perturbed;
    } else if (base.family == Family::tent) {
        auto tent_bump = [&](double at, double sign) {
            d.f.add(at - radius, at, {sign * (radius - at) / 16.0, sign / 16.0}, {});
            d.f.add(at, at + radius, {sign * (radius + at) / 16.0, -sign / 16.0}, {});
        };
        tent_bump(a, 1.0);
        tent_bump(t, -1.0);
        d.family = Family::tent_perturbed;
    } else {
        throw Error(Errc::invalid_configuration, "perturbations need a composite or tent base");
    }
    detail::finish_density(d);
    return d;
}

//! 48 L_W^2 4^{-(2 beta + 1)} 2^{2 beta} ((1 - 2^{-beta}) / 12)^2, the
//! bound on n KL(p_{1,n}, p_0) for the composite pair.
inline double kl_bound_composite(double beta)
{
    double lw = weierstrass_norm_bound(beta), c = (1.0 - std::exp2(-beta)) / 12.0;
    return 48.0 * lw * lw * std::pow(4.0, -(2.0 * beta + 1.0)) * std::exp2(2.0 * beta) * c * c;
}

//! 2 / (3 * 32^2) + 1 / 32, the bound on n KL(p_{2,n}, p_{1,n}) for the tent pair.
inline double kl_bound_tent_pair() { return 2.0 / (3.0 * 32.0 * 32.0) + 1.0 / 32.0; }

enum class Variant { one, two };

//! Lower-bound hypotheses: variant one uses the bump radius g_{beta,n}; variant
//! two uses narrow_bump_factor(beta) g_{beta,n} for composites and g_{1,n} / 2 for the tent.
inline AnalyticDensity make_perturbed(const AnalyticDensity& base, std::int64_t n, double beta, Variant v)
{
    if (n < 4)
        throw Error(Errc::insufficient_data, "sample size must be at least 4");
    double g = 0.0;
    std::string tag = v == Variant::one ? "perturbed1:" : "perturbed2:";
    if (base.family == Family::weierstrass_composite) {
        if (beta != base.beta)
            throw Error(Errc::invalid_exponent, "exponent differs from the composite's construction exponent");
        g = bump_radius(n, beta);
        if (v == Variant::two)
            g *= narrow_bump_factor(beta);
    } else if (base.family == Family::tent) {
        g = bump_radius(n, 1.0);
        if (v == Variant::two)
            g *= 0.5;
    } else {
        throw Error(Errc::invalid_configuration, "perturbations need a composite or tent base");
    }
    return make_bump_pair(base, g, tag + detail::fmt(beta) + ":" + std::to_string(n));
}

//! Resolves weierstrass:<beta>:<t>, perturbed1:<beta>:<n>, perturbed2:<beta>:<n>,
//! tent:<t>, peak and uniform:<lo>:<hi>. Perturbed members are centred at 1/2.
inline AnalyticDensity density_from_name(const std::string& spec)
{
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':'))
        parts.push_back(item);
    auto num = [&](std::size_t i) {
        try {
            std::size_t pos = 0;
            double v = std::stod(parts.at(i), &pos);
            if (pos != parts[i].size())
                throw std::invalid_argument(parts[i]);
            return v;
        } catch (const std::exception&) {
            throw Error(Errc::unknown_density, "malformed density name '" + spec + "'");
        }
    };
    if (parts.empty())
        throw Error(Errc::unknown_density, "empty density name");
    const std::string& kind = parts[0];
    if (kind == "peak" && parts.size() == 1)
        return make_peak_triangular();
    if (kind == "tent" && parts.size() == 2)
        return make_triangular_hypothesis(num(1));
    if (kind == "weierstrass" && parts.size() == 3)
        return make_weierstrass_composite(num(2), num(1));
    if (kind == "uniform" && parts.size() == 3)
        return make_uniform(num(1), num(2));
    if ((kind == "perturbed1" || kind == "perturbed2") && parts.size() == 3) {
        double beta = num(1);
        auto n = static_cast<std::int64_t>(num(2));
        Variant v = kind == "perturbed1" ? Variant::one : Variant::two;
        if (beta == 1.0)
            return make_perturbed(make_triangular_hypothesis(0.5), n, 1.0, v);
        return make_perturbed(make_weierstrass_composite(0.5, beta), n, beta, v);
    }
    throw Error(Errc::unknown_density, "unknown density '" + spec + "'");
}

} // namespace locband
