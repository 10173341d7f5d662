#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <locband/convolution.hpp>
#include <locband/densities.hpp>
#include <locband/rng.hpp>

using namespace locband;

// Rectangular smoothing of a single cosine: (K_g * cos(w .))(s) = cos(w s) sin(w g) / (w g).
TEST(Convolution, WeierstrassTermByTerm)
{
    Kernel k = make_rectangular();
    PiecewiseFunction w = make_weierstrass_function(0.5);
    const WeierstrassSeries& ws = w.series;
    for (double g : {0.5, 1.0 / 32.0, 1.0 / 512.0})
        for (double s : {0.0, 0.013, -0.31}) {
            double ref = 0.0;
            for (int n = 0; n < ws.depth(); ++n) {
                double om = std::ldexp(std::numbers::pi, n);
                ref += ws.weight(n) * std::cos(om * s) * std::sin(om * g) / (om * g);
            }
            EXPECT_NEAR(convolve_at(k, w, g, s), ref, 1e-10) << "g=" << g << " s=" << s;
        }
}

// Frozen from an independent closed-form evaluation on the same grid.
TEST(Convolution, FrozenWeierstrassBiasSup)
{
    Kernel k = make_rectangular();
    PiecewiseFunction w = make_weierstrass_function(0.5);
    double g = 1.0 / 32.0, h = 0.125;
    EXPECT_NEAR(sup_abs_bias(k, w, g, -(h - g), h - g, g / 64.0), 0.7485346607, 1e-8);
}

TEST(Convolution, PeakApexAndAffineInvariance)
{
    Kernel k = make_rectangular();
    AnalyticDensity p = make_peak_triangular();
    for (double h : {0.25, 0.1, 1.0 / 64.0})
        EXPECT_NEAR(convolve_at(k, p.f, h, 0.5), 2.0 - 2.0 * h, 1e-13);
    // a symmetric kernel reproduces affine pieces away from the kinks
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        double h = 0.01 + 0.05 * rng.uniform();
        double s = 0.07 + (0.43 - 0.07 - h) * rng.uniform();
        EXPECT_NEAR(convolve_at(k, p.f, h, s), p(s), 1e-12);
    }
}

TEST(Convolution, EpanechnikovOnQuadratic)
{
    // f = x^2 on [-10, 10]; K_h * f (s) = s^2 + h^2 mu_2 with mu_2 = 1/5
    Kernel k = make_epanechnikov();
    PiecewiseFunction f({Piece{-10.0, 10.0, {0.0, 0.0, 1.0}, {}}});
    EXPECT_NEAR(convolve_at(k, f, 0.5, 1.0), 1.0 + 0.25 * 0.2, 1e-12);
}

TEST(Convolution, Errors)
{
    Kernel k = make_rectangular();
    AnalyticDensity p = make_peak_triangular();
    EXPECT_THROW(convolve_at(k, p.f, 0.0, 0.5), Error);
    EXPECT_THROW(convolve_at(k, p.f, 0.1, 0.5, 0.0), Error);
    EXPECT_THROW(sup_abs_bias(k, p.f, 0.1, 0.5, 0.5, 0.01), Error);
    EXPECT_THROW(sup_abs_bias(k, p.f, 0.1, 0.0, 1.0, 0.5), Error);
    try {
        sup_abs_bias(k, p.f, -1.0, 0.0, 1.0, 0.01);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::invalid_bandwidth);
    }
}

TEST(Convolution, BiasSupIsAGridMaximum)
{
    Kernel k = make_rectangular();
    AnalyticDensity p = make_peak_triangular();
    double g = 1.0 / 16.0;
    double sup = sup_abs_bias(k, p.f, g, 0.25, 0.75, g / 64.0);
    // attained at the apex: |(2 - 2g) - 2|
    EXPECT_NEAR(sup, 2.0 * g, 1e-12);
}
