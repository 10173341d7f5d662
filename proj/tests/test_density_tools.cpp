#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include <locband/density_tools.hpp>

using namespace locband;

TEST(Sampling, DeterministicAndInSupport)
{
    AnalyticDensity p = make_peak_triangular();
    auto a = sample(p, 1000, 42), b = sample(p, 1000, 42), c = sample(p, 1000, 43);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    for (double x : a) {
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
    EXPECT_THROW(sample(p, 0, 1), Error);
}

TEST(Sampling, MatchesTheDistribution)
{
    AnalyticDensity p = make_peak_triangular();
    auto xs = sample(p, 20000, 7);
    std::sort(xs.begin(), xs.end());
    auto cdf = [](double x) { return x <= 0.5 ? 2.0 * x * x : 1.0 - 2.0 * (1.0 - x) * (1.0 - x); };
    double ks = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double f = cdf(xs[i]);
        ks = std::max({ks, std::abs(f - static_cast<double>(i) / xs.size()),
                       std::abs(f - static_cast<double>(i + 1) / xs.size())});
    }
    // 1.63 / sqrt(n) is the 1% critical value
    EXPECT_LT(ks, 1.63 / std::sqrt(20000.0));
}

TEST(LocalExponent, PeakTriangular)
{
    CalibrationPlan plan = derive_plan(practical_params(1 << 14), make_rectangular());
    AnalyticDensity p = make_peak_triangular();
    EXPECT_EQ(local_exponent_oracle(p, 0.5, plan), 1.0);
    EXPECT_TRUE(std::isinf(local_exponent_oracle(p, 0.75, plan)));
    // the support end at 1 is a kink as well, which keeps 0.9 finite
    EXPECT_EQ(local_exponent_oracle(p, 0.9, plan), 2.0); // capped at beta*
    double mid = local_exponent_oracle(p, 0.5 + 0.06, plan);
    EXPECT_GT(mid, 1.0);
    EXPECT_LE(mid, 2.0);
    // the exponent grows with distance from the kink
    double prev = 0.0;
    for (double d = 0.0; d < 0.125; d += 0.005) {
        double b = local_exponent_oracle(p, 0.5 + d, plan);
        EXPECT_GE(b, prev);
        prev = b;
    }
    EXPECT_EQ(local_exponent_oracle(make_weierstrass_composite(0.5, 0.3), 0.2, plan), 0.3);
    EXPECT_THROW(local_exponent_oracle(p, 1.5, plan), Error);
}

TEST(HolderNorm, AffineAndCurved)
{
    AnalyticDensity p = make_peak_triangular();
    EXPECT_NEAR(holder_norm_grid(p.f, 1.0, 2.0, 0.55, 0.95), 1.8 + 4.0, 1e-9);
    // beta = 2 on an affine stretch: sup |f| + sup |f'| and a constant derivative
    EXPECT_NEAR(holder_norm_grid(p.f, 2.0, 2.0, 0.55, 0.95), 1.8 + 4.0, 1e-9);
    EXPECT_NEAR(holder_norm_grid(p.f, infinity, 2.0, 0.55, 0.95), 1.8 + 4.0, 1e-9);
    // across the kink the derivative does not exist
    EXPECT_TRUE(std::isinf(holder_norm_grid(p.f, 2.0, 2.0, 0.4, 0.6)));
    EXPECT_THROW(holder_norm_grid(p.f, 0.0, 2.0, 0.1, 0.2), Error);
}

TEST(HolderNorm, SampledQuotientBelowCertifiedBound)
{
    for (double beta : {0.3, 0.5, 0.8}) {
        PiecewiseFunction w = make_weierstrass_function(beta);
        EXPECT_LE(holder_quotient_sample(w, beta, -1.0, 1.0, 3000, 9), weierstrass_quotient_bound(beta));
    }
}

TEST(Admissibility, PeakKink)
{
    Kernel k = make_rectangular();
    PlanParams pp = practical_params(1 << 14);
    CalibrationPlan plan = derive_plan(pp, k);
    AnalyticDensity p = make_peak_triangular();
    // the stored budget 6 exceeds L* = 1
    EXPECT_FALSE(admissibility_check(p, plan, k, 0.5, 0.125, 1.0));
    pp.L_star = 10.0;
    plan = derive_plan(pp, k);
    EXPECT_TRUE(admissibility_check(p, plan, k, 0.5, 0.125, 1.0));
    EXPECT_THROW(admissibility_check(p, plan, k, 0.5, 0.1, 1.0), Error);
    EXPECT_THROW(admissibility_check(p, plan, k, 0.5, 0.5, 1.0), Error);
    EXPECT_THROW(admissibility_check(p, plan, k, 0.5, 0.125, 3.0), Error);
}

TEST(KullbackLeibler, ClosedForms)
{
    EXPECT_NEAR(kl_divergence(make_uniform(0.0, 1.0), make_uniform(0.0, 2.0)), std::log(2.0), 1e-12);
    EXPECT_NEAR(kl_divergence(make_peak_triangular(), make_peak_triangular()), 0.0, 1e-15);
    try {
        kl_divergence(make_uniform(0.0, 2.0), make_uniform(0.0, 1.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::divergence_infinite);
    }
    // KL(peak || U[0,1]) = integral of f log f = log 2 - 1/2
    EXPECT_NEAR(kl_divergence(make_peak_triangular(), make_uniform(0.0, 1.0)), std::log(2.0) - 0.5, 1e-8);
}

TEST(KullbackLeibler, PerturbedPairsBelowTheirBounds)
{
    AnalyticDensity p0 = make_weierstrass_composite(0.5, 0.5);
    for (std::int64_t n : {100, 1000}) {
        KlResult r = kl_divergence_detail(make_perturbed(p0, n, 0.5, Variant::one), p0, 1e-8);
        EXPECT_GT(r.value, 0.0);
        EXPECT_LE(static_cast<double>(n) * (r.value + r.error_estimate), kl_bound_composite(0.5));
    }
    AnalyticDensity t0 = make_triangular_hypothesis(0.5);
    for (std::int64_t n : {100, 1000, 10000}) {
        double nd = static_cast<double>(n);
        double a = kl_divergence(make_bump_pair(t0, std::pow(nd, -1.0 / 3.0), "b"), t0);
        EXPECT_LE(nd * a, 1.0 / 12.0);
        double b = kl_divergence(make_perturbed(t0, n, 1.0, Variant::two), make_perturbed(t0, n, 1.0, Variant::one));
        EXPECT_LE(nd * b, kl_bound_tent_pair());
    }
}
