#include <cmath>

#include <gtest/gtest.h>

#include <locband/kernel.hpp>

using namespace locband;

TEST(Kernel, RectangularMetadata)
{
    Kernel k = make_rectangular();
    EXPECT_EQ(k.order, 1);
    EXPECT_EQ(k.beta_star(), 2);
    EXPECT_NEAR(k.tv, 1.0, 1e-12);
    EXPECT_NEAR(k.norm_l1, 1.0, 1e-12);
    EXPECT_NEAR(k.norm_l2_sq, 0.5, 1e-12);
    EXPECT_DOUBLE_EQ(k.norm_sup, 0.5);
    EXPECT_DOUBLE_EQ(k.support_radius, 1.0);
    EXPECT_TRUE(k.symmetric);
    EXPECT_TRUE(k.flat());
}

TEST(Kernel, RectangularSupportIsClosed)
{
    Kernel k = make_rectangular();
    EXPECT_EQ(k(1.0), 0.5);
    EXPECT_EQ(k(-1.0), 0.5);
    EXPECT_EQ(k(std::nextafter(1.0, 2.0)), 0.0);
    EXPECT_EQ(k(std::nextafter(-1.0, -2.0)), 0.0);
    EXPECT_EQ(k.evaluate(0.3), 0.5);
}

TEST(Kernel, MomentsOfRectangular)
{
    Kernel k = make_rectangular();
    EXPECT_NEAR(kernel_moment(k, 0), 1.0, 1e-12);
    EXPECT_NEAR(kernel_moment(k, 1), 0.0, 1e-12);
    EXPECT_NEAR(kernel_moment(k, 2), 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(kernel_moment(k, 4), 1.0 / 5.0, 1e-10);
}

TEST(Kernel, OtherShapes)
{
    Kernel e = make_epanechnikov();
    EXPECT_EQ(e.order, 1);
    EXPECT_NEAR(e.tv, 1.5, 1e-12);
    EXPECT_NEAR(e.norm_l2_sq, 0.6, 1e-10);
    EXPECT_NEAR(kernel_moment(e, 2), 0.2, 1e-10);
    EXPECT_FALSE(e.flat());

    Kernel t = make_triangular_kernel();
    EXPECT_EQ(t.order, 1);
    EXPECT_NEAR(t.tv, 2.0, 1e-12);
    EXPECT_NEAR(t.norm_l2_sq, 2.0 / 3.0, 1e-10);
    EXPECT_DOUBLE_EQ(t(0.0), 1.0);
    EXPECT_TRUE(t.symmetric);
}

TEST(Kernel, AsymmetricKernelHasOrderZero)
{
    Kernel k = make_kernel("skew", {KernelPiece{0.0, 1.0, {1.0}}});
    EXPECT_EQ(k.order, 0);
    EXPECT_EQ(k.beta_star(), 1);
    EXPECT_FALSE(k.symmetric);
    EXPECT_NEAR(k.tv, 2.0, 1e-12);
}

TEST(Kernel, Errors)
{
    try {
        make_kernel("bad", {KernelPiece{-1.0, 1.0, {1.0}}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::invalid_kernel);
    }
    EXPECT_THROW(make_kernel("empty", {}), Error);
    try {
        kernel_moment(make_rectangular(), 13);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::unsupported_moment);
    }
}

TEST(Kernel, SymmetricKernelsHaveVanishingOddMoments)
{
    for (const Kernel& k : {make_rectangular(), make_epanechnikov(), make_triangular_kernel()})
        for (int j = 1; j <= 11; j += 2)
            EXPECT_NEAR(kernel_moment(k, j), 0.0, 1e-12) << k.name << " j=" << j;
}
