#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include <locband/density_tools.hpp>
#include <locband/estimator.hpp>

using namespace locband;

TEST(Split, HalvesAndDropsOddPoint)
{
    std::vector<double> d{0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 0.8};
    SplitSample s = split_sample(d);
    EXPECT_EQ(s.n_tilde, 3);
    EXPECT_EQ(s.chi1, (std::vector<double>{0.1, 0.5, 0.9}));
    EXPECT_EQ(s.chi2, (std::vector<double>{0.2, 0.3, 0.7}));
    EXPECT_NE(s.chi1_id, s.chi2_id);
    EXPECT_EQ(s.chi1_id, fingerprint(s.chi1));
    try {
        split_sample({1.0, 2.0, 3.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::insufficient_data);
    }
}

TEST(Kde, ClosedSupportCountsBoundaryPoints)
{
    Kernel k = make_rectangular();
    std::vector<double> xs{0.25, 0.5, 0.75};
    // both 0.25 and 0.75 sit exactly on the support edge of t = 0.5, h = 0.25
    EXPECT_DOUBLE_EQ(kde_at(xs, 0.5, 0.25, k), 3.0 * 0.5 / 0.25 / 3.0);
    EXPECT_DOUBLE_EQ(kde_sorted(xs, 0.5, 0.25, k), 3.0 * 0.5 / 0.25 / 3.0);
    EXPECT_DOUBLE_EQ(kde_sorted(xs, 0.5, 0.125, k), 0.5 / 0.125 / 3.0);
    EXPECT_THROW(kde_at(xs, 0.5, 0.0, k), Error);
    EXPECT_THROW(kde_sorted({}, 0.5, 0.1, k), Error);
}

TEST(Kde, RankPathAgreesWithDirectSum)
{
    AnalyticDensity p = make_peak_triangular();
    std::vector<double> xs = sample(p, 3000, 17);
    std::sort(xs.begin(), xs.end());
    Kernel rect = make_rectangular(), epa = make_epanechnikov();
    Rng rng(4);
    for (int i = 0; i < 300; ++i) {
        double t = rng.uniform(), h = std::ldexp(1.0, -2 - static_cast<int>(rng.bits() % 8));
        EXPECT_NEAR(kde_sorted(xs, t, h, rect), kde_at(xs, t, h, rect), 1e-12 * (1.0 + kde_at(xs, t, h, rect)));
        EXPECT_NEAR(kde_sorted(xs, t, h, epa), kde_at(xs, t, h, epa), 1e-12);
    }
}

TEST(KdeTable, LayoutAndValues)
{
    Kernel k = make_rectangular();
    CalibrationPlan plan = derive_plan(practical_params(2048), k);
    SplitSample s = split_sample(sample(make_peak_triangular(), 2048, 1));
    KdeTable t = build_kde_table(s, plan, k);
    EXPECT_EQ(t.margin, plan.ball_steps(plan.j_min));
    EXPECT_EQ(t.size(), plan.mesh_count + 1 + 2 * t.margin);
    EXPECT_EQ(t.source_id, s.chi2_id);
    EXPECT_EQ(static_cast<int>(t.values.size()), plan.grid_size());
    for (std::int64_t kk : {-t.margin, std::int64_t{0}, std::int64_t{777}, plan.mesh_count + t.margin})
        for (int j = plan.j_min; j <= plan.j_max; ++j)
            EXPECT_EQ(t.at(kk, j), kde_sorted(s.chi2, plan.mesh_point(kk), std::ldexp(1.0, -j), k));
    EXPECT_EQ(build_kde_table(s, plan, k, 1).source_id, s.chi1_id);
    EXPECT_THROW(build_kde_table(s, plan, k, 3), Error);
}

TEST(ReadData, ParsesAndRejects)
{
    std::istringstream ok("0.5\n\n  1e-3 \n-2\r\n");
    EXPECT_EQ(read_data(ok), (std::vector<double>{0.5, 1e-3, -2.0}));
    for (const char* bad : {"0.5\nabc\n", "1.0x\n", "nan\n", "inf\n"}) {
        std::istringstream in(bad);
        try {
            read_data(in);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::parse_error);
        }
    }
    EXPECT_THROW(read_data_file("/nonexistent/file"), Error);
}
