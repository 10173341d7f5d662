#include <sstream>

#include <gtest/gtest.h>

#include <locband/harness.hpp>

using namespace locband;

TEST(Report, StatsAndMeta)
{
    Report r;
    r.name = "demo";
    r.set_param("alpha", "0.1");
    r.set_param("alpha", "0.2");
    r.set_stat("x", 1.5);
    r.add_warnings({"careful"});
    EXPECT_EQ(r.params.size(), 1u);
    EXPECT_EQ(r.param("alpha"), "0.2");
    EXPECT_TRUE(r.has_stat("x"));
    EXPECT_EQ(r.stat("x"), 1.5);
    EXPECT_THROW(r.stat("y"), Error);
    std::ostringstream os;
    write_report_meta(os, r);
    EXPECT_NE(os.str().find("experiment=demo"), std::string::npos);
    EXPECT_NE(os.str().find("summary.x=1.5"), std::string::npos);
    EXPECT_NE(os.str().find("warning.0=careful"), std::string::npos);
}

TEST(IncrementMoment, TermsSumAndDegenerateCases)
{
    auto terms = tilde_w_terms(0.25, 0.125, 10, 12, 1.0 / 32.0, 0.7);
    double s = 0.0;
    for (double t : terms)
        s += t;
    EXPECT_DOUBLE_EQ(s, tilde_w_second_moment(0.25, 0.125, 10, 12, 1.0 / 32.0, 0.7));
    // identical increments cancel; z = 0 collapses every increment
    EXPECT_NEAR(tilde_w_second_moment(0.25, 0.25, 10, 10, 1.0 / 32.0, 0.4), 0.0, 1e-12);
    EXPECT_NEAR(tilde_w_second_moment(0.25, 0.125, 10, 12, 1.0 / 32.0, 0.0), 0.0, 1e-12);
    // disjoint increments: each contributes 2z
    EXPECT_NEAR(tilde_w_second_moment(1.0 / 64.0, 1.0 / 64.0, 2, 30, 1.0 / 32.0, 0.5), 2.0, 1e-12);
    EXPECT_THROW(tilde_w_second_moment(0.5, 0.5, 1, 1, 1.0 / 32.0, 0.5), Error);
    EXPECT_THROW(increment_layout(0.0, 0.5, 1, 1, 0.1, 0.5), Error);
    EXPECT_THROW(increment_layout(0.1, 0.1, 1, 1, 0.1, 1.5), Error);
}

TEST(IncrementMoment, PropertyBoundedByFour)
{
    Rng rng(12);
    for (int i = 0; i < 2000; ++i) {
        TildeWConfig c = random_tilde_w_config(rng);
        double v = tilde_w_second_moment(c.h_k, c.h_l, c.k_idx, c.l_idx, c.delta_n, c.z);
        EXPECT_LE(v, 4.0 + 1e-12);
        EXPECT_GE(v, -1e-12);
    }
}

TEST(IncrementMoment, MonteCarloAgrees)
{
    TildeWConfig c{0.25, 0.125, 10, 12, 1.0 / 32.0, 0.7};
    double cf = tilde_w_second_moment(c.h_k, c.h_l, c.k_idx, c.l_idx, c.delta_n, c.z);
    EXPECT_NEAR(tilde_w_monte_carlo(c, 200000, 3), cf, 0.05);
}

TEST(Gumbel, StatisticsAndNormalizers)
{
    Kernel k = make_rectangular();
    CalibrationPlan plan = derive_plan(practical_params(2048), k);
    Report r = run_gumbel_calibration(plan, k, 4096, 400, 1);
    auto [a, b] = normalizers(1.0 / 4096.0, 1.0);
    EXPECT_EQ(r.stat("a_n"), a);
    EXPECT_EQ(r.stat("b_n"), b);
    EXPECT_NEAR(r.stat("cell_variance"), 0.5, 1e-12);
    EXPECT_NEAR(r.stat("target_variance"), 0.5, 1e-15);
    // the sample follows its exact finite-m law much more closely than the limit
    EXPECT_LT(r.stat("ks_exact_law"), 0.08);
    EXPECT_GT(r.stat("exact_law_gumbel_gap"), 0.03);
    EXPECT_EQ(r.rows.size(), 400u);
    EXPECT_THROW(run_gumbel_calibration(plan, k, 8, 10, 1), Error);
    EXPECT_THROW(run_gumbel_calibration(plan, k, 64, 0, 1), Error);
}

TEST(Gumbel, ExactLawIsADistributionFunction)
{
    auto [a, b] = normalizers(1.0 / 4096.0, 1.0);
    double prev = 0.0;
    for (double x = -5.0; x <= 15.0; x += 0.25) {
        double f = normalized_max_cdf(x, 4096, std::sqrt(0.5), a, b);
        EXPECT_GE(f, prev);
        prev = f;
    }
    EXPECT_GT(prev, 0.999);
    EXPECT_NEAR(log_normal_cdf(0.0), std::log(0.5), 1e-15);
    EXPECT_NEAR(log_normal_cdf(-30.0), -454.3212440, 1e-5);
}

TEST(Verify, SuitesAndFaultInjection)
{
    VerifyOptions o;
    o.suites = {"kernel", "a2", "a3"};
    Report ok = verify_inequalities(o);
    EXPECT_EQ(ok.stat("failures"), 0.0);
    EXPECT_EQ(ok.stat("items"), 5.0);
    o.fault = Fault::kernel_order;
    Report bad = verify_inequalities(o);
    EXPECT_GT(bad.stat("failures"), 0.0);
    o.suites = {"nope"};
    EXPECT_THROW(verify_inequalities(o), Error);
    EXPECT_EQ(parse_fault("kernel-order"), Fault::kernel_order);
    EXPECT_EQ(parse_fault(""), Fault::none);
    EXPECT_THROW(parse_fault("other"), Error);
}

TEST(Verify, NormAndQuotientSuitesPass)
{
    VerifyOptions o;
    o.suites = {"a4", "holder"};
    o.holder_pairs = 2000;
    Report r = verify_inequalities(o);
    EXPECT_EQ(r.stat("failures"), 0.0);
    for (const auto& row : r.rows)
        EXPECT_EQ(row[4], "pass") << row[1];
}

TEST(Experiments, CoverageIsReproducible)
{
    Kernel k = make_rectangular();
    CalibrationPlan plan = derive_plan(practical_params(2048), k);
    AnalyticDensity p = make_peak_triangular();
    Report a = run_coverage(p, plan, k, 0.1, 3, 77), b = run_coverage(p, plan, k, 0.1, 3, 77);
    EXPECT_EQ(a.rows, b.rows);
    EXPECT_LT(a.stat("width_law_residual"), 1e-14);
    EXPECT_GE(a.stat("coverage"), 0.0);
    EXPECT_LE(a.stat("coverage"), 1.0);
    EXPECT_TRUE(a.has_stat("mean_halfwidth_t=0.5"));
    EXPECT_THROW(run_coverage(p, plan, k, 0.1, 0, 1), Error);
}

TEST(Experiments, AdaptivityAndWindowReports)
{
    Kernel k = make_rectangular();
    std::vector<CalibrationPlan> plans{derive_plan(practical_params(2048), k), derive_plan(practical_params(4096), k)};
    AnalyticDensity p = make_peak_triangular();
    Report r = run_adaptivity(p, plans, k, 0.1, 2, 5, {0.5, 0.75});
    EXPECT_EQ(r.stat("n=2048.beta_p0"), 1.0);
    EXPECT_TRUE(std::isinf(r.stat("n=4096.beta_p1")));
    EXPECT_NEAR(r.stat("gamma"), 0.5 * (3.0 * std::log(2.0) - 1.0), 1e-15);
    EXPECT_EQ(r.rows.size(), 2u * 2u * 2u);
    EXPECT_THROW(run_adaptivity(p, plans, k, 0.1, 2, 5, {0.5}), Error);
    EXPECT_THROW(run_adaptivity(p, {}, k, 0.1, 2, 5, {0.5, 0.9}), Error);

    Report w = run_window_check(p, plans[0], k, 2, 5);
    EXPECT_NEAR(w.stat("hit_fraction") + w.stat("below_fraction") + w.stat("above_fraction"), 1.0, 1e-12);
}

TEST(Experiments, ThresholdCalibrationMeetsItsTarget)
{
    CalibrationOptions o;
    o.n = 2048;
    o.reps = 3;
    Report r = calibrate_c2(make_rectangular(), o);
    double c2 = r.stat("c2");
    EXPECT_GE(r.stat("fraction"), o.target);
    EXPECT_NEAR(c2 / o.step, std::round(c2 / o.step), 1e-9);
    EXPECT_EQ(r.rows.size(), 3u);
}
