// Acceptance runner: one pass/fail line per criterion.
//
//   acceptance            run every criterion
//   acceptance <id>...    run the listed criteria (1 2 3 4 5 6 7 8a 8b 9 10)
//
// Exit status is 0 iff every selected criterion passed.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <locband/locband.hpp>

using namespace locband;

namespace {

constexpr std::uint64_t seed = 20240601;

struct Outcome {
    bool pass;
    std::string detail;
};

struct Criterion {
    std::string id;
    double limit_s; //!< runtime ceiling
    std::function<Outcome()> run;
};

std::string num(double v) { return format_double(v); }

//! Worst margin of one verify suite, pass iff every item passes.
Outcome suite_outcome(const std::string& suite)
{
    VerifyOptions o;
    o.suites = {suite};
    o.seed = seed;
    Report r = verify_inequalities(o);
    double worst = -infinity;
    for (const auto& row : r.rows)
        worst = std::max(worst, std::stod(row[3]));
    int failures = static_cast<int>(r.stat("failures"));
    return {failures == 0, suite + ": items=" + num(r.stat("items")) + " failures=" + std::to_string(failures) +
                               " worst_margin=" + num(worst)};
}

Outcome multi_suite(const std::vector<std::string>& suites)
{
    Outcome all{true, ""};
    for (const auto& s : suites) {
        Outcome o = suite_outcome(s);
        all.pass = all.pass && o.pass;
        all.detail += (all.detail.empty() ? "" : "; ") + o.detail;
    }
    return all;
}

const std::vector<std::int64_t>& adaptivity_ns()
{
    static const std::vector<std::int64_t> ns{1 << 12, 1 << 14, 1 << 16};
    return ns;
}

const Report& adaptivity_report()
{
    static const Report r = [] {
        Kernel k = make_rectangular();
        std::vector<CalibrationPlan> plans;
        for (auto n : adaptivity_ns())
            plans.push_back(derive_plan(practical_params(n), k));
        return run_adaptivity(make_peak_triangular(), plans, k, 0.1, 50, seed, {0.5, 0.9});
    }();
    return r;
}

std::vector<Criterion> criteria()
{
    return {
        {"1", 30.0, [] { return suite_outcome("weierstrass-bias"); }},
        {"2", 5.0, [] { return suite_outcome("holder"); }},
        {"3", 30.0, [] { return suite_outcome("bias-upper"); }},
        {"4", 10.0,
         [] {
             const double tol = 0.02;
             Kernel k = make_rectangular();
             Report r = run_gumbel_calibration(derive_plan(practical_params(1 << 14), k), k, 4096, 5000, seed);
             double ks = r.stat("ks");
             return Outcome{ks <= tol, "ks=" + num(ks) + " tol=" + num(tol) + " ks_exact_law=" +
                                           num(r.stat("ks_exact_law")) + " law_gap=" +
                                           num(r.stat("exact_law_gumbel_gap"))};
         }},
        {"5", 60.0, [] { return suite_outcome("a1"); }},
        {"6", 5.0, [] { return multi_suite({"a2", "a3", "a4"}); }},
        {"7", 600.0,
         [] {
             const double floor = 0.90;
             Kernel k = make_rectangular();
             Report r = run_window_check(make_peak_triangular(), derive_plan(practical_params(1 << 14), k), k, 100,
                                         seed);
             double f = r.stat("hit_fraction");
             return Outcome{f >= floor, "hit_fraction=" + num(f) + " floor=" + num(floor) +
                                            " below=" + num(r.stat("below_fraction")) +
                                            " above=" + num(r.stat("above_fraction"))};
         }},
        {"8a", 1200.0,
         [] {
             const double floor = 0.90;
             const Report& r = adaptivity_report();
             std::string pre = "n=" + std::to_string(adaptivity_ns().back()) + ".";
             double f = r.stat("largest_n_within_fraction");
             return Outcome{f >= floor, "within_fraction=" + num(f) + " floor=" + num(floor) + " bound=" +
                                            num(r.stat(pre + "bound")) + " mean_normalized_kink=" +
                                            num(r.stat(pre + "mean_normalized_p0")) + " mean_normalized_smooth=" +
                                            num(r.stat(pre + "mean_normalized_p1"))};
         }},
        {"8b", 1200.0,
         [] {
             const Report& r = adaptivity_report();
             std::string d;
             for (auto n : adaptivity_ns())
                 d += "ratio(n=" + std::to_string(n) + ")=" + num(r.stat("n=" + std::to_string(n) + ".mean_ratio")) +
                      " ";
             return Outcome{r.stat("ratio_strictly_decreasing") == 1.0, d + "strictly_decreasing"};
         }},
        {"9", 1200.0,
         [] {
             const double slack = 0.03, floor = 0.85;
             Kernel k = make_rectangular();
             AnalyticDensity p = make_peak_triangular();
             std::vector<double> cov;
             std::string d;
             for (std::size_t i = 0; i < adaptivity_ns().size(); ++i) {
                 auto n = adaptivity_ns()[i];
                 Report r = run_coverage(p, derive_plan(practical_params(n), k), k, 0.1, 50,
                                         stream_seed(seed, static_cast<std::uint64_t>(n)));
                 cov.push_back(r.stat("coverage"));
                 d += "coverage(n=" + std::to_string(n) + ")=" + num(cov.back()) + " ";
             }
             bool ok = cov.back() >= floor;
             for (std::size_t i = 1; i < cov.size(); ++i)
                 ok = ok && cov[i] >= cov[i - 1] - slack;
             return Outcome{ok, d + "slack=" + num(slack) + " floor=" + num(floor)};
         }},
        {"10", 30.0, [] { return suite_outcome("kl"); }},
    };
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<std::string> wanted(argv + 1, argv + argc);
    std::vector<Criterion> all = criteria();
    for (const auto& w : wanted) {
        bool known = false;
        for (const auto& c : all)
            known = known || c.id == w;
        if (!known) {
            std::fprintf(stderr, "unknown criterion '%s'\n", w.c_str());
            return 2;
        }
    }
    bool every = true;
    for (const Criterion& c : all) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end())
            continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = secs < c.limit_s;
        bool pass = o.pass && in_time;
        every = every && pass;
        std::printf("criterion %-3s %s  %s  time=%.1fs limit=%.0fs%s\n", c.id.c_str(), pass ? "PASS" : "FAIL",
                    o.detail.c_str(), secs, c.limit_s, in_time ? "" : " (over time)");
        std::fflush(stdout);
    }
    return every ? 0 : 1;
}
