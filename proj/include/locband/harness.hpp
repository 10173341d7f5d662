#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "band.hpp"
#include "calibration.hpp"
#include "convolution.hpp"
#include "densities.hpp"
#include "density_tools.hpp"
#include "error.hpp"
#include "estimator.hpp"
#include "kernel.hpp"
#include "rng.hpp"
#include "selector.hpp"

namespace locband {

// ---------------------------------------------------------------------------
// reports

struct Report {
    std::string name;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::pair<std::string, double>> summary;
    std::vector<std::string> warnings;

    void set_param(const std::string& key, const std::string& value)
    {
        for (auto& kv : params)
            if (kv.first == key) {
                kv.second = value;
                return;
            }
        params.emplace_back(key, value);
    }

    void set_stat(const std::string& key, double value)
    {
        for (auto& kv : summary)
            if (kv.first == key) {
                kv.second = value;
                return;
            }
        summary.emplace_back(key, value);
    }

    bool has_stat(const std::string& key) const
    {
        for (const auto& kv : summary)
            if (kv.first == key)
                return true;
        return false;
    }

    double stat(const std::string& key) const
    {
        for (const auto& kv : summary)
            if (kv.first == key)
                return kv.second;
        throw Error(Errc::invalid_configuration, "report '" + name + "' has no statistic '" + key + "'");
    }

    std::string param(const std::string& key) const
    {
        for (const auto& kv : params)
            if (kv.first == key)
                return kv.second;
        throw Error(Errc::invalid_configuration, "report '" + name + "' has no parameter '" + key + "'");
    }

    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }

    void add_warnings(const std::vector<std::string>& ws)
    {
        for (const std::string& w : ws)
            if (std::find(warnings.begin(), warnings.end(), w) == warnings.end())
                warnings.push_back(w);
    }
};

inline void write_report_csv(std::ostream& os, const Report& r)
{
    for (std::size_t i = 0; i < r.columns.size(); ++i)
        os << (i ? "," : "") << r.columns[i];
    os << "\n";
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << row[i];
        os << "\n";
    }
}

//! Sidecar: experiment name, parameter block, summary and warnings as key=value lines.
inline void write_report_meta(std::ostream& os, const Report& r)
{
    os << "experiment=" << r.name << "\n";
    for (const auto& [k, v] : r.params)
        os << k << "=" << v << "\n";
    for (const auto& [k, v] : r.summary)
        os << "summary." << k << "=" << format_double(v) << "\n";
    for (std::size_t i = 0; i < r.warnings.size(); ++i)
        os << "warning." << i << "=" << r.warnings[i] << "\n";
}

namespace detail {

inline std::string num(double v) { return format_double(v); }
inline std::string num(std::int64_t v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }
inline std::string num(std::uint64_t v) { return std::to_string(v); }

//! Copies every plan key into the parameter block under a prefix.
inline void record_plan(Report& r, const CalibrationPlan& plan, const std::string& prefix = "plan.")
{
    std::istringstream in(serialize_plan(plan));
    for (const auto& [k, v] : parse_key_values(in))
        r.set_param(prefix + k, v);
    r.add_warnings(plan.warnings);
}

inline void require_reps(int reps)
{
    if (reps < 1)
        throw Error(Errc::invalid_configuration, "at least one replication is required");
}

//! Sup over the sample of |empirical CDF - F| for sorted xs.
template <class F>
double ks_distance(const std::vector<double>& sorted, F&& cdf)
{
    double d = 0.0, n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double f = cdf(sorted[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

inline double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

} // namespace detail

// ---------------------------------------------------------------------------
// one replication of the full procedure

struct FittedBand {
    SplitSample split;
    BandwidthProfile profile;
    ConfidenceBand band;
};

inline FittedBand fit_band(const std::vector<double>& data, const CalibrationPlan& plan, const Kernel& k,
                           double alpha)
{
    FittedBand f;
    f.split = split_sample(data);
    KdeTable table = build_kde_table(f.split, plan, k);
    f.profile = select_profile(table, plan);
    f.band = build_band(f.split, f.profile, plan, k, alpha);
    return f;
}

//! Largest relative deviation from width * sqrt(n~ h_loc) = 2 q_n over all cells.
inline double width_law_residual(const ConfidenceBand& b)
{
    double worst = 0.0, nt = static_cast<double>(b.n_tilde);
    for (const BandCell& c : b.cells)
        worst = std::max(worst, std::abs(2.0 * c.halfwidth * std::sqrt(nt * c.h_loc) - 2.0 * b.q_n) / (2.0 * b.q_n));
    return worst;
}

// ---------------------------------------------------------------------------
// coverage

inline Report run_coverage(const AnalyticDensity& p, const CalibrationPlan& plan, const Kernel& k, double alpha,
                           int reps, std::uint64_t seed)
{
    detail::require_reps(reps);
    Report r;
    r.name = "coverage";
    r.set_param("density", p.name);
    r.set_param("kernel", k.name);
    r.set_param("alpha", detail::num(alpha));
    r.set_param("reps", detail::num(reps));
    r.set_param("seed", detail::num(seed));
    detail::record_plan(r, plan);
    r.columns = {"rep", "stream_seed", "covered", "min_halfwidth", "mean_halfwidth", "max_halfwidth",
                 "width_law_residual"};

    const int probes = 16;
    std::vector<double> probe_sum(probes + 1, 0.0);
    int covered = 0;
    double worst_law = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        std::uint64_t s = stream_seed(seed, static_cast<std::uint64_t>(rep));
        FittedBand fb = fit_band(sample(p, plan.params.n, s), plan, k, alpha);
        bool cov = covers_truth(fb.band, p);
        covered += cov;
        double mn = infinity, mx = 0.0, sum = 0.0;
        for (const BandCell& c : fb.band.cells) {
            mn = std::min(mn, c.halfwidth);
            mx = std::max(mx, c.halfwidth);
            sum += c.halfwidth;
        }
        for (int i = 0; i <= probes; ++i)
            probe_sum[i] += fb.band.cell_at(static_cast<double>(i) / probes).halfwidth;
        double law = width_law_residual(fb.band);
        worst_law = std::max(worst_law, law);
        r.add_row({detail::num(rep), detail::num(s), cov ? "1" : "0", detail::num(mn),
                   detail::num(sum / static_cast<double>(fb.band.cells.size())), detail::num(mx), detail::num(law)});
    }
    r.set_stat("coverage", static_cast<double>(covered) / reps);
    r.set_stat("width_law_residual", worst_law);
    for (int i = 0; i <= probes; ++i) {
        std::ostringstream key;
        key << "mean_halfwidth_t=" << static_cast<double>(i) / probes;
        r.set_stat(key.str(), probe_sum[i] / reps);
    }
    return r;
}

// ---------------------------------------------------------------------------
// adaptivity

//! gamma~ = (c1 log 2 - 1) / 2.
inline double adaptivity_log_power(const CalibrationPlan& plan)
{
    return 0.5 * (plan.params.c1 * std::log(2.0) - 1.0);
}

//! Widths at the probes normalized by (log n~ / n~)^{-beta/(2 beta + 1)} with the
//! oracle exponent. The first probe is taken as the kink, the second as the
//! smooth point; their ratio (smooth / kink) is tracked across the plan family.
inline Report run_adaptivity(const AnalyticDensity& p, const std::vector<CalibrationPlan>& plans, const Kernel& k,
                             double alpha, int reps, std::uint64_t seed, const std::vector<double>& probes)
{
    detail::require_reps(reps);
    if (plans.empty())
        throw Error(Errc::invalid_configuration, "adaptivity needs at least one plan");
    if (probes.size() < 2)
        throw Error(Errc::invalid_configuration, "adaptivity needs a kink probe and a smooth probe");
    Report r;
    r.name = "adaptivity";
    r.set_param("density", p.name);
    r.set_param("kernel", k.name);
    r.set_param("alpha", detail::num(alpha));
    r.set_param("reps", detail::num(reps));
    r.set_param("seed", detail::num(seed));
    std::string ns, ps;
    for (const auto& pl : plans)
        ns += (ns.empty() ? "" : " ") + std::to_string(pl.params.n);
    for (double t : probes)
        ps += (ps.empty() ? "" : " ") + detail::num(t);
    r.set_param("n_values", ns);
    r.set_param("probes", ps);
    detail::record_plan(r, plans.front());
    for (const auto& pl : plans)
        r.add_warnings(pl.warnings);
    r.columns = {"n", "rep", "probe", "t", "beta", "width", "normalized_width", "bound", "within", "width_sqrt_n",
                 "smooth_kink_ratio"};

    std::vector<double> mean_ratio;
    double last_within = 0.0;
    for (const CalibrationPlan& plan : plans) {
        const auto n = plan.params.n;
        const double nt = static_cast<double>(plan.n_tilde), lg = plan.log_nt();
        const double bound = std::pow(lg, adaptivity_log_power(plan));
        std::vector<double> betas, scale;
        for (double t : probes) {
            double b = local_exponent_oracle(p, t, plan);
            betas.push_back(b);
            double e = std::isinf(b) ? 0.5 : b / (2.0 * b + 1.0);
            scale.push_back(std::pow(lg / nt, -e));
        }
        std::vector<double> ratios;
        std::vector<std::vector<double>> normalized(probes.size()), rate(probes.size());
        int within_all = 0;
        std::uint64_t base = stream_seed(seed, static_cast<std::uint64_t>(n));
        for (int rep = 0; rep < reps; ++rep) {
            FittedBand fb = fit_band(sample(p, n, stream_seed(base, static_cast<std::uint64_t>(rep))), plan, k, alpha);
            std::vector<double> w;
            for (double t : probes)
                w.push_back(fb.band.width(t));
            double ratio = w[1] / w[0];
            ratios.push_back(ratio);
            bool all = true;
            for (std::size_t i = 0; i < probes.size(); ++i) {
                double nw = w[i] * scale[i];
                bool in = nw <= bound;
                all = all && in;
                normalized[i].push_back(nw);
                rate[i].push_back(w[i] * std::sqrt(nt));
                r.add_row({detail::num(n), detail::num(rep), detail::num(static_cast<int>(i)), detail::num(probes[i]),
                           detail::num(betas[i]), detail::num(w[i]), detail::num(nw), detail::num(bound),
                           in ? "1" : "0", detail::num(w[i] * std::sqrt(nt)), detail::num(ratio)});
            }
            within_all += all;
        }
        std::string pre = "n=" + std::to_string(n) + ".";
        last_within = static_cast<double>(within_all) / reps;
        r.set_stat(pre + "within_fraction", last_within);
        r.set_stat(pre + "bound", bound);
        mean_ratio.push_back(detail::mean(ratios));
        r.set_stat(pre + "mean_ratio", mean_ratio.back());
        for (std::size_t i = 0; i < probes.size(); ++i) {
            r.set_stat(pre + "beta_p" + std::to_string(i), betas[i]);
            r.set_stat(pre + "mean_normalized_p" + std::to_string(i), detail::mean(normalized[i]));
            r.set_stat(pre + "mean_width_sqrt_n_p" + std::to_string(i), detail::mean(rate[i]));
        }
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < mean_ratio.size(); ++i)
        decreasing = decreasing && mean_ratio[i] < mean_ratio[i - 1];
    r.set_stat("largest_n_within_fraction", last_within);
    r.set_stat("ratio_strictly_decreasing", decreasing ? 1.0 : 0.0);
    r.set_stat("gamma", adaptivity_log_power(plans.front()));
    return r;
}

// ---------------------------------------------------------------------------
// bandwidth window

inline Report run_window_check(const AnalyticDensity& p, const CalibrationPlan& plan, const Kernel& k, int reps,
                               std::uint64_t seed)
{
    detail::require_reps(reps);
    Report r;
    r.name = "window";
    r.set_param("density", p.name);
    r.set_param("kernel", k.name);
    r.set_param("reps", detail::num(reps));
    r.set_param("seed", detail::num(seed));
    detail::record_plan(r, plan);
    r.columns = {"rep", "stream_seed", "hits", "points", "hit_fraction", "below", "above"};

    const std::int64_t M = plan.mesh_count;
    std::vector<double> lower(M + 1);
    std::vector<int> upper(M + 1);
    for (std::int64_t i = 1; i <= M; ++i) {
        Window w = theoretical_window(p, plan, plan.mesh_point(i));
        lower[i] = w.k_n;
        upper[i] = w.j_bar_plus_1;
    }
    std::int64_t hits = 0, below = 0, above = 0, total = 0;
    for (int rep = 0; rep < reps; ++rep) {
        std::uint64_t s = stream_seed(seed, static_cast<std::uint64_t>(rep));
        SplitSample split = split_sample(sample(p, plan.params.n, s));
        BandwidthProfile prof = select_profile(build_kde_table(split, plan, k), plan);
        std::int64_t h = 0, lo = 0, hi = 0;
        for (std::int64_t i = 1; i <= M; ++i) {
            int j = prof.j_hat[i];
            if (j < lower[i])
                ++lo;
            else if (j > upper[i])
                ++hi;
            else
                ++h;
        }
        hits += h;
        below += lo;
        above += hi;
        total += M;
        r.add_row({detail::num(rep), detail::num(s), detail::num(h), detail::num(M),
                   detail::num(static_cast<double>(h) / static_cast<double>(M)), detail::num(lo), detail::num(hi)});
    }
    r.set_stat("hit_fraction", static_cast<double>(hits) / static_cast<double>(total));
    r.set_stat("below_fraction", static_cast<double>(below) / static_cast<double>(total));
    r.set_stat("above_fraction", static_cast<double>(above) / static_cast<double>(total));
    return r;
}

// ---------------------------------------------------------------------------
// Gumbel endpoint

//! log Phi(y), accurate in both tails.
inline double log_normal_cdf(double y)
{
    if (y > 0.0)
        return std::log1p(-0.5 * std::erfc(y / std::numbers::sqrt2));
    return std::log(0.5 * std::erfc(-y / std::numbers::sqrt2));
}

//! Exact distribution function of a(max - b/3) for the maximum of m iid N(0, sd^2).
inline double normalized_max_cdf(double x, std::int64_t m, double sd, double a, double b)
{
    double y = (x / a + b / 3.0) / sd;
    return std::exp(static_cast<double>(m) * log_normal_cdf(y));
}

inline Report run_gumbel_calibration(const CalibrationPlan& plan, const Kernel& k, std::int64_t m, int reps,
                                     std::uint64_t seed)
{
    detail::require_reps(reps);
    if (m < 16)
        throw Error(Errc::invalid_configuration, "the maximum needs m >= 16 cells");
    Report r;
    r.name = "gumbel";
    r.set_param("kernel", k.name);
    r.set_param("m", detail::num(m));
    r.set_param("reps", detail::num(reps));
    r.set_param("seed", detail::num(seed));
    detail::record_plan(r, plan);
    r.columns = {"rep", "max", "statistic"};

    const double sd = k.tv / std::numbers::sqrt2;
    auto [a, b] = normalizers(1.0 / static_cast<double>(m), k.tv);
    std::vector<double> stats;
    stats.reserve(static_cast<std::size_t>(reps));
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng(stream_seed(seed, static_cast<std::uint64_t>(rep)));
        double mx = -infinity;
        for (std::int64_t i = 0; i < m; ++i)
            mx = std::max(mx, sd * rng.normal());
        double st = a * (mx - b / 3.0);
        stats.push_back(st);
        r.add_row({detail::num(rep), detail::num(mx), detail::num(st)});
    }
    std::sort(stats.begin(), stats.end());
    double ks = detail::ks_distance(stats, gumbel_cdf);
    double ks_exact = detail::ks_distance(stats, [&](double x) { return normalized_max_cdf(x, m, sd, a, b); });
    double gap = 0.0;
    for (double x = -4.0; x <= 10.0; x += 1e-3)
        gap = std::max(gap, std::abs(normalized_max_cdf(x, m, sd, a, b) - gumbel_cdf(x)));
    // variance of each cell maximum's Gaussian: ratio^2 ||K||_2^2 / 2 with ratio = TV / ||K||_2
    double ratio = k.tv / std::sqrt(k.norm_l2_sq);
    r.set_stat("ks", ks);
    r.set_stat("ks_exact_law", ks_exact);
    r.set_stat("exact_law_gumbel_gap", gap);
    r.set_stat("a_n", a);
    r.set_stat("b_n", b);
    r.set_stat("cell_variance", ratio * ratio * k.norm_l2_sq / 2.0);
    r.set_stat("target_variance", sd * sd);
    return r;
}

// ---------------------------------------------------------------------------
// second moment of the Brownian increment difference

//! Time points kd - z h_k, kd + z h_k, ld + z h_l, ld - z h_l with signed weights
//! h_k^{-1/2}, -h_k^{-1/2}, h_l^{-1/2}, -h_l^{-1/2}.
struct IncrementLayout {
    std::array<double, 4> times;
    std::array<double, 4> weights;
};

inline IncrementLayout increment_layout(double h_k, double h_l, std::int64_t k_idx, std::int64_t l_idx,
                                        double delta_n, double z)
{
    if (!(h_k > 0.0 && h_l > 0.0))
        throw Error(Errc::invalid_configuration, "bandwidths must be positive");
    if (!(delta_n > 0.0))
        throw Error(Errc::invalid_configuration, "mesh width must be positive");
    if (!(z >= 0.0 && z <= 1.0))
        throw Error(Errc::invalid_configuration, "z must lie in [0, 1]");
    double tk = static_cast<double>(k_idx) * delta_n, tl = static_cast<double>(l_idx) * delta_n;
    IncrementLayout L{{tk - z * h_k, tk + z * h_k, tl + z * h_l, tl - z * h_l},
                      {1.0 / std::sqrt(h_k), -1.0 / std::sqrt(h_k), 1.0 / std::sqrt(h_l), -1.0 / std::sqrt(h_l)}};
    for (double t : L.times)
        if (t < 0.0)
            throw Error(Errc::invalid_configuration, "negative Brownian time " + format_double(t));
    return L;
}

//! The ten terms: four variances w_i^2 t_i, then the six cross terms
//! 2 w_i w_j min(t_i, t_j) for i < j.
inline std::array<double, 10> tilde_w_terms(double h_k, double h_l, std::int64_t k_idx, std::int64_t l_idx,
                                            double delta_n, double z)
{
    IncrementLayout L = increment_layout(h_k, h_l, k_idx, l_idx, delta_n, z);
    std::array<double, 10> e{};
    int c = 0;
    for (int i = 0; i < 4; ++i)
        e[c++] = L.weights[i] * L.weights[i] * L.times[i];
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            e[c++] = 2.0 * L.weights[i] * L.weights[j] * std::min(L.times[i], L.times[j]);
    return e;
}

inline double tilde_w_second_moment(double h_k, double h_l, std::int64_t k_idx, std::int64_t l_idx,
                                    double delta_n, double z)
{
    double s = 0.0;
    for (double e : tilde_w_terms(h_k, h_l, k_idx, l_idx, delta_n, z))
        s += e;
    return s;
}

struct TildeWConfig {
    double h_k;
    double h_l;
    std::int64_t k_idx;
    std::int64_t l_idx;
    double delta_n;
    double z;
};

//! Random configuration with nonnegative times: mesh 1/M with M in [16, 4096],
//! dyadic bandwidths 2^{-1} .. 2^{-8}, and half the time neighbouring indices so
//! that the two increments overlap.
inline TildeWConfig random_tilde_w_config(Rng& rng)
{
    while (true) {
        auto M = static_cast<std::int64_t>(16 + rng.bits() % 4081);
        TildeWConfig c;
        c.delta_n = 1.0 / static_cast<double>(M);
        c.k_idx = 1 + static_cast<std::int64_t>(rng.bits() % static_cast<std::uint64_t>(M));
        if (rng.uniform() < 0.5)
            c.l_idx = std::clamp<std::int64_t>(c.k_idx + static_cast<std::int64_t>(rng.bits() % 7) - 3, 1, M);
        else
            c.l_idx = 1 + static_cast<std::int64_t>(rng.bits() % static_cast<std::uint64_t>(M));
        c.h_k = std::ldexp(1.0, -1 - static_cast<int>(rng.bits() % 8));
        c.h_l = std::ldexp(1.0, -1 - static_cast<int>(rng.bits() % 8));
        c.z = rng.uniform();
        double tk = static_cast<double>(c.k_idx) * c.delta_n, tl = static_cast<double>(c.l_idx) * c.delta_n;
        if (tk - c.z * c.h_k >= 0.0 && tl - c.z * c.h_l >= 0.0)
            return c;
    }
}

//! Monte Carlo estimate of the second moment from Brownian paths sampled on a
//! grid of 2^grid_exp steps over [0, max time]; the four times are snapped to
//! the grid and the path is built from independent Gaussian increments.
inline double tilde_w_monte_carlo(const TildeWConfig& c, int paths, std::uint64_t seed, int grid_exp = 16)
{
    IncrementLayout L = increment_layout(c.h_k, c.h_l, c.k_idx, c.l_idx, c.delta_n, c.z);
    double T = *std::max_element(L.times.begin(), L.times.end());
    if (!(T > 0.0))
        return 0.0;
    double step = std::ldexp(T, -grid_exp);
    std::array<int, 4> order{0, 1, 2, 3};
    std::array<double, 4> snapped{};
    for (int i = 0; i < 4; ++i)
        snapped[i] = std::round(L.times[i] / step) * step;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return snapped[a] < snapped[b]; });
    std::array<double, 4> sd{};
    double prev = 0.0;
    for (int i = 0; i < 4; ++i) {
        sd[i] = std::sqrt(snapped[order[i]] - prev);
        prev = snapped[order[i]];
    }
    Rng rng(seed);
    double acc = 0.0;
    for (int p = 0; p < paths; ++p) {
        double w = 0.0, x = 0.0;
        for (int i = 0; i < 4; ++i) {
            w += sd[i] * rng.normal();
            x += L.weights[order[i]] * w;
        }
        acc += x * x;
    }
    return acc / paths;
}

// ---------------------------------------------------------------------------
// verification suite

enum class Fault { none, kernel_order };

inline Fault parse_fault(const std::string& s)
{
    if (s.empty() || s == "none")
        return Fault::none;
    if (s == "kernel-order")
        return Fault::kernel_order;
    throw Error(Errc::parse_error, "unknown fault '" + s + "'");
}

inline const std::vector<std::string>& verify_suites()
{
    static const std::vector<std::string> s{"a1", "a2", "a3", "a4", "weierstrass-bias", "holder", "bias-upper", "kernel", "kl"};
    return s;
}

struct VerifyOptions {
    std::vector<std::string> suites; //!< empty: all
    Fault fault = Fault::none;
    std::uint64_t seed = 20240601;
    int a1_configs = 10000;
    int a1_mc_configs = 20;
    int a1_mc_paths = 500000;
    int holder_pairs = 10000;
};

//! Bias ladder exponents 5..9 used by the bias checks.
inline std::vector<int> bias_ladder() { return {5, 6, 7, 8, 9}; }

namespace detail {

struct VerifyRun {
    Report& r;
    int failures = 0;
    int items = 0;

    //! Records an item; pass iff margin <= 0 (margin = observed minus allowed).
    void item(const std::string& suite, const std::string& name, std::int64_t checked, double margin)
    {
        bool pass = margin <= 0.0;
        ++items;
        failures += !pass;
        r.add_row({suite, name, num(checked), num(margin), pass ? "pass" : "FAIL"});
    }
};

inline void verify_a1(VerifyRun& v, const VerifyOptions& o)
{
    Rng rng(stream_seed(o.seed, 1));
    double worst = -infinity;
    double worst_zero = 0.0;
    for (int i = 0; i < o.a1_configs; ++i) {
        TildeWConfig c = random_tilde_w_config(rng);
        worst = std::max(worst, tilde_w_second_moment(c.h_k, c.h_l, c.k_idx, c.l_idx, c.delta_n, c.z) - 4.0);
        worst_zero = std::max({worst_zero,
                               std::abs(tilde_w_second_moment(c.h_k, c.h_k, c.k_idx, c.k_idx, c.delta_n, c.z)),
                               std::abs(tilde_w_second_moment(c.h_k, c.h_l, c.k_idx, c.l_idx, c.delta_n, 0.0))});
    }
    v.item("a1", "closed-form-bound", o.a1_configs, worst - 1e-12);
    v.item("a1", "degenerate-zero", 2 * o.a1_configs, worst_zero - 1e-12);
    double worst_mc = 0.0;
    for (int i = 0; i < o.a1_mc_configs; ++i) {
        TildeWConfig c = random_tilde_w_config(rng);
        double cf = tilde_w_second_moment(c.h_k, c.h_l, c.k_idx, c.l_idx, c.delta_n, c.z);
        double mc = tilde_w_monte_carlo(c, o.a1_mc_paths, stream_seed(o.seed, 100 + static_cast<std::uint64_t>(i)));
        worst_mc = std::max(worst_mc, std::abs(mc - cf));
    }
    v.item("a1", "monte-carlo", o.a1_mc_configs, worst_mc - 0.05);
}

inline void verify_a2(VerifyRun& v)
{
    double worst = -infinity;
    const int n = 10000;
    for (int i = 0; i <= n; ++i) {
        double x = static_cast<double>(i) / n;
        worst = std::max(worst, std::expm1(x) - 2.0 * x);
    }
    v.item("a2", "expm1-le-2x", n + 1, worst);
}

inline void verify_a3(VerifyRun& v)
{
    double worst = -infinity;
    const int n = 20000;
    std::int64_t count = 0;
    for (int i = 0; i <= n; ++i) {
        double x = -10.0 + 20.0 * i / n;
        if (x == 0.0)
            continue;
        ++count;
        worst = std::max(worst, 1.0 - std::sin(x) / x - x * x / 6.0);
    }
    v.item("a3", "sinc-quadratic", count, worst);
}

inline void verify_a4(VerifyRun& v)
{
    struct Case {
        AnalyticDensity p;
        double lo, hi;
    };
    std::vector<Case> cases{{make_peak_triangular(), 0.1, 0.9},   {make_peak_triangular(), 0.55, 0.95},
                            {make_triangular_hypothesis(0.5), 0.0, 1.0}, {make_uniform(-0.25, 1.25), 0.2, 0.8},
                            {make_weierstrass_composite(0.5, 0.5), 0.0, 1.0},
                            {make_weierstrass_composite(0.5, 0.3), 0.25, 0.75}};
    const std::vector<double> betas{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, infinity};
    for (const Case& c : cases) {
        double worst = -infinity;
        double prev = -infinity;
        for (double b : betas) {
            double nrm = holder_norm_grid(c.p.f, b, 2.0, c.lo, c.hi);
            if (!(std::isinf(nrm) && std::isinf(prev)))
                worst = std::max(worst, prev - nrm * (1.0 + 1e-12));
            prev = nrm;
        }
        v.item("a4", "monotone:" + c.p.name + ":(" + fmt(c.lo) + "," + fmt(c.hi) + ")",
               static_cast<std::int64_t>(betas.size()), worst);
    }
}

inline void verify_weierstrass_bias(VerifyRun& v, const Kernel& k)
{
    for (double beta : {0.3, 0.5, 0.8, 1.0}) {
        PiecewiseFunction w = make_weierstrass_function(beta);
        const double h = 0.125, t = 0.0;
        for (int j : bias_ladder()) {
            double g = std::ldexp(1.0, -j);
            double bias = sup_abs_bias(k, w, g, t - (h - g), t + (h - g), g / 64.0);
            double bound = bias_lower_constant() * std::pow(g, beta);
            v.item("weierstrass-bias", "beta=" + fmt(beta) + ":g=2^-" + std::to_string(j), 1, bound - bias);
        }
    }
}

inline void verify_holder(VerifyRun& v, const VerifyOptions& o)
{
    for (double beta : {0.3, 0.5, 0.8, 1.0}) {
        PiecewiseFunction w = make_weierstrass_function(beta);
        double q = holder_quotient_sample(w, beta, -1.0, 1.0, o.holder_pairs,
                                          stream_seed(o.seed, 7 + static_cast<std::uint64_t>(beta * 10)));
        double bound = weierstrass_quotient_bound(beta);
        v.item("holder", "beta=" + fmt(beta), o.holder_pairs, std::isinf(bound) ? -infinity : q - bound);
    }
}

inline void verify_bias_upper(VerifyRun& v, const Kernel& k)
{
    for (double beta : {0.3, 0.5, 0.8}) {
        AnalyticDensity p = make_weierstrass_composite(0.5, beta);
        double L = p.budgets.front().L;
        for (int j : bias_ladder()) {
            double g = std::ldexp(1.0, -j);
            double bias = sup_abs_bias(k, p.f, g, 0.0, 1.0, g / 64.0);
            v.item("bias-upper", "beta=" + fmt(beta) + ":g=2^-" + std::to_string(j), 1,
                   bias - L * k.norm_l1 * std::pow(g, beta));
        }
    }
    struct Affine {
        AnalyticDensity p;
        double lo, hi;
    };
    std::vector<Affine> cases{{make_peak_triangular(), 0.05, 0.45},
                              {make_peak_triangular(), 0.55, 0.95},
                              {make_triangular_hypothesis(0.5), 0.55, 1.0}};
    for (const Affine& c : cases) {
        double worst = 0.0;
        for (int j : bias_ladder()) {
            double g = std::ldexp(1.0, -j);
            worst = std::max(worst, sup_abs_bias(k, c.p.f, g, c.lo, c.hi, g / 64.0));
        }
        v.item("bias-upper", "affine:" + c.p.name + ":(" + fmt(c.lo) + "," + fmt(c.hi) + ")",
               static_cast<std::int64_t>(bias_ladder().size()), worst - 1e-10);
    }
}

inline void verify_kernel(VerifyRun& v, const Kernel& k)
{
    v.item("kernel", "mass", 1, std::abs(kernel_moment(k, 0) - 1.0) - 1e-10);
    double worst = 0.0;
    for (int j = 1; j <= k.order; ++j)
        worst = std::max(worst, std::abs(kernel_moment(k, j)));
    double next = std::abs(kernel_moment(k, k.order + 1));
    // vanishing moments up to the order, and a nonzero one right after
    v.item("kernel", "order", k.order + 1, std::max(worst - 1e-9, next > 1e-9 ? -next : 1.0));
    v.item("kernel", "beta-star", 1, k.beta_star() == k.order + 1 ? -1.0 : 1.0);
}

inline void verify_kl(VerifyRun& v)
{
    const std::vector<std::int64_t> ns{100, 1000, 10000};
    for (double beta : {0.3, 0.5, 0.8}) {
        AnalyticDensity p0 = make_weierstrass_composite(0.5, beta);
        double bound = kl_bound_composite(beta);
        for (std::int64_t n : ns) {
            KlResult kl = kl_divergence_detail(make_perturbed(p0, n, beta, Variant::one), p0, 1e-8);
            double nkl = static_cast<double>(n) * (kl.value + kl.error_estimate);
            v.item("kl", "composite:beta=" + num(beta) + ":n=" + std::to_string(n), 1, nkl - bound);
        }
    }
    AnalyticDensity t0 = make_triangular_hypothesis(0.5);
    for (std::int64_t n : ns) {
        double nd = static_cast<double>(n);
        AnalyticDensity q = make_bump_pair(t0, std::pow(nd, -1.0 / 3.0), "tent-bump:" + std::to_string(n));
        KlResult a = kl_divergence_detail(q, t0, 1e-8);
        v.item("kl", "tent:n=" + std::to_string(n), 1, nd * (a.value + a.error_estimate) - 1.0 / 12.0);
        KlResult b = kl_divergence_detail(make_perturbed(t0, n, 1.0, Variant::two),
                                          make_perturbed(t0, n, 1.0, Variant::one), 1e-8);
        v.item("kl", "tent-pair:n=" + std::to_string(n), 1, nd * (b.value + b.error_estimate) - kl_bound_tent_pair());
    }
}

} // namespace detail

//! Runs the selected suites. Each row is one item; an item passes when its
//! margin (observed minus allowed) is at most zero.
inline Report verify_inequalities(const VerifyOptions& o = {})
{
    for (const std::string& s : o.suites)
        if (std::find(verify_suites().begin(), verify_suites().end(), s) == verify_suites().end())
            throw Error(Errc::parse_error, "unknown suite '" + s + "'");
    Report r;
    r.name = "verify";
    r.columns = {"suite", "item", "checked", "margin", "result"};
    std::string list;
    for (const std::string& s : o.suites)
        list += (list.empty() ? "" : " ") + s;
    r.set_param("suites", list.empty() ? "all" : list);
    r.set_param("fault", o.fault == Fault::kernel_order ? "kernel-order" : "none");
    r.set_param("seed", detail::num(o.seed));

    Kernel k = make_rectangular();
    if (o.fault == Fault::kernel_order)
        k.order += 1;
    auto on = [&](const char* s) {
        return o.suites.empty() || std::find(o.suites.begin(), o.suites.end(), s) != o.suites.end();
    };
    detail::VerifyRun v{r};
    if (on("a1"))
        detail::verify_a1(v, o);
    if (on("a2"))
        detail::verify_a2(v);
    if (on("a3"))
        detail::verify_a3(v);
    if (on("a4"))
        detail::verify_a4(v);
    if (on("weierstrass-bias"))
        detail::verify_weierstrass_bias(v, k);
    if (on("holder"))
        detail::verify_holder(v, o);
    if (on("bias-upper"))
        detail::verify_bias_upper(v, k);
    if (on("kernel"))
        detail::verify_kernel(v, k);
    if (on("kl"))
        detail::verify_kl(v);
    r.set_stat("items", v.items);
    r.set_stat("failures", v.failures);
    return r;
}

// ---------------------------------------------------------------------------
// threshold calibration

//! Density used to calibrate c2: uniform on [0, 1].
inline AnalyticDensity calibration_density() { return make_uniform(0.0, 1.0); }

//! Per mesh point k = 1..M, the smallest c2 for which level j is admissible:
//! the largest |p(s,m) - p(s,m')| / sqrt(log n~ 2^m / n~) over the ball and the pairs.
inline std::vector<double> critical_c2(const KdeTable& table, const CalibrationPlan& plan, int j)
{
    const std::int64_t M = plan.mesh_count, margin = table.margin;
    std::vector<double> out(M + 1, 0.0);
    std::vector<double> g(static_cast<std::size_t>(table.size()), 0.0);
    for (int mp = j + 3; mp <= plan.j_max; ++mp)
        for (int m = mp + 1; m <= plan.j_max; ++m) {
            double base = plan.threshold(m) / plan.params.c2;
            for (std::int64_t i = 0; i < table.size(); ++i)
                g[i] = std::max(g[i], std::abs(table.values[m - plan.j_min][i] - table.values[mp - plan.j_min][i]) / base);
        }
    std::int64_t r = plan.ball_steps(j);
    for (std::int64_t k = 0; k <= M; ++k) {
        double mx = 0.0;
        for (std::int64_t i = k - r; i <= k + r; ++i)
            mx = std::max(mx, g[i + margin]);
        out[k] = mx;
    }
    return out;
}

struct CalibrationOptions {
    std::int64_t n = 1 << 14;
    int reps = 50;
    std::uint64_t seed = 20240601;
    double step = 0.05;
    double target = 0.95;
    int level_offset = 2; //!< calibrate so that j_hat <= j_min + offset
};

//! Smallest c2 on the step grid such that, on the calibration density, the
//! selector picks j_hat <= j_min + 2 at a fraction >= target of all
//! (replication, mesh point) pairs.
inline Report calibrate_c2(const Kernel& k, const CalibrationOptions& o = {}, PlanParams base = {})
{
    detail::require_reps(o.reps);
    base.n = o.n;
    CalibrationPlan plan = derive_plan(base, k);
    const int level = plan.j_min + o.level_offset;
    AnalyticDensity p = calibration_density();
    Report r;
    r.name = "calibrate";
    r.set_param("density", p.name);
    r.set_param("reps", detail::num(o.reps));
    r.set_param("seed", detail::num(o.seed));
    r.set_param("step", detail::num(o.step));
    r.set_param("target", detail::num(o.target));
    r.set_param("level", detail::num(level));
    detail::record_plan(r, plan);
    r.columns = {"rep", "stream_seed", "median_critical", "q95_critical", "max_critical"};

    std::vector<double> pooled;
    std::vector<KdeTable> tables;
    for (int rep = 0; rep < o.reps; ++rep) {
        std::uint64_t s = stream_seed(o.seed, static_cast<std::uint64_t>(rep));
        SplitSample split = split_sample(sample(p, o.n, s));
        tables.push_back(build_kde_table(split, plan, k));
        std::vector<double> c = critical_c2(tables.back(), plan, level);
        std::vector<double> cells(c.begin() + 1, c.end());
        pooled.insert(pooled.end(), cells.begin(), cells.end());
        std::sort(cells.begin(), cells.end());
        auto q = [&](double f) { return cells[static_cast<std::size_t>(f * static_cast<double>(cells.size() - 1))]; };
        r.add_row({detail::num(rep), detail::num(s), detail::num(q(0.5)), detail::num(q(0.95)),
                   detail::num(cells.back())});
    }
    std::sort(pooled.begin(), pooled.end());
    auto idx = static_cast<std::size_t>(std::ceil(o.target * static_cast<double>(pooled.size()))) - 1;
    double c2 = o.step * std::max(1.0, std::ceil(pooled[idx] / o.step - 1e-9));

    // confirm with the selector itself, stepping up if rounding disagrees
    auto fraction = [&](double c) {
        CalibrationPlan pl = plan;
        pl.params.c2 = c;
        std::int64_t ok = 0, total = 0;
        for (const KdeTable& t : tables) {
            BandwidthProfile prof = select_profile(t, pl);
            for (std::int64_t i = 1; i <= pl.mesh_count; ++i)
                ok += prof.j_hat[i] <= level;
            total += pl.mesh_count;
        }
        return static_cast<double>(ok) / static_cast<double>(total);
    };
    double frac = fraction(c2);
    while (frac < o.target) {
        c2 += o.step;
        frac = fraction(c2);
    }
    while (c2 - o.step > 0.0 && fraction(c2 - o.step) >= o.target) {
        c2 -= o.step;
        frac = fraction(c2);
    }
    r.set_stat("c2", c2);
    r.set_stat("fraction", frac);
    r.set_stat("pooled_quantile", pooled[idx]);
    return r;
}

} // namespace locband
