#pragma once

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "kernel.hpp"

namespace locband {

enum class Mode { theory, practical };

inline const char* mode_name(Mode m) { return m == Mode::theory ? "theory" : "practical"; }

inline Mode parse_mode(const std::string& s)
{
    if (s == "theory")
        return Mode::theory;
    if (s == "practical")
        return Mode::practical;
    throw Error(Errc::parse_error, "mode must be 'theory' or 'practical', got '" + s + "'");
}

//! Default selection threshold, fixed by the in-repo calibration run
//! (`locband calibrate`, see README).
inline constexpr double default_c2 = 0.65;

struct PlanParams {
    std::int64_t n = 0;
    double epsilon = 0.25;
    double beta_star_low = 1.0;
    double beta_star_high = 2.0; //!< replaced by order + 1 of the kernel
    double L_star = 1.0;
    double M = 1.0 / 12.0;
    double c1 = 3.0;
    double kappa1 = 0.5;
    double kappa2 = 1.0;
    double c2 = default_c2;
    Mode mode = Mode::practical;
};

//! Practical-mode defaults for a given sample size.
inline PlanParams practical_params(std::int64_t n, double beta_star_low = 1.0)
{
    PlanParams p;
    p.n = n;
    p.beta_star_low = beta_star_low;
    p.kappa1 = std::max(1.0 / (2.0 * beta_star_low), 0.5);
    return p;
}

struct CalibrationPlan {
    PlanParams params;
    std::int64_t n_tilde = 0;
    int j_min = 0;
    int j_max = 0;
    std::int64_t mesh_count = 0; //!< 1 / delta_n
    double delta_n = 0.0;
    double u_n = 0.0;
    double m_n = 0.0;
    double c3 = 0.0;
    double a_n = 0.0;
    double b_n = 0.0;
    double tv = 0.0;
    std::vector<std::string> warnings;

    double log_nt() const { return std::log(static_cast<double>(n_tilde)); }

    //! Mesh point k * delta_n, computed the same way everywhere.
    double mesh_point(std::int64_t k) const
    {
        return static_cast<double>(k) / static_cast<double>(mesh_count);
    }

    int grid_size() const { return j_max - j_min + 1; }

    //! Lepski threshold c2 * sqrt(log(n~) 2^m / n~) for level m.
    double threshold(int m) const
    {
        return params.c2 * std::sqrt(log_nt() * std::ldexp(1.0, m) / static_cast<double>(n_tilde));
    }

    //! Largest i with i / M < (7/8) 2^{-j}: the radius, in mesh steps, of the
    //! open ball searched at level j.
    std::int64_t ball_steps(int j) const
    {
        // i * 2^{j+3} < 7 M  <=>  i <= (7 M - 1) / 2^{j+3}
        return (7 * mesh_count - 1) >> (j + 3);
    }
};

//! a_n = c3 sqrt(-2 log delta) and the matching b_n, with c3 = sqrt(2) / tv.
inline std::pair<double, double> normalizers(double delta_n, double tv)
{
    if (!(delta_n > 0.0 && delta_n < 1.0))
        throw Error(Errc::invalid_mesh, "mesh width must lie in (0, 1)");
    if (!(tv > 0.0))
        throw Error(Errc::invalid_kernel, "total variation must be positive");
    double c3 = std::sqrt(2.0) / tv;
    double r = std::sqrt(-2.0 * std::log(delta_n));
    double a = c3 * r;
    double b = (3.0 / c3) * (r - (std::log(-std::log(delta_n)) + std::log(4.0 * std::numbers::pi)) / (2.0 * r));
    return {a, b};
}

//! Inverse of the standard Gumbel distribution function exp(-exp(-x)).
inline double gumbel_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw Error(Errc::invalid_probability, "probability must lie in (0, 1)");
    return -std::log(-std::log(p));
}

inline double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

//! Checks the three inequalities on (c1, kappa1, kappa2).
inline std::vector<std::string> constant_violations(const PlanParams& p)
{
    std::vector<std::string> v;
    if (!(p.c1 > 2.0 / (p.beta_star_low * std::log(2.0))))
        v.push_back("c1 must exceed 2 / (beta_* log 2)");
    if (!(p.kappa1 >= 1.0 / (2.0 * p.beta_star_low)))
        v.push_back("kappa1 must be at least 1 / (2 beta_*)");
    if (!(p.kappa2 > p.c1 * std::log(2.0) + 4.0))
        v.push_back("kappa2 must exceed c1 log 2 + 4");
    return v;
}

inline CalibrationPlan derive_plan(PlanParams params, const Kernel& kernel)
{
    CalibrationPlan plan;
    params.beta_star_high = kernel.beta_star();
    bool theory = params.mode == Mode::theory;
    auto warn_or_throw = [&](Errc code, const std::string& msg) {
        if (theory)
            throw Error(code, msg);
        plan.warnings.push_back(msg);
    };

    if (params.n < 4)
        throw Error(Errc::insufficient_data, "sample size must be at least 4");
    if (!(params.epsilon > 0.0 && params.epsilon < 1.0))
        throw Error(Errc::invalid_constants, "epsilon must lie in (0, 1)");
    if (!(params.beta_star_low > 0.0 && params.beta_star_low <= 1.0))
        throw Error(Errc::invalid_constants, "beta_* must lie in (0, 1)");
    if (params.beta_star_low == 1.0)
        warn_or_throw(Errc::invalid_constants, "beta_* = 1 lies outside (0, 1)");
    if (!(params.L_star > 0.0) || !(params.c2 > 0.0) || !(params.M > 0.0))
        throw Error(Errc::invalid_constants, "L*, M and c2 must be positive");
    if (!(params.c1 > 0.0 && params.kappa1 > 0.0 && params.kappa2 > 0.0))
        throw Error(Errc::invalid_constants, "c1, kappa1 and kappa2 must be positive");
    for (const std::string& v : constant_violations(params))
        warn_or_throw(Errc::invalid_constants, v);

    plan.params = params;
    plan.tv = kernel.tv;
    plan.n_tilde = params.n / 2;
    double nt = static_cast<double>(plan.n_tilde);
    double lg = std::log(nt);

    plan.j_min = static_cast<int>(std::ceil(std::max(2.0, std::log2(2.0 / params.epsilon))));
    double jmax_real = std::log2(nt / std::pow(lg, params.kappa2));
    plan.j_max = static_cast<int>(std::floor(jmax_real));
    if (plan.j_max < plan.j_min) {
        if (theory)
            throw Error(Errc::empty_bandwidth_grid,
                        "j_max = " + std::to_string(plan.j_max) + " < j_min = " + std::to_string(plan.j_min));
        plan.warnings.push_back("j_max clamped from " + std::to_string(plan.j_max) + " to j_min = " +
                                std::to_string(plan.j_min));
        plan.j_max = plan.j_min;
    }

    double inv_delta = std::exp2(plan.j_min / params.beta_star_low) * std::pow(lg / nt, -params.kappa1) *
                       std::pow(lg, 2.0 / params.beta_star_low);
    plan.mesh_count = static_cast<std::int64_t>(std::ceil(inv_delta));
    if (plan.mesh_count < 2)
        plan.mesh_count = 2;
    plan.delta_n = 1.0 / static_cast<double>(plan.mesh_count);

    plan.u_n = params.c1 * std::log(lg);
    if (!(plan.u_n > 0.0)) {
        warn_or_throw(Errc::invalid_constants, "undersmoothing shift c1 log log n~ is not positive");
        plan.u_n = 0.0;
    }
    plan.m_n = plan.u_n / 2.0;

    auto [a, b] = normalizers(plan.delta_n, kernel.tv);
    plan.c3 = std::sqrt(2.0) / kernel.tv;
    plan.a_n = a;
    plan.b_n = b;
    return plan;
}

//! h_{beta,n} = 2^{-j_min} (log n~ / n~)^{1/(2 beta + 1)}; beta = inf gives 2^{-j_min}.
inline double optimal_bandwidth(const CalibrationPlan& plan, double beta)
{
    if (!(beta > 0.0))
        throw Error(Errc::invalid_exponent, "exponent must be positive");
    double base = std::ldexp(1.0, -plan.j_min);
    if (std::isinf(beta))
        return base;
    double nt = static_cast<double>(plan.n_tilde);
    return base * std::pow(plan.log_nt() / nt, 1.0 / (2.0 * beta + 1.0));
}

//! q_n(alpha) = sqrt(L*) q_{1 - alpha/2} / a_n + b_n.
inline double band_halfwidth_quantile(const CalibrationPlan& plan, double alpha)
{
    double q = gumbel_quantile(1.0 - alpha / 2.0);
    return std::sqrt(plan.params.L_star) * q / plan.a_n + plan.b_n;
}

// ---------------------------------------------------------------------------
// key=value serialization

inline std::string format_double(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline std::string serialize_plan(const CalibrationPlan& p)
{
    std::ostringstream os;
    const PlanParams& q = p.params;
    os << "n=" << q.n << "\n"
       << "epsilon=" << format_double(q.epsilon) << "\n"
       << "beta_star_low=" << format_double(q.beta_star_low) << "\n"
       << "beta_star_high=" << format_double(q.beta_star_high) << "\n"
       << "L_star=" << format_double(q.L_star) << "\n"
       << "M=" << format_double(q.M) << "\n"
       << "c1=" << format_double(q.c1) << "\n"
       << "kappa1=" << format_double(q.kappa1) << "\n"
       << "kappa2=" << format_double(q.kappa2) << "\n"
       << "c2=" << format_double(q.c2) << "\n"
       << "mode=" << mode_name(q.mode) << "\n"
       << "n_tilde=" << p.n_tilde << "\n"
       << "j_min=" << p.j_min << "\n"
       << "j_max=" << p.j_max << "\n"
       << "delta_n=" << format_double(p.delta_n) << "\n"
       << "mesh_count=" << p.mesh_count << "\n"
       << "u_n=" << format_double(p.u_n) << "\n"
       << "m_n=" << format_double(p.m_n) << "\n"
       << "a_n=" << format_double(p.a_n) << "\n"
       << "b_n=" << format_double(p.b_n) << "\n"
       << "c3=" << format_double(p.c3) << "\n";
    return os.str();
}

//! Parses flat key=value lines; '#' starts a comment. Duplicate keys: last wins.
inline std::map<std::string, std::string> parse_key_values(std::istream& in)
{
    std::map<std::string, std::string> kv;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r");
            auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::parse_error, "line " + std::to_string(no) + ": expected key=value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline double parse_real(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(Errc::parse_error, "key '" + key + "': not a number: '" + v + "'");
    }
}

inline std::int64_t parse_int(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        long long d = std::stoll(v, &pos);
        if (pos != v.size())
            throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(Errc::parse_error, "key '" + key + "': not an integer: '" + v + "'");
    }
}

//! Applies plan-parameter keys; derived keys are accepted and ignored, since
//! they are recomputed. Unknown keys are rejected.
inline void apply_plan_keys(PlanParams& p, const std::map<std::string, std::string>& kv)
{
    static const char* derived[] = {"n_tilde", "j_min", "j_max", "delta_n", "mesh_count",
                                    "u_n", "m_n", "a_n", "b_n", "c3", "beta_star_high"};
    for (const auto& [k, v] : kv) {
        if (k == "n") p.n = parse_int(k, v);
        else if (k == "epsilon") p.epsilon = parse_real(k, v);
        else if (k == "beta_star_low") p.beta_star_low = parse_real(k, v);
        else if (k == "L_star") p.L_star = parse_real(k, v);
        else if (k == "M") p.M = parse_real(k, v);
        else if (k == "c1") p.c1 = parse_real(k, v);
        else if (k == "kappa1") p.kappa1 = parse_real(k, v);
        else if (k == "kappa2") p.kappa2 = parse_real(k, v);
        else if (k == "c2") p.c2 = parse_real(k, v);
        else if (k == "mode") p.mode = parse_mode(v);
        else {
            bool ok = false;
            for (const char* d : derived)
                ok = ok || k == d;
            if (!ok)
                throw Error(Errc::parse_error, "unknown plan key '" + k + "'");
        }
    }
}

//! Rebuilds a plan from its serialized form.
inline CalibrationPlan parse_plan(std::istream& in, const Kernel& kernel)
{
    PlanParams p;
    apply_plan_keys(p, parse_key_values(in));
    return derive_plan(p, kernel);
}

} // namespace locband
