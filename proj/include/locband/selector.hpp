#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <iomanip>
#include <limits>
#include <ostream>
#include <utility>
#include <vector>

#include "calibration.hpp"
#include "densities.hpp"
#include "density_tools.hpp"
#include "error.hpp"
#include "estimator.hpp"

namespace locband {

struct BandwidthProfile {
    std::vector<int> j_hat;     //!< mesh index k = 0..M
    std::vector<double> h_loc;  //!< cell k = 1..M stored at index k (index 0 unused)
    std::int64_t mesh_count = 0;
    double u_n = 0.0;
    std::uint64_t source_id = 0; //!< fingerprint of the half the profile was built from

    //! 2^{-u_n} 2^{-max(j_hat(k-1), j_hat(k))}.
    double cell_bandwidth(std::int64_t k) const { return h_loc[k]; }
};

namespace detail {

inline double undersmoothed(double u_n, int j)
{
    return std::ldexp(std::exp2(-u_n), -j);
}

//! Mesh index of t, or off-mesh error.
inline std::int64_t mesh_index(const CalibrationPlan& plan, double t)
{
    if (!(t >= 0.0 && t <= 1.0))
        throw Error(Errc::off_mesh, "point outside [0, 1]");
    auto k = static_cast<std::int64_t>(std::llround(t * static_cast<double>(plan.mesh_count)));
    if (plan.mesh_point(k) != t)
        throw Error(Errc::off_mesh, "point " + format_double(t) + " is not a mesh point");
    return k;
}

//! max over s in B(t, (7/8)2^{-j}) and pairs m > m' >= j + 3 of |p(s,m) - p(s,m')| - thr(m).
inline double worst_excess(const KdeTable& table, const CalibrationPlan& plan, std::int64_t k, int j)
{
    double worst = -std::numeric_limits<double>::infinity();
    std::int64_t r = plan.ball_steps(j);
    for (int mp = j + 3; mp <= plan.j_max; ++mp)
        for (int m = mp + 1; m <= plan.j_max; ++m)
            for (std::int64_t i = -r; i <= r; ++i)
                worst = std::max(worst, std::abs(table.at(k + i, m) - table.at(k + i, mp)) - plan.threshold(m));
    return worst;
}

} // namespace detail

//! Admissible exponents at mesh index k, by direct enumeration of every condition.
inline std::vector<int> admissible_set_at(std::int64_t k, const KdeTable& table, const CalibrationPlan& plan)
{
    if (k < 0 || k > plan.mesh_count)
        throw Error(Errc::off_mesh, "mesh index outside 0..M");
    std::vector<int> out;
    for (int j = plan.j_min; j <= plan.j_max; ++j)
        if (detail::worst_excess(table, plan, k, j) <= 0.0)
            out.push_back(j);
    return out;
}

inline std::vector<int> admissible_set(double t, const KdeTable& table, const CalibrationPlan& plan)
{
    return admissible_set_at(detail::mesh_index(plan, t), table, plan);
}

//! Per-level verdicts: excess[j - j_min][k] <= 0 iff j is admissible at mesh index k.
//! Running maxima over m' >= j + 3 and a monotone-deque sliding maximum over
//! the ball give the same numbers as the direct enumeration.
inline std::vector<std::vector<double>> admissibility_excess(const KdeTable& table, const CalibrationPlan& plan)
{
    const std::int64_t size = table.size(), margin = table.margin, M = plan.mesh_count;
    const int L = plan.grid_size();
    const double ninf = -std::numeric_limits<double>::infinity();

    // G[m'] (s) = max_{m > m'} |p(s,m) - p(s,m')| - thr(m)
    std::vector<double> thr(static_cast<std::size_t>(plan.j_max + 1), 0.0);
    for (int m = plan.j_min; m <= plan.j_max; ++m)
        thr[m] = plan.threshold(m);
    std::vector<double> running(static_cast<std::size_t>(size), ninf);
    std::vector<std::vector<double>> excess(static_cast<std::size_t>(L), std::vector<double>(M + 1, ninf));
    for (int j = plan.j_max; j >= plan.j_min; --j) {
        int mp = j + 3;
        if (mp < plan.j_max) {
            for (std::int64_t i = 0; i < size; ++i) {
                double g = ninf;
                for (int m = mp + 1; m <= plan.j_max; ++m)
                    g = std::max(g, std::abs(table.values[m - plan.j_min][i] - table.values[mp - plan.j_min][i]) -
                                        thr[m]);
                running[i] = std::max(running[i], g);
            }
        }
        std::int64_t r = plan.ball_steps(j);
        std::vector<double>& out = excess[j - plan.j_min];
        std::deque<std::int64_t> dq;
        std::int64_t next = -r;
        for (std::int64_t k = 0; k <= M; ++k) {
            for (; next <= k + r; ++next) {
                double v = running[next + margin];
                while (!dq.empty() && running[dq.back() + margin] <= v)
                    dq.pop_back();
                dq.push_back(next);
            }
            while (dq.front() < k - r)
                dq.pop_front();
            out[k] = running[dq.front() + margin];
        }
    }
    return excess;
}

inline BandwidthProfile select_profile(const KdeTable& table, const CalibrationPlan& plan)
{
    auto excess = admissibility_excess(table, plan);
    const std::int64_t M = plan.mesh_count;
    BandwidthProfile prof;
    prof.mesh_count = M;
    prof.u_n = plan.u_n;
    prof.source_id = table.source_id;
    prof.j_hat.resize(M + 1);
    for (std::int64_t k = 0; k <= M; ++k) {
        // admissibility is upward closed and j_max always qualifies
        int lo = plan.j_min, hi = plan.j_max;
        while (lo < hi) {
            int mid = lo + (hi - lo) / 2;
            if (excess[mid - plan.j_min][k] <= 0.0)
                hi = mid;
            else
                lo = mid + 1;
        }
        prof.j_hat[k] = lo;
    }
    prof.h_loc.assign(M + 1, 0.0);
    for (std::int64_t k = 1; k <= M; ++k)
        prof.h_loc[k] = detail::undersmoothed(plan.u_n, std::max(prof.j_hat[k - 1], prof.j_hat[k]));
    return prof;
}

//! Smallest admissible j per mesh index by linear scan of the direct enumeration.
inline int select_linear(std::int64_t k, const KdeTable& table, const CalibrationPlan& plan)
{
    for (int j = plan.j_min; j <= plan.j_max; ++j)
        if (detail::worst_excess(table, plan, k, j) <= 0.0)
            return j;
    return plan.j_max;
}

struct Window {
    double k_n;     //!< lower end j_bar - m_n
    int j_bar_plus_1; //!< upper end
    int j_bar;
    double h_bar;
};

//! Bandwidth window [j_bar - m_n, j_bar + 1] around the oracle bandwidth h_bar.
inline Window theoretical_window(const AnalyticDensity& p, const CalibrationPlan& plan, double t)
{
    double beta = local_exponent_oracle(p, t, plan);
    double hb = optimal_bandwidth(plan, beta);
    int jb = static_cast<int>(std::floor(std::log2(1.0 / hb))) + 1;
    return Window{jb - plan.m_n, jb + 1, jb, hb};
}

inline void write_profile_csv(std::ostream& os, const BandwidthProfile& prof)
{
    os << "k,t,j_hat,h_loc\n";
    for (std::int64_t k = 0; k <= prof.mesh_count; ++k) {
        os << k << "," << format_double(static_cast<double>(k) / static_cast<double>(prof.mesh_count)) << ","
           << prof.j_hat[k] << "," << (k == 0 ? std::string("") : format_double(prof.h_loc[k])) << "\n";
    }
}

} // namespace locband
