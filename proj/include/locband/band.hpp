#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "calibration.hpp"
#include "densities.hpp"
#include "error.hpp"
#include "estimator.hpp"
#include "selector.hpp"

namespace locband {

struct BandCell {
    double t_lo;
    double t_hi;
    double center;
    double halfwidth;
    double h_loc;
    int j_left;  //!< -1 for a fixed-bandwidth band
    int j_right;

    double lo() const { return center - halfwidth; }
    double hi() const { return center + halfwidth; }
};

//! Piecewise-constant band on [0, 1]; cell k covers [(k-1)/M, k/M), the last one closed.
struct ConfidenceBand {
    std::vector<BandCell> cells; //!< cells[k - 1] for k = 1..M
    std::int64_t mesh_count = 0;
    std::int64_t n_tilde = 0;
    double alpha = 0.0;
    double q_n = 0.0;

    //! 1-based index of the cell containing t.
    std::int64_t cell_index(double t) const
    {
        if (!(t >= 0.0 && t <= 1.0))
            throw Error(Errc::out_of_domain, "band is defined on [0, 1]");
        const double M = static_cast<double>(mesh_count);
        auto k = static_cast<std::int64_t>(std::floor(t * M));
        while (k + 1 <= mesh_count && static_cast<double>(k + 1) / M <= t)
            ++k;
        while (k > 0 && static_cast<double>(k) / M > t)
            --k;
        return std::min(k + 1, mesh_count);
    }

    const BandCell& cell_at(double t) const { return cells[cell_index(t) - 1]; }

    double width(double t) const { return 2.0 * cell_at(t).halfwidth; }
};

inline std::pair<double, double> band_at(const ConfidenceBand& band, double t)
{
    const BandCell& c = band.cell_at(t);
    return {c.lo(), c.hi()};
}

namespace detail {

inline ConfidenceBand assemble_band(const SplitSample& split, const CalibrationPlan& plan, const Kernel& k,
                                    double alpha, auto&& bandwidth, auto&& levels)
{
    ConfidenceBand band;
    band.mesh_count = plan.mesh_count;
    band.n_tilde = split.n_tilde;
    band.alpha = alpha;
    band.q_n = band_halfwidth_quantile(plan, alpha);
    band.cells.reserve(static_cast<std::size_t>(plan.mesh_count));
    double nt = static_cast<double>(split.n_tilde);
    for (std::int64_t c = 1; c <= plan.mesh_count; ++c) {
        double h = bandwidth(c);
        double t = plan.mesh_point(c);
        auto [jl, jr] = levels(c);
        band.cells.push_back(BandCell{plan.mesh_point(c - 1), t, kde_sorted(split.chi1, t, h, k),
                                      band.q_n / std::sqrt(nt * h), h, jl, jr});
    }
    return band;
}

} // namespace detail

//! Centres from chi1 at the right endpoint of each cell with the cell's local
//! bandwidth; half-widths q_n(alpha) / sqrt(n~ h_loc).
inline ConfidenceBand build_band(const SplitSample& split, const BandwidthProfile& profile,
                                 const CalibrationPlan& plan, const Kernel& k, double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error(Errc::invalid_probability, "alpha must lie in (0, 1)");
    if (profile.source_id != split.chi2_id)
        throw Error(Errc::cross_sample_contamination,
                    profile.source_id == split.chi1_id ? "profile was built from the centre half"
                                                       : "profile does not belong to this split");
    if (profile.mesh_count != plan.mesh_count)
        throw Error(Errc::invalid_configuration, "profile and plan use different meshes");
    return detail::assemble_band(
        split, plan, k, alpha, [&](std::int64_t c) { return profile.h_loc[c]; },
        [&](std::int64_t c) { return std::pair<int, int>{profile.j_hat[c - 1], profile.j_hat[c]}; });
}

//! Same construction with the fixed worst-case bandwidth h_{beta_*, n} 2^{-u_n}.
inline ConfidenceBand reference_global_band(const SplitSample& split, const CalibrationPlan& plan, const Kernel& k,
                                            double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error(Errc::invalid_probability, "alpha must lie in (0, 1)");
    double h = optimal_bandwidth(plan, plan.params.beta_star_low) * std::exp2(-plan.u_n);
    return detail::assemble_band(
        split, plan, k, alpha, [h](std::int64_t) { return h; },
        [](std::int64_t) { return std::pair<int, int>{-1, -1}; });
}

//! True iff [inf p, sup p] over every cell lies inside the cell's interval.
inline bool covers_truth(const ConfidenceBand& band, const AnalyticDensity& p)
{
    for (const BandCell& c : band.cells) {
        auto [mn, mx] = p.f.range(c.t_lo, c.t_hi);
        if (mn < c.lo() || mx > c.hi())
            return false;
    }
    return true;
}

inline void write_band_csv(std::ostream& os, const ConfidenceBand& band)
{
    os << "k,t_lo,t_hi,center,lo,hi,h_loc,j_hat_left,j_hat_right\n";
    for (std::size_t i = 0; i < band.cells.size(); ++i) {
        const BandCell& c = band.cells[i];
        os << (i + 1) << "," << format_double(c.t_lo) << "," << format_double(c.t_hi) << ","
           << format_double(c.center) << "," << format_double(c.lo()) << "," << format_double(c.hi()) << ","
           << format_double(c.h_loc) << "," << c.j_left << "," << c.j_right << "\n";
    }
}

} // namespace locband
