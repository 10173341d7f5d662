#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "calibration.hpp"
#include "error.hpp"
#include "kernel.hpp"

namespace locband {

//! FNV-1a over the bytes of a sorted half; identifies which data a result used.
inline std::uint64_t fingerprint(const std::vector<double>& xs)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : xs) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &x, sizeof bits);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xFF;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

struct SplitSample {
    std::vector<double> chi1; //!< sorted; used for band centres
    std::vector<double> chi2; //!< sorted; used for bandwidth selection
    std::int64_t n_tilde = 0;
    std::uint64_t chi1_id = 0;
    std::uint64_t chi2_id = 0;
};

//! chi1 = first floor(n/2) points, chi2 = the next floor(n/2); an odd last point is dropped.
inline SplitSample split_sample(const std::vector<double>& data)
{
    if (data.size() < 4)
        throw Error(Errc::insufficient_data, "at least 4 observations are required");
    SplitSample s;
    std::size_t m = data.size() / 2;
    s.n_tilde = static_cast<std::int64_t>(m);
    s.chi1.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(m));
    s.chi2.assign(data.begin() + static_cast<std::ptrdiff_t>(m), data.begin() + static_cast<std::ptrdiff_t>(2 * m));
    std::sort(s.chi1.begin(), s.chi1.end());
    std::sort(s.chi2.begin(), s.chi2.end());
    s.chi1_id = fingerprint(s.chi1);
    s.chi2_id = fingerprint(s.chi2);
    return s;
}

//! (1/m) sum_i K((X_i - t) / h) / h by direct summation.
inline double kde_at(const std::vector<double>& half, double t, double h, const Kernel& k)
{
    if (!(h > 0.0))
        throw Error(Errc::invalid_bandwidth, "bandwidth must be positive");
    if (half.empty())
        throw Error(Errc::insufficient_data, "empty sample half");
    double s = 0.0;
    for (double x : half)
        s += k((x - t) / h) / h;
    return s / static_cast<double>(half.size());
}

//! Same value as kde_at for a flat kernel on a sorted half, via two rank queries.
//! The predicates match kde_at's closed support exactly.
inline double kde_flat_sorted(const std::vector<double>& sorted, double t, double h, const Kernel& k)
{
    double c = k.pieces[0].poly.empty() ? 0.0 : k.pieces[0].poly[0];
    double lo = k.pieces[0].lo, hi = k.pieces[0].hi;
    auto first = std::partition_point(sorted.begin(), sorted.end(),
                                      [&](double x) { return (x - t) / h < lo; });
    auto last = std::partition_point(first, sorted.end(), [&](double x) { return (x - t) / h <= hi; });
    auto count = static_cast<double>(last - first);
    return count * (c / h) / static_cast<double>(sorted.size());
}

//! Estimate on a sorted half, choosing the rank path when the kernel allows it.
inline double kde_sorted(const std::vector<double>& sorted, double t, double h, const Kernel& k)
{
    if (!(h > 0.0))
        throw Error(Errc::invalid_bandwidth, "bandwidth must be positive");
    if (sorted.empty())
        throw Error(Errc::insufficient_data, "empty sample half");
    if (k.flat())
        return kde_flat_sorted(sorted, t, h, k);
    // direct sum restricted to the points inside the support window
    double r = k.support_radius;
    auto first = std::lower_bound(sorted.begin(), sorted.end(), t - r * h * (1.0 + 1e-12));
    auto last = std::upper_bound(first, sorted.end(), t + r * h * (1.0 + 1e-12));
    double s = 0.0;
    for (auto it = first; it != last; ++it)
        s += k((*it - t) / h) / h;
    return s / static_cast<double>(sorted.size());
}

//! Estimates p(s, j) at mesh indices -margin .. M + margin for j_min <= j <= j_max.
struct KdeTable {
    std::int64_t mesh_count = 0;
    std::int64_t margin = 0;
    int j_min = 0;
    int j_max = 0;
    int half = 2;
    std::uint64_t source_id = 0;
    std::vector<std::vector<double>> values; //!< values[j - j_min][k + margin]

    double at(std::int64_t k, int j) const { return values[j - j_min][k + margin]; }
    std::int64_t size() const { return mesh_count + 1 + 2 * margin; }
    double mesh_point(std::int64_t k) const
    {
        return static_cast<double>(k) / static_cast<double>(mesh_count);
    }
};

inline KdeTable build_kde_table(const SplitSample& split, const CalibrationPlan& plan, const Kernel& k,
                                int half_id = 2)
{
    if (plan.j_max < plan.j_min)
        throw Error(Errc::empty_bandwidth_grid, "empty bandwidth grid");
    if (half_id != 1 && half_id != 2)
        throw Error(Errc::invalid_configuration, "half must be 1 or 2");
    const std::vector<double>& data = half_id == 1 ? split.chi1 : split.chi2;
    KdeTable t;
    t.mesh_count = plan.mesh_count;
    t.margin = plan.ball_steps(plan.j_min);
    t.j_min = plan.j_min;
    t.j_max = plan.j_max;
    t.half = half_id;
    t.source_id = half_id == 1 ? split.chi1_id : split.chi2_id;
    t.values.resize(static_cast<std::size_t>(plan.grid_size()));
    for (int j = plan.j_min; j <= plan.j_max; ++j) {
        double h = std::ldexp(1.0, -j);
        std::vector<double>& row = t.values[j - plan.j_min];
        row.resize(static_cast<std::size_t>(t.size()));
        for (std::int64_t i = 0; i < t.size(); ++i)
            row[i] = kde_sorted(data, t.mesh_point(i - t.margin), h, k);
    }
    return t;
}

//! Reads one finite real per line; blank lines are skipped.
inline std::vector<double> read_data(std::istream& in)
{
    std::vector<double> v;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        auto a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos)
            continue;
        auto b = line.find_last_not_of(" \t\r");
        std::string tok = line.substr(a, b - a + 1);
        double x = 0.0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(x))
            throw Error(Errc::parse_error, "line " + std::to_string(no) + ": not a finite real: '" + tok + "'");
        v.push_back(x);
    }
    return v;
}

inline std::vector<double> read_data_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::parse_error, "cannot open '" + path + "'");
    return read_data(in);
}

} // namespace locband
