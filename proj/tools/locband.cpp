// locband: command-line front end for the band, the experiments and the
// verification suite. Data goes to stdout (or --out); diagnostics to stderr.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "locband/locband.hpp"

namespace {

using namespace locband;

const std::set<std::string> run_keys{"alpha", "reps", "seed", "density", "input", "out",
                                     "suite", "m", "n_values", "probes", "fault"};

struct Flags {
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> opts;
    std::string config;
};

void add_flag(CLI::App* app, Flags& f, const std::string& name, const std::string& key, const std::string& help)
{
    f.opts.emplace_back(key, app->add_option(name, f.values[key], help));
}

void add_plan_flags(CLI::App* app, Flags& f)
{
    add_flag(app, f, "--n", "n", "sample size");
    add_flag(app, f, "--mode", "mode", "theory or practical");
    add_flag(app, f, "--c2", "c2", "selection threshold constant");
    add_flag(app, f, "--lstar", "L_star", "Hoelder radius L*");
    app->add_option("--config", f.config, "flat key=value file; flags override it");
}

//! Config file, then LOCBAND_SEED, then flags.
std::map<std::string, std::string> resolve(const Flags& f)
{
    std::map<std::string, std::string> kv;
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in)
            throw Error(Errc::parse_error, "cannot open config '" + f.config + "'");
        kv = parse_key_values(in);
    }
    if (const char* env = std::getenv("LOCBAND_SEED"))
        kv["seed"] = env;
    for (const auto& [key, opt] : f.opts)
        if (opt->count() > 0)
            kv[key] = f.values.at(key);
    return kv;
}

PlanParams plan_params(const std::map<std::string, std::string>& kv)
{
    PlanParams p;
    p.n = 1 << 14;
    std::map<std::string, std::string> plan_kv;
    for (const auto& [k, v] : kv)
        if (!run_keys.count(k))
            plan_kv[k] = v;
    apply_plan_keys(p, plan_kv);
    return p;
}

double real_or(const std::map<std::string, std::string>& kv, const std::string& key, double def)
{
    auto it = kv.find(key);
    return it == kv.end() ? def : parse_real(key, it->second);
}

std::int64_t int_or(const std::map<std::string, std::string>& kv, const std::string& key, std::int64_t def)
{
    auto it = kv.find(key);
    return it == kv.end() ? def : parse_int(key, it->second);
}

std::string str_or(const std::map<std::string, std::string>& kv, const std::string& key, const std::string& def)
{
    auto it = kv.find(key);
    return it == kv.end() ? def : it->second;
}

std::uint64_t seed_of(const std::map<std::string, std::string>& kv)
{
    auto it = kv.find("seed");
    if (it == kv.end())
        return 1;
    try {
        std::size_t pos = 0;
        unsigned long long s = std::stoull(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument(it->second);
        return s;
    } catch (const std::exception&) {
        throw Error(Errc::parse_error, "key 'seed': not an unsigned integer: '" + it->second + "'");
    }
}

std::vector<double> list_of(const std::string& key, const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_real(key, item));
    if (out.empty())
        throw Error(Errc::parse_error, "key '" + key + "': empty list");
    return out;
}

//! Writes data to --out (plus a .meta sidecar) or to stdout.
void emit(const std::map<std::string, std::string>& kv, const std::function<void(std::ostream&)>& data,
          const std::function<void(std::ostream&)>& meta)
{
    auto it = kv.find("out");
    if (it == kv.end()) {
        data(std::cout);
        return;
    }
    std::ofstream out(it->second);
    if (!out)
        throw Error(Errc::invalid_configuration, "cannot write '" + it->second + "'");
    data(out);
    std::ofstream m(it->second + ".meta");
    for (const auto& [k, v] : kv)
        m << "config." << k << "=" << v << "\n";
    meta(m);
}

void warn(const std::vector<std::string>& ws)
{
    for (const std::string& w : ws)
        std::cerr << "locband: warning: " << w << "\n";
}

int cmd_band(const std::map<std::string, std::string>& kv, const Kernel& k)
{
    auto in = kv.find("input");
    if (in == kv.end())
        throw Error(Errc::parse_error, "band needs --input");
    std::vector<double> data = read_data_file(in->second);
    PlanParams pp = plan_params(kv);
    pp.n = static_cast<std::int64_t>(data.size());
    CalibrationPlan plan = derive_plan(pp, k);
    warn(plan.warnings);
    double alpha = real_or(kv, "alpha", 0.05);
    FittedBand fb = fit_band(data, plan, k, alpha);
    emit(kv, [&](std::ostream& os) { write_band_csv(os, fb.band); },
         [&](std::ostream& os) {
             os << serialize_plan(plan) << "alpha=" << format_double(alpha) << "\n"
                << "q_n=" << format_double(fb.band.q_n) << "\n";
         });
    return 0;
}

int cmd_simulate(const std::string& kind, const std::map<std::string, std::string>& kv, const Kernel& k)
{
    PlanParams pp = plan_params(kv);
    std::uint64_t seed = seed_of(kv);
    double alpha = real_or(kv, "alpha", 0.1);
    std::string dens = str_or(kv, "density", "peak");
    Report r;
    if (kind == "coverage") {
        CalibrationPlan plan = derive_plan(pp, k);
        r = run_coverage(density_from_name(dens), plan, k, alpha, static_cast<int>(int_or(kv, "reps", 50)), seed);
    } else if (kind == "adaptivity") {
        std::vector<CalibrationPlan> plans;
        for (double n : list_of("n_values", str_or(kv, "n_values", "4096,16384,65536"))) {
            PlanParams q = pp;
            q.n = static_cast<std::int64_t>(n);
            plans.push_back(derive_plan(q, k));
        }
        r = run_adaptivity(density_from_name(dens), plans, k, alpha, static_cast<int>(int_or(kv, "reps", 50)), seed,
                           list_of("probes", str_or(kv, "probes", "0.5,0.9")));
    } else if (kind == "window") {
        CalibrationPlan plan = derive_plan(pp, k);
        r = run_window_check(density_from_name(dens), plan, k, static_cast<int>(int_or(kv, "reps", 100)), seed);
    } else {
        CalibrationPlan plan = derive_plan(pp, k);
        r = run_gumbel_calibration(plan, k, int_or(kv, "m", 4096), static_cast<int>(int_or(kv, "reps", 5000)), seed);
    }
    warn(r.warnings);
    emit(kv, [&](std::ostream& os) { write_report_csv(os, r); }, [&](std::ostream& os) { write_report_meta(os, r); });
    for (const auto& [key, v] : r.summary)
        std::cerr << r.name << "." << key << " = " << format_double(v) << "\n";
    return 0;
}

int cmd_verify(const std::map<std::string, std::string>& kv)
{
    VerifyOptions o;
    if (kv.count("seed"))
        o.seed = seed_of(kv);
    o.fault = parse_fault(str_or(kv, "fault", "none"));
    std::string suites = str_or(kv, "suite", "");
    std::stringstream ss(suites);
    std::string s;
    while (std::getline(ss, s, ','))
        if (!s.empty())
            o.suites.push_back(s);
    Report r = verify_inequalities(o);
    emit(kv, [&](std::ostream& os) { write_report_csv(os, r); }, [&](std::ostream& os) { write_report_meta(os, r); });
    for (const auto& row : r.rows)
        if (row.back() != "pass")
            std::cerr << "locband: failed: " << row[0] << " " << row[1] << " (margin " << row[3] << ")\n";
    return r.stat("failures") > 0 ? 1 : 0;
}

int cmd_curves(const std::map<std::string, std::string>& kv, const Kernel& k)
{
    AnalyticDensity p = density_from_name(str_or(kv, "density", "peak"));
    PlanParams pp = plan_params(kv);
    CalibrationPlan plan = derive_plan(pp, k);
    warn(plan.warnings);
    double alpha = real_or(kv, "alpha", 0.05);
    std::vector<double> data = sample(p, pp.n, seed_of(kv));
    FittedBand fb = fit_band(data, plan, k, alpha);
    ConfidenceBand global = reference_global_band(fb.split, plan, k, alpha);
    emit(kv,
         [&](std::ostream& os) {
             os << "k,t,p,local_lo,local_hi,global_lo,global_hi\n";
             for (std::size_t i = 0; i < fb.band.cells.size(); ++i) {
                 const BandCell& c = fb.band.cells[i];
                 const BandCell& g = global.cells[i];
                 os << (i + 1) << "," << format_double(c.t_hi) << "," << format_double(p(c.t_hi)) << ","
                    << format_double(c.lo()) << "," << format_double(c.hi()) << "," << format_double(g.lo()) << ","
                    << format_double(g.hi()) << "\n";
             }
         },
         [&](std::ostream& os) {
             os << serialize_plan(plan) << "density=" << p.name << "\nalpha=" << format_double(alpha) << "\n";
         });
    return 0;
}

int cmd_plan(const std::map<std::string, std::string>& kv, const Kernel& k)
{
    CalibrationPlan plan = derive_plan(plan_params(kv), k);
    warn(plan.warnings);
    emit(kv, [&](std::ostream& os) { os << serialize_plan(plan); }, [](std::ostream&) {});
    return 0;
}

int cmd_calibrate(const std::map<std::string, std::string>& kv, const Kernel& k)
{
    CalibrationOptions o;
    o.n = int_or(kv, "n", o.n);
    o.reps = static_cast<int>(int_or(kv, "reps", o.reps));
    if (kv.count("seed"))
        o.seed = seed_of(kv);
    Report r = calibrate_c2(k, o, plan_params(kv));
    warn(r.warnings);
    emit(kv, [&](std::ostream& os) { write_report_csv(os, r); }, [&](std::ostream& os) { write_report_meta(os, r); });
    std::cerr << "calibrated c2 = " << format_double(r.stat("c2")) << " (fraction " << format_double(r.stat("fraction"))
              << ")\n";
    return 0;
}

//! 2 for unusable input, 3 for a plan that theory mode refuses, 1 otherwise.
int exit_code(Errc c, bool theory)
{
    switch (c) {
    case Errc::parse_error:
    case Errc::unknown_density:
    case Errc::insufficient_data:
    case Errc::invalid_configuration:
        return 2;
    case Errc::empty_bandwidth_grid:
    case Errc::invalid_constants:
        return theory ? 3 : 2;
    default:
        return 1;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Locally adaptive confidence bands for densities"};
    app.require_subcommand(1);
    Flags f;

    auto* band = app.add_subcommand("band", "fit a band to one real per line");
    add_plan_flags(band, f);
    add_flag(band, f, "--input", "input", "data file");
    add_flag(band, f, "--alpha", "alpha", "level (default 0.05)");
    add_flag(band, f, "--out", "out", "output CSV; a .meta sidecar is written next to it");

    std::string kind;
    auto* sim = app.add_subcommand("simulate", "run a seeded experiment");
    sim->add_option("kind", kind, "coverage, adaptivity, window or gumbel")
        ->required()
        ->check(CLI::IsMember({"coverage", "adaptivity", "window", "gumbel"}));
    add_plan_flags(sim, f);
    add_flag(sim, f, "--density", "density", "density name (default peak)");
    add_flag(sim, f, "--alpha", "alpha", "level (default 0.1)");
    add_flag(sim, f, "--reps", "reps", "replications");
    add_flag(sim, f, "--seed", "seed", "master seed (overrides LOCBAND_SEED)");
    add_flag(sim, f, "--m", "m", "cells for the gumbel experiment (default 4096)");
    add_flag(sim, f, "--n-values", "n_values", "comma-separated sample sizes for adaptivity");
    add_flag(sim, f, "--probes", "probes", "comma-separated probe points for adaptivity, kink first");
    add_flag(sim, f, "--out", "out", "output CSV");

    auto* ver = app.add_subcommand("verify", "run the inequality suite; exit 1 on any failure");
    add_flag(ver, f, "--suite", "suite", "comma-separated suites (a1,a2,a3,a4,weierstrass-bias,holder,bias-upper,kernel,kl)");
    add_flag(ver, f, "--fault", "fault", "inject a fault: kernel-order");
    add_flag(ver, f, "--seed", "seed", "seed for the randomized items");
    add_flag(ver, f, "--out", "out", "output CSV");
    ver->add_option("--config", f.config, "flat key=value file; flags override it");

    auto* cur = app.add_subcommand("curves", "true density with local and global bands");
    add_plan_flags(cur, f);
    add_flag(cur, f, "--density", "density", "density name (default peak)");
    add_flag(cur, f, "--alpha", "alpha", "level (default 0.05)");
    add_flag(cur, f, "--seed", "seed", "sample seed");
    add_flag(cur, f, "--out", "out", "output CSV");

    auto* pl = app.add_subcommand("plan", "print the derived plan");
    add_plan_flags(pl, f);
    add_flag(pl, f, "--out", "out", "output file");

    auto* cal = app.add_subcommand("calibrate", "recompute the default selection threshold");
    add_plan_flags(cal, f);
    add_flag(cal, f, "--reps", "reps", "replications (default 50)");
    add_flag(cal, f, "--seed", "seed", "master seed");
    add_flag(cal, f, "--out", "out", "output CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    bool theory = false;
    try {
        auto kv = resolve(f);
        theory = str_or(kv, "mode", "practical") == "theory";
        for (const auto& [k, v] : kv)
            if (!run_keys.count(k)) {
                PlanParams probe;
                apply_plan_keys(probe, {{k, v}});
            }
        Kernel k = make_rectangular();
        if (band->parsed())
            return cmd_band(kv, k);
        if (sim->parsed())
            return cmd_simulate(kind, kv, k);
        if (ver->parsed())
            return cmd_verify(kv);
        if (cur->parsed())
            return cmd_curves(kv, k);
        if (pl->parsed())
            return cmd_plan(kv, k);
        return cmd_calibrate(kv, k);
    } catch (const Error& e) {
        std::cerr << "locband: " << e.what() << "\n";
        return exit_code(e.code(), theory);
    } catch (const std::exception& e) {
        std::cerr << "locband: " << e.what() << "\n";
        return 1;
    }
}
