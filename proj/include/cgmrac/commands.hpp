#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cgmrac/config.hpp"
#include "cgmrac/error.hpp"
#include "cgmrac/mrac.hpp"
#include "cgmrac/sim.hpp"

namespace cgmrac {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;

/// Nine significant digits, the precision of every number this tool prints.
[[nodiscard]] inline std::string fmt9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

namespace detail {

template<std::size_t R, std::size_t C>
void put_matrix(KeyValues& kv, const std::string& name, const Mat<R, C>& m) {
    for (std::size_t i = 0; i < R; ++i)
        for (std::size_t j = 0; j < C; ++j)
            kv.emplace_back(name + "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]", fmt9(m(i, j)));
}

} // namespace detail

/**
 * Derived design quantities as key/value pairs. Shared by the design report
 * and the trace header so both carry identical values.
 */
[[nodiscard]] inline KeyValues describe_design(const LabSetup& s) {
    KeyValues kv;
    const auto& bd = s.baseline;
    const auto& md = s.mrac;
    detail::put_matrix(kv, "baseline.K", bd.K);
    kv.emplace_back("baseline.F", fmt9(bd.F));
    kv.emplace_back("baseline.ki_value", fmt9(bd.ki));
    kv.emplace_back("baseline.ki_source", bd.ki_auto ? "auto" : "config");
    char dc[40];
    std::snprintf(dc, sizeof dc, "%.9f", bd.dc_gain);
    kv.emplace_back("baseline.dc_gain", dc);
    const auto [l1, l2] = eig2(bd.A_cl);
    kv.emplace_back("baseline.eig1", fmt9(l1.real()) + (l1.imag() >= 0 ? "+" : "") + fmt9(l1.imag()) + "i");
    kv.emplace_back("baseline.eig2", fmt9(l2.real()) + (l2.imag() >= 0 ? "+" : "") + fmt9(l2.imag()) + "i");
    detail::put_matrix(kv, "mrac.T", md.tf.T);
    detail::put_matrix(kv, "mrac.A_m_z", md.A_m_z);
    detail::put_matrix(kv, "mrac.B_m_z", md.B_m_z);
    detail::put_matrix(kv, "mrac.B0_z", md.B0_z);
    detail::put_matrix(kv, "mrac.P", md.P);

    const PlantModel plant = plant_matrices(s.scenario.mu);
    const IdealGains ig = ideal_gains(md, companion_plant(md.tf, plant));
    kv.emplace_back("ideal.mu", fmt9(s.scenario.mu));
    kv.emplace_back("ideal.lambda", fmt9(ig.lambda));
    detail::put_matrix(kv, "ideal.K_z", ig.K_z);
    kv.emplace_back("ideal.K_r", fmt9(ig.K_r));
    return kv;
}

[[nodiscard]] inline std::string verdict_name(Verdict v) {
    return v == Verdict::Completed ? "Completed" : "Diverged";
}

inline constexpr const char* kTraceColumns = "t,r,alpha,q,alpha_m,u_bl,u_ad,u,e_norm,Kz1,Kz2,Kr,V_proxy";

/// Trace CSV: '#'-prefixed header (config echo, derived design, verdict) then one row per sample.
inline void write_trace_csv(std::ostream& out, const RunConfig& cfg, const LabSetup& setup, const SimTrace& tr) {
    for (const auto& [k, v] : cfg.entries()) out << "# " << k << " = " << v << '\n';
    for (const auto& [k, v] : describe_design(setup)) out << "# " << k << " = " << v << '\n';
    out << "# verdict = " << verdict_name(tr.verdict) << '\n';
    if (tr.verdict == Verdict::Diverged) out << "# diverged_at = " << fmt9(tr.diverged_at) << '\n';
    out << kTraceColumns << '\n';
    for (const auto& r : tr.records) {
        const double cols[] = {r.t, r.r, r.alpha, r.q, r.alpha_m, r.u_bl, r.u_ad, r.u, r.e_norm, r.Kz1, r.Kz2, r.Kr,
                               r.V_proxy};
        bool first = true;
        for (double c : cols) {
            if (!first) out << ',';
            out << fmt9(c);
            first = false;
        }
        out << '\n';
    }
}

inline void write_metrics(std::ostream& out, const Metrics& m, const SimTrace& tr) {
    auto line = [&](const std::string& k, const std::string& v) {
        out << k;
        for (std::size_t i = k.size(); i < 28; ++i) out << ' ';
        out << v << '\n';
    };
    line("verdict", verdict_name(m.verdict));
    if (m.verdict == Verdict::Diverged) line("diverged_at", fmt9(tr.diverged_at));
    line("samples", std::to_string(tr.records.size()));
    line("ise", fmt9(m.ise));
    line("max_e_norm", fmt9(m.max_e_norm));
    line("final_Kz1", fmt9(m.final_gains.K_z[0]));
    line("final_Kz2", fmt9(m.final_gains.K_z[1]));
    line("final_Kr", fmt9(m.final_gains.K_r));
    for (std::size_t i = 0; i < m.segments.size(); ++i) {
        const auto& s = m.segments[i];
        const std::string p = "segment" + std::to_string(i + 1) + ".";
        line(p + "target", fmt9(s.target));
        line(p + "overshoot_pct", s.overshoot_pct ? fmt9(*s.overshoot_pct) : "NA");
        line(p + "settling_time", s.settling_time ? fmt9(*s.settling_time) : "unsettled");
    }
}

/// Prints the design report; exit 2 on any configuration or design error.
inline int cmd_design(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        const LabSetup setup = build_setup(cfg);
        for (const auto& [k, v] : describe_design(setup)) out << k << " = " << v << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "design error: " << e.what() << '\n';
        return kExitConfig;
    }
}

/// Runs one scenario, writes the trace CSV, prints metrics. Exit 3 on divergence.
inline int cmd_simulate(const RunConfig& cfg, const std::string& out_path, std::ostream& out, std::ostream& err) {
    LabSetup setup;
    try {
        setup = build_setup(cfg);
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    const SimTrace tr = run_scenario(setup.scenario, setup.baseline, setup.mrac);
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) {
            err << "cannot open '" << out_path << "' for writing\n";
            return kExitConfig;
        }
        write_trace_csv(f, cfg, setup, tr);
        if (!f) {
            err << "write failed for '" << out_path << "'\n";
            return kExitConfig;
        }
    }
    write_metrics(out, compute_metrics(tr), tr);
    return tr.verdict == Verdict::Completed ? kExitOk : kExitDiverged;
}

struct GridAxis {
    std::string key;
    std::vector<std::string> values;
};

/// Parses "key=v1,v2,..." into a grid axis.
[[nodiscard]] inline GridAxis parse_grid_axis(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(Errc::ConfigError, "grid axis must be key=v1,v2,...: '" + spec + "'");
    GridAxis axis;
    axis.key = detail::canonical_key(detail::trim(spec.substr(0, eq)));
    std::istringstream in(spec.substr(eq + 1));
    std::string v;
    while (std::getline(in, v, ',')) {
        v = detail::trim(v);
        if (v.empty()) throw Error(Errc::ConfigError, "empty value in grid axis '" + axis.key + "'");
        axis.values.push_back(v);
    }
    if (axis.values.empty()) throw Error(Errc::ConfigError, "grid axis '" + axis.key + "' has no values");
    return axis;
}

struct SweepRow {
    std::vector<std::string> params;
    Verdict verdict = Verdict::Completed;
    std::optional<double> overshoot_pct;
    double ise = 0.0;
    double max_e_norm = 0.0;
};

/**
 * Runs every combination of the grid (first axis varies slowest). Rows come
 * back in grid order no matter how many workers ran them.
 */
[[nodiscard]] inline std::vector<SweepRow> run_sweep(const RunConfig& base, const std::vector<GridAxis>& grid,
                                                     unsigned jobs) {
    if (grid.empty()) throw Error(Errc::ConfigError, "sweep needs at least one --grid axis");
    std::size_t total = 1;
    for (const auto& ax : grid) {
        if (ax.values.empty()) throw Error(Errc::ConfigError, "grid axis '" + ax.key + "' has no values");
        total *= ax.values.size();
        if (total > 100'000) throw Error(Errc::ConfigError, "grid exceeds 100000 combinations");
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (grid[i].key == grid[j].key) throw Error(Errc::ConfigError, "grid key repeated: " + grid[i].key);

    // Validate every combination before any run starts.
    std::vector<LabSetup> setups;
    std::vector<std::vector<std::string>> params;
    setups.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        RunConfig cfg = base;
        std::vector<std::string> p(grid.size());
        std::size_t rem = idx;
        for (std::size_t a = grid.size(); a-- > 0;) {
            const auto& ax = grid[a];
            p[a] = ax.values[rem % ax.values.size()];
            rem /= ax.values.size();
        }
        for (std::size_t a = 0; a < grid.size(); ++a) cfg.set(grid[a].key, p[a]);
        try {
            setups.push_back(build_setup(cfg));
        } catch (const Error& e) {
            throw Error(Errc::ConfigError, "grid point " + std::to_string(idx + 1) + ": " + e.what());
        }
        params.push_back(std::move(p));
    }

    std::vector<SweepRow> rows(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
            const auto& s = setups[i];
            const SimTrace tr = run_scenario(s.scenario, s.baseline, s.mrac);
            SweepRow row;
            row.params = params[i];
            row.verdict = tr.verdict;
            const Metrics m = compute_metrics(tr);
            row.ise = m.ise;
            row.max_e_norm = m.max_e_norm;
            if (!m.segments.empty()) row.overshoot_pct = m.segments.back().overshoot_pct;
            rows[i] = std::move(row);
        }
    };
    const unsigned n_workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(total)));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<GridAxis>& grid, const std::vector<SweepRow>& rows) {
    for (const auto& ax : grid) out << ax.key << ',';
    out << "verdict,overshoot_pct,ise,max_e_norm\n";
    for (const auto& r : rows) {
        for (const auto& p : r.params) out << p << ',';
        out << verdict_name(r.verdict) << ',' << (r.overshoot_pct ? fmt9(*r.overshoot_pct) : "NA") << ','
            << fmt9(r.ise) << ',' << fmt9(r.max_e_norm) << '\n';
    }
}

/// Parameter sweep; writes the summary CSV to out_path (or `out` when empty).
inline int cmd_sweep(const RunConfig& cfg, const std::vector<std::string>& grid_specs, const std::string& out_path,
                     unsigned jobs, std::ostream& out, std::ostream& err) {
    std::vector<GridAxis> grid;
    std::vector<SweepRow> rows;
    try {
        for (const auto& g : grid_specs) grid.push_back(parse_grid_axis(g));
        rows = run_sweep(cfg, grid, jobs);
    } catch (const Error& e) {
        err << "sweep error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (out_path.empty()) {
        write_sweep_csv(out, grid, rows);
    } else {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) {
            err << "cannot open '" << out_path << "' for writing\n";
            return kExitConfig;
        }
        write_sweep_csv(f, grid, rows);
        std::size_t diverged = 0;
        for (const auto& r : rows) diverged += (r.verdict == Verdict::Diverged);
        out << rows.size() << " runs, " << diverged << " diverged, summary in " << out_path << '\n';
    }
    return kExitOk;
}

} // namespace cgmrac
