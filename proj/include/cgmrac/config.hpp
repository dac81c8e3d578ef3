#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cgmrac/baseline.hpp"
#include "cgmrac/error.hpp"
#include "cgmrac/mrac.hpp"
#include "cgmrac/plant.hpp"
#include "cgmrac/sim.hpp"

namespace cgmrac {

/// Known keys with their default text values, in report order. An empty default means "unset".
inline const std::vector<std::pair<std::string, std::string>>& config_defaults() {
    static const std::vector<std::pair<std::string, std::string>> defaults{
        {"plant.mu", "1"},
        {"baseline.qw_alpha", "0.3"},
        {"baseline.qw_q", "0.01"},
        {"baseline.rw", "1"},
        {"baseline.ki", ""},
        {"baseline.u_limit", "inf"},
        {"mrac.enabled", "true"},
        {"mrac.gamma_z", "50"},
        {"mrac.gamma_r", "50"},
        {"mrac.eps", "0.025"},
        {"mrac.kz_bound", "10"},
        {"mrac.kr_bound", "10"},
        {"scenario.dt", "0.001"},
        {"scenario.t_end", "30"},
        {"scenario.steps", "1:0.1; 6:0; 11:0.15; 16:0; 21:0.1"},
        {"scenario.ref_scale", "1"},
        {"scenario.noise_std", "0"},
        {"scenario.seed", "1"},
        {"scenario.sample_stride", "10"},
    };
    return defaults;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// "scenario.mu" is accepted as a synonym for the canonical "plant.mu".
inline std::string canonical_key(const std::string& key) {
    return key == "scenario.mu" ? std::string("plant.mu") : key;
}

} // namespace detail

/// Flat key/value configuration: defaults, then config file, then overrides.
class RunConfig {
public:
    RunConfig() {
        for (const auto& [k, v] : config_defaults()) values_[k] = v;
    }

    void set(const std::string& raw_key, const std::string& value) {
        const std::string key = detail::canonical_key(detail::trim(raw_key));
        if (!values_.contains(key)) throw Error(Errc::ConfigError, "unknown config key '" + key + "'");
        values_[key] = detail::trim(value);
    }

    /// Applies a "key=value" override as given on the command line.
    void set_assignment(const std::string& assignment) {
        const auto pos = assignment.find('=');
        if (pos == std::string::npos) throw Error(Errc::ConfigError, "expected key=value, got '" + assignment + "'");
        set(assignment.substr(0, pos), assignment.substr(pos + 1));
    }

    /// Reads `key = value` lines; '#' starts a comment.
    void load_text(std::string_view text) {
        std::istringstream in{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            if (detail::trim(line).empty()) continue;
            if (line.find('=') == std::string::npos)
                throw Error(Errc::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
            set_assignment(line);
        }
    }

    void load_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw Error(Errc::ConfigError, "cannot read config file '" + path + "'");
        std::stringstream buf;
        buf << f.rdbuf();
        load_text(buf.str());
    }

    [[nodiscard]] const std::string& raw(const std::string& key) const {
        const auto it = values_.find(detail::canonical_key(key));
        if (it == values_.end()) throw Error(Errc::ConfigError, "unknown config key '" + key + "'");
        return it->second;
    }

    [[nodiscard]] bool has_value(const std::string& key) const { return !raw(key).empty(); }

    [[nodiscard]] double get_double(const std::string& key) const {
        const std::string& s = raw(key);
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || std::isnan(v))
            throw Error(Errc::ConfigError, key + ": expected a number, got '" + s + "'");
        return v;
    }

    [[nodiscard]] long long get_int(const std::string& key) const {
        const std::string& s = raw(key);
        char* end = nullptr;
        errno = 0;
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
            throw Error(Errc::ConfigError, key + ": expected an integer, got '" + s + "'");
        return v;
    }

    [[nodiscard]] bool get_bool(const std::string& key) const {
        std::string s = raw(key);
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
        if (s == "true" || s == "on" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "off" || s == "0" || s == "no") return false;
        throw Error(Errc::ConfigError, key + ": expected a boolean, got '" + raw(key) + "'");
    }

    /// Key/value pairs in the canonical order of config_defaults().
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> entries() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [k, _] : config_defaults()) out.emplace_back(k, values_.at(k));
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

/// Parses "t1:a1; t2:a2; ..." into reference steps.
[[nodiscard]] inline std::vector<RefStep> parse_steps(std::string_view text) {
    std::vector<RefStep> steps;
    std::string item;
    std::istringstream in{std::string(text)};
    while (std::getline(in, item, ';')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw Error(Errc::ConfigError, "scenario.steps: expected time:amplitude, got '" + item + "'");
        try {
            std::size_t used_t = 0;
            std::size_t used_a = 0;
            const std::string ts = detail::trim(item.substr(0, colon));
            const std::string as = detail::trim(item.substr(colon + 1));
            const double t = std::stod(ts, &used_t);
            const double a = std::stod(as, &used_a);
            if (used_t != ts.size() || used_a != as.size()) throw std::invalid_argument("trailing characters");
            steps.push_back({t, a});
        } catch (const std::exception&) {
            throw Error(Errc::ConfigError, "scenario.steps: malformed entry '" + item + "'");
        }
    }
    return steps;
}

/// Designs and scenario built from a configuration, all validated.
struct LabSetup {
    BaselineDesign baseline;
    ZTransform transform;
    MracDesign mrac;
    Scenario scenario;
};

[[nodiscard]] inline LabSetup build_setup(const RunConfig& cfg) {
    // Each design error names the key that feeds the violated precondition.
    const double mu = cfg.get_double("plant.mu");
    if (!(mu >= 0.0 && mu <= 1.0)) throw Error(Errc::ConfigError, "plant.mu must lie in [0, 1]");
    const double qa = cfg.get_double("baseline.qw_alpha");
    const double qq = cfg.get_double("baseline.qw_q");
    if (!(qa > 0.0) || !(qq > 0.0) || !std::isfinite(qa) || !std::isfinite(qq))
        throw Error(Errc::ConfigError, "baseline.qw_alpha and baseline.qw_q must be finite and > 0");
    const double rw = cfg.get_double("baseline.rw");
    if (!(rw > 0.0) || !std::isfinite(rw)) throw Error(Errc::ConfigError, "baseline.rw must be finite and > 0");
    std::optional<double> ki;
    if (cfg.has_value("baseline.ki")) ki = cfg.get_double("baseline.ki");
    const double u_limit = cfg.get_double("baseline.u_limit");
    if (!(u_limit > 0.0)) throw Error(Errc::ConfigError, "baseline.u_limit must be > 0");

    MracTuning tune;
    tune.gamma_z = cfg.get_double("mrac.gamma_z");
    tune.gamma_r = cfg.get_double("mrac.gamma_r");
    tune.eps = cfg.get_double("mrac.eps");
    tune.kz_bound = cfg.get_double("mrac.kz_bound");
    tune.kr_bound = cfg.get_double("mrac.kr_bound");
    if (!(tune.gamma_z >= 0.0) || !std::isfinite(tune.gamma_z)) throw Error(Errc::ConfigError, "mrac.gamma_z must be >= 0");
    if (!(tune.gamma_r >= 0.0) || !std::isfinite(tune.gamma_r)) throw Error(Errc::ConfigError, "mrac.gamma_r must be >= 0");
    if (!(tune.eps > 0.0) || !std::isfinite(tune.eps)) throw Error(Errc::ConfigError, "mrac.eps must be > 0");
    if (!(tune.kz_bound > 0.0)) throw Error(Errc::ConfigError, "mrac.kz_bound must be > 0");
    if (!(tune.kr_bound > 0.0)) throw Error(Errc::ConfigError, "mrac.kr_bound must be > 0");

    Scenario sc;
    sc.mu = mu;
    sc.dt = cfg.get_double("scenario.dt");
    sc.t_end = cfg.get_double("scenario.t_end");
    sc.ref_steps = parse_steps(cfg.raw("scenario.steps"));
    const double scale = cfg.get_double("scenario.ref_scale");
    if (!std::isfinite(scale)) throw Error(Errc::ConfigError, "scenario.ref_scale must be finite");
    for (auto& s : sc.ref_steps) s.amplitude *= scale;
    sc.noise_std = cfg.get_double("scenario.noise_std");
    const long long seed = cfg.get_int("scenario.seed");
    if (seed < 0) throw Error(Errc::ConfigError, "scenario.seed must be >= 0");
    sc.seed = static_cast<std::uint64_t>(seed);
    sc.mrac_enabled = cfg.get_bool("mrac.enabled");
    const long long stride = cfg.get_int("scenario.sample_stride");
    if (stride < 1 || stride > 1'000'000) throw Error(Errc::ConfigError, "scenario.sample_stride must be >= 1");
    sc.sample_stride = static_cast<int>(stride);
    try {
        validate(sc);
    } catch (const Error& e) {
        throw Error(Errc::ConfigError, e.what());
    }

    LabSetup setup;
    setup.baseline = design_baseline(kForwardA, kForwardB, Mat<2, 2>::diag({qa, qq}), rw, ki, u_limit);
    setup.transform = build_transform(setup.baseline.A_d(0, 0), setup.baseline.A_d(0, 1));
    setup.mrac = build_mrac(setup.baseline, setup.transform, tune);
    setup.scenario = std::move(sc);
    return setup;
}

} // namespace cgmrac
