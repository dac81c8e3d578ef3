#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cgmrac/commands.hpp"

using namespace cgmrac;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "cgmrac_test_cli";
    std::filesystem::create_directories(dir);
    return dir / name;
}

Errc config_error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected cgmrac::Error");
    return Errc::InvalidArgument;
}

} // namespace

TEST_CASE("config text parsing") {
    RunConfig cfg;
    cfg.load_text("# comment\n  plant.mu = 0.25   # trailing\n\nmrac.enabled = off\nscenario.steps = 0.5:0.1; 2:0\n");
    CHECK(cfg.get_double("plant.mu") == 0.25);
    CHECK_FALSE(cfg.get_bool("mrac.enabled"));
    const auto steps = parse_steps(cfg.raw("scenario.steps"));
    REQUIRE(steps.size() == 2);
    CHECK(steps[0].time == 0.5);
    CHECK(steps[1].amplitude == 0.0);

    cfg.set_assignment("scenario.mu=0.75");
    CHECK(cfg.get_double("plant.mu") == 0.75);
    CHECK(cfg.get_double("baseline.u_limit") == std::numeric_limits<double>::infinity());
    CHECK_FALSE(cfg.has_value("baseline.ki"));
}

TEST_CASE("config rejects unknown keys and malformed values") {
    RunConfig cfg;
    CHECK(config_error_of([&] { cfg.set("mrac.gamma", "1"); }) == Errc::ConfigError);
    CHECK(config_error_of([&] { cfg.load_text("plant.mu 0.3\n"); }) == Errc::ConfigError);
    CHECK(config_error_of([&] { cfg.set_assignment("no_equals"); }) == Errc::ConfigError);
    cfg.set("mrac.gamma_z", "fast");
    CHECK(config_error_of([&] { (void)cfg.get_double("mrac.gamma_z"); }) == Errc::ConfigError);
    cfg.set("mrac.enabled", "maybe");
    CHECK(config_error_of([&] { (void)cfg.get_bool("mrac.enabled"); }) == Errc::ConfigError);
    CHECK(config_error_of([] { (void)parse_steps("1:0.1; 2"); }) == Errc::ConfigError);
    CHECK(config_error_of([] { (void)parse_steps("1:0.1x"); }) == Errc::ConfigError);
    CHECK(config_error_of([] { cgmrac::RunConfig{}.load_file("/nonexistent/cgmrac.cfg"); }) == Errc::ConfigError);
}

TEST_CASE("build_setup validates before any run") {
    for (const char* bad : {"plant.mu=1.5", "scenario.dt=0", "mrac.eps=0", "scenario.steps=3:0.1; 2:0",
                            "scenario.sample_stride=0", "baseline.qw_q=-1"}) {
        RunConfig cfg;
        cfg.set_assignment(bad);
        CHECK(config_error_of([&] { (void)build_setup(cfg); }) == Errc::ConfigError);
    }
}

TEST_CASE("design report") {
    RunConfig cfg;
    std::ostringstream out, err;
    CHECK(cmd_design(cfg, out, err) == kExitOk);
    CHECK(out.str().find("baseline.dc_gain = 1.000000000\n") != std::string::npos);
    CHECK(out.str().find("baseline.ki_source = auto\n") != std::string::npos);
    CHECK(err.str().empty());
}

TEST_CASE("design errors name the offending key") {
    RunConfig cfg;
    cfg.set("baseline.rw", "0");
    std::ostringstream out, err;
    CHECK(cmd_design(cfg, out, err) == kExitConfig);
    CHECK(err.str().find("baseline.rw") != std::string::npos);
    CHECK(out.str().empty());
}

TEST_CASE("simulate writes the trace CSV") {
    RunConfig cfg;
    const auto path = scratch("default.csv");
    std::ostringstream out, err;
    REQUIRE(cmd_simulate(cfg, path.string(), out, err) == kExitOk);
    const auto lines = lines_of(slurp(path));
    std::size_t header = 0;
    while (header < lines.size() && lines[header].starts_with("#")) ++header;
    REQUIRE(header < lines.size());
    CHECK(lines[header] == "t,r,alpha,q,alpha_m,u_bl,u_ad,u,e_norm,Kz1,Kz2,Kr,V_proxy");
    CHECK(lines.size() - header - 1 == 3001);
    CHECK(std::find(lines.begin(), lines.end(), "# verdict = Completed") != lines.end());
    CHECK(out.str().find("verdict                     Completed") != std::string::npos);

    const auto again = scratch("default_again.csv");
    std::ostringstream out2, err2;
    REQUIRE(cmd_simulate(cfg, again.string(), out2, err2) == kExitOk);
    CHECK(slurp(path) == slurp(again));
    CHECK(out.str() == out2.str());
}

TEST_CASE("simulate reports divergence with exit code 3") {
    RunConfig cfg;
    cfg.set("mrac.gamma_z", "1e6");
    cfg.set("scenario.ref_scale", "10");
    const auto path = scratch("diverged.csv");
    std::ostringstream out, err;
    CHECK(cmd_simulate(cfg, path.string(), out, err) == kExitDiverged);
    const std::string text = slurp(path);
    CHECK(text.find("# verdict = Diverged\n") != std::string::npos);
    CHECK(text.find("# diverged_at = ") != std::string::npos);
}

TEST_CASE("simulate rejects bad configuration with exit code 2") {
    RunConfig cfg;
    cfg.set("scenario.t_end", "-1");
    std::ostringstream out, err;
    CHECK(cmd_simulate(cfg, scratch("never.csv").string(), out, err) == kExitConfig);
    CHECK(err.str().find("scenario.t_end") != std::string::npos);
}

TEST_CASE("trace header repeats the design report") {
    RunConfig cfg;
    cfg.set("scenario.t_end", "2");
    cfg.set("scenario.steps", "0.5:0.1");
    std::ostringstream design, err;
    REQUIRE(cmd_design(cfg, design, err) == kExitOk);
    const auto path = scratch("roundtrip.csv");
    std::ostringstream out;
    REQUIRE(cmd_simulate(cfg, path.string(), out, err) == kExitOk);
    const auto trace = lines_of(slurp(path));
    for (const auto& line : lines_of(design.str()))
        CHECK(std::find(trace.begin(), trace.end(), "# " + line) != trace.end());
    for (const auto& [k, v] : cfg.entries())
        CHECK(std::find(trace.begin(), trace.end(), "# " + k + " = " + v) != trace.end());
}

TEST_CASE("sweep covers the grid in order") {
    RunConfig cfg;
    cfg.set("scenario.t_end", "4");
    cfg.set("scenario.steps", "0.5:0.1");
    const std::vector<std::string> specs{"mrac.gamma_z=10,1000", "scenario.ref_scale=0.5,1,2"};
    std::ostringstream serial, err;
    REQUIRE(cmd_sweep(cfg, specs, "", 1, serial, err) == kExitOk);
    const auto rows = lines_of(serial.str());
    REQUIRE(rows.size() == 7);
    CHECK(rows[0] == "mrac.gamma_z,scenario.ref_scale,verdict,overshoot_pct,ise,max_e_norm");
    CHECK(rows[1].starts_with("10,0.5,"));
    CHECK(rows[3].starts_with("10,2,"));
    CHECK(rows[4].starts_with("1000,0.5,"));

    std::ostringstream parallel;
    REQUIRE(cmd_sweep(cfg, specs, "", 4, parallel, err) == kExitOk);
    CHECK(parallel.str() == serial.str());
}

TEST_CASE("sweep argument errors") {
    RunConfig cfg;
    std::ostringstream out, err;
    CHECK(cmd_sweep(cfg, {}, "", 1, out, err) == kExitConfig);
    CHECK(cmd_sweep(cfg, {"mrac.gamma_z="}, "", 1, out, err) == kExitConfig);
    CHECK(cmd_sweep(cfg, {"mrac.nope=1,2"}, "", 1, out, err) == kExitConfig);
    CHECK(cmd_sweep(cfg, {"mrac.gamma_z=1", "mrac.gamma_z=2"}, "", 1, out, err) == kExitConfig);
    CHECK(cmd_sweep(cfg, {"mrac.eps=0.1,-1"}, "", 1, out, err) == kExitConfig);
    CHECK(out.str().empty());
}
