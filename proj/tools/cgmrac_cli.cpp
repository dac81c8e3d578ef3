#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cgmrac/commands.hpp"
#include "cgmrac/config.hpp"

namespace {

bool load_config(cgmrac::RunConfig& cfg, const std::string& path, const std::vector<std::string>& sets) {
    try {
        if (!path.empty()) cfg.load_file(path);
        for (const auto& s : sets) cfg.set_assignment(s);
    } catch (const cgmrac::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return false;
    }
    return true;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust MRAC augmentation of a pitch-axis baseline controller: design, simulate, sweep"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    std::string out_path;
    std::vector<std::string> grid;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat key = value config file");
        sub->add_option("--set", sets, "override, key=value (repeatable)");
    };

    auto* design = app.add_subcommand("design", "print the baseline and adaptive design");
    add_common(design);

    auto* simulate = app.add_subcommand("simulate", "run one scenario, write the trace CSV");
    add_common(simulate);
    simulate->add_option("--out", out_path, "trace CSV path")->required();

    auto* sweep = app.add_subcommand("sweep", "run a parameter grid, write a summary CSV");
    add_common(sweep);
    sweep->add_option("--grid", grid, "axis, key=v1,v2,... (repeatable)");
    sweep->add_option("--out", out_path, "summary CSV path (stdout if absent)");
    sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cgmrac::kExitConfig;
    }

    cgmrac::RunConfig cfg;
    if (!load_config(cfg, config_path, sets)) return cgmrac::kExitConfig;

    if (design->parsed()) return cgmrac::cmd_design(cfg, std::cout, std::cerr);
    if (simulate->parsed()) return cgmrac::cmd_simulate(cfg, out_path, std::cout, std::cerr);
    return cgmrac::cmd_sweep(cfg, grid, out_path, jobs, std::cout, std::cerr);
}
