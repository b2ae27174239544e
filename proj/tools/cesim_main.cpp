#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "cesim/scenario.hpp"

namespace {

/// Preset lookup: $CESIM_PRESETS, ./presets, then exe-relative ../presets
/// and ../../presets.
std::filesystem::path find_preset(const std::string& name, const char* argv0) {
    std::vector<std::filesystem::path> roots;
    if (const char* env = std::getenv("CESIM_PRESETS")) {
        roots.emplace_back(env);
    }
    roots.emplace_back("presets");
    std::filesystem::path exe(argv0);
    if (exe.has_parent_path()) {
        roots.push_back(exe.parent_path() / ".." / "presets");
        roots.push_back(exe.parent_path() / ".." / ".." / "presets");
    }
    for (const auto& root : roots) {
        std::filesystem::path candidate = root / (name + ".json");
        if (std::filesystem::exists(candidate)) {
            return candidate;
        }
    }
    throw cesim::IoError("no preset named '" + name + "' found (set CESIM_PRESETS)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cesim - deterministic cloud-edge simulation and in-process emulation"};

    std::string config_path;
    std::string scenario_name;
    std::uint64_t seed = 0;
    long ticks = 0;
    std::string out_dir;
    std::string format;
    bool sweep = false;
    unsigned jobs = 1;
    bool fail_fast = false;

    app.add_option("--config", config_path, "Scenario config file (json)");
    app.add_option("--scenario", scenario_name, "Bundled scenario preset name (uc1_small, uc2, uc3)");
    app.add_option("--seed", seed, "Override the master seed");
    app.add_option("--ticks", ticks, "Override the tick count");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--format", format, "Force report mode for all callbacks (csv, json, gml)");
    app.add_flag("--sweep", sweep, "Run the config's sweep cross-product");
    app.add_option("--jobs", jobs, "Parallel sweep workers")->default_val(1);
    app.add_flag("--fail-fast", fail_fast, "Abort the run on the first handler failure");

    CLI11_PARSE(app, argc, argv);

    if (config_path.empty() == scenario_name.empty()) {
        std::cerr << "exactly one of --config or --scenario is required\n";
        return 2;
    }

    cesim::ScenarioConfig config;
    try {
        std::filesystem::path path =
            config_path.empty() ? find_preset(scenario_name, argv[0]) : std::filesystem::path(config_path);
        config = cesim::ScenarioConfig::from_file(path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    cesim::BuildOverrides overrides;
    if (seed != 0) {
        overrides.seed = seed;
    }
    if (ticks != 0) {
        overrides.ticks = ticks;
    }
    if (!out_dir.empty()) {
        overrides.out_dir = out_dir;
    }
    if (fail_fast) {
        overrides.fail_fast = true;
    }
    if (!format.empty()) {
        try {
            overrides.format = cesim::report_mode_from_string(format);
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        }
    }

    if (sweep) {
        return cesim::run_sweep(config, overrides, jobs, std::cout);
    }
    return cesim::run_scenario(config, overrides, std::cout);
}
