#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>

#include <json.hpp>

#include "cesim/engine.hpp"

namespace cesim {

/// Parsed and validated scenario document. Parsing collects every error
/// before failing, and the normalized form round-trips: parse(to_json(c))
/// equals c.
class ScenarioConfig {
public:
    static ScenarioConfig parse(nlohmann::json doc,
                                std::filesystem::path base_dir = std::filesystem::current_path());
    static ScenarioConfig from_file(const std::filesystem::path& path);

    const nlohmann::json& to_json() const { return doc_; }
    const std::filesystem::path& base_dir() const { return base_dir_; }
    std::string name() const { return doc_.value("name", "scenario"); }

    bool has_sweep() const { return doc_.contains("sweep"); }

    bool operator==(const ScenarioConfig& other) const { return doc_ == other.doc_; }

private:
    nlohmann::json doc_;
    std::filesystem::path base_dir_;
};

/// Command-line overrides applied on top of the config document.
struct BuildOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<long> ticks;
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::string> run_id;
    std::optional<ReportMode> format;
    std::optional<bool> fail_fast;
};

std::unique_ptr<Simulation> build_simulation(const ScenarioConfig& config,
                                             const BuildOverrides& overrides = {});

/// One cell of the sweep cross-product.
struct SweepPoint {
    std::size_t size = 0;
    std::string topology;
    std::string strategy;
    std::string policy;
    double load = 0.0;
    std::uint64_t seed = 0;

    std::string run_id() const;
};

std::vector<SweepPoint> sweep_points(const ScenarioConfig& config);

/// Scenario config for one sweep cell.
ScenarioConfig apply_sweep_point(const ScenarioConfig& config, const SweepPoint& point);

struct SweepRow {
    SweepPoint point;
    double success_rate = 0.0;
    double ticks_per_second = 0.0;
};

/// Exit codes: 0 ok, 1 runtime failure, 2 config error.
int run_scenario(const ScenarioConfig& config, const BuildOverrides& overrides, std::ostream& out);
int run_sweep(const ScenarioConfig& config, const BuildOverrides& overrides, unsigned jobs,
              std::ostream& out);

} // namespace cesim
