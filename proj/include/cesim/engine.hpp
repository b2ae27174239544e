#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <set>

#include "cesim/emulation.hpp"
#include "cesim/environment.hpp"
#include "cesim/metrics.hpp"
#include "cesim/reporting.hpp"
#include "cesim/workflow.hpp"

namespace cesim {

struct SimulationConfig {
    long max_ticks = 1;
    double tick_period_ms = 0.0; // wall-clock pacing between ticks; 0 = free-running
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "runs";
    std::string run_id = "run";
    bool fail_fast = false;
    bool remote = false;         // enables the in-process actor runtime
    double emu_tick_ms = 1000.0; // virtual duration of one tick
    double emu_timeout_multiplier = 10.0;
    std::vector<long> snapshot_ticks;
};

struct EventCounters {
    long executed = 0;
    long failed = 0;
};

struct RunReport {
    std::string run_id;
    std::uint64_t seed = 0;
    long ticks = 0;
    std::map<std::string, EventCounters> events;
    std::map<AppId, double> success_rates;
    std::map<AppId, std::string> final_status;
    std::size_t records = 0;
    long emu_sent = 0;
    long emu_delivered = 0;
    long emu_dropped = 0;

    // wall-clock figures, reported separately from the deterministic payload
    double wall_seconds = 0.0;
    double ticks_per_second = 0.0;

    nlohmann::json to_json() const;
    nlohmann::json perf_json() const;
};

using EventHandler = std::function<void(Environment&, long)>;

/// Single-threaded deterministic scheduler. One logical thread owns the
/// environment; events mutate it in depth-first workflow order, callbacks
/// observe it read-only right after their activating event.
class Simulation {
public:
    Simulation(SimulationConfig config, Environment env);

    SimulationConfig& config() { return config_; }
    Environment& env() { return env_; }
    const Environment& env() const { return env_; }
    SimGraph& graph() { return graph_; }
    Reporter& reporter() { return reporter_; }
    EmulationRuntime* emulation() { return emulation_.get(); }

    void set_event_handler(const std::string& event_id, EventHandler handler);
    void set_callback(const std::string& callback_id, MetricFn fn);

    /// Named random stream derived from the master seed.
    RngStream make_stream(const std::string& name) const;

    /// Enqueue a manual trigger for the next tick boundary.
    void fire_manual(const std::string& trigger_id);

    RunReport run();

private:
    struct TickState {
        std::set<std::string> completed_events;
        std::set<std::string> fired_triggers;
    };

    bool execute_workflow(const std::string& trigger_id, long tick, TickState& state);
    void execute_cascades(long tick, TickState& state);
    void run_tick(long tick);
    void open_outputs();
    void write_outputs(const RunReport& report);
    void sample_perf(long tick);
    void log_line(const std::string& line);

    SimulationConfig config_;
    Environment env_;
    SimGraph graph_;
    ExecutionPlan plan_;
    Reporter reporter_;
    std::unique_ptr<EmulationRuntime> emulation_;
    std::map<std::string, EventHandler> handlers_;
    std::map<std::string, MetricFn> callbacks_;
    std::map<std::string, RngStream> trigger_streams_;
    std::vector<std::string> manual_queue_;
    std::map<std::string, EventCounters> counters_;
    std::ofstream log_file_;
    std::ofstream perf_csv_;
    double wall_start_ = 0.0;
    long last_proc_jiffies_ = -1;
    double last_sample_elapsed_ = 0.0;
    double cpu_percent_sum_ = 0.0;
    long cpu_samples_ = 0;
    long max_rss_kb_ = 0;
};

/// Structural anchors: manual start/stop triggers and the periodic step
/// trigger; no events attached.
void add_core_triggers(SimGraph& graph, long step_interval = 1);

/// The default per-tick chain: step -> update_policy -> placement_lookup ->
/// placement_fulfilment, executed sequentially in that order.
void add_default_step_events(SimGraph& graph);

/// Bind the default lookup/fulfilment handlers on a simulation.
void bind_default_handlers(Simulation& sim);

} // namespace cesim
