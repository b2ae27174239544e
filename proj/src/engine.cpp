#include "cesim/engine.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <thread>

#include "cesim/gml.hpp"

#ifdef __linux__
#include <unistd.h>
#endif

namespace cesim {

namespace {

double wall_now() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

#ifdef __linux__
long read_proc_jiffies() {
    std::ifstream stat("/proc/self/stat");
    if (!stat) {
        return -1;
    }
    std::string token;
    // utime is field 14, stime field 15; the command field may hold spaces,
    // so skip past the closing parenthesis first.
    std::string line;
    std::getline(stat, line);
    auto close_paren = line.rfind(')');
    if (close_paren == std::string::npos) {
        return -1;
    }
    std::istringstream rest(line.substr(close_paren + 2));
    std::vector<std::string> fields;
    while (rest >> token) {
        fields.push_back(token);
    }
    if (fields.size() < 13) {
        return -1;
    }
    return std::stol(fields[11]) + std::stol(fields[12]);
}

long read_rss_kb() {
    std::ifstream statm("/proc/self/statm");
    long total = 0;
    long resident = 0;
    if (!(statm >> total >> resident)) {
        return 0;
    }
    return resident * (sysconf(_SC_PAGESIZE) / 1024);
}
#else
long read_proc_jiffies() { return -1; }
long read_rss_kb() { return 0; }
#endif

} // namespace

nlohmann::json RunReport::to_json() const {
    nlohmann::json events_json = nlohmann::json::object();
    for (const auto& [id, c] : events) {
        events_json[id] = {{"executed", c.executed}, {"failed", c.failed}};
    }
    nlohmann::json apps_json = nlohmann::json::object();
    for (const auto& [id, rate] : success_rates) {
        apps_json[id] = {{"success_rate", canonical_json(rate)},
                         {"final_status", final_status.count(id) ? final_status.at(id) : "pending"}};
    }
    nlohmann::json out = {
        {"run_id", run_id},
        {"seed", seed},
        {"ticks", ticks},
        {"events", std::move(events_json)},
        {"applications", std::move(apps_json)},
        {"records", records},
    };
    if (emu_sent > 0 || emu_delivered > 0 || emu_dropped > 0) {
        out["emulation"] = {{"sent", emu_sent}, {"delivered", emu_delivered}, {"dropped", emu_dropped}};
    }
    return out;
}

nlohmann::json RunReport::perf_json() const {
    return {
        {"wall_seconds", wall_seconds},
        {"ticks_per_second", ticks_per_second},
    };
}

Simulation::Simulation(SimulationConfig config, Environment env)
    : config_(std::move(config)), env_(std::move(env)) {
    if (config_.max_ticks < 1) {
        throw InvalidParams("max_ticks must be >= 1");
    }
    std::sort(config_.snapshot_ticks.begin(), config_.snapshot_ticks.end());
    if (config_.remote) {
        emulation_ = std::make_unique<EmulationRuntime>(config_.seed, config_.emu_tick_ms,
                                                        config_.emu_timeout_multiplier);
    }
}

void Simulation::set_event_handler(const std::string& event_id, EventHandler handler) {
    handlers_[event_id] = std::move(handler);
}

void Simulation::set_callback(const std::string& callback_id, MetricFn fn) {
    callbacks_[callback_id] = std::move(fn);
}

RngStream Simulation::make_stream(const std::string& name) const {
    return RngStream(config_.seed, name);
}

void Simulation::fire_manual(const std::string& trigger_id) {
    const TriggerSpec& trigger = graph_.trigger(trigger_id);
    if (!trigger.is_manual()) {
        throw NotManual("trigger '" + trigger_id + "' is not manual");
    }
    manual_queue_.push_back(trigger_id);
}

bool Simulation::execute_workflow(const std::string& trigger_id, long tick, TickState& state) {
    auto workflow = plan_.workflows.find(trigger_id);
    if (workflow == plan_.workflows.end()) {
        return true;
    }
    for (const PlanStep& step : workflow->second) {
        auto handler = handlers_.find(step.event_id);
        const auto started = std::chrono::steady_clock::now();
        try {
            if (handler != handlers_.end()) {
                handler->second(env_, tick);
            }
        } catch (const std::exception& error) {
            ++counters_[step.event_id].failed;
            log_line("tick=" + std::to_string(tick) + " event=" + step.event_id +
                     " status=failed error=" + error.what());
            if (config_.fail_fast) {
                throw;
            }
            return false; // abort this workflow, simulation continues
        }
        ++counters_[step.event_id].executed;
        state.completed_events.insert(step.event_id);
        const auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                            std::chrono::steady_clock::now() - started)
                            .count();
        log_line("tick=" + std::to_string(tick) + " event=" + step.event_id +
                 " status=ok dur_us=" + std::to_string(us));
        for (const std::string& callback_id : step.callbacks) {
            auto callback = callbacks_.find(callback_id);
            try {
                if (callback != callbacks_.end()) {
                    const Environment& view = env_; // read-only by contract
                    callback->second(view, tick, [&](ReportRecord record) {
                        record.callback = callback_id;
                        record.tick = tick;
                        reporter_.add(std::move(record));
                    });
                }
                if (graph_.event(callback_id).report_mode == ReportMode::Gml) {
                    write_snapshot(env_, config_.out_dir / config_.run_id, tick);
                }
            } catch (const std::exception& error) {
                ++counters_[callback_id].failed;
                log_line("tick=" + std::to_string(tick) + " callback=" + callback_id +
                         " status=failed error=" + error.what());
                if (config_.fail_fast) {
                    throw;
                }
                return false;
            }
            ++counters_[callback_id].executed;
        }
    }
    return true;
}

void Simulation::execute_cascades(long tick, TickState& state) {
    bool progressed = true;
    while (progressed) {
        progressed = false;
        for (const auto& [id, trigger] : graph_.triggers()) {
            if (state.fired_triggers.count(id)) {
                continue;
            }
            const auto* cascade = std::get_if<CascadeTrigger>(&trigger.kind);
            if (cascade == nullptr || !state.completed_events.count(cascade->source_event)) {
                continue;
            }
            state.fired_triggers.insert(id);
            execute_workflow(id, tick, state);
            progressed = true;
        }
    }
}

void Simulation::run_tick(long tick) {
    TickState state;

    std::vector<std::string> manual;
    manual.swap(manual_queue_);
    for (const std::string& id : manual) {
        state.fired_triggers.insert(id);
        execute_workflow(id, tick, state);
        execute_cascades(tick, state);
    }

    for (const auto& [id, trigger] : graph_.triggers()) {
        if (state.fired_triggers.count(id)) {
            continue;
        }
        bool fire = false;
        if (const auto* periodic = std::get_if<PeriodicTrigger>(&trigger.kind)) {
            fire = tick % periodic->interval == 0;
        } else if (const auto* scheduled = std::get_if<ScheduledTrigger>(&trigger.kind)) {
            fire = std::binary_search(scheduled->ticks.begin(), scheduled->ticks.end(), tick);
        } else if (std::get_if<RandomTrigger>(&trigger.kind) != nullptr) {
            // one draw per tick per random trigger, fired or not
            fire = trigger_streams_.at(id).next_unit() <
                   std::get<RandomTrigger>(trigger.kind).probability;
        }
        if (fire) {
            state.fired_triggers.insert(id);
            execute_workflow(id, tick, state);
            execute_cascades(tick, state);
        }
    }

    if (emulation_) {
        emulation_->sync_with_placements(env_);
        emulation_->run_window(env_, tick);
        emulation_->flush_metrics(tick, [&](ReportRecord record) {
            record.tick = tick;
            reporter_.add(std::move(record));
        });
    }

    if (std::binary_search(config_.snapshot_ticks.begin(), config_.snapshot_ticks.end(), tick)) {
        write_snapshot(env_, config_.out_dir / config_.run_id, tick);
    }

    reporter_.flush_tick(tick);
    sample_perf(tick);
}

void Simulation::open_outputs() {
    const std::filesystem::path run_dir = config_.out_dir / config_.run_id;
    std::filesystem::create_directories(run_dir);
    std::filesystem::create_directories(run_dir / "perf");
    reporter_.open(run_dir);
    log_file_.open(run_dir / "logs.txt", std::ios::binary);
    perf_csv_.open(run_dir / "perf" / "ticks.csv", std::ios::binary);
    perf_csv_ << "tick,wall_seconds,ticks_per_s,cpu_percent,rss_kb\n";
}

void Simulation::log_line(const std::string& line) {
    if (log_file_.is_open()) {
        log_file_ << line << '\n';
    }
}

void Simulation::sample_perf(long tick) {
    if (!perf_csv_.is_open()) {
        return;
    }
    const double elapsed = wall_now() - wall_start_;
    const double rate = elapsed > 0.0 ? static_cast<double>(tick) / elapsed : 0.0;
    double cpu_percent = 0.0;
#ifdef __linux__
    long jiffies = read_proc_jiffies();
    static const long hz = sysconf(_SC_CLK_TCK);
    if (jiffies >= 0 && last_proc_jiffies_ >= 0 && hz > 0) {
        const double cpu_seconds = static_cast<double>(jiffies - last_proc_jiffies_) / static_cast<double>(hz);
        const double dt = elapsed - last_sample_elapsed_;
        cpu_percent = dt > 0.0 ? 100.0 * cpu_seconds / dt : 0.0;
    }
    last_proc_jiffies_ = jiffies;
    last_sample_elapsed_ = elapsed;
#endif
    const long rss = read_rss_kb();
    max_rss_kb_ = std::max(max_rss_kb_, rss);
    cpu_percent_sum_ += cpu_percent;
    ++cpu_samples_;
    perf_csv_ << tick << ',' << format_value(elapsed) << ',' << format_value(rate) << ','
              << format_value(cpu_percent) << ',' << rss << '\n';
}

RunReport Simulation::run() {
    plan_ = compile(graph_);
    trigger_streams_.clear();
    for (const auto& [id, trigger] : graph_.triggers()) {
        if (std::get_if<RandomTrigger>(&trigger.kind) != nullptr) {
            trigger_streams_.emplace(id, make_stream("trigger/" + id));
        }
    }
    open_outputs();
    wall_start_ = wall_now();

    TickState boot;
    if (graph_.has_trigger("start")) {
        execute_workflow("start", 0, boot);
        execute_cascades(0, boot);
    }
    reporter_.flush_tick(0);

    for (long tick = 1; tick <= config_.max_ticks; ++tick) {
        run_tick(tick);
        if (config_.tick_period_ms > 0.0) {
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(config_.tick_period_ms));
        }
    }

    TickState shutdown;
    if (graph_.has_trigger("stop")) {
        execute_workflow("stop", config_.max_ticks, shutdown);
        execute_cascades(config_.max_ticks, shutdown);
    }
    reporter_.flush_tick(config_.max_ticks);
    reporter_.finalize();

    RunReport report;
    report.run_id = config_.run_id;
    report.seed = config_.seed;
    report.ticks = config_.max_ticks;
    report.events = counters_;
    for (const auto& [app_id, placement] : env_.placements) {
        report.success_rates[app_id] = env_.success_rate(app_id);
        report.final_status[app_id] = to_string(placement.status);
    }
    report.records = reporter_.records_written();
    if (emulation_) {
        report.emu_sent = emulation_->total_sent();
        report.emu_delivered = emulation_->total_delivered();
        report.emu_dropped = emulation_->total_dropped();
    }
    report.wall_seconds = wall_now() - wall_start_;
    report.ticks_per_second =
        report.wall_seconds > 0.0 ? static_cast<double>(config_.max_ticks) / report.wall_seconds : 0.0;

    write_outputs(report);
    return report;
}

void Simulation::write_outputs(const RunReport& report) {
    const std::filesystem::path run_dir = config_.out_dir / config_.run_id;
    {
        nlohmann::json doc = report.to_json();
        doc["records_by_tick"] = reporter_.json_document();
        std::ofstream out(run_dir / "report.json", std::ios::binary);
        out << doc.dump(2) << '\n';
    }
    {
        nlohmann::json perf = report.perf_json();
        perf["max_rss_kb"] = max_rss_kb_;
        perf["cpu_percent_mean"] =
            cpu_samples_ > 0 ? cpu_percent_sum_ / static_cast<double>(cpu_samples_) : 0.0;
        std::ofstream out(run_dir / "perf.json", std::ios::binary);
        out << perf.dump(2) << '\n';
    }
    log_file_.flush();
    perf_csv_.flush();
}

void add_core_triggers(SimGraph& graph, long step_interval) {
    graph.add_trigger(TriggerSpec{"start", ManualTrigger{}});
    graph.add_trigger(TriggerSpec{"step", PeriodicTrigger{step_interval}});
    graph.add_trigger(TriggerSpec{"stop", ManualTrigger{}});
}

void add_default_step_events(SimGraph& graph) {
    graph.add_event(EventSpec{"update_policy", Scope::Infrastructure, false, ReportMode::None});
    graph.add_event(EventSpec{"placement_lookup", Scope::Application, false, ReportMode::None});
    graph.add_event(EventSpec{"placement_fulfilment", Scope::Application, false, ReportMode::None});
    graph.connect("step", "update_policy");
    graph.connect("update_policy", "placement_lookup");
    graph.connect("placement_lookup", "placement_fulfilment");
}

void bind_default_handlers(Simulation& sim) {
    sim.set_event_handler("placement_lookup", [](Environment& env, long) { env.run_lookup(); });
    sim.set_event_handler("placement_fulfilment", [](Environment& env, long) { env.run_fulfil(); });
}

} // namespace cesim
