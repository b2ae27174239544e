#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cesim/errors.hpp"

namespace cesim {

/// Abstraction level an event or callback operates on; determines the
/// subject column of the records it produces.
enum class Scope { Simulation, Infrastructure, Application, Node, Service, Link, Interaction };

std::string to_string(Scope scope);
Scope scope_from_string(const std::string& name);

enum class ReportMode { None, Csv, Json, Gml };

std::string to_string(ReportMode mode);
ReportMode report_mode_from_string(const std::string& name);

struct ManualTrigger {};
struct PeriodicTrigger { long interval = 1; };
struct ScheduledTrigger { std::vector<long> ticks; };
struct RandomTrigger { double probability = 0.0; std::string stream; };
struct CascadeTrigger { std::string source_event; };

/// Activation source of a workflow. Validated on insertion: periodic
/// interval >= 1, scheduled ticks strictly increasing, probability in (0,1].
struct TriggerSpec {
    std::string id;
    std::variant<ManualTrigger, PeriodicTrigger, ScheduledTrigger, RandomTrigger, CascadeTrigger> kind;

    bool is_manual() const { return std::holds_alternative<ManualTrigger>(kind); }
};

/// Declaration of an event or callback node in the simulation graph.
/// Handlers are bound separately by id.
struct EventSpec {
    std::string id;
    Scope scope = Scope::Simulation;
    bool is_callback = false;
    ReportMode report_mode = ReportMode::None;
};

/// Directed acyclic graph of triggers, events and callbacks connected by
/// the "activates" relation. Edge order is insertion order.
class SimGraph {
public:
    void add_trigger(TriggerSpec trigger);
    void add_event(EventSpec event);
    void connect(const std::string& parent, const std::string& child);

    bool has_trigger(const std::string& id) const { return triggers_.count(id) > 0; }
    bool has_event(const std::string& id) const { return events_.count(id) > 0; }

    const TriggerSpec& trigger(const std::string& id) const;
    const EventSpec& event(const std::string& id) const;

    const std::map<std::string, TriggerSpec>& triggers() const { return triggers_; }
    const std::map<std::string, EventSpec>& events() const { return events_; }
    const std::vector<std::string>& children_of(const std::string& id) const;

private:
    std::map<std::string, TriggerSpec> triggers_;
    std::map<std::string, EventSpec> events_;
    std::map<std::string, std::vector<std::string>> children_;
};

/// One executed step: an event followed immediately by the callbacks it
/// activates, in their edge insertion order.
struct PlanStep {
    std::string event_id;
    std::vector<std::string> callbacks;

    bool operator==(const PlanStep& other) const = default;
};

/// Depth-first ordered event sequence per trigger.
struct ExecutionPlan {
    std::map<std::string, std::vector<PlanStep>> workflows;

    bool operator==(const ExecutionPlan& other) const = default;
};

/// Resolve trigger chains into the deterministic execution plan.
/// Throws CycleError, OrphanEvent or MultiParentCallback on structural
/// violations.
ExecutionPlan compile(const SimGraph& graph);

} // namespace cesim
