#include "cesim/workflow.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace cesim {

std::string to_string(Scope scope) {
    switch (scope) {
    case Scope::Simulation: return "simulation";
    case Scope::Infrastructure: return "infrastructure";
    case Scope::Application: return "application";
    case Scope::Node: return "node";
    case Scope::Service: return "service";
    case Scope::Link: return "link";
    case Scope::Interaction: return "interaction";
    }
    return "?";
}

Scope scope_from_string(const std::string& name) {
    if (name == "simulation") return Scope::Simulation;
    if (name == "infrastructure") return Scope::Infrastructure;
    if (name == "application") return Scope::Application;
    if (name == "node") return Scope::Node;
    if (name == "service") return Scope::Service;
    if (name == "link") return Scope::Link;
    if (name == "interaction") return Scope::Interaction;
    throw ParseError("unknown scope: " + name);
}

std::string to_string(ReportMode mode) {
    switch (mode) {
    case ReportMode::None: return "none";
    case ReportMode::Csv: return "csv";
    case ReportMode::Json: return "json";
    case ReportMode::Gml: return "gml";
    }
    return "?";
}

ReportMode report_mode_from_string(const std::string& name) {
    if (name == "none") return ReportMode::None;
    if (name == "csv") return ReportMode::Csv;
    if (name == "json") return ReportMode::Json;
    if (name == "gml") return ReportMode::Gml;
    throw ParseError("unknown report mode: " + name);
}

void SimGraph::add_trigger(TriggerSpec trigger) {
    if (triggers_.count(trigger.id) || events_.count(trigger.id)) {
        throw DuplicateId("graph node '" + trigger.id + "' already exists");
    }
    if (const auto* periodic = std::get_if<PeriodicTrigger>(&trigger.kind)) {
        if (periodic->interval < 1) {
            throw InvalidParams("periodic trigger '" + trigger.id + "' needs interval >= 1");
        }
    } else if (const auto* scheduled = std::get_if<ScheduledTrigger>(&trigger.kind)) {
        if (!std::is_sorted(scheduled->ticks.begin(), scheduled->ticks.end()) ||
            std::adjacent_find(scheduled->ticks.begin(), scheduled->ticks.end()) != scheduled->ticks.end()) {
            throw InvalidParams("scheduled trigger '" + trigger.id + "' needs strictly increasing ticks");
        }
    } else if (const auto* random = std::get_if<RandomTrigger>(&trigger.kind)) {
        if (random->probability <= 0.0 || random->probability > 1.0) {
            throw InvalidParams("random trigger '" + trigger.id + "' needs probability in (0,1]");
        }
    }
    std::string id = trigger.id;
    triggers_.emplace(std::move(id), std::move(trigger));
}

void SimGraph::add_event(EventSpec event) {
    if (triggers_.count(event.id) || events_.count(event.id)) {
        throw DuplicateId("graph node '" + event.id + "' already exists");
    }
    std::string id = event.id;
    events_.emplace(std::move(id), std::move(event));
}

void SimGraph::connect(const std::string& parent, const std::string& child) {
    const bool parent_known = triggers_.count(parent) || events_.count(parent);
    if (!parent_known) {
        throw UnknownEndpoint("unknown graph node '" + parent + "'");
    }
    if (!events_.count(child)) {
        if (triggers_.count(child)) {
            throw InvalidParams("triggers cannot be activated: '" + child + "'");
        }
        throw UnknownEndpoint("unknown graph node '" + child + "'");
    }
    auto parent_event = events_.find(parent);
    if (parent_event != events_.end() && parent_event->second.is_callback) {
        throw InvalidParams("callbacks cannot activate other nodes: '" + parent + "'");
    }
    children_[parent].push_back(child);
}

const TriggerSpec& SimGraph::trigger(const std::string& id) const {
    auto it = triggers_.find(id);
    if (it == triggers_.end()) {
        throw UnknownTrigger("no trigger named '" + id + "'");
    }
    return it->second;
}

const EventSpec& SimGraph::event(const std::string& id) const {
    auto it = events_.find(id);
    if (it == events_.end()) {
        throw UnknownEndpoint("no event named '" + id + "'");
    }
    return it->second;
}

const std::vector<std::string>& SimGraph::children_of(const std::string& id) const {
    static const std::vector<std::string> empty;
    auto it = children_.find(id);
    return it == children_.end() ? empty : it->second;
}

namespace {

void check_cycles(const SimGraph& graph) {
    // colors: 0 unvisited, 1 on stack, 2 done
    std::map<std::string, int> color;
    std::function<void(const std::string&)> visit = [&](const std::string& id) {
        int& c = color[id];
        if (c == 1) {
            throw CycleError("simulation graph has a cycle through '" + id + "'");
        }
        if (c == 2) {
            return;
        }
        c = 1;
        for (const std::string& child : graph.children_of(id)) {
            visit(child);
        }
        c = 2;
    };
    for (const auto& [id, event] : graph.events()) {
        (void)event;
        visit(id);
    }
}

void check_callbacks(const SimGraph& graph) {
    // A callback must be activated by events only. Multiple activating
    // events are allowed; each occurrence runs the callback once.
    std::map<std::string, int> event_parents;
    std::set<std::string> bad_parents;
    for (const auto& [parent, _] : graph.events()) {
        (void)_;
        for (const std::string& child : graph.children_of(parent)) {
            if (graph.event(child).is_callback) {
                ++event_parents[child];
            }
        }
    }
    for (const auto& [parent, _] : graph.triggers()) {
        (void)_;
        for (const std::string& child : graph.children_of(parent)) {
            if (graph.event(child).is_callback) {
                bad_parents.insert(child);
            }
        }
    }
    for (const auto& [id, event] : graph.events()) {
        if (!event.is_callback) {
            continue;
        }
        if (bad_parents.count(id)) {
            throw MultiParentCallback("callback '" + id + "' must be activated by an event, not a trigger");
        }
        if (event_parents[id] == 0) {
            throw MultiParentCallback("callback '" + id + "' has no activating event");
        }
    }
}

void walk(const SimGraph& graph,
          const std::string& id,
          std::set<std::string>& visited,
          std::vector<PlanStep>& steps) {
    if (graph.event(id).is_callback) {
        return; // attached to their activating event below
    }
    if (!visited.insert(id).second) {
        return; // diamond: one execution per workflow
    }
    PlanStep step;
    step.event_id = id;
    for (const std::string& child : graph.children_of(id)) {
        if (graph.event(child).is_callback) {
            step.callbacks.push_back(child);
        }
    }
    steps.push_back(std::move(step));
    for (const std::string& child : graph.children_of(id)) {
        if (!graph.event(child).is_callback) {
            walk(graph, child, visited, steps);
        }
    }
}

} // namespace

ExecutionPlan compile(const SimGraph& graph) {
    check_cycles(graph);
    check_callbacks(graph);

    ExecutionPlan plan;
    std::set<std::string> reachable;
    for (const auto& [trigger_id, trigger] : graph.triggers()) {
        (void)trigger;
        std::vector<PlanStep> steps;
        std::set<std::string> visited;
        for (const std::string& child : graph.children_of(trigger_id)) {
            walk(graph, child, visited, steps);
        }
        for (const PlanStep& step : steps) {
            reachable.insert(step.event_id);
            reachable.insert(step.callbacks.begin(), step.callbacks.end());
        }
        plan.workflows.emplace(trigger_id, std::move(steps));
    }
    for (const auto& [id, event] : graph.events()) {
        (void)event;
        if (!reachable.count(id)) {
            throw OrphanEvent("event '" + id + "' is not reachable from any trigger");
        }
    }
    return plan;
}

} // namespace cesim
