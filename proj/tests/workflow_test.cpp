#include <doctest.h>

#include "cesim/workflow.hpp"

using namespace cesim;

namespace {

SimGraph chain_graph() {
    // manual trigger -> e1 -> e2 -> e3 -> e4, with c1 after e1 and e4,
    // c2 after e4.
    SimGraph graph;
    graph.add_trigger(TriggerSpec{"t", ManualTrigger{}});
    for (const char* id : {"e1", "e2", "e3", "e4"}) {
        graph.add_event(EventSpec{id, Scope::Simulation, false, ReportMode::None});
    }
    for (const char* id : {"c1", "c2"}) {
        graph.add_event(EventSpec{id, Scope::Simulation, true, ReportMode::None});
    }
    graph.connect("t", "e1");
    graph.connect("e1", "c1");
    graph.connect("e1", "e2");
    graph.connect("e2", "e3");
    graph.connect("e3", "e4");
    graph.connect("e4", "c1");
    graph.connect("e4", "c2");
    return graph;
}

} // namespace

TEST_CASE("compile resolves the depth-first operational workflow") {
    ExecutionPlan plan = compile(chain_graph());
    const auto& steps = plan.workflows.at("t");
    REQUIRE(steps.size() == 4);
    CHECK(steps[0].event_id == "e1");
    CHECK(steps[0].callbacks == std::vector<std::string>{"c1"});
    CHECK(steps[1].event_id == "e2");
    CHECK(steps[1].callbacks.empty());
    CHECK(steps[2].event_id == "e3");
    CHECK(steps[3].event_id == "e4");
    CHECK(steps[3].callbacks == std::vector<std::string>{"c1", "c2"});
}

TEST_CASE("compile is idempotent") {
    SimGraph graph = chain_graph();
    CHECK(compile(graph) == compile(graph));
}

TEST_CASE("compile rejects cycles") {
    SimGraph graph;
    graph.add_trigger(TriggerSpec{"t", ManualTrigger{}});
    graph.add_event(EventSpec{"e1", Scope::Simulation, false, ReportMode::None});
    graph.add_event(EventSpec{"e2", Scope::Simulation, false, ReportMode::None});
    graph.connect("t", "e1");
    graph.connect("e1", "e2");
    graph.connect("e2", "e1");
    CHECK_THROWS_AS(compile(graph), CycleError);
}

TEST_CASE("compile rejects orphan events") {
    SimGraph graph;
    graph.add_trigger(TriggerSpec{"t", ManualTrigger{}});
    graph.add_event(EventSpec{"e1", Scope::Simulation, false, ReportMode::None});
    graph.add_event(EventSpec{"lonely", Scope::Simulation, false, ReportMode::None});
    graph.connect("t", "e1");
    CHECK_THROWS_AS(compile(graph), OrphanEvent);
}

TEST_CASE("callbacks must be activated by events") {
    SimGraph graph;
    graph.add_trigger(TriggerSpec{"t", ManualTrigger{}});
    graph.add_event(EventSpec{"e1", Scope::Simulation, false, ReportMode::None});
    graph.add_event(EventSpec{"c1", Scope::Simulation, true, ReportMode::None});
    graph.connect("t", "e1");
    graph.connect("t", "c1"); // trigger-activated callback
    CHECK_THROWS_AS(compile(graph), MultiParentCallback);

    SimGraph orphan;
    orphan.add_trigger(TriggerSpec{"t", ManualTrigger{}});
    orphan.add_event(EventSpec{"e1", Scope::Simulation, false, ReportMode::None});
    orphan.add_event(EventSpec{"c1", Scope::Simulation, true, ReportMode::None});
    orphan.connect("t", "e1");
    CHECK_THROWS_AS(compile(orphan), MultiParentCallback);
}

TEST_CASE("callbacks cannot activate other nodes") {
    SimGraph graph;
    graph.add_trigger(TriggerSpec{"t", ManualTrigger{}});
    graph.add_event(EventSpec{"e1", Scope::Simulation, false, ReportMode::None});
    graph.add_event(EventSpec{"c1", Scope::Simulation, true, ReportMode::None});
    graph.add_event(EventSpec{"e2", Scope::Simulation, false, ReportMode::None});
    graph.connect("t", "e1");
    graph.connect("e1", "c1");
    CHECK_THROWS_AS(graph.connect("c1", "e2"), InvalidParams);
}

TEST_CASE("trigger validation") {
    SimGraph graph;
    CHECK_THROWS_AS(graph.add_trigger(TriggerSpec{"p", PeriodicTrigger{0}}), InvalidParams);
    CHECK_THROWS_AS(graph.add_trigger(TriggerSpec{"s", ScheduledTrigger{{3, 3}}}), InvalidParams);
    CHECK_THROWS_AS(graph.add_trigger(TriggerSpec{"s2", ScheduledTrigger{{5, 3}}}), InvalidParams);
    CHECK_THROWS_AS(graph.add_trigger(TriggerSpec{"r", RandomTrigger{1.5, ""}}), InvalidParams);
    CHECK_THROWS_AS(graph.add_trigger(TriggerSpec{"r2", RandomTrigger{0.0, ""}}), InvalidParams);
    graph.add_trigger(TriggerSpec{"ok", PeriodicTrigger{4}});
    CHECK_THROWS_AS(graph.add_trigger(TriggerSpec{"ok", ManualTrigger{}}), DuplicateId);
}

TEST_CASE("diamond events execute once per workflow") {
    SimGraph graph;
    graph.add_trigger(TriggerSpec{"t", ManualTrigger{}});
    for (const char* id : {"e1", "e2", "join"}) {
        graph.add_event(EventSpec{id, Scope::Simulation, false, ReportMode::None});
    }
    graph.connect("t", "e1");
    graph.connect("t", "e2");
    graph.connect("e1", "join");
    graph.connect("e2", "join");
    ExecutionPlan plan = compile(graph);
    const auto& steps = plan.workflows.at("t");
    REQUIRE(steps.size() == 3);
    CHECK(steps[0].event_id == "e1");
    CHECK(steps[1].event_id == "join");
    CHECK(steps[2].event_id == "e2");
}
