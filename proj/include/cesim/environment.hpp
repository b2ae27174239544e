#pragma once

#include <map>
#include <memory>
#include <string>

#include "cesim/graph.hpp"
#include "cesim/placement.hpp"

namespace cesim {

/// Whole mutable simulation state: the infrastructure, the applications and
/// their placements, the residual ledger and auxiliary per-node workload
/// counters. Owned by the scheduler; events mutate it, callbacks read it.
struct Environment {
    Infrastructure infra;
    std::map<AppId, Application> apps;
    std::map<AppId, std::shared_ptr<PlacementStrategy>> strategies;
    std::map<AppId, Placement> placements;
    ResidualState residual;

    /// As-built node capacities, the reference for degrade/revive.
    std::map<NodeId, Bucket> original_capacity;

    /// Per-node user counts maintained by the user-load policy.
    std::map<NodeId, long> user_counts;
    NodeId user_hub;

    /// Ticks each app spent fulfilled, for the success-rate metric.
    std::map<AppId, long> fulfilled_ticks;
    long elapsed_ticks = 0;

    void snapshot_capacity();

    /// Default lookup event: propose placements for apps that are not
    /// currently fulfilled, using each app's strategy.
    void run_lookup();

    /// Default fulfilment event: enforce all placements and update the
    /// success-rate accounting for this tick.
    FulfilOutcome run_fulfil();

    double success_rate(const AppId& app) const;
};

/// Build an environment around an infrastructure; residual starts at
/// capacity and the capacity snapshot is taken.
Environment make_environment(Infrastructure infra);

void add_application(Environment& env, Application app, std::shared_ptr<PlacementStrategy> strategy);

} // namespace cesim
