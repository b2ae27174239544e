#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "cesim/graph.hpp"

namespace cesim {

using AppId = std::string;
using ServiceMapping = std::map<ServiceId, NodeId>;

enum class PlacementStatus { Pending, Fulfilled, Reset };

std::string to_string(PlacementStatus status);

/// Mapping of one application's services onto infrastructure nodes.
struct Placement {
    AppId app_id;
    ServiceMapping mapping;
    PlacementStatus status = PlacementStatus::Pending;
};

/// Reserved witness path for one interaction of a fulfilled placement.
struct PathReservation {
    ServiceId src;
    ServiceId dst;
    Path path;
    Bucket requirement;
};

/// Ledger of unallocated capacity. Node and link residuals are recomputed
/// from capacity minus the hosted requirements on every release or capacity
/// change, so capacity = residual + hosted holds exactly at quiescence.
class ResidualState {
public:
    ResidualState() = default;
    explicit ResidualState(const Infrastructure& infra);

    const Bucket& node_residual(const NodeId& id) const;
    const Bucket& link_residual(const LinkKey& key) const;

    /// Link-bucket view for path search over residual resources.
    LinkBucketFn link_fn() const;

    /// Services hosted on a node, keyed by (app, service).
    const std::map<std::pair<AppId, ServiceId>, Bucket>& hosted_on(const NodeId& id) const;

    const std::vector<PathReservation>& reservations(const AppId& app) const;
    const PathReservation* reservation(const AppId& app, const ServiceId& src, const ServiceId& dst) const;

    void consume_service(const Infrastructure& infra,
                         const AppId& app,
                         const ServiceId& service,
                         const NodeId& node,
                         const Bucket& requirement);

    void consume_interaction(const Infrastructure& infra,
                             const AppId& app,
                             const ServiceId& src,
                             const ServiceId& dst,
                             const Path& path,
                             const Bucket& requirement);

    /// Atomically release every node and path reservation of one app.
    void release_app(const Infrastructure& infra, const AppId& app);

    /// Re-derive a node's residual after its capacity changed.
    void recompute_node(const Infrastructure& infra, const NodeId& id);
    void recompute_link(const Infrastructure& infra, const LinkKey& key);

    /// Audit per-entity conservation; returns one message per violation.
    std::vector<std::string> conservation_violations(const Infrastructure& infra) const;

private:
    std::map<NodeId, Bucket> node_residual_;
    std::map<LinkKey, Bucket> link_residual_;
    std::map<NodeId, std::map<std::pair<AppId, ServiceId>, Bucket>> node_hosted_;
    std::map<LinkKey, std::map<std::tuple<AppId, ServiceId, ServiceId>, Bucket>> link_reserved_;
    std::map<AppId, std::vector<PathReservation>> app_reservations_;
    std::map<AppId, std::vector<std::pair<NodeId, ServiceId>>> app_nodes_;
};

/// Placement validity per the environment model: (a) per node the aggregate
/// of the app's co-located requirements satisfies the node residual, and
/// (b) every interaction admits a residual-feasible path between its hosts;
/// co-located endpoints pass vacuously.
bool is_valid(const ServiceMapping& mapping,
              const Application& app,
              const Infrastructure& infra,
              const ResidualState& residual);

struct FulfilOutcome {
    std::vector<AppId> fulfilled;
    std::vector<AppId> reset;
};

/// Enforce placements in deterministic app-id order. Valid placements have
/// node requirements consumed and one witness path reserved per interaction;
/// invalid ones are reset with nothing consumed. Previously fulfilled
/// placements are released first and re-reserved only if still valid.
FulfilOutcome fulfil(std::map<AppId, Placement>& placements,
                     const std::map<AppId, Application>& apps,
                     const Infrastructure& infra,
                     ResidualState& residual);

/// Service-by-service greedy placement over a residual snapshot.
class PlacementStrategy {
public:
    virtual ~PlacementStrategy() = default;
    virtual std::string name() const = 0;
    virtual std::optional<ServiceMapping> place(const Application& app,
                                                const Infrastructure& infra,
                                                const ResidualState& residual) const = 0;
};

/// First active node in ascending id order that fits each service.
class FirstFitStrategy final : public PlacementStrategy {
public:
    std::string name() const override { return "first_fit"; }
    std::optional<ServiceMapping> place(const Application& app,
                                        const Infrastructure& infra,
                                        const ResidualState& residual) const override;
};

/// Tightest fit: minimize the mean normalized residual left after placing.
class BestFitStrategy final : public PlacementStrategy {
public:
    std::string name() const override { return "best_fit"; }
    std::optional<ServiceMapping> place(const Application& app,
                                        const Infrastructure& infra,
                                        const ResidualState& residual) const override;
};

/// Minimize the energy increase of the placement: the capacity-normalized,
/// weighted sum of the requirements drawn from the chosen node.
class MinEnergyStrategy final : public PlacementStrategy {
public:
    explicit MinEnergyStrategy(std::map<std::string, double> weights = {});
    std::string name() const override { return "min_energy"; }
    std::optional<ServiceMapping> place(const Application& app,
                                        const Infrastructure& infra,
                                        const ResidualState& residual) const override;

private:
    std::map<std::string, double> weights_;
};

/// Fixed mapping from configuration; fulfilment still validates it.
class StaticStrategy final : public PlacementStrategy {
public:
    explicit StaticStrategy(ServiceMapping mapping) : mapping_(std::move(mapping)) {}
    std::string name() const override { return "static"; }
    std::optional<ServiceMapping> place(const Application& app,
                                        const Infrastructure& infra,
                                        const ResidualState& residual) const override;

private:
    ServiceMapping mapping_;
};

} // namespace cesim
