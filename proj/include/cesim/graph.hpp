#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cesim/assets.hpp"

namespace cesim {

using NodeId = std::string;
using ServiceId = std::string;

/// Undirected link key, normalized so (a, b) == (b, a).
struct LinkKey {
    NodeId a;
    NodeId b;

    LinkKey(NodeId x, NodeId y) {
        if (x <= y) {
            a = std::move(x);
            b = std::move(y);
        } else {
            a = std::move(y);
            b = std::move(x);
        }
    }

    auto operator<=>(const LinkKey&) const = default;
};

/// Simple path as an ordered node sequence. Consecutive nodes are linked.
using Path = std::vector<NodeId>;

struct NodeEntry {
    Bucket assets;
    bool active = true;
};

/// Attributed undirected graph of compute nodes and network links.
///
/// Three spec sets govern the buckets: node capabilities, link capabilities
/// and path-level capabilities. The path set carries the per-asset kind used
/// when folding link values over a multi-hop path (bandwidth is additive on
/// a link but convex over a path).
class Infrastructure {
public:
    Infrastructure() = default;
    Infrastructure(SpecSetPtr node_specs, SpecSetPtr link_specs, SpecSetPtr path_specs);

    const SpecSetPtr& node_specs() const { return node_specs_; }
    const SpecSetPtr& link_specs() const { return link_specs_; }
    const SpecSetPtr& path_specs() const { return path_specs_; }

    void add_node(const NodeId& id, Bucket assets);
    void add_link(const NodeId& src, const NodeId& dst, Bucket assets);

    bool has_node(const NodeId& id) const { return nodes_.count(id) > 0; }
    bool has_link(const NodeId& a, const NodeId& b) const { return links_.count(LinkKey(a, b)) > 0; }

    const NodeEntry& node(const NodeId& id) const;
    NodeEntry& node(const NodeId& id);
    const Bucket& link(const NodeId& a, const NodeId& b) const;
    Bucket& link(const NodeId& a, const NodeId& b);

    void set_active(const NodeId& id, bool active);

    const std::map<NodeId, NodeEntry>& nodes() const { return nodes_; }
    const std::map<LinkKey, Bucket>& links() const { return links_; }

    /// Neighbors in ascending id order.
    const std::vector<NodeId>& neighbors(const NodeId& id) const;

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t link_count() const { return links_.size(); }

    bool connected() const;

private:
    SpecSetPtr node_specs_;
    SpecSetPtr link_specs_;
    SpecSetPtr path_specs_;
    std::map<NodeId, NodeEntry> nodes_;
    std::map<LinkKey, Bucket> links_;
    std::map<NodeId, std::vector<NodeId>> adjacency_;
};

/// Lookup of the bucket to use for a link during path evaluation; defaults
/// to the infrastructure capacities, the placement ledger passes residuals.
using LinkBucketFn = std::function<const Bucket&(const LinkKey&)>;

LinkBucketFn capacity_link_fn(const Infrastructure& infra);

/// Fold the link buckets along `path` using the path-level asset kinds.
/// Throws BrokenPath when a hop is missing or touches an inactive node.
Bucket path_bucket(const Infrastructure& infra, const Path& path);
Bucket path_bucket(const Infrastructure& infra, const Path& path, const LinkBucketFn& link_fn);

/// Latency cost of a path under the path spec fold; 0 for trivial paths.
double path_latency(const Infrastructure& infra, const Path& path, const LinkBucketFn& link_fn);

struct FindPathOptions {
    /// Candidate paths examined (in latency order) before giving up when the
    /// latency-optimal path violates the requirement. 0 = exhaustive.
    std::size_t max_candidates = 8;
};

/// Deterministic constrained path search: latency-ordered (ties broken by
/// lexicographic node sequence), requirement re-checked on the whole
/// candidate bucket, with a k-shortest-path fallback. Returns nullopt when
/// no examined candidate satisfies the requirement.
std::optional<Path> find_path(const Infrastructure& infra,
                              const NodeId& src,
                              const NodeId& dst,
                              const Bucket& requirement,
                              const LinkBucketFn& link_fn,
                              const FindPathOptions& options = {});

std::optional<Path> find_path(const Infrastructure& infra,
                              const NodeId& src,
                              const NodeId& dst,
                              const Bucket& requirement);

/// Single-source latency-optimal paths to every reachable active node.
std::map<NodeId, std::pair<double, Path>> shortest_paths_from(const Infrastructure& infra,
                                                              const NodeId& src,
                                                              const LinkBucketFn& link_fn);

/// Attributed graph of services and interactions plus ordered flows.
class Application {
public:
    Application() = default;
    Application(std::string id, SpecSetPtr service_specs, SpecSetPtr interaction_specs);

    const std::string& id() const { return id_; }
    const SpecSetPtr& service_specs() const { return service_specs_; }
    const SpecSetPtr& interaction_specs() const { return interaction_specs_; }

    void add_service(const ServiceId& id, Bucket requirements);
    void add_interaction(const ServiceId& src, const ServiceId& dst, Bucket requirements);
    void add_flow(std::vector<ServiceId> flow);

    bool has_service(const ServiceId& id) const;
    const Bucket& service(const ServiceId& id) const;

    /// Services in declaration order.
    const std::vector<ServiceId>& service_order() const { return service_order_; }
    const std::map<std::pair<ServiceId, ServiceId>, Bucket>& interactions() const { return interactions_; }
    const std::vector<std::vector<ServiceId>>& flows() const { return flows_; }

private:
    std::string id_;
    SpecSetPtr service_specs_;
    SpecSetPtr interaction_specs_;
    std::map<ServiceId, Bucket> services_;
    std::vector<ServiceId> service_order_;
    std::map<std::pair<ServiceId, ServiceId>, Bucket> interactions_;
    std::vector<std::vector<ServiceId>> flows_;
};

} // namespace cesim
