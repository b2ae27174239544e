#include "cesim/placement.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cesim {

std::string to_string(PlacementStatus status) {
    switch (status) {
    case PlacementStatus::Pending: return "pending";
    case PlacementStatus::Fulfilled: return "fulfilled";
    case PlacementStatus::Reset: return "reset";
    }
    return "?";
}

ResidualState::ResidualState(const Infrastructure& infra) {
    for (const auto& [id, entry] : infra.nodes()) {
        node_residual_.emplace(id, entry.assets);
    }
    for (const auto& [key, bucket] : infra.links()) {
        link_residual_.emplace(key, bucket);
    }
}

const Bucket& ResidualState::node_residual(const NodeId& id) const {
    auto it = node_residual_.find(id);
    if (it == node_residual_.end()) {
        throw UnknownNode("no residual tracked for node '" + id + "'");
    }
    return it->second;
}

const Bucket& ResidualState::link_residual(const LinkKey& key) const {
    auto it = link_residual_.find(key);
    if (it == link_residual_.end()) {
        throw UnknownEndpoint("no residual tracked for link " + key.a + "--" + key.b);
    }
    return it->second;
}

LinkBucketFn ResidualState::link_fn() const {
    return [this](const LinkKey& key) -> const Bucket& { return link_residual(key); };
}

const std::map<std::pair<AppId, ServiceId>, Bucket>& ResidualState::hosted_on(const NodeId& id) const {
    static const std::map<std::pair<AppId, ServiceId>, Bucket> empty;
    auto it = node_hosted_.find(id);
    return it == node_hosted_.end() ? empty : it->second;
}

const std::vector<PathReservation>& ResidualState::reservations(const AppId& app) const {
    static const std::vector<PathReservation> empty;
    auto it = app_reservations_.find(app);
    return it == app_reservations_.end() ? empty : it->second;
}

const PathReservation* ResidualState::reservation(const AppId& app,
                                                  const ServiceId& src,
                                                  const ServiceId& dst) const {
    for (const PathReservation& r : reservations(app)) {
        if ((r.src == src && r.dst == dst) || (r.src == dst && r.dst == src)) {
            return &r;
        }
    }
    return nullptr;
}

void ResidualState::consume_service(const Infrastructure& infra,
                                    const AppId& app,
                                    const ServiceId& service,
                                    const NodeId& node,
                                    const Bucket& requirement) {
    if (!infra.has_node(node)) {
        throw UnknownNode("cannot host on unknown node '" + node + "'");
    }
    node_hosted_[node].insert_or_assign({app, service}, requirement);
    app_nodes_[app].emplace_back(node, service);
    recompute_node(infra, node);
}

void ResidualState::consume_interaction(const Infrastructure& infra,
                                        const AppId& app,
                                        const ServiceId& src,
                                        const ServiceId& dst,
                                        const Path& path,
                                        const Bucket& requirement) {
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        LinkKey key(path[i], path[i + 1]);
        link_reserved_[key].insert_or_assign({app, src, dst}, requirement);
        recompute_link(infra, key);
    }
    app_reservations_[app].push_back(PathReservation{src, dst, path, requirement});
}

void ResidualState::release_app(const Infrastructure& infra, const AppId& app) {
    auto nodes = app_nodes_.find(app);
    if (nodes != app_nodes_.end()) {
        for (const auto& [node, service] : nodes->second) {
            auto hosted = node_hosted_.find(node);
            if (hosted != node_hosted_.end()) {
                hosted->second.erase({app, service});
            }
            recompute_node(infra, node);
        }
        app_nodes_.erase(nodes);
    }
    auto reservations = app_reservations_.find(app);
    if (reservations != app_reservations_.end()) {
        for (const PathReservation& r : reservations->second) {
            for (std::size_t i = 0; i + 1 < r.path.size(); ++i) {
                LinkKey key(r.path[i], r.path[i + 1]);
                auto reserved = link_reserved_.find(key);
                if (reserved != link_reserved_.end()) {
                    reserved->second.erase({app, r.src, r.dst});
                }
                recompute_link(infra, key);
            }
        }
        app_reservations_.erase(reservations);
    }
}

void ResidualState::recompute_node(const Infrastructure& infra, const NodeId& id) {
    const Bucket& capacity = infra.node(id).assets;
    Bucket residual = capacity;
    const auto& hosted = hosted_on(id);
    for (const auto& [name, value] : capacity) {
        const AssetSpec& spec = capacity.specs()->at(name);
        if (!spec.consumable()) {
            continue;
        }
        double allocated = 0.0;
        for (const auto& [key, req] : hosted) {
            (void)key;
            auto r = req.get(name);
            if (r) {
                allocated += scalar(*r);
            }
        }
        residual.set(name, std::max(0.0, scalar(value) - allocated));
    }
    node_residual_.insert_or_assign(id, std::move(residual));
}

void ResidualState::recompute_link(const Infrastructure& infra, const LinkKey& key) {
    const Bucket& capacity = infra.link(key.a, key.b);
    Bucket residual = capacity;
    auto reserved = link_reserved_.find(key);
    for (const auto& [name, value] : capacity) {
        const AssetSpec& spec = capacity.specs()->at(name);
        if (!spec.consumable()) {
            continue;
        }
        double allocated = 0.0;
        if (reserved != link_reserved_.end()) {
            for (const auto& [rkey, req] : reserved->second) {
                (void)rkey;
                auto r = req.get(name);
                if (r) {
                    allocated += scalar(*r);
                }
            }
        }
        residual.set(name, std::max(0.0, scalar(value) - allocated));
    }
    link_residual_.insert_or_assign(key, std::move(residual));
}

std::vector<std::string> ResidualState::conservation_violations(const Infrastructure& infra) const {
    std::vector<std::string> out;
    for (const auto& [id, entry] : infra.nodes()) {
        const Bucket& residual = node_residual(id);
        for (const auto& [name, value] : entry.assets) {
            const AssetSpec& spec = entry.assets.specs()->at(name);
            if (!spec.consumable()) {
                continue;
            }
            double allocated = 0.0;
            for (const auto& [key, req] : hosted_on(id)) {
                (void)key;
                auto r = req.get(name);
                if (r) {
                    allocated += scalar(*r);
                }
            }
            double rv = scalar(residual.effective(name));
            if (std::abs(scalar(value) - (rv + allocated)) > kTolerance) {
                std::ostringstream msg;
                msg << "node " << id << " asset " << name << ": capacity " << scalar(value)
                    << " != residual " << rv << " + allocated " << allocated;
                out.push_back(msg.str());
            }
        }
    }
    for (const auto& [key, bucket] : infra.links()) {
        const Bucket& residual = link_residual(key);
        auto reserved = link_reserved_.find(key);
        for (const auto& [name, value] : bucket) {
            const AssetSpec& spec = bucket.specs()->at(name);
            if (!spec.consumable()) {
                continue;
            }
            double allocated = 0.0;
            if (reserved != link_reserved_.end()) {
                for (const auto& [rkey, req] : reserved->second) {
                    (void)rkey;
                    auto r = req.get(name);
                    if (r) {
                        allocated += scalar(*r);
                    }
                }
            }
            double rv = scalar(residual.effective(name));
            if (std::abs(scalar(value) - (rv + allocated)) > kTolerance) {
                std::ostringstream msg;
                msg << "link " << key.a << "--" << key.b << " asset " << name << ": capacity "
                    << scalar(value) << " != residual " << rv << " + allocated " << allocated;
                out.push_back(msg.str());
            }
        }
    }
    return out;
}

namespace {

/// Group the app's service requirements by target node.
std::map<NodeId, Bucket> node_aggregates(const ServiceMapping& mapping, const Application& app) {
    std::map<NodeId, Bucket> per_node;
    for (const auto& [service, node] : mapping) {
        const Bucket& req = app.service(service);
        auto it = per_node.find(node);
        if (it == per_node.end()) {
            per_node.emplace(node, req);
        } else {
            it->second = bucket_aggregate(it->second, req);
        }
    }
    return per_node;
}

} // namespace

bool is_valid(const ServiceMapping& mapping,
              const Application& app,
              const Infrastructure& infra,
              const ResidualState& residual) {
    for (const ServiceId& service : app.service_order()) {
        if (mapping.count(service) == 0) {
            return false; // partial placements are never valid
        }
    }
    for (const auto& [service, node] : mapping) {
        if (!infra.has_node(node)) {
            throw UnknownNode("placement of '" + service + "' references unknown node '" + node + "'");
        }
    }
    for (const auto& [node, aggregate] : node_aggregates(mapping, app)) {
        if (!infra.node(node).active) {
            return false;
        }
        if (!bucket_satisfies(aggregate, residual.node_residual(node))) {
            return false;
        }
    }
    for (const auto& [endpoints, requirement] : app.interactions()) {
        const NodeId& n1 = mapping.at(endpoints.first);
        const NodeId& n2 = mapping.at(endpoints.second);
        if (n1 == n2) {
            continue;
        }
        if (!find_path(infra, n1, n2, requirement, residual.link_fn())) {
            return false;
        }
    }
    return true;
}

namespace {

/// Validate and reserve one placement transactionally. Returns true and
/// leaves the reservations in place on success; rolls back on failure.
bool reserve(const Placement& placement,
             const Application& app,
             const Infrastructure& infra,
             ResidualState& residual) {
    const ServiceMapping& mapping = placement.mapping;
    for (const ServiceId& service : app.service_order()) {
        if (mapping.count(service) == 0) {
            return false;
        }
    }
    for (const auto& [service, node] : mapping) {
        (void)service;
        if (!infra.has_node(node) || !infra.node(node).active) {
            return false;
        }
    }
    for (const auto& [node, aggregate] : node_aggregates(mapping, app)) {
        if (!bucket_satisfies(aggregate, residual.node_residual(node))) {
            return false;
        }
    }
    bool ok = true;
    for (const auto& [endpoints, requirement] : app.interactions()) {
        const NodeId& n1 = mapping.at(endpoints.first);
        const NodeId& n2 = mapping.at(endpoints.second);
        if (n1 == n2) {
            continue;
        }
        auto path = find_path(infra, n1, n2, requirement, residual.link_fn());
        if (!path) {
            ok = false;
            break;
        }
        residual.consume_interaction(infra, placement.app_id, endpoints.first, endpoints.second,
                                     *path, requirement);
    }
    if (!ok) {
        residual.release_app(infra, placement.app_id);
        return false;
    }
    for (const auto& [service, node] : mapping) {
        residual.consume_service(infra, placement.app_id, service, node, app.service(service));
    }
    return true;
}

} // namespace

FulfilOutcome fulfil(std::map<AppId, Placement>& placements,
                     const std::map<AppId, Application>& apps,
                     const Infrastructure& infra,
                     ResidualState& residual) {
    FulfilOutcome outcome;
    for (auto& [app_id, placement] : placements) {
        if (placement.status == PlacementStatus::Fulfilled) {
            residual.release_app(infra, app_id);
        }
        auto app_it = apps.find(app_id);
        if (app_it == apps.end() || placement.mapping.empty()) {
            placement.status = PlacementStatus::Reset;
            outcome.reset.push_back(app_id);
            continue;
        }
        if (reserve(placement, app_it->second, infra, residual)) {
            placement.status = PlacementStatus::Fulfilled;
            outcome.fulfilled.push_back(app_id);
        } else {
            placement.status = PlacementStatus::Reset;
            outcome.reset.push_back(app_id);
        }
    }
    return outcome;
}

namespace {

/// Feasibility of adding `extra` requirements to what the app already put
/// on this node during the same lookup.
bool node_feasible(const Infrastructure& infra,
                   const ResidualState& residual,
                   const NodeId& node,
                   const Bucket& aggregate) {
    if (!infra.node(node).active) {
        return false;
    }
    return bucket_satisfies(aggregate, residual.node_residual(node));
}

std::map<std::string, double> additive_requirements(const Bucket& req) {
    std::map<std::string, double> out;
    for (const auto& [name, value] : req) {
        if (req.specs()->at(name).kind() == AssetKind::Additive) {
            out.emplace(name, scalar(value));
        }
    }
    return out;
}

} // namespace

std::optional<ServiceMapping> FirstFitStrategy::place(const Application& app,
                                                      const Infrastructure& infra,
                                                      const ResidualState& residual) const {
    ServiceMapping mapping;
    std::map<NodeId, Bucket> tentative;
    for (const ServiceId& service : app.service_order()) {
        const Bucket& req = app.service(service);
        bool placed = false;
        for (const auto& [node, entry] : infra.nodes()) {
            (void)entry;
            auto t = tentative.find(node);
            Bucket aggregate = t == tentative.end() ? req : bucket_aggregate(t->second, req);
            if (node_feasible(infra, residual, node, aggregate)) {
                mapping[service] = node;
                tentative.insert_or_assign(node, std::move(aggregate));
                placed = true;
                break;
            }
        }
        if (!placed) {
            return std::nullopt;
        }
    }
    return mapping;
}

std::optional<ServiceMapping> BestFitStrategy::place(const Application& app,
                                                     const Infrastructure& infra,
                                                     const ResidualState& residual) const {
    ServiceMapping mapping;
    std::map<NodeId, Bucket> tentative;
    for (const ServiceId& service : app.service_order()) {
        const Bucket& req = app.service(service);
        std::optional<NodeId> best;
        double best_score = 0.0;
        for (const auto& [node, entry] : infra.nodes()) {
            auto t = tentative.find(node);
            Bucket aggregate = t == tentative.end() ? req : bucket_aggregate(t->second, req);
            if (!node_feasible(infra, residual, node, aggregate)) {
                continue;
            }
            // Mean normalized free capacity after placing here; the
            // tightest fit wins.
            double sum = 0.0;
            std::size_t count = 0;
            const Bucket& res = residual.node_residual(node);
            for (const auto& [name, cap_value] : entry.assets) {
                if (entry.assets.specs()->at(name).kind() != AssetKind::Additive) {
                    continue;
                }
                double capacity = scalar(cap_value);
                if (capacity <= 0.0) {
                    continue;
                }
                double after = scalar(res.effective(name));
                auto used = aggregate.get(name);
                if (used) {
                    after -= scalar(*used);
                }
                sum += after / capacity;
                ++count;
            }
            double score = count > 0 ? sum / static_cast<double>(count) : 0.0;
            if (!best || score < best_score - kTolerance) {
                best = node;
                best_score = score;
            }
        }
        if (!best) {
            return std::nullopt;
        }
        auto t = tentative.find(*best);
        tentative.insert_or_assign(*best, t == tentative.end() ? req : bucket_aggregate(t->second, req));
        mapping[service] = *best;
    }
    return mapping;
}

MinEnergyStrategy::MinEnergyStrategy(std::map<std::string, double> weights)
    : weights_(std::move(weights)) {}

std::optional<ServiceMapping> MinEnergyStrategy::place(const Application& app,
                                                       const Infrastructure& infra,
                                                       const ResidualState& residual) const {
    ServiceMapping mapping;
    std::map<NodeId, Bucket> tentative;
    for (const ServiceId& service : app.service_order()) {
        const Bucket& req = app.service(service);
        auto additive = additive_requirements(req);
        std::optional<NodeId> best;
        double best_delta = 0.0;
        for (const auto& [node, entry] : infra.nodes()) {
            auto t = tentative.find(node);
            Bucket aggregate = t == tentative.end() ? req : bucket_aggregate(t->second, req);
            if (!node_feasible(infra, residual, node, aggregate)) {
                continue;
            }
            double delta = 0.0;
            for (const auto& [name, amount] : additive) {
                auto cap = entry.assets.get(name);
                double capacity = cap ? scalar(*cap) : 0.0;
                if (capacity <= 0.0) {
                    continue;
                }
                auto w = weights_.find(name);
                delta += (w != weights_.end() ? w->second : 1.0) * amount / capacity;
            }
            if (!best || delta < best_delta - kTolerance) {
                best = node;
                best_delta = delta;
            }
        }
        if (!best) {
            return std::nullopt;
        }
        auto t = tentative.find(*best);
        tentative.insert_or_assign(*best, t == tentative.end() ? req : bucket_aggregate(t->second, req));
        mapping[service] = *best;
    }
    return mapping;
}

std::optional<ServiceMapping> StaticStrategy::place(const Application& app,
                                                    const Infrastructure& infra,
                                                    const ResidualState& residual) const {
    (void)app;
    (void)infra;
    (void)residual;
    return mapping_;
}

} // namespace cesim
