#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cesim/environment.hpp"
#include "cesim/topology.hpp"

namespace cesim::test {

inline SpecSetPtr node_specs_cpu_ram() {
    return std::make_shared<SpecSet>(std::vector<AssetSpec>{
        AssetSpec("cpu", AssetKind::Additive, 0.0, 1e6, "cores"),
        AssetSpec("ram", AssetKind::Additive, 0.0, 1e9, "MB"),
    });
}

inline SpecSetPtr link_specs_lat_bw() {
    return std::make_shared<SpecSet>(std::vector<AssetSpec>{
        AssetSpec("latency", AssetKind::Concave, 0.0, 1e9, "ms"),
        AssetSpec("bandwidth", AssetKind::Additive, 0.0, 1e9, "Mb/s"),
    });
}

inline SpecSetPtr path_specs_lat_bw() {
    return std::make_shared<SpecSet>(std::vector<AssetSpec>{
        AssetSpec("latency", AssetKind::Concave, 0.0, 1e9, "ms"),
        AssetSpec("bandwidth", AssetKind::Convex, 1e9, 0.0, "Mb/s"),
    });
}

inline Bucket node_bucket(const SpecSetPtr& specs, double cpu, double ram) {
    Bucket b(specs);
    b.set("cpu", cpu);
    b.set("ram", ram);
    return b;
}

inline Bucket link_bucket(const SpecSetPtr& specs, double latency, double bandwidth) {
    Bucket b(specs);
    b.set("latency", latency);
    b.set("bandwidth", bandwidth);
    return b;
}

/// All simple paths between two nodes over active nodes/links, by DFS.
inline std::vector<Path> all_simple_paths(const Infrastructure& infra, const NodeId& src, const NodeId& dst) {
    std::vector<Path> out;
    if (!infra.has_node(src) || !infra.node(src).active) {
        return out;
    }
    Path current{src};
    std::set<NodeId> used{src};
    std::function<void(const NodeId&)> dfs = [&](const NodeId& at) {
        if (at == dst) {
            out.push_back(current);
            return;
        }
        for (const NodeId& next : infra.neighbors(at)) {
            if (used.count(next) || !infra.node(next).active) {
                continue;
            }
            used.insert(next);
            current.push_back(next);
            dfs(next);
            current.pop_back();
            used.erase(next);
        }
    };
    dfs(src);
    return out;
}

/// Independent satisfaction rule used by the oracles: plain per-kind
/// arithmetic, no library compare calls.
inline bool oracle_satisfies(const AssetSpec& spec, double req, double avail) {
    switch (spec.kind()) {
    case AssetKind::Additive:
    case AssetKind::Multiplicative:
        return req <= avail + 1e-9;
    case AssetKind::Concave:
        return avail <= req + 1e-9; // requirement is an upper tolerance
    case AssetKind::Convex:
        return avail + 1e-9 >= req; // requirement is a lower threshold
    case AssetKind::Symbolic:
        return false;
    }
    return false;
}

/// Oracle path feasibility: fold latency by max and bandwidth by min over
/// residual link values, then check the interaction requirement.
inline bool oracle_path_ok(const Infrastructure& infra,
                           const ResidualState& residual,
                           const Path& path,
                           const Bucket& req) {
    (void)infra;
    double lat = 0.0;
    double bw = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const Bucket& link = residual.link_residual(LinkKey(path[i], path[i + 1]));
        auto l = link.get("latency");
        if (l) {
            lat = std::max(lat, scalar(*l));
        }
        auto b = link.get("bandwidth");
        if (b) {
            bw = std::min(bw, scalar(*b));
        }
    }
    auto lat_req = req.get("latency");
    if (lat_req && lat > scalar(*lat_req) + 1e-9) {
        return false;
    }
    auto bw_req = req.get("bandwidth");
    if (bw_req && bw + 1e-9 < scalar(*bw_req)) {
        return false;
    }
    return true;
}

/// Brute-force placement validity: per-node additive sums compared against
/// residuals and exhaustive simple-path enumeration per interaction.
inline bool oracle_is_valid(const ServiceMapping& mapping,
                            const Application& app,
                            const Infrastructure& infra,
                            const ResidualState& residual) {
    for (const ServiceId& service : app.service_order()) {
        if (!mapping.count(service)) {
            return false;
        }
    }
    std::map<NodeId, std::map<std::string, double>> sums;
    for (const auto& [service, node] : mapping) {
        if (!infra.node(node).active) {
            return false;
        }
        for (const auto& [name, value] : app.service(service)) {
            const AssetSpec& spec = app.service(service).specs()->at(name);
            if (spec.kind() == AssetKind::Additive) {
                sums[node][name] += scalar(value);
            } else if (spec.kind() == AssetKind::Multiplicative) {
                auto it = sums[node].find(name);
                sums[node][name] = it == sums[node].end() ? scalar(value) : it->second * scalar(value);
            } else if (spec.kind() == AssetKind::Concave) {
                sums[node][name] = std::max(sums[node][name], scalar(value));
            }
        }
    }
    for (const auto& [node, assets] : sums) {
        const Bucket& res = residual.node_residual(node);
        for (const auto& [name, total] : assets) {
            const AssetSpec& spec = res.specs()->at(name);
            auto avail = res.get(name);
            if (!oracle_satisfies(spec, total, avail ? scalar(*avail) : scalar(spec.lower()))) {
                return false;
            }
        }
    }
    for (const auto& [endpoints, req] : app.interactions()) {
        const NodeId& n1 = mapping.at(endpoints.first);
        const NodeId& n2 = mapping.at(endpoints.second);
        if (n1 == n2) {
            continue;
        }
        bool found = false;
        for (const Path& path : all_simple_paths(infra, n1, n2)) {
            if (oracle_path_ok(infra, residual, path, req)) {
                found = true;
                break;
            }
        }
        if (!found) {
            return false;
        }
    }
    return true;
}

/// Enumerate every total assignment of the app's services to nodes and
/// report whether any is oracle-valid.
inline std::vector<ServiceMapping> all_assignments(const Application& app, const Infrastructure& infra) {
    std::vector<ServiceMapping> out;
    std::vector<NodeId> nodes;
    for (const auto& [id, entry] : infra.nodes()) {
        (void)entry;
        nodes.push_back(id);
    }
    const auto& services = app.service_order();
    std::vector<std::size_t> pick(services.size(), 0);
    for (;;) {
        ServiceMapping mapping;
        for (std::size_t i = 0; i < services.size(); ++i) {
            mapping[services[i]] = nodes[pick[i]];
        }
        out.push_back(std::move(mapping));
        std::size_t i = 0;
        while (i < pick.size() && ++pick[i] == nodes.size()) {
            pick[i] = 0;
            ++i;
        }
        if (i == pick.size()) {
            break;
        }
    }
    return out;
}

} // namespace cesim::test
