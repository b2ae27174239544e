#include "cesim/graph.hpp"

#include <algorithm>
#include <queue>

namespace cesim {

Infrastructure::Infrastructure(SpecSetPtr node_specs, SpecSetPtr link_specs, SpecSetPtr path_specs)
    : node_specs_(std::move(node_specs)),
      link_specs_(std::move(link_specs)),
      path_specs_(std::move(path_specs)) {
    if (!node_specs_ || !link_specs_ || !path_specs_) {
        throw InvalidParams("infrastructure needs node, link and path spec sets");
    }
    for (const auto& [name, spec] : *link_specs_) {
        (void)spec;
        if (!path_specs_->contains(name)) {
            throw SpecMismatch("path specs must cover link asset '" + name + "'");
        }
    }
}

void Infrastructure::add_node(const NodeId& id, Bucket assets) {
    if (nodes_.count(id)) {
        throw DuplicateId("node '" + id + "' already exists");
    }
    if (assets.specs() && assets.specs() != node_specs_ && !assets.specs()->compatible_with(*node_specs_)) {
        throw SpecMismatch("node bucket of '" + id + "' has a foreign spec set");
    }
    nodes_.emplace(id, NodeEntry{std::move(assets), true});
    adjacency_.emplace(id, std::vector<NodeId>{});
}

void Infrastructure::add_link(const NodeId& src, const NodeId& dst, Bucket assets) {
    if (src == dst) {
        throw InvalidParams("self-loop on node '" + src + "'");
    }
    if (!nodes_.count(src)) {
        throw UnknownEndpoint("link endpoint '" + src + "' does not exist");
    }
    if (!nodes_.count(dst)) {
        throw UnknownEndpoint("link endpoint '" + dst + "' does not exist");
    }
    LinkKey key(src, dst);
    if (links_.count(key)) {
        throw DuplicateId("link " + key.a + "--" + key.b + " already exists");
    }
    if (assets.specs() && assets.specs() != link_specs_ && !assets.specs()->compatible_with(*link_specs_)) {
        throw SpecMismatch("link bucket has a foreign spec set");
    }
    links_.emplace(std::move(key), std::move(assets));
    auto& na = adjacency_[src];
    na.insert(std::upper_bound(na.begin(), na.end(), dst), dst);
    auto& nb = adjacency_[dst];
    nb.insert(std::upper_bound(nb.begin(), nb.end(), src), src);
}

const NodeEntry& Infrastructure::node(const NodeId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw UnknownNode("node '" + id + "' does not exist");
    }
    return it->second;
}

NodeEntry& Infrastructure::node(const NodeId& id) {
    return const_cast<NodeEntry&>(static_cast<const Infrastructure*>(this)->node(id));
}

const Bucket& Infrastructure::link(const NodeId& a, const NodeId& b) const {
    auto it = links_.find(LinkKey(a, b));
    if (it == links_.end()) {
        throw UnknownEndpoint("link " + a + "--" + b + " does not exist");
    }
    return it->second;
}

Bucket& Infrastructure::link(const NodeId& a, const NodeId& b) {
    return const_cast<Bucket&>(static_cast<const Infrastructure*>(this)->link(a, b));
}

void Infrastructure::set_active(const NodeId& id, bool active) {
    node(id).active = active;
}

const std::vector<NodeId>& Infrastructure::neighbors(const NodeId& id) const {
    static const std::vector<NodeId> empty;
    auto it = adjacency_.find(id);
    return it == adjacency_.end() ? empty : it->second;
}

bool Infrastructure::connected() const {
    if (nodes_.empty()) {
        return true;
    }
    std::set<NodeId> seen;
    std::vector<NodeId> stack{nodes_.begin()->first};
    seen.insert(stack.back());
    while (!stack.empty()) {
        NodeId current = stack.back();
        stack.pop_back();
        for (const NodeId& next : neighbors(current)) {
            if (seen.insert(next).second) {
                stack.push_back(next);
            }
        }
    }
    return seen.size() == nodes_.size();
}

LinkBucketFn capacity_link_fn(const Infrastructure& infra) {
    return [&infra](const LinkKey& key) -> const Bucket& { return infra.link(key.a, key.b); };
}

Bucket path_bucket(const Infrastructure& infra, const Path& path) {
    return path_bucket(infra, path, capacity_link_fn(infra));
}

Bucket path_bucket(const Infrastructure& infra, const Path& path, const LinkBucketFn& link_fn) {
    for (const NodeId& id : path) {
        if (!infra.has_node(id) || !infra.node(id).active) {
            throw BrokenPath("path touches missing or inactive node '" + id + "'");
        }
    }
    Bucket out(infra.path_specs());
    if (path.size() < 2) {
        return out;
    }
    std::map<std::string, AssetValue> folded;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (!infra.has_link(path[i], path[i + 1])) {
            throw BrokenPath("missing link " + path[i] + "--" + path[i + 1]);
        }
        const Bucket& link = link_fn(LinkKey(path[i], path[i + 1]));
        for (const auto& [name, value] : link) {
            const AssetSpec& spec = infra.path_specs()->at(name);
            auto it = folded.find(name);
            if (it == folded.end()) {
                folded.emplace(name, value);
            } else {
                it->second = aggregate(spec, it->second, value);
            }
        }
    }
    for (auto& [name, value] : folded) {
        out.set(name, value);
    }
    return out;
}

double path_latency(const Infrastructure& infra, const Path& path, const LinkBucketFn& link_fn) {
    if (path.size() < 2) {
        return 0.0;
    }
    const AssetSpec* spec = infra.path_specs()->find("latency");
    if (spec == nullptr) {
        return static_cast<double>(path.size() - 1);
    }
    AssetValue acc = aggregation_identity(*spec);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const Bucket& link = link_fn(LinkKey(path[i], path[i + 1]));
        auto v = link.get("latency");
        if (v) {
            acc = aggregate(*spec, acc, *v);
        }
    }
    return scalar(acc);
}

namespace {

struct PathLabel {
    double cost = 0.0;
    Path path;

    bool better_than(const PathLabel& other) const {
        if (cost != other.cost) {
            return cost < other.cost;
        }
        return path < other.path;
    }
};

struct LabelQueueOrder {
    bool operator()(const PathLabel& a, const PathLabel& b) const {
        // std::priority_queue pops the max, so invert
        if (a.cost != b.cost) {
            return a.cost > b.cost;
        }
        return a.path > b.path;
    }
};

double link_latency(const Infrastructure& infra, const LinkBucketFn& link_fn, const NodeId& a, const NodeId& b) {
    const AssetSpec* spec = infra.path_specs()->find("latency");
    if (spec == nullptr) {
        return 1.0;
    }
    auto v = link_fn(LinkKey(a, b)).get("latency");
    return v ? scalar(*v) : scalar(aggregation_identity(*spec));
}

double fold_cost(const Infrastructure& infra, double acc, double link_lat) {
    const AssetSpec* spec = infra.path_specs()->find("latency");
    if (spec == nullptr) {
        return acc + link_lat; // hop count
    }
    return scalar(aggregate(*spec, AssetValue(acc), AssetValue(link_lat)));
}

double initial_cost(const Infrastructure& infra) {
    const AssetSpec* spec = infra.path_specs()->find("latency");
    return spec ? scalar(aggregation_identity(*spec)) : 0.0;
}

/// Latency-ordered search over active nodes with lexicographic tie-break,
/// honoring node/edge bans (used as the Yen spur search).
std::map<NodeId, PathLabel> dijkstra(const Infrastructure& infra,
                                     const NodeId& src,
                                     const LinkBucketFn& link_fn,
                                     const std::set<NodeId>& banned_nodes,
                                     const std::set<std::pair<NodeId, NodeId>>& banned_edges,
                                     const std::optional<NodeId>& stop_at) {
    std::map<NodeId, PathLabel> best;
    if (!infra.has_node(src) || !infra.node(src).active || banned_nodes.count(src)) {
        return best;
    }
    std::priority_queue<PathLabel, std::vector<PathLabel>, LabelQueueOrder> queue;
    queue.push(PathLabel{initial_cost(infra), {src}});
    best[src] = queue.top();
    while (!queue.empty()) {
        PathLabel label = queue.top();
        queue.pop();
        const NodeId& current = label.path.back();
        auto settled = best.find(current);
        if (settled != best.end() && settled->second.better_than(label)) {
            continue;
        }
        if (stop_at && current == *stop_at) {
            continue; // no need to expand past the target
        }
        for (const NodeId& next : infra.neighbors(current)) {
            if (banned_nodes.count(next) || !infra.node(next).active) {
                continue;
            }
            if (banned_edges.count({current, next}) || banned_edges.count({next, current})) {
                continue;
            }
            if (std::find(label.path.begin(), label.path.end(), next) != label.path.end()) {
                continue; // keep paths simple
            }
            PathLabel candidate;
            candidate.cost = fold_cost(infra, label.cost, link_latency(infra, link_fn, current, next));
            candidate.path = label.path;
            candidate.path.push_back(next);
            auto it = best.find(next);
            if (it == best.end() || candidate.better_than(it->second)) {
                best[next] = candidate;
                queue.push(std::move(candidate));
            }
        }
    }
    return best;
}

std::optional<PathLabel> shortest(const Infrastructure& infra,
                                  const NodeId& src,
                                  const NodeId& dst,
                                  const LinkBucketFn& link_fn,
                                  const std::set<NodeId>& banned_nodes = {},
                                  const std::set<std::pair<NodeId, NodeId>>& banned_edges = {}) {
    auto labels = dijkstra(infra, src, link_fn, banned_nodes, banned_edges, dst);
    auto it = labels.find(dst);
    if (it == labels.end()) {
        return std::nullopt;
    }
    return it->second;
}

} // namespace

std::optional<Path> find_path(const Infrastructure& infra,
                              const NodeId& src,
                              const NodeId& dst,
                              const Bucket& requirement) {
    return find_path(infra, src, dst, requirement, capacity_link_fn(infra));
}

std::optional<Path> find_path(const Infrastructure& infra,
                              const NodeId& src,
                              const NodeId& dst,
                              const Bucket& requirement,
                              const LinkBucketFn& link_fn,
                              const FindPathOptions& options) {
    if (!infra.has_node(src) || !infra.has_node(dst)) {
        return std::nullopt;
    }
    if (!infra.node(src).active || !infra.node(dst).active) {
        return std::nullopt;
    }
    if (src == dst) {
        return Path{src};
    }

    auto accepts = [&](const Path& path) {
        return bucket_satisfies(requirement, path_bucket(infra, path, link_fn));
    };

    auto first = shortest(infra, src, dst, link_fn);
    if (!first) {
        return std::nullopt;
    }
    if (accepts(first->path)) {
        return first->path;
    }

    // Yen-style enumeration of further candidates in latency order. The
    // candidate limit keeps large instances cheap; 0 means exhaustive.
    std::vector<PathLabel> accepted{*first};
    std::set<Path> seen{first->path};
    auto cmp = [](const PathLabel& a, const PathLabel& b) { return a.better_than(b); };
    std::set<PathLabel, decltype(cmp)> frontier(cmp);
    std::size_t examined = 1;

    while (options.max_candidates == 0 || examined < options.max_candidates) {
        const Path& base = accepted.back().path;
        for (std::size_t spur_index = 0; spur_index + 1 < base.size(); ++spur_index) {
            NodeId spur_node = base[spur_index];
            Path root(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(spur_index) + 1);

            std::set<std::pair<NodeId, NodeId>> banned_edges;
            for (const PathLabel& label : accepted) {
                if (label.path.size() > spur_index + 1 &&
                    std::equal(root.begin(), root.end(), label.path.begin())) {
                    banned_edges.insert({label.path[spur_index], label.path[spur_index + 1]});
                }
            }
            std::set<NodeId> banned_nodes(root.begin(), root.end());
            banned_nodes.erase(spur_node);

            auto spur = shortest(infra, spur_node, dst, link_fn, banned_nodes, banned_edges);
            if (!spur) {
                continue;
            }
            Path full = root;
            full.insert(full.end(), spur->path.begin() + 1, spur->path.end());
            if (!seen.insert(full).second) {
                continue;
            }
            double cost = initial_cost(infra);
            for (std::size_t i = 0; i + 1 < full.size(); ++i) {
                cost = fold_cost(infra, cost, link_latency(infra, link_fn, full[i], full[i + 1]));
            }
            frontier.insert(PathLabel{cost, std::move(full)});
        }
        if (frontier.empty()) {
            return std::nullopt;
        }
        PathLabel next = *frontier.begin();
        frontier.erase(frontier.begin());
        ++examined;
        if (accepts(next.path)) {
            return next.path;
        }
        accepted.push_back(std::move(next));
    }
    return std::nullopt;
}

std::map<NodeId, std::pair<double, Path>> shortest_paths_from(const Infrastructure& infra,
                                                              const NodeId& src,
                                                              const LinkBucketFn& link_fn) {
    std::map<NodeId, std::pair<double, Path>> out;
    for (auto& [id, label] : dijkstra(infra, src, link_fn, {}, {}, std::nullopt)) {
        out.emplace(id, std::make_pair(label.cost, std::move(label.path)));
    }
    return out;
}

Application::Application(std::string id, SpecSetPtr service_specs, SpecSetPtr interaction_specs)
    : id_(std::move(id)),
      service_specs_(std::move(service_specs)),
      interaction_specs_(std::move(interaction_specs)) {}

void Application::add_service(const ServiceId& id, Bucket requirements) {
    if (services_.count(id)) {
        throw DuplicateId("service '" + id + "' already exists in app '" + id_ + "'");
    }
    if (requirements.specs() && service_specs_ && requirements.specs() != service_specs_ &&
        !requirements.specs()->compatible_with(*service_specs_)) {
        throw SpecMismatch("service requirement bucket has a foreign spec set");
    }
    services_.emplace(id, std::move(requirements));
    service_order_.push_back(id);
}

void Application::add_interaction(const ServiceId& src, const ServiceId& dst, Bucket requirements) {
    if (!services_.count(src) || !services_.count(dst)) {
        throw UnknownEndpoint("interaction endpoints must be declared services");
    }
    interactions_.emplace(std::make_pair(src, dst), std::move(requirements));
}

void Application::add_flow(std::vector<ServiceId> flow) {
    for (std::size_t i = 0; i + 1 < flow.size(); ++i) {
        if (!interactions_.count({flow[i], flow[i + 1]}) && !interactions_.count({flow[i + 1], flow[i]})) {
            throw UnknownEndpoint("flow hop " + flow[i] + "->" + flow[i + 1] + " is not a declared interaction");
        }
    }
    flows_.push_back(std::move(flow));
}

bool Application::has_service(const ServiceId& id) const {
    return services_.count(id) > 0;
}

const Bucket& Application::service(const ServiceId& id) const {
    auto it = services_.find(id);
    if (it == services_.end()) {
        throw UnknownEndpoint("service '" + id + "' not declared in app '" + id_ + "'");
    }
    return it->second;
}

} // namespace cesim
