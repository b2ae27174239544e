#include "cesim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cesim/rng.hpp"

namespace cesim {

SpecSetPtr default_node_specs() {
    static const SpecSetPtr specs = std::make_shared<SpecSet>(std::vector<AssetSpec>{
        AssetSpec("cpu", AssetKind::Additive, 0.0, 1e9, "cores"),
        AssetSpec("ram", AssetKind::Additive, 0.0, 1e12, "MB"),
        AssetSpec("storage", AssetKind::Additive, 0.0, 1e12, "MB"),
        AssetSpec("gpu", AssetKind::Additive, 0.0, 1e9, "cores"),
        AssetSpec("availability", AssetKind::Multiplicative, 0.0, 1.0, "probability"),
        AssetSpec("processing_time", AssetKind::Concave, 0.0, 1e9, "ms"),
    });
    return specs;
}

SpecSetPtr default_link_specs() {
    static const SpecSetPtr specs = std::make_shared<SpecSet>(std::vector<AssetSpec>{
        AssetSpec("latency", AssetKind::Concave, 0.0, 1e9, "ms"),
        AssetSpec("bandwidth", AssetKind::Additive, 0.0, 1e9, "Mb/s"),
    });
    return specs;
}

SpecSetPtr default_path_specs() {
    static const SpecSetPtr specs = std::make_shared<SpecSet>(std::vector<AssetSpec>{
        AssetSpec("latency", AssetKind::Concave, 0.0, 1e9, "ms"),
        AssetSpec("bandwidth", AssetKind::Convex, 1e9, 0.0, "Mb/s"),
    });
    return specs;
}

std::string to_string(TopologyKind kind) {
    switch (kind) {
    case TopologyKind::Hierarchical: return "hierarchical";
    case TopologyKind::Star: return "star";
    case TopologyKind::Random: return "random";
    }
    return "?";
}

TopologyKind topology_kind_from_string(const std::string& name) {
    if (name == "hierarchical") return TopologyKind::Hierarchical;
    if (name == "star") return TopologyKind::Star;
    if (name == "random") return TopologyKind::Random;
    throw ParseError("unknown topology kind: " + name);
}

namespace {

std::string node_name(std::size_t index, std::size_t total) {
    const int width = total > 1000 ? 5 : 3;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "n%0*zu", width, index);
    return buf;
}

double round_to(double value, double step) {
    return std::round(value / step) * step;
}

/// Draw one node bucket. A per-node size factor pulls every asset in the
/// same direction (big machines are big across the board), blended with an
/// independent per-asset draw by size_correlation. Additive assets are
/// scaled by `scale` and rounded to whole units so residual arithmetic
/// stays exact.
Bucket draw_node_bucket(const SpecSetPtr& specs,
                        const TopologyParams& params,
                        double scale,
                        RngStream& rng) {
    Bucket bucket(specs);
    const double size_factor = rng.next_unit();
    for (const auto& [name, spec] : *specs) {
        auto range = params.node_ranges.find(name);
        if (range == params.node_ranges.end() || !spec.numeric()) {
            continue;
        }
        const double blend = params.size_correlation * size_factor +
                             (1.0 - params.size_correlation) * rng.next_unit();
        double value = range->second.first + (range->second.second - range->second.first) * blend;
        switch (spec.kind()) {
        case AssetKind::Additive:
            value = std::round(value * scale * (1.0 - params.initial_load));
            break;
        case AssetKind::Multiplicative:
            value = std::min(1.0, round_to(value, 0.001));
            break;
        default:
            value = round_to(value, 1.0);
            break;
        }
        bucket.set(name, value);
    }
    return bucket;
}

Bucket draw_link_bucket(const SpecSetPtr& specs, const TopologyParams& params, RngStream& rng) {
    Bucket bucket(specs);
    for (const auto& [name, spec] : *specs) {
        auto range = params.link_ranges.find(name);
        if (range == params.link_ranges.end() || !spec.numeric()) {
            continue;
        }
        double value = rng.next_range(range->second.first, range->second.second);
        bucket.set(name, spec.kind() == AssetKind::Additive ? std::round(value) : round_to(value, 0.1));
    }
    return bucket;
}

/// Tier index per node, 0 = top tier. Sizes follow fanout^i proportions,
/// every tier keeps at least one node and the last tier absorbs rounding.
std::vector<std::size_t> tier_sizes(std::size_t n, int tiers, int fanout) {
    std::vector<double> weights;
    double total = 0.0;
    for (int i = 0; i < tiers; ++i) {
        weights.push_back(std::pow(static_cast<double>(fanout), i));
        total += weights.back();
    }
    std::vector<std::size_t> sizes(static_cast<std::size_t>(tiers), 1);
    std::size_t assigned = static_cast<std::size_t>(tiers);
    if (assigned > n) {
        throw InvalidParams("node count too small for tier count");
    }
    for (int i = 0; i < tiers - 1; ++i) {
        std::size_t want = static_cast<std::size_t>(std::floor(weights[i] / total * static_cast<double>(n)));
        std::size_t extra = want > 1 ? want - 1 : 0;
        extra = std::min(extra, n - assigned);
        sizes[static_cast<std::size_t>(i)] += extra;
        assigned += extra;
    }
    sizes.back() += n - assigned;
    return sizes;
}

void ensure_connected(Infrastructure& infra, const TopologyParams& params, RngStream& rng) {
    // Union-find over node ids; join later components to the first by a
    // deterministic backbone link between their smallest members.
    std::map<NodeId, NodeId> parent;
    std::function<NodeId(const NodeId&)> find = [&](const NodeId& x) -> NodeId {
        NodeId root = x;
        while (parent.at(root) != root) {
            root = parent.at(root);
        }
        return root;
    };
    for (const auto& [id, entry] : infra.nodes()) {
        (void)entry;
        parent[id] = id;
    }
    for (const auto& [key, bucket] : infra.links()) {
        (void)bucket;
        parent[find(key.a)] = find(key.b);
    }
    std::map<NodeId, NodeId> component_head; // root -> smallest member
    for (const auto& [id, entry] : infra.nodes()) {
        (void)entry;
        NodeId root = find(id);
        auto it = component_head.find(root);
        if (it == component_head.end() || id < it->second) {
            component_head[root] = it == component_head.end() ? id : std::min(id, it->second);
        }
    }
    if (component_head.size() <= 1) {
        return;
    }
    std::vector<NodeId> heads;
    for (const auto& [root, head] : component_head) {
        (void)root;
        heads.push_back(head);
    }
    std::sort(heads.begin(), heads.end());
    for (std::size_t i = 1; i < heads.size(); ++i) {
        infra.add_link(heads[0], heads[i], draw_link_bucket(infra.link_specs(), params, rng));
        parent[find(heads[i])] = find(heads[0]);
    }
}

} // namespace

Infrastructure build_topology(TopologyKind kind,
                              std::size_t n,
                              const TopologyParams& params,
                              std::uint64_t seed) {
    return build_topology(kind, n, params, seed,
                          default_node_specs(), default_link_specs(), default_path_specs());
}

Infrastructure build_topology(TopologyKind kind,
                              std::size_t n,
                              const TopologyParams& params,
                              std::uint64_t seed,
                              SpecSetPtr node_specs,
                              SpecSetPtr link_specs,
                              SpecSetPtr path_specs) {
    if (n < 2) {
        throw InvalidParams("topology needs at least 2 nodes");
    }
    if (params.initial_load < 0.0 || params.initial_load >= 1.0) {
        throw InvalidParams("initial_load must be in [0, 1)");
    }
    Infrastructure infra(std::move(node_specs), std::move(link_specs), std::move(path_specs));
    RngStream rng(seed, "topology/" + to_string(kind));

    switch (kind) {
    case TopologyKind::Star: {
        if (params.hub_multiplier <= 0.0) {
            throw InvalidParams("hub_multiplier must be positive");
        }
        infra.add_node(node_name(0, n), draw_node_bucket(infra.node_specs(), params, params.hub_multiplier, rng));
        for (std::size_t i = 1; i < n; ++i) {
            infra.add_node(node_name(i, n), draw_node_bucket(infra.node_specs(), params, 1.0, rng));
        }
        for (std::size_t i = 1; i < n; ++i) {
            infra.add_link(node_name(0, n), node_name(i, n), draw_link_bucket(infra.link_specs(), params, rng));
        }
        break;
    }
    case TopologyKind::Hierarchical: {
        if (params.tiers < 2 || params.fanout < 1) {
            throw InvalidParams("hierarchical topology needs tiers >= 2 and fanout >= 1");
        }
        auto sizes = tier_sizes(n, params.tiers, params.fanout);
        std::vector<std::vector<std::size_t>> tier_members(sizes.size());
        std::size_t index = 0;
        for (std::size_t t = 0; t < sizes.size(); ++t) {
            for (std::size_t j = 0; j < sizes[t]; ++j) {
                double scale = std::pow(params.tier_scale, static_cast<double>(sizes.size() - 1 - t));
                infra.add_node(node_name(index, n), draw_node_bucket(infra.node_specs(), params, scale, rng));
                tier_members[t].push_back(index);
                ++index;
            }
        }
        // Inter-tier links only: every node attaches to one parent in the
        // tier above, plus extra parents for path diversity.
        for (std::size_t t = 1; t < sizes.size(); ++t) {
            const auto& parents = tier_members[t - 1];
            for (std::size_t j = 0; j < tier_members[t].size(); ++j) {
                std::size_t child = tier_members[t][j];
                std::size_t attach = std::min(static_cast<std::size_t>(params.extra_parents) + 1, parents.size());
                for (std::size_t k = 0; k < attach; ++k) {
                    std::size_t parent = parents[(j + k) % parents.size()];
                    if (!infra.has_link(node_name(parent, n), node_name(child, n))) {
                        infra.add_link(node_name(parent, n), node_name(child, n),
                                       draw_link_bucket(infra.link_specs(), params, rng));
                    }
                }
            }
        }
        ensure_connected(infra, params, rng);
        break;
    }
    case TopologyKind::Random: {
        if (params.edge_prob <= 0.0 || params.edge_prob > 1.0) {
            throw InvalidParams("edge_prob must be in (0, 1]");
        }
        for (std::size_t i = 0; i < n; ++i) {
            // Heterogeneous sizes: every node draws a tier class uniformly.
            std::size_t tier = rng.next_below(static_cast<std::uint64_t>(std::max(params.tiers, 1)));
            double scale = std::pow(params.tier_scale, static_cast<double>(tier));
            infra.add_node(node_name(i, n), draw_node_bucket(infra.node_specs(), params, scale, rng));
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (rng.next_unit() < params.edge_prob) {
                    infra.add_link(node_name(i, n), node_name(j, n),
                                   draw_link_bucket(infra.link_specs(), params, rng));
                }
            }
        }
        ensure_connected(infra, params, rng);
        break;
    }
    }
    return infra;
}

} // namespace cesim
