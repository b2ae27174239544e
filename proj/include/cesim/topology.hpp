#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "cesim/graph.hpp"

namespace cesim {

/// Default capability sets: cpu, ram, storage, gpu (additive), availability
/// (multiplicative) and processing_time (concave) on nodes; latency
/// (concave) and bandwidth on links. Bandwidth is additive on a link and
/// convex over a path.
SpecSetPtr default_node_specs();
SpecSetPtr default_link_specs();
SpecSetPtr default_path_specs();

enum class TopologyKind { Hierarchical, Star, Random };

std::string to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& name);

struct TopologyParams {
    // hierarchical
    int tiers = 3;
    int fanout = 3;
    int extra_parents = 1;
    double tier_scale = 8.0;

    // star
    double hub_multiplier = 4.0;

    // random
    double edge_prob = 0.1;

    /// Fraction of every additive node capacity already in use at build time.
    double initial_load = 0.0;

    /// How strongly a node's assets correlate in size: 1 = one size factor
    /// drives every asset, 0 = independent draws per asset.
    double size_correlation = 0.5;

    /// Base draw ranges for the smallest tier; additive assets scale up by
    /// tier_scale per tier.
    std::map<std::string, std::pair<double, double>> node_ranges = {
        {"cpu", {4, 8}},
        {"ram", {4096, 8192}},
        {"storage", {32768, 65536}},
        {"gpu", {0, 2}},
        {"availability", {0.95, 0.999}},
        {"processing_time", {2, 10}},
    };
    std::map<std::string, std::pair<double, double>> link_ranges = {
        {"latency", {2, 20}},
        {"bandwidth", {200, 1000}},
    };
};

/// Deterministic topology generation: identical (kind, n, params, seed)
/// yields an identical infrastructure. The result is always connected.
Infrastructure build_topology(TopologyKind kind,
                              std::size_t n,
                              const TopologyParams& params,
                              std::uint64_t seed);

Infrastructure build_topology(TopologyKind kind,
                              std::size_t n,
                              const TopologyParams& params,
                              std::uint64_t seed,
                              SpecSetPtr node_specs,
                              SpecSetPtr link_specs,
                              SpecSetPtr path_specs);

} // namespace cesim
