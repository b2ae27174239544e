#include <doctest.h>

#include "cesim/gml.hpp"
#include "cesim/topology.hpp"

using namespace cesim;

TEST_CASE("star topology: one hub, n-1 leaves") {
    TopologyParams params;
    Infrastructure infra = build_topology(TopologyKind::Star, 5, params, 1);
    CHECK(infra.node_count() == 5);
    CHECK(infra.link_count() == 4);
    CHECK(infra.neighbors("n000").size() == 4);
    // hub resources scale by the multiplier
    double hub_cpu = scalar(*infra.node("n000").assets.get("cpu"));
    double leaf_cpu = scalar(*infra.node("n001").assets.get("cpu"));
    CHECK(hub_cpu > leaf_cpu);
}

TEST_CASE("builders are pure functions of kind, n, params and seed") {
    TopologyParams params;
    for (TopologyKind kind : {TopologyKind::Hierarchical, TopologyKind::Star, TopologyKind::Random}) {
        Infrastructure a = build_topology(kind, 50, params, 7);
        Infrastructure b = build_topology(kind, 50, params, 7);
        CHECK(to_gml(a) == to_gml(b));
        Infrastructure c = build_topology(kind, 50, params, 8);
        CHECK(to_gml(a) != to_gml(c));
    }
}

TEST_CASE("random topology is connected even at low edge probability") {
    TopologyParams params;
    params.edge_prob = 0.02;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Infrastructure infra = build_topology(TopologyKind::Random, 50, params, seed);
        CHECK(infra.connected());
    }
}

TEST_CASE("hierarchical topology is connected and tier-scaled") {
    TopologyParams params;
    params.tiers = 3;
    Infrastructure infra = build_topology(TopologyKind::Hierarchical, 50, params, 7);
    CHECK(infra.node_count() == 50);
    CHECK(infra.connected());
    // top tier node is substantially larger than the last one
    double top_cpu = scalar(*infra.node("n000").assets.get("cpu"));
    double leaf_cpu = scalar(*infra.node("n049").assets.get("cpu"));
    CHECK(top_cpu >= leaf_cpu * 8);
}

TEST_CASE("builder parameter validation") {
    TopologyParams params;
    CHECK_THROWS_AS(build_topology(TopologyKind::Star, 1, params, 1), InvalidParams);
    params.edge_prob = 0.0;
    CHECK_THROWS_AS(build_topology(TopologyKind::Random, 10, params, 1), InvalidParams);
    params.edge_prob = 1.5;
    CHECK_THROWS_AS(build_topology(TopologyKind::Random, 10, params, 1), InvalidParams);
    TopologyParams loaded;
    loaded.initial_load = 1.0;
    CHECK_THROWS_AS(build_topology(TopologyKind::Star, 5, loaded, 1), InvalidParams);
}

TEST_CASE("initial load scales usable capacity down") {
    TopologyParams base;
    TopologyParams loaded = base;
    loaded.initial_load = 0.5;
    Infrastructure full = build_topology(TopologyKind::Star, 10, base, 3);
    Infrastructure half = build_topology(TopologyKind::Star, 10, loaded, 3);
    double full_cpu = 0.0;
    double half_cpu = 0.0;
    for (const auto& [id, entry] : full.nodes()) {
        (void)id;
        full_cpu += scalar(*entry.assets.get("cpu"));
    }
    for (const auto& [id, entry] : half.nodes()) {
        (void)id;
        half_cpu += scalar(*entry.assets.get("cpu"));
    }
    CHECK(half_cpu < full_cpu * 0.6);
    CHECK(half_cpu > full_cpu * 0.35);
}
