#include <doctest.h>

#include "cesim/gml.hpp"
#include "cesim/graph.hpp"
#include "cesim/rng.hpp"
#include "helpers.hpp"

using namespace cesim;

namespace {

Infrastructure small_infra() {
    return Infrastructure(test::node_specs_cpu_ram(), test::link_specs_lat_bw(),
                          test::path_specs_lat_bw());
}

} // namespace

TEST_CASE("add_node and add_link enforce consistency") {
    Infrastructure infra = small_infra();
    infra.add_node("cloud1", test::node_bucket(infra.node_specs(), 128, 512000));
    infra.add_node("edge7", test::node_bucket(infra.node_specs(), 4, 4096));
    infra.add_link("cloud1", "edge7", test::link_bucket(infra.link_specs(), 12, 1000));

    CHECK(infra.has_link("edge7", "cloud1")); // undirected
    CHECK_THROWS_AS(infra.add_node("cloud1", Bucket(infra.node_specs())), DuplicateId);
    CHECK_THROWS_AS(infra.add_link("cloud1", "ghost", Bucket(infra.link_specs())), UnknownEndpoint);
    CHECK_THROWS_AS(infra.add_link("cloud1", "edge7", Bucket(infra.link_specs())), DuplicateId);
    CHECK_THROWS_AS(infra.add_link("cloud1", "cloud1", Bucket(infra.link_specs())), InvalidParams);
}

TEST_CASE("path_bucket folds by the path-level kind") {
    Infrastructure infra = small_infra();
    for (const char* id : {"a", "b", "c", "d"}) {
        infra.add_node(id, test::node_bucket(infra.node_specs(), 4, 4096));
    }
    infra.add_link("a", "b", test::link_bucket(infra.link_specs(), 10, 100));
    infra.add_link("b", "c", test::link_bucket(infra.link_specs(), 25, 40));
    infra.add_link("c", "d", test::link_bucket(infra.link_specs(), 5, 80));

    Bucket folded = path_bucket(infra, {"a", "b", "c", "d"});
    // bandwidth is additive on a link but convex over a path
    CHECK(scalar(*folded.get("bandwidth")) == doctest::Approx(40));
    CHECK(scalar(*folded.get("latency")) == doctest::Approx(25));

    Bucket single = path_bucket(infra, {"a", "b"});
    CHECK(single == infra.link("a", "b"));

    infra.set_active("b", false);
    CHECK_THROWS_AS(path_bucket(infra, {"a", "b", "c"}), BrokenPath);
}

TEST_CASE("find_path picks the latency-optimal satisfying route") {
    // Two routes from a to e: via b (lat 30) and via c,d (lat 70).
    Infrastructure infra = small_infra();
    for (const char* id : {"a", "b", "c", "d", "e"}) {
        infra.add_node(id, test::node_bucket(infra.node_specs(), 4, 4096));
    }
    infra.add_link("a", "b", test::link_bucket(infra.link_specs(), 30, 100));
    infra.add_link("b", "e", test::link_bucket(infra.link_specs(), 25, 100));
    infra.add_link("a", "c", test::link_bucket(infra.link_specs(), 70, 500));
    infra.add_link("c", "d", test::link_bucket(infra.link_specs(), 10, 500));
    infra.add_link("d", "e", test::link_bucket(infra.link_specs(), 10, 500));

    Bucket req(infra.path_specs());
    req.set("latency", 50.0);

    auto found = find_path(infra, "a", "e", req);
    REQUIRE(found.has_value());
    CHECK(*found == Path{"a", "b", "e"});

    // Oracle: enumerate every simple path and keep satisfying ones.
    std::vector<Path> satisfying;
    ResidualState residual(infra);
    for (const Path& path : test::all_simple_paths(infra, "a", "e")) {
        if (test::oracle_path_ok(infra, residual, path, req)) {
            satisfying.push_back(path);
        }
    }
    REQUIRE(satisfying.size() == 1);
    CHECK(satisfying.front() == *found);

    // Tight bandwidth forces the fallback onto the longer route.
    Bucket heavy(infra.path_specs());
    heavy.set("bandwidth", 200.0);
    auto fallback = find_path(infra, "a", "e", heavy);
    REQUIRE(fallback.has_value());
    CHECK(*fallback == Path{"a", "c", "d", "e"});

    // Unsatisfiable requirement.
    Bucket impossible(infra.path_specs());
    impossible.set("latency", 5.0);
    CHECK_FALSE(find_path(infra, "a", "e", impossible).has_value());

    // Empty requirement: shortest-latency path.
    Bucket empty(infra.path_specs());
    auto shortest = find_path(infra, "a", "e", empty);
    REQUIRE(shortest.has_value());
    CHECK(*shortest == Path{"a", "b", "e"});
}

TEST_CASE("find_path returns none without active routes") {
    Infrastructure infra = small_infra();
    infra.add_node("a", test::node_bucket(infra.node_specs(), 4, 4096));
    infra.add_node("b", test::node_bucket(infra.node_specs(), 4, 4096));
    Bucket req(infra.path_specs());
    CHECK_FALSE(find_path(infra, "a", "b", req).has_value());

    infra.add_link("a", "b", test::link_bucket(infra.link_specs(), 5, 100));
    infra.set_active("b", false);
    CHECK_FALSE(find_path(infra, "a", "b", req).has_value());
}

TEST_CASE("find_path result always satisfies the requirement") {
    RngStream rng(41, "findpath");
    for (int instance = 0; instance < 50; ++instance) {
        Infrastructure infra = small_infra();
        const int n = 4 + static_cast<int>(rng.next_below(3));
        std::vector<NodeId> ids;
        for (int i = 0; i < n; ++i) {
            NodeId id = "n" + std::to_string(i);
            infra.add_node(id, test::node_bucket(infra.node_specs(), 8, 8192));
            ids.push_back(id);
        }
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (rng.next_unit() < 0.6) {
                    infra.add_link(ids[i], ids[j],
                                   test::link_bucket(infra.link_specs(),
                                                     std::floor(rng.next_range(1, 50)),
                                                     std::floor(rng.next_range(10, 200))));
                }
            }
        }
        Bucket req(infra.path_specs());
        req.set("latency", std::floor(rng.next_range(5, 45)));
        req.set("bandwidth", std::floor(rng.next_range(10, 150)));
        auto found = find_path(infra, ids.front(), ids.back(), req);
        ResidualState residual(infra);
        bool oracle_any = false;
        for (const Path& path : test::all_simple_paths(infra, ids.front(), ids.back())) {
            if (test::oracle_path_ok(infra, residual, path, req)) {
                oracle_any = true;
                break;
            }
        }
        if (found) {
            CHECK(bucket_satisfies(req, path_bucket(infra, *found)));
            CHECK(oracle_any);
        } else {
            CHECK_FALSE(oracle_any);
        }
    }
}

TEST_CASE("path_bucket concatenation equals the fold of sub-path buckets") {
    Infrastructure infra = small_infra();
    for (const char* id : {"a", "b", "c", "d", "e"}) {
        infra.add_node(id, test::node_bucket(infra.node_specs(), 4, 4096));
    }
    infra.add_link("a", "b", test::link_bucket(infra.link_specs(), 10, 100));
    infra.add_link("b", "c", test::link_bucket(infra.link_specs(), 20, 50));
    infra.add_link("c", "d", test::link_bucket(infra.link_specs(), 15, 200));
    infra.add_link("d", "e", test::link_bucket(infra.link_specs(), 30, 80));

    Bucket whole = path_bucket(infra, {"a", "b", "c", "d", "e"});
    Bucket left = path_bucket(infra, {"a", "b", "c"});
    Bucket right = path_bucket(infra, {"c", "d", "e"});
    CHECK(whole == bucket_aggregate(left, right));
}

TEST_CASE("application declarations are validated") {
    auto specs = test::node_specs_cpu_ram();
    Application app("shop", specs, test::path_specs_lat_bw());
    Bucket req(specs);
    req.set("cpu", 2.0);
    app.add_service("front", req);
    app.add_service("db", req);
    CHECK_THROWS_AS(app.add_service("front", req), DuplicateId);

    Bucket ireq(test::path_specs_lat_bw());
    app.add_interaction("front", "db", ireq);
    CHECK_THROWS_AS(app.add_interaction("front", "ghost", ireq), UnknownEndpoint);

    app.add_flow({"front", "db"});
    CHECK_THROWS_AS(app.add_flow({"db", "front", "front"}), UnknownEndpoint);
    CHECK(app.flows().size() == 1);
}

TEST_CASE("gml round-trips ids, attributes and activity") {
    Infrastructure infra = small_infra();
    infra.add_node("alpha", test::node_bucket(infra.node_specs(), 16, 32768));
    infra.add_node("beta", test::node_bucket(infra.node_specs(), 2, 2048));
    infra.add_node("gamma", test::node_bucket(infra.node_specs(), 8, 8192));
    infra.add_link("alpha", "beta", test::link_bucket(infra.link_specs(), 12.5, 250));
    infra.add_link("beta", "gamma", test::link_bucket(infra.link_specs(), 3.25, 1000));
    infra.set_active("beta", false);

    std::string text = to_gml(infra);
    Infrastructure back = infrastructure_from_gml(text, infra.node_specs(), infra.link_specs(),
                                                  infra.path_specs());
    REQUIRE(back.node_count() == 3);
    REQUIRE(back.link_count() == 2);
    CHECK_FALSE(back.node("beta").active);
    CHECK(back.node("alpha").assets == infra.node("alpha").assets);
    CHECK(back.link("beta", "gamma") == infra.link("beta", "gamma"));
    CHECK(to_gml(back) == text);
}

TEST_CASE("application gml round-trips services, interactions and flows") {
    auto specs = test::node_specs_cpu_ram();
    auto ispecs = test::path_specs_lat_bw();
    Application app("shop", specs, ispecs);
    Bucket req(specs);
    req.set("cpu", 2.0);
    req.set("ram", 1024.0);
    app.add_service("front", req);
    app.add_service("db", req);
    app.add_service("cache", req);
    Bucket ireq(ispecs);
    ireq.set("latency", 40.0);
    ireq.set("bandwidth", 25.0);
    app.add_interaction("front", "db", ireq);
    app.add_interaction("front", "cache", ireq);
    app.add_flow({"front", "db"});
    app.add_flow({"front", "cache"});

    std::string text = application_to_gml(app);
    Application back = application_from_gml(text, "shop", specs, ispecs);
    CHECK(back.service_order() == app.service_order());
    CHECK(back.interactions() == app.interactions());
    CHECK(back.flows() == app.flows());
    CHECK(back.service("db") == app.service("db"));
    CHECK(application_to_gml(back) == text);
}

TEST_CASE("gml parser rejects malformed documents") {
    auto specs = test::node_specs_cpu_ram();
    auto lspecs = test::link_specs_lat_bw();
    auto pspecs = test::path_specs_lat_bw();
    CHECK_THROWS_AS(infrastructure_from_gml("nodes [", specs, lspecs, pspecs), ParseError);
    CHECK_THROWS_AS(infrastructure_from_gml("graph [ node [ label \"x\" ] ]", specs, lspecs, pspecs),
                    ParseError); // node without id
    CHECK_THROWS_AS(infrastructure_from_gml("graph [ node [ id 0 label \"unterminated ]",
                                            specs, lspecs, pspecs),
                    ParseError);
}
