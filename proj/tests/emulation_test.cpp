#include <doctest.h>

#include "cesim/emulation.hpp"
#include "helpers.hpp"

using namespace cesim;

namespace {

/// Three nodes in a line: n0 --(lat 10, bw 100)-- n1 --(lat 5, bw 200)-- n2.
Environment line_env() {
    Infrastructure infra(test::node_specs_cpu_ram(), test::link_specs_lat_bw(),
                         test::path_specs_lat_bw());
    for (const char* id : {"n0", "n1", "n2"}) {
        infra.add_node(id, test::node_bucket(infra.node_specs(), 8, 8192));
    }
    infra.add_link("n0", "n1", test::link_bucket(infra.link_specs(), 10, 100));
    infra.add_link("n1", "n2", test::link_bucket(infra.link_specs(), 5, 200));
    Environment env = make_environment(std::move(infra));

    Application app("app", env.infra.node_specs(), env.infra.path_specs());
    Bucket req(env.infra.node_specs());
    req.set("cpu", 1.0);
    app.add_service("s1", req);
    app.add_service("s2", req);
    add_application(env, std::move(app), std::make_shared<StaticStrategy>(ServiceMapping{
        {"s1", "n0"}, {"s2", "n1"}}));
    env.run_lookup();
    env.run_fulfil();
    return env;
}

/// Records every hook invocation for lifecycle assertions.
class ProbeBehaviour final : public Behaviour {
public:
    explicit ProbeBehaviour(std::vector<std::string>& log, std::string name)
        : log_(log), name_(std::move(name)) {}

    void on_deploy(ActorContext&) override { log_.push_back(name_ + ":deploy"); }
    void on_undeploy(ActorContext&) override { log_.push_back(name_ + ":undeploy"); }
    void on_message(ActorContext& ctx, const Message& message) override {
        log_.push_back(name_ + ":msg:" + message.payload + "@" + format_time(ctx.now_ms()));
        if (message.kind == MessageKind::Request) {
            ctx.respond(message, 1000.0, "re:" + message.payload);
        }
    }

private:
    static std::string format_time(double ms) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", ms);
        return buf;
    }

    std::vector<std::string>& log_;
    std::string name_;
};

} // namespace

TEST_CASE("route_cost combines path latency and transmission time") {
    Environment env = line_env();
    // 1 Mb over a 100 Mb/s-residual path with 10ms latency: 10 + 10 = 20.
    // The fulfilled placement reserved no bandwidth (no interactions), so
    // the full 100 Mb/s is available.
    RouteCost cost = route_cost(env.infra, env.residual, "n0", "n1", 1e6);
    CHECK(cost.delay_ms == doctest::Approx(20.0));
    CHECK(cost.path == Path{"n0", "n1"});

    // co-located: zero cost
    RouteCost zero = route_cost(env.infra, env.residual, "n0", "n0", 1e6);
    CHECK(zero.delay_ms == doctest::Approx(0.0));

    // two-hop path: latency fold is the max, bandwidth fold the min
    RouteCost two_hop = route_cost(env.infra, env.residual, "n0", "n2", 1e6);
    CHECK(two_hop.delay_ms == doctest::Approx(10.0 + 10.0));

    env.infra.set_active("n1", false);
    CHECK_THROWS_AS(route_cost(env.infra, env.residual, "n0", "n2", 1e6), NoRoute);
}

TEST_CASE("deploy and undeploy drive the behaviour lifecycle exactly once") {
    Environment env = line_env();
    EmulationRuntime runtime(1, 1000.0);
    std::vector<std::string> log;
    runtime.register_behaviour("s1", [&log](const nlohmann::json&) {
        return std::make_unique<ProbeBehaviour>(log, "s1");
    });
    runtime.register_behaviour("s2", [&log](const nlohmann::json&) {
        return std::make_unique<ProbeBehaviour>(log, "s2");
    });

    runtime.sync_with_placements(env);
    CHECK(runtime.deployed("app"));
    CHECK(log == std::vector<std::string>{"s1:deploy", "s2:deploy"});

    CHECK_THROWS_AS(runtime.deploy("app", env.apps.at("app"), env.placements.at("app").mapping),
                    AlreadyDeployed);

    // reset mid-run: undeploy hooks fire before the actors stop
    env.placements.at("app").status = PlacementStatus::Reset;
    env.residual.release_app(env.infra, "app");
    runtime.sync_with_placements(env);
    CHECK_FALSE(runtime.deployed("app"));
    CHECK(log.back() == "s2:undeploy");
    CHECK_THROWS_AS(runtime.undeploy("app"), NotDeployed);
}

TEST_CASE("messages are delivered after the route delay in virtual time") {
    Environment env = line_env();
    EmulationRuntime runtime(1, 1000.0);
    std::vector<std::string> log;
    runtime.register_behaviour("s2", [&log](const nlohmann::json&) {
        return std::make_unique<ProbeBehaviour>(log, "s2");
    });

    class SenderOnce final : public Behaviour {
    public:
        void on_tick(ActorContext& ctx) override {
            if (ctx.tick() == 1) {
                ctx.send_oneway("s2", 1e6, "ping"); // 10ms lat + 10ms transmission
            }
        }
    };
    runtime.register_behaviour("s1", [](const nlohmann::json&) { return std::make_unique<SenderOnce>(); });

    runtime.sync_with_placements(env);
    runtime.run_window(env, 1);
    REQUIRE(log.size() == 2);
    CHECK(log[0] == "s2:deploy");
    // window starts at 0ms; delivery at exactly the route cost
    CHECK(log[1] == "s2:msg:ping@20.000");
    CHECK(runtime.total_sent() == 1);
    CHECK(runtime.total_delivered() == 1);
    CHECK(runtime.in_flight() == 0);
}

TEST_CASE("per-channel delivery preserves send order under stress") {
    Environment env = line_env();
    EmulationRuntime runtime(7, 1000.0);

    class Blaster final : public Behaviour {
    public:
        void on_tick(ActorContext& ctx) override {
            if (ctx.tick() != 1) {
                return;
            }
            for (int i = 0; i < 10000; ++i) {
                // alternate sizes so computed delays vary per message
                ctx.send_oneway("s2", i % 7 == 0 ? 2e5 : 1e3, std::to_string(i));
            }
        }
    };
    class Collector final : public Behaviour {
    public:
        explicit Collector(std::vector<long>& seen) : seen_(seen) {}
        void on_message(ActorContext&, const Message& message) override {
            seen_.push_back(std::stol(message.payload));
        }

    private:
        std::vector<long>& seen_;
    };

    std::vector<long> seen;
    runtime.register_behaviour("s1", [](const nlohmann::json&) { return std::make_unique<Blaster>(); });
    runtime.register_behaviour("s2", [&seen](const nlohmann::json&) {
        return std::make_unique<Collector>(seen);
    });
    runtime.sync_with_placements(env);
    for (long tick = 1; tick <= 40; ++tick) {
        runtime.run_window(env, tick);
    }
    REQUIRE(runtime.total_sent() == 10000);
    CHECK(runtime.total_delivered() + runtime.total_dropped() + runtime.in_flight() == 10000);
    REQUIRE(seen.size() == static_cast<std::size_t>(runtime.total_delivered()));
    for (std::size_t i = 0; i + 1 < seen.size(); ++i) {
        REQUIRE(seen[i] + 1 == seen[i + 1]); // FIFO per channel
    }
}

TEST_CASE("undeploy mid-flight drops pending messages and counts them") {
    Environment env = line_env();
    EmulationRuntime runtime(3, 1000.0);

    class SlowSender final : public Behaviour {
    public:
        void on_tick(ActorContext& ctx) override {
            if (ctx.tick() == 1) {
                // 2e8 bits over 100 Mb/s: 2000ms transmission, delivery in
                // the third window
                ctx.send_oneway("s2", 2e8, "big");
            }
        }
    };
    runtime.register_behaviour("s1", [](const nlohmann::json&) { return std::make_unique<SlowSender>(); });

    runtime.sync_with_placements(env);
    runtime.run_window(env, 1);
    CHECK(runtime.total_sent() == 1);
    CHECK(runtime.in_flight() == 1);

    // target gone before the delivery time
    env.placements.at("app").status = PlacementStatus::Reset;
    env.residual.release_app(env.infra, "app");
    runtime.sync_with_placements(env);
    runtime.run_window(env, 2);
    runtime.run_window(env, 3);
    CHECK(runtime.in_flight() == 0);
    CHECK(runtime.total_dropped() == 1);
    CHECK(runtime.total_delivered() == 0);
    CHECK(runtime.channels().at({"s1", "s2"}).dropped == 1);
}

TEST_CASE("request auto-correlates the response") {
    Environment env = line_env();
    EmulationRuntime runtime(5, 1000.0);

    struct Caller final : public Behaviour {
        std::vector<std::uint64_t>* responses = nullptr;
        std::uint64_t correlation = 0;
        explicit Caller(std::vector<std::uint64_t>* out) : responses(out) {}
        void on_tick(ActorContext& ctx) override {
            if (ctx.tick() == 1) {
                correlation = ctx.send_request("s2", 1e4, "q");
            }
        }
        void on_message(ActorContext&, const Message& message) override {
            if (message.kind == MessageKind::Response) {
                responses->push_back(message.correlation);
            }
        }
    };
    std::vector<std::uint64_t> responses;
    std::vector<std::string> log;
    std::uint64_t sent_correlation = 0;
    runtime.register_behaviour("s1", [&](const nlohmann::json&) {
        auto caller = std::make_unique<Caller>(&responses);
        return caller;
    });
    runtime.register_behaviour("s2", [&log](const nlohmann::json&) {
        return std::make_unique<ProbeBehaviour>(log, "s2");
    });
    runtime.sync_with_placements(env);
    runtime.run_window(env, 1);
    (void)sent_correlation;
    REQUIRE(responses.size() == 1);
    CHECK(responses[0] > 0);
}

TEST_CASE("remote metrics flush per tick and merge into records") {
    Environment env = line_env();
    EmulationRuntime runtime(5, 1000.0);

    class Counting final : public Behaviour {
    public:
        void on_tick(ActorContext& ctx) override {
            for (int i = 0; i < 7; ++i) {
                ctx.increment("image_count");
                ctx.observe("accuracy", 0.5 + 0.1 * i);
            }
        }
    };
    runtime.register_behaviour("s1", [](const nlohmann::json&) { return std::make_unique<Counting>(); });
    runtime.sync_with_placements(env);
    runtime.run_window(env, 1);

    std::vector<ReportRecord> records;
    runtime.flush_metrics(1, [&records](ReportRecord record) { records.push_back(std::move(record)); });
    REQUIRE(records.size() == 2);
    CHECK(records[0].callback == "remote_image_count");
    CHECK(records[0].value.get<double>() == doctest::Approx(7.0));
    CHECK(records[1].callback == "remote_accuracy");
    CHECK(records[1].value.get<double>() == doctest::Approx(0.8));

    // no traffic: nothing reported
    runtime.run_window(env, 2);
    records.clear();
    // the counting behaviour runs every tick; undeploy first
    env.placements.at("app").status = PlacementStatus::Reset;
    env.residual.release_app(env.infra, "app");
    runtime.sync_with_placements(env);
    runtime.run_window(env, 3);
    runtime.flush_metrics(3, [&records](ReportRecord record) { records.push_back(std::move(record)); });
    CHECK(records.empty());
}

TEST_CASE("predictor scenario behaviours interact as configured") {
    Environment env = line_env();
    EmulationRuntime runtime(11, 1000.0);
    runtime.register_behaviour("s1", "streamer",
                               {{"target", "s2"}, {"request_bits", 4e5}});
    runtime.register_behaviour("s2", "predictor",
                               {{"a0", 0.5}, {"a_inf", 0.95}, {"tau", 30.0}, {"sigma", 0.0},
                                {"response_bits", 1e4}});
    runtime.sync_with_placements(env);
    std::map<std::string, double> by_metric;
    for (long tick = 1; tick <= 3; ++tick) {
        runtime.run_window(env, tick);
        runtime.flush_metrics(tick, [&by_metric](ReportRecord record) {
            by_metric[record.callback] = record.value.get<double>();
        });
    }
    // version 0 predictor with zero noise reports exactly a0
    CHECK(by_metric.at("remote_accuracy") == doctest::Approx(0.5));
    // ping-pong throughput: rtt = (10 + 4) + (10 + 0.1) = 24.1ms -> ~41/s
    CHECK(by_metric.at("remote_image_count") > 30);
    CHECK(by_metric.at("remote_image_count") < 60);
}

TEST_CASE("declared interfaces reject mismatched message kinds") {
    Environment env = line_env();
    EmulationRuntime runtime(13, 1000.0);

    class Prober final : public Behaviour {
    public:
        explicit Prober(std::vector<std::string>& errors) : errors_(errors) {}
        void on_tick(ActorContext& ctx) override {
            if (ctx.tick() != 1) {
                return;
            }
            try {
                ctx.send_oneway("s2", 100.0);
            } catch (const InvalidParams& e) {
                errors_.emplace_back(e.what());
            }
            ctx.send_request("s2", 100.0);
        }

    private:
        std::vector<std::string>& errors_;
    };
    std::vector<std::string> errors;
    runtime.register_behaviour("s1", [&errors](const nlohmann::json&) {
        return std::make_unique<Prober>(errors);
    });
    runtime.set_interface("s1", "s2", CommKind::RequestResponse);
    runtime.sync_with_placements(env);
    runtime.run_window(env, 1);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].find("request/response only") != std::string::npos);

    EmulationRuntime mpi(13, 1000.0);
    std::vector<std::string> mpi_errors;
    class MpiProber final : public Behaviour {
    public:
        explicit MpiProber(std::vector<std::string>& errors) : errors_(errors) {}
        void on_tick(ActorContext& ctx) override {
            if (ctx.tick() != 1) {
                return;
            }
            try {
                ctx.send_request("s2", 100.0);
            } catch (const InvalidParams& e) {
                errors_.emplace_back(e.what());
            }
            ctx.send_oneway("s2", 100.0);
        }

    private:
        std::vector<std::string>& errors_;
    };
    mpi.register_behaviour("s1", [&mpi_errors](const nlohmann::json&) {
        return std::make_unique<MpiProber>(mpi_errors);
    });
    mpi.set_interface("s1", "s2", CommKind::MessagePassing);
    mpi.sync_with_placements(env);
    mpi.run_window(env, 1);
    REQUIRE(mpi_errors.size() == 1);
    CHECK(mpi_errors[0].find("message-passing only") != std::string::npos);
}
