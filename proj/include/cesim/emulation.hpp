#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <queue>

#include <json.hpp>

#include "cesim/environment.hpp"
#include "cesim/metrics.hpp"
#include "cesim/rng.hpp"

namespace cesim {

/// Witness path and end-to-end delay for one message between two nodes.
/// delay = path latency + size / path bandwidth; zero between co-located
/// services.
struct RouteCost {
    Path path;
    double delay_ms = 0.0;
};

RouteCost route_cost(const Infrastructure& infra,
                     const ResidualState& residual,
                     const NodeId& n1,
                     const NodeId& n2,
                     double size_bits);

enum class MessageKind { Oneway, Request, Response };

/// Interface style between two services: request/response pairs with
/// correlation (REST-like) or one-way message passing (MPI-like). Only the
/// cost/ordering semantics are modeled.
enum class CommKind { RequestResponse, MessagePassing };

CommKind comm_kind_from_string(const std::string& name);

struct Message {
    std::uint64_t seq = 0;
    ServiceId src;
    ServiceId dst;
    MessageKind kind = MessageKind::Oneway;
    double size_bits = 0.0;
    std::uint64_t correlation = 0;
    std::string payload;
    double send_time_ms = 0.0;
    double delivery_time_ms = 0.0;
    long send_tick = 0;
};

struct ChannelStats {
    long sent = 0;
    long delivered = 0;
    long dropped = 0;
};

class EmulationRuntime;

/// Interface handed to behaviour hooks: messaging, metrics, rng and the
/// virtual clock. All interaction with simulation state goes through the
/// runtime's query surface; behaviours never touch the graphs directly.
class ActorContext {
public:
    const ServiceId& self() const { return self_; }
    const NodeId& host() const;
    long tick() const;
    double now_ms() const;
    double window_end_ms() const;

    void send_oneway(const ServiceId& dst, double size_bits, std::string payload = "");
    std::uint64_t send_request(const ServiceId& dst, double size_bits, std::string payload = "");
    void respond(const Message& request, double size_bits, std::string payload = "");

    /// Remote metrics, flushed to the reporter at window end.
    void increment(const std::string& metric, double amount = 1.0);
    void observe(const std::string& metric, double value);

    RngStream& rng();
    const nlohmann::json& params() const;

private:
    friend class EmulationRuntime;
    ActorContext(EmulationRuntime& runtime, ServiceId self) : runtime_(runtime), self_(std::move(self)) {}

    EmulationRuntime& runtime_;
    ServiceId self_;
};

/// User-provided service logic, driven by deploy/undeploy, per-tick and
/// per-message hooks.
class Behaviour {
public:
    virtual ~Behaviour() = default;
    virtual void on_deploy(ActorContext&) {}
    virtual void on_undeploy(ActorContext&) {}
    virtual void on_tick(ActorContext&) {}
    virtual void on_message(ActorContext&, const Message&) {}
    virtual void on_timeout(ActorContext&, std::uint64_t correlation) { (void)correlation; }
};

using BehaviourFactory = std::function<std::unique_ptr<Behaviour>(const nlohmann::json& params)>;

/// Named registry of built-in behaviours: echo, streamer, predictor,
/// trainer. Arbitrary behaviours register a factory here.
std::unique_ptr<Behaviour> make_behaviour(const std::string& type, const nlohmann::json& params);
bool is_known_behaviour(const std::string& type);

/// In-process actor runtime: services deployed onto their fulfilled hosts
/// exchange messages that pay route costs on a virtual clock. Actors run
/// deterministically on the scheduler thread in virtual-time order.
class EmulationRuntime {
public:
    EmulationRuntime(std::uint64_t seed, double tick_duration_ms, double timeout_multiplier = 10.0);

    void register_behaviour(const ServiceId& service, std::string type, nlohmann::json params);
    void register_behaviour(const ServiceId& service, BehaviourFactory factory, nlohmann::json params = {});

    /// Declare the interface style of a channel; unset channels accept any
    /// message kind. A request on a message-passing channel (or a one-way
    /// message on a request/response channel) is rejected at send time.
    void set_interface(const ServiceId& src, const ServiceId& dst, CommKind kind);

    void deploy(const AppId& app, const Application& application, const ServiceMapping& mapping);
    void undeploy(const AppId& app);
    bool deployed(const AppId& app) const;

    /// Align deployments with the current placements: deploy newly
    /// fulfilled apps, undeploy reset ones, redeploy moved ones.
    void sync_with_placements(const Environment& env);

    /// Execute one tick window [(tick-1), tick) * tick_duration of virtual
    /// time: per-actor on_tick hooks, then deliveries in time order.
    void run_window(const Environment& env, long tick);

    /// Flush remote metrics gathered during the window.
    void flush_metrics(long tick, const RecordEmitter& emit);

    const std::map<std::pair<ServiceId, ServiceId>, ChannelStats>& channels() const { return channels_; }
    long total_sent() const { return total_sent_; }
    long total_delivered() const { return total_delivered_; }
    long total_dropped() const { return total_dropped_; }
    long in_flight() const { return in_flight_; }

private:
    friend class ActorContext;

    enum class ActorState { Deployed, Stopped };

    struct Actor {
        AppId app;
        ServiceId service;
        NodeId host;
        ActorState state = ActorState::Deployed;
        std::unique_ptr<Behaviour> behaviour;
        std::deque<Message> inbox;
        RngStream rng;
        nlohmann::json params;
        std::map<std::string, double> counters;
        std::map<std::string, std::pair<double, long>> observations; // sum, count
    };

    struct EmuEvent {
        double time_ms = 0.0;
        std::uint64_t seq = 0;
        bool is_timeout = false;
        Message message;          // delivery payload
        std::uint64_t correlation = 0; // timeout payload
        ServiceId timeout_service;
    };

    struct EventOrder {
        bool operator()(const EmuEvent& a, const EmuEvent& b) const {
            if (a.time_ms != b.time_ms) {
                return a.time_ms > b.time_ms;
            }
            return a.seq > b.seq;
        }
    };

    Actor& actor(const ServiceId& id);
    const Actor* find_actor(const ServiceId& id) const;
    std::uint64_t enqueue_message(const ServiceId& src, const ServiceId& dst, MessageKind kind,
                                  double size_bits, std::string payload, std::uint64_t correlation);
    void deliver(const EmuEvent& event);
    void handle_timeout(const EmuEvent& event);

    std::uint64_t seed_;
    double tick_ms_;
    double timeout_multiplier_;
    double now_ms_ = 0.0;
    double window_end_ms_ = 0.0;
    long current_tick_ = 0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_correlation_ = 0;

    const Environment* env_ = nullptr;

    std::map<ServiceId, Actor> actors_;
    std::map<std::pair<ServiceId, ServiceId>, CommKind> interfaces_;
    std::map<std::string, std::pair<BehaviourFactory, nlohmann::json>> behaviour_bindings_;
    std::priority_queue<EmuEvent, std::vector<EmuEvent>, EventOrder> events_;
    std::map<std::pair<ServiceId, ServiceId>, double> channel_last_delivery_;
    std::map<std::pair<ServiceId, ServiceId>, ChannelStats> channels_;
    std::map<std::uint64_t, ServiceId> pending_requests_;
    long total_sent_ = 0;
    long total_delivered_ = 0;
    long total_dropped_ = 0;
    long in_flight_ = 0;
};

} // namespace cesim
