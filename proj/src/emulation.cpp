#include "cesim/emulation.hpp"

#include <algorithm>
#include <cmath>

namespace cesim {

RouteCost route_cost(const Infrastructure& infra,
                     const ResidualState& residual,
                     const NodeId& n1,
                     const NodeId& n2,
                     double size_bits) {
    if (!infra.has_node(n1) || !infra.node(n1).active || !infra.has_node(n2) || !infra.node(n2).active) {
        throw NoRoute("route endpoints must be active nodes");
    }
    if (n1 == n2) {
        return RouteCost{{n1}, 0.0};
    }
    Bucket empty(infra.path_specs());
    auto path = find_path(infra, n1, n2, empty, residual.link_fn());
    if (!path) {
        throw NoRoute("no route from '" + n1 + "' to '" + n2 + "'");
    }
    Bucket bucket = path_bucket(infra, *path, residual.link_fn());
    double delay = path_latency(infra, *path, residual.link_fn());
    auto bandwidth = bucket.get("bandwidth");
    if (bandwidth && scalar(*bandwidth) > 0.0) {
        // bandwidth is Mb/s; 1 Mb/s == 1000 bits per ms
        delay += size_bits / (scalar(*bandwidth) * 1000.0);
    }
    return RouteCost{std::move(*path), delay};
}

const NodeId& ActorContext::host() const {
    return runtime_.actor(self_).host;
}

long ActorContext::tick() const {
    return runtime_.current_tick_;
}

double ActorContext::now_ms() const {
    return runtime_.now_ms_;
}

double ActorContext::window_end_ms() const {
    return runtime_.window_end_ms_;
}

void ActorContext::send_oneway(const ServiceId& dst, double size_bits, std::string payload) {
    runtime_.enqueue_message(self_, dst, MessageKind::Oneway, size_bits, std::move(payload), 0);
}

std::uint64_t ActorContext::send_request(const ServiceId& dst, double size_bits, std::string payload) {
    return runtime_.enqueue_message(self_, dst, MessageKind::Request, size_bits, std::move(payload), 0);
}

void ActorContext::respond(const Message& request, double size_bits, std::string payload) {
    if (request.kind != MessageKind::Request) {
        throw DstUnavailable("respond() needs a request message");
    }
    runtime_.enqueue_message(self_, request.src, MessageKind::Response, size_bits, std::move(payload),
                             request.correlation);
}

void ActorContext::increment(const std::string& metric, double amount) {
    runtime_.actor(self_).counters[metric] += amount;
}

void ActorContext::observe(const std::string& metric, double value) {
    auto& slot = runtime_.actor(self_).observations[metric];
    slot.first += value;
    slot.second += 1;
}

RngStream& ActorContext::rng() {
    return runtime_.actor(self_).rng;
}

const nlohmann::json& ActorContext::params() const {
    return runtime_.actor(self_).params;
}

EmulationRuntime::EmulationRuntime(std::uint64_t seed, double tick_duration_ms, double timeout_multiplier)
    : seed_(seed), tick_ms_(tick_duration_ms), timeout_multiplier_(timeout_multiplier) {
    if (tick_ms_ <= 0.0) {
        throw InvalidParams("emulation tick duration must be positive");
    }
}

void EmulationRuntime::register_behaviour(const ServiceId& service, std::string type, nlohmann::json params) {
    register_behaviour(service,
                       [type](const nlohmann::json& p) { return make_behaviour(type, p); },
                       std::move(params));
}

void EmulationRuntime::register_behaviour(const ServiceId& service, BehaviourFactory factory,
                                          nlohmann::json params) {
    behaviour_bindings_[service] = {std::move(factory), std::move(params)};
}

CommKind comm_kind_from_string(const std::string& name) {
    if (name == "request_response") {
        return CommKind::RequestResponse;
    }
    if (name == "message_passing") {
        return CommKind::MessagePassing;
    }
    throw ParseError("unknown communication interface: " + name);
}

void EmulationRuntime::set_interface(const ServiceId& src, const ServiceId& dst, CommKind kind) {
    interfaces_[{src, dst}] = kind;
}

EmulationRuntime::Actor& EmulationRuntime::actor(const ServiceId& id) {
    auto it = actors_.find(id);
    if (it == actors_.end()) {
        throw NotDeployed("service '" + id + "' is not deployed");
    }
    return it->second;
}

const EmulationRuntime::Actor* EmulationRuntime::find_actor(const ServiceId& id) const {
    auto it = actors_.find(id);
    return it == actors_.end() ? nullptr : &it->second;
}

void EmulationRuntime::deploy(const AppId& app, const Application& application, const ServiceMapping& mapping) {
    if (deployed(app)) {
        throw AlreadyDeployed("app '" + app + "' is already deployed");
    }
    for (const ServiceId& service : application.service_order()) {
        auto host = mapping.find(service);
        if (host == mapping.end()) {
            throw NotDeployed("service '" + service + "' has no host in the placement");
        }
        Actor actor;
        actor.app = app;
        actor.service = service;
        actor.host = host->second;
        actor.rng = RngStream(seed_, "emu/actor/" + service);
        auto binding = behaviour_bindings_.find(service);
        if (binding != behaviour_bindings_.end()) {
            actor.behaviour = binding->second.first(binding->second.second);
            actor.params = binding->second.second;
        } else {
            actor.behaviour = std::make_unique<Behaviour>();
        }
        actors_.insert_or_assign(service, std::move(actor));
    }
    for (const ServiceId& service : application.service_order()) {
        ActorContext ctx(*this, service);
        actor(service).behaviour->on_deploy(ctx);
    }
}

void EmulationRuntime::undeploy(const AppId& app) {
    bool found = false;
    for (auto& [service, actor] : actors_) {
        if (actor.app != app || actor.state != ActorState::Deployed) {
            continue;
        }
        found = true;
        ActorContext ctx(*this, service);
        actor.behaviour->on_undeploy(ctx);
        actor.state = ActorState::Stopped;
        actor.inbox.clear();
    }
    if (!found) {
        throw NotDeployed("app '" + app + "' is not deployed");
    }
    for (auto it = actors_.begin(); it != actors_.end();) {
        if (it->second.app == app && it->second.state == ActorState::Stopped) {
            it = actors_.erase(it);
        } else {
            ++it;
        }
    }
}

bool EmulationRuntime::deployed(const AppId& app) const {
    for (const auto& [service, actor] : actors_) {
        (void)service;
        if (actor.app == app && actor.state == ActorState::Deployed) {
            return true;
        }
    }
    return false;
}

void EmulationRuntime::sync_with_placements(const Environment& env) {
    env_ = &env;
    for (const auto& [app_id, placement] : env.placements) {
        const bool is_deployed = deployed(app_id);
        const bool fulfilled = placement.status == PlacementStatus::Fulfilled;
        if (fulfilled && is_deployed) {
            // redeploy when the mapping moved
            bool moved = false;
            for (const auto& [service, actor] : actors_) {
                (void)service;
                if (actor.app != app_id) {
                    continue;
                }
                auto host = placement.mapping.find(actor.service);
                if (host == placement.mapping.end() || host->second != actor.host) {
                    moved = true;
                    break;
                }
            }
            if (moved) {
                undeploy(app_id);
                deploy(app_id, env.apps.at(app_id), placement.mapping);
            }
        } else if (fulfilled && !is_deployed) {
            deploy(app_id, env.apps.at(app_id), placement.mapping);
        } else if (!fulfilled && is_deployed) {
            undeploy(app_id);
        }
    }
}

std::uint64_t EmulationRuntime::enqueue_message(const ServiceId& src,
                                                const ServiceId& dst,
                                                MessageKind kind,
                                                double size_bits,
                                                std::string payload,
                                                std::uint64_t correlation) {
    if (env_ == nullptr) {
        throw NotDeployed("emulation runtime is not bound to an environment yet");
    }
    auto interface = interfaces_.find({src, dst});
    if (interface == interfaces_.end() && kind == MessageKind::Response) {
        interface = interfaces_.find({dst, src});
    }
    if (interface != interfaces_.end()) {
        if (interface->second == CommKind::MessagePassing && kind != MessageKind::Oneway) {
            throw InvalidParams("channel " + src + "->" + dst + " is message-passing only");
        }
        if (interface->second == CommKind::RequestResponse && kind == MessageKind::Oneway) {
            throw InvalidParams("channel " + src + "->" + dst + " is request/response only");
        }
    }
    const Actor& source = actor(src);
    const Actor* target = find_actor(dst);
    auto channel = std::make_pair(src, dst);
    ChannelStats& stats = channels_[channel];
    ++stats.sent;
    ++total_sent_;

    if (target == nullptr || target->state != ActorState::Deployed) {
        ++stats.dropped;
        ++total_dropped_;
        return 0;
    }

    Message message;
    message.seq = ++next_seq_;
    message.src = src;
    message.dst = dst;
    message.kind = kind;
    message.size_bits = std::max(size_bits, static_cast<double>(payload.size()) * 8.0);
    message.payload = std::move(payload);
    message.send_time_ms = now_ms_;
    message.send_tick = current_tick_;
    if (kind == MessageKind::Request) {
        message.correlation = ++next_correlation_;
        pending_requests_[message.correlation] = src;
    } else {
        message.correlation = correlation;
    }

    double delay = 0.0;
    try {
        delay = route_cost(env_->infra, env_->residual, source.host, target->host, message.size_bits).delay_ms;
    } catch (const NoRoute&) {
        ++stats.dropped;
        ++total_dropped_;
        if (message.kind == MessageKind::Request) {
            pending_requests_.erase(message.correlation);
        }
        return 0;
    }

    // Per-channel FIFO: a later message never overtakes an earlier one.
    double& last = channel_last_delivery_[channel];
    message.delivery_time_ms = std::max(now_ms_ + delay, last);
    last = message.delivery_time_ms;

    if (message.kind == MessageKind::Request) {
        EmuEvent timeout;
        timeout.is_timeout = true;
        timeout.correlation = message.correlation;
        timeout.timeout_service = src;
        double wait = timeout_multiplier_ * delay;
        timeout.time_ms = message.delivery_time_ms + (wait > 0.0 ? wait : tick_ms_);
        timeout.seq = ++next_seq_;
        events_.push(std::move(timeout));
    }

    std::uint64_t corr = message.correlation;
    EmuEvent event;
    event.time_ms = message.delivery_time_ms;
    event.seq = message.seq;
    event.message = std::move(message);
    events_.push(std::move(event));
    ++in_flight_;
    return corr;
}

void EmulationRuntime::deliver(const EmuEvent& event) {
    --in_flight_;
    const Message& message = event.message;
    auto channel = std::make_pair(message.src, message.dst);
    Actor* target = nullptr;
    auto it = actors_.find(message.dst);
    if (it != actors_.end() && it->second.state == ActorState::Deployed) {
        target = &it->second;
    }
    if (target == nullptr) {
        // undeployed mid-flight
        ++channels_[channel].dropped;
        ++total_dropped_;
        if (message.kind == MessageKind::Request) {
            pending_requests_.erase(message.correlation);
        }
        return;
    }
    if (message.kind == MessageKind::Response) {
        auto pending = pending_requests_.find(message.correlation);
        if (pending == pending_requests_.end()) {
            ++channels_[channel].dropped; // response after timeout
            ++total_dropped_;
            return;
        }
        pending_requests_.erase(pending);
    }
    ++channels_[channel].delivered;
    ++total_delivered_;
    target->inbox.push_back(message);
    ActorContext ctx(*this, message.dst);
    target->behaviour->on_message(ctx, target->inbox.back());
    if (!target->inbox.empty()) {
        target->inbox.pop_front();
    }
}

void EmulationRuntime::handle_timeout(const EmuEvent& event) {
    auto pending = pending_requests_.find(event.correlation);
    if (pending == pending_requests_.end()) {
        return; // answered in time
    }
    pending_requests_.erase(pending);
    auto it = actors_.find(event.timeout_service);
    if (it == actors_.end() || it->second.state != ActorState::Deployed) {
        return;
    }
    ActorContext ctx(*this, event.timeout_service);
    it->second.behaviour->on_timeout(ctx, event.correlation);
}

void EmulationRuntime::run_window(const Environment& env, long tick) {
    env_ = &env;
    current_tick_ = tick;
    const double window_start = static_cast<double>(tick - 1) * tick_ms_;
    window_end_ms_ = static_cast<double>(tick) * tick_ms_;
    now_ms_ = window_start;

    for (auto& [service, actor] : actors_) {
        if (actor.state != ActorState::Deployed) {
            continue;
        }
        ActorContext ctx(*this, service);
        actor.behaviour->on_tick(ctx);
    }
    while (!events_.empty() && events_.top().time_ms < window_end_ms_) {
        EmuEvent event = events_.top();
        events_.pop();
        now_ms_ = std::max(now_ms_, event.time_ms);
        if (event.is_timeout) {
            handle_timeout(event);
        } else {
            deliver(event);
        }
    }
    now_ms_ = window_end_ms_;
}

void EmulationRuntime::flush_metrics(long tick, const RecordEmitter& emit) {
    for (auto& [service, actor] : actors_) {
        for (auto& [metric, value] : actor.counters) {
            emit({tick, "remote_" + metric, "service", service, value});
        }
        for (auto& [metric, slot] : actor.observations) {
            if (slot.second > 0) {
                emit({tick, "remote_" + metric, "service", service, slot.first / static_cast<double>(slot.second)});
            }
        }
        actor.counters.clear();
        actor.observations.clear();
    }
}

namespace {

/// Replies to every request with a same-size response.
class EchoBehaviour final : public Behaviour {
public:
    void on_message(ActorContext& ctx, const Message& message) override {
        if (message.kind == MessageKind::Request) {
            ctx.respond(message, message.size_bits);
        }
    }
};

/// Request/response ping-pong: keeps exactly one request in flight and
/// issues the next as soon as the response arrives. The per-tick
/// throughput is therefore governed by the round-trip route cost.
class StreamerBehaviour final : public Behaviour {
public:
    explicit StreamerBehaviour(const nlohmann::json& params)
        : target_(params.value("target", "")),
          request_bits_(params.value("request_bits", 8e5)),
          max_per_tick_(params.value("max_per_tick", 100000L)) {}

    void on_tick(ActorContext& ctx) override {
        sent_this_tick_ = 0;
        if (!waiting_) {
            next(ctx);
        }
    }

    void on_message(ActorContext& ctx, const Message& message) override {
        if (message.kind != MessageKind::Response) {
            return;
        }
        waiting_ = false;
        if (ctx.now_ms() < ctx.window_end_ms()) {
            next(ctx);
        }
    }

    void on_timeout(ActorContext& ctx, std::uint64_t) override {
        waiting_ = false;
        if (ctx.now_ms() < ctx.window_end_ms()) {
            next(ctx);
        }
    }

private:
    void next(ActorContext& ctx) {
        if (target_.empty() || sent_this_tick_ >= max_per_tick_) {
            return;
        }
        ++sent_this_tick_;
        waiting_ = true;
        ctx.send_request(target_, request_bits_);
    }

    ServiceId target_;
    double request_bits_;
    long max_per_tick_;
    long sent_this_tick_ = 0;
    bool waiting_ = false;
};

/// Serves predictions: counts processed messages, reports a per-message
/// accuracy drawn around the current model version's asymptotic curve
/// A(v) = a_inf - (a_inf - a0) * exp(-v / tau), and answers each request.
class PredictorBehaviour final : public Behaviour {
public:
    explicit PredictorBehaviour(const nlohmann::json& params)
        : a0_(params.value("a0", 0.5)),
          a_inf_(params.value("a_inf", 0.95)),
          tau_(params.value("tau", 30.0)),
          sigma_(params.value("sigma", 0.04)),
          response_bits_(params.value("response_bits", 1e4)) {}

    void on_deploy(ActorContext&) override { version_ = 0; }

    void on_message(ActorContext& ctx, const Message& message) override {
        if (message.kind == MessageKind::Request) {
            ctx.increment("image_count");
            double accuracy = a_inf_ - (a_inf_ - a0_) * std::exp(-version_ / tau_) +
                              sigma_ * ctx.rng().next_gaussian();
            ctx.observe("accuracy", accuracy);
            ctx.respond(message, response_bits_);
        } else if (message.payload.rfind("model:", 0) == 0) {
            version_ = std::stod(message.payload.substr(6));
        }
    }

private:
    double a0_;
    double a_inf_;
    double tau_;
    double sigma_;
    double response_bits_;
    double version_ = 0.0;
};

/// Publishes a new model version every `period` ticks; the publish itself
/// pays the network cost of the model transfer.
class TrainerBehaviour final : public Behaviour {
public:
    explicit TrainerBehaviour(const nlohmann::json& params)
        : target_(params.value("target", "")),
          period_(params.value("period", 5L)),
          model_bits_(params.value("model_bits", 1e7)) {}

    void on_tick(ActorContext& ctx) override {
        if (target_.empty() || period_ < 1 || ctx.tick() % period_ != 0) {
            return;
        }
        ++version_;
        ctx.send_oneway(target_, model_bits_, "model:" + std::to_string(version_));
    }

private:
    ServiceId target_;
    long period_;
    double model_bits_;
    long version_ = 0;
};

} // namespace

std::unique_ptr<Behaviour> make_behaviour(const std::string& type, const nlohmann::json& params) {
    if (type == "echo") {
        return std::make_unique<EchoBehaviour>();
    }
    if (type == "streamer") {
        return std::make_unique<StreamerBehaviour>(params);
    }
    if (type == "predictor") {
        return std::make_unique<PredictorBehaviour>(params);
    }
    if (type == "trainer") {
        return std::make_unique<TrainerBehaviour>(params);
    }
    if (type == "inert") {
        return std::make_unique<Behaviour>();
    }
    throw ParseError("unknown behaviour type: " + type);
}

bool is_known_behaviour(const std::string& type) {
    return type == "echo" || type == "streamer" || type == "predictor" || type == "trainer" ||
           type == "inert";
}

} // namespace cesim
