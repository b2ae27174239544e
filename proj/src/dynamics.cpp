#include "cesim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cesim {

DegradePolicy::DegradePolicy(double floor, long horizon_ticks, std::vector<std::string> applicable)
    : floor_pct(floor), horizon(horizon_ticks), assets(std::move(applicable)) {
    if (floor_pct < 0.0 || floor_pct > 100.0) {
        throw InvalidParams("degrade floor must be in [0, 100]");
    }
    if (horizon < 1) {
        throw InvalidParams("degrade horizon must be >= 1");
    }
}

void degrade_step(const DegradePolicy& policy, Environment& env, long t) {
    const double progress = static_cast<double>(std::min(t, policy.horizon)) /
                            static_cast<double>(policy.horizon);
    const double factor = 1.0 - (1.0 - policy.floor_pct / 100.0) * progress;
    for (const auto& [id, entry] : env.infra.nodes()) {
        auto original = env.original_capacity.find(id);
        if (original == env.original_capacity.end()) {
            continue;
        }
        Bucket& capacity = env.infra.node(id).assets;
        for (const auto& [name, value] : original->second) {
            const AssetSpec& spec = original->second.specs()->at(name);
            if (spec.kind() != AssetKind::Additive) {
                continue;
            }
            if (!policy.assets.empty() &&
                std::find(policy.assets.begin(), policy.assets.end(), name) == policy.assets.end()) {
                continue;
            }
            capacity.set(name, scalar(value) * factor);
        }
        (void)entry;
        env.residual.recompute_node(env.infra, id);
    }
}

KillPolicy::KillPolicy(double x_pct, RngStream stream)
    : kill_prob_(x_pct / 100.0), revive_prob_(x_pct / 200.0), stream_(stream) {
    if (kill_prob_ <= 0.0 || kill_prob_ > 1.0) {
        throw InvalidParams("kill probability must be in (0, 100]");
    }
}

void KillPolicy::step(Environment& env, long t) {
    (void)t;
    for (const auto& [id, entry] : env.infra.nodes()) {
        const double draw = stream_.next_unit();
        if (entry.active) {
            if (draw < kill_prob_) {
                env.infra.set_active(id, false);
            }
        } else if (draw < revive_prob_) {
            env.infra.set_active(id, true);
            // Recovery restores the full original capacity.
            auto original = env.original_capacity.find(id);
            if (original != env.original_capacity.end()) {
                env.infra.node(id).assets = original->second;
            }
            env.residual.recompute_node(env.infra, id);
        }
    }
}

UserTrace UserTrace::synthetic(std::vector<NodeId> nodes, long total_users, RngStream stream) {
    UserTrace trace;
    trace.synthetic_ = true;
    trace.nodes_ = std::move(nodes);
    if (trace.nodes_.empty()) {
        throw InvalidParams("synthetic trace needs at least one node");
    }
    // Stable baselines drawn once; per-tick rows jitter around them.
    const double mean = static_cast<double>(total_users) / static_cast<double>(trace.nodes_.size());
    for (std::size_t i = 0; i < trace.nodes_.size(); ++i) {
        double b = stream.next_range(0.5 * mean, 1.5 * mean);
        trace.base_.push_back(std::max<long>(0, std::lround(b)));
    }
    trace.key_ = stream.next_u64();
    return trace;
}

UserTrace UserTrace::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open trace '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("trace '" + path + "' is empty");
    }
    if (line.rfind("tick,node_id,users", 0) != 0) {
        throw ParseError("trace '" + path + "' must start with header tick,node_id,users");
    }
    std::map<long, std::map<NodeId, long>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream ss(line);
        std::string tick_s, node, users_s;
        if (!std::getline(ss, tick_s, ',') || !std::getline(ss, node, ',') || !std::getline(ss, users_s)) {
            throw ParseError("trace '" + path + "' line " + std::to_string(line_no) + ": expected tick,node_id,users");
        }
        long users = std::stol(users_s);
        if (users < 0) {
            throw ParseError("trace '" + path + "' line " + std::to_string(line_no) + ": negative user count");
        }
        rows[std::stol(tick_s)][node] = users;
    }
    return from_rows(std::move(rows));
}

UserTrace UserTrace::from_rows(std::map<long, std::map<NodeId, long>> rows) {
    UserTrace trace;
    trace.rows_ = std::move(rows);
    return trace;
}

std::optional<std::map<NodeId, long>> UserTrace::row(long t) const {
    if (synthetic_) {
        // Pure function of (key, tick, node): rows do not depend on query order.
        std::map<NodeId, long> row;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            RngStream cell(key_ + static_cast<std::uint64_t>(t) * 0x9E3779B97F4A7C15ULL, nodes_[i]);
            double jitter = cell.next_range(-0.1, 0.1);
            long value = std::lround(static_cast<double>(base_[i]) * (1.0 + jitter));
            row[nodes_[i]] = std::max<long>(0, value);
        }
        return row;
    }
    auto it = rows_.find(t);
    if (it == rows_.end()) {
        return std::nullopt;
    }
    return it->second;
}

UserLoadPolicy::UserLoadPolicy(UserTrace trace, std::vector<UserModifier> modifiers, NodeId hub)
    : trace_(std::move(trace)), modifiers_(std::move(modifiers)), hub_(std::move(hub)) {}

void UserLoadPolicy::step(Environment& env, long t) {
    env.user_hub = hub_;
    auto row = trace_.row(t);
    if (row) {
        raw_counts_ = std::move(*row);
    }
    bool modified = false;
    for (const UserModifier& modifier : modifiers_) {
        if (modifier.tick == t) {
            multiplier_ = modifier.op == UserModifierOp::Double ? multiplier_ * 2.0 : multiplier_ / 2.0;
            modified = true;
        }
    }
    if (!row && !modified) {
        return; // no trace row, no modifier: counts unchanged
    }
    for (const auto& [node, count] : raw_counts_) {
        env.user_counts[node] = static_cast<long>(std::floor(static_cast<double>(count) * multiplier_));
    }
}

double user_delay(const Infrastructure& infra, const NodeId& node, const NodeId& hub, long users) {
    double latency = 0.0;
    if (node != hub) {
        Bucket empty(infra.path_specs());
        auto path = find_path(infra, node, hub, empty);
        if (!path) {
            throw NoRoute("no route from '" + node + "' to hub '" + hub + "'");
        }
        latency = path_latency(infra, *path, capacity_link_fn(infra));
    }
    const double uc = static_cast<double>(users);
    return latency + uc * std::log1p(uc);
}

void LinkFailure::step(Environment& env, long t) const {
    if (t != tick) {
        return;
    }
    Bucket& link = env.infra.link(a, b);
    auto latency = link.get("latency");
    if (latency) {
        link.set("latency", scalar(*latency) * factor);
    }
    env.residual.recompute_link(env.infra, LinkKey(a, b));
}

} // namespace cesim
