#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cesim/environment.hpp"
#include "cesim/rng.hpp"

namespace cesim {

/// Linear capacity decay from 100% at t=0 to floor_pct at t=horizon,
/// applied to the listed additive node assets (empty = all additive).
struct DegradePolicy {
    double floor_pct = 50.0;
    long horizon = 100;
    std::vector<std::string> assets;

    DegradePolicy() = default;
    DegradePolicy(double floor, long horizon_ticks, std::vector<std::string> applicable = {});
};

void degrade_step(const DegradePolicy& policy, Environment& env, long t);

/// Random node failure and recovery: active nodes deactivate with
/// probability X/100 per tick, inactive ones reactivate with X/200.
class KillPolicy {
public:
    KillPolicy(double x_pct, RngStream stream);

    double kill_probability() const { return kill_prob_; }
    double revive_probability() const { return revive_prob_; }
    std::uint64_t draws() const { return stream_.counter(); }

    /// Exactly one draw per node per tick, in node-id order.
    void step(Environment& env, long t);

private:
    double kill_prob_;
    double revive_prob_;
    RngStream stream_;
};

enum class UserModifierOp { Double, Halve };

struct UserModifier {
    long tick;
    UserModifierOp op;
};

/// Trace row source: either an ingested csv trace or the bundled synthetic
/// generator (independent per-tick jitter around stable per-node baselines).
class UserTrace {
public:
    /// Synthetic trace over the given nodes summing to about total_users.
    static UserTrace synthetic(std::vector<NodeId> nodes, long total_users, RngStream stream);

    /// Ingest rows of (tick, node_id, users); ticks without rows leave
    /// counts unchanged.
    static UserTrace from_csv(const std::string& path);
    static UserTrace from_rows(std::map<long, std::map<NodeId, long>> rows);

    /// Counts for tick t, or nullopt when the trace has no row for t.
    std::optional<std::map<NodeId, long>> row(long t) const;

private:
    bool synthetic_ = false;
    std::vector<NodeId> nodes_;
    std::vector<long> base_;
    std::uint64_t key_ = 0;
    std::map<long, std::map<NodeId, long>> rows_;
};

/// Applies the trace row for the tick, then any scheduled doubling or
/// halving modifiers; the multiplier persists across later ticks.
class UserLoadPolicy {
public:
    UserLoadPolicy(UserTrace trace, std::vector<UserModifier> modifiers, NodeId hub);

    const NodeId& hub() const { return hub_; }
    double multiplier() const { return multiplier_; }

    void step(Environment& env, long t);

private:
    UserTrace trace_;
    std::vector<UserModifier> modifiers_;
    NodeId hub_;
    double multiplier_ = 1.0;
    std::map<NodeId, long> raw_counts_;
};

/// delay(N) = lat(N, H) + uc(N) * ln(1 + uc(N)); natural log.
/// Throws NoRoute when the hub is unreachable.
double user_delay(const Infrastructure& infra, const NodeId& node, const NodeId& hub, long users);

/// Scheduled link degradation: multiplies one link's latency at a tick.
struct LinkFailure {
    NodeId a;
    NodeId b;
    long tick = 0;
    double factor = 10.0;

    void step(Environment& env, long t) const;
};

} // namespace cesim
