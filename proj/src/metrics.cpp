#include "cesim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "cesim/dynamics.hpp"
#include "cesim/gml.hpp"

namespace cesim {

namespace {

nlohmann::json asset_json(const AssetSpec& spec, const AssetValue& value) {
    if (spec.kind() == AssetKind::Symbolic) {
        return format_asset(spec, value);
    }
    return scalar(value);
}

} // namespace

MetricFn metric_assets(Scope scope) {
    return [scope](const Environment& env, long tick, const RecordEmitter& emit) {
        if (scope == Scope::Node) {
            for (const auto& [id, entry] : env.infra.nodes()) {
                const Bucket& residual = env.residual.node_residual(id);
                for (const auto& [name, capacity] : entry.assets) {
                    const AssetSpec& spec = entry.assets.specs()->at(name);
                    nlohmann::json value = {
                        {"capacity", asset_json(spec, capacity)},
                        {"residual", asset_json(spec, residual.effective(name))},
                    };
                    emit({tick, "", to_string(scope), id + "/" + name, std::move(value)});
                }
            }
        } else if (scope == Scope::Link) {
            for (const auto& [key, bucket] : env.infra.links()) {
                const Bucket& residual = env.residual.link_residual(key);
                for (const auto& [name, capacity] : bucket) {
                    const AssetSpec& spec = bucket.specs()->at(name);
                    nlohmann::json value = {
                        {"capacity", asset_json(spec, capacity)},
                        {"residual", asset_json(spec, residual.effective(name))},
                    };
                    emit({tick, "", to_string(scope), key.a + "--" + key.b + "/" + name, std::move(value)});
                }
            }
        }
    };
}

MetricFn metric_placement_state() {
    return [](const Environment& env, long tick, const RecordEmitter& emit) {
        for (const auto& [app_id, placement] : env.placements) {
            nlohmann::json mapping = nlohmann::json::object();
            for (const auto& [service, node] : placement.mapping) {
                mapping[service] = node;
            }
            nlohmann::json value = {
                {"status", to_string(placement.status)},
                {"mapping", std::move(mapping)},
                {"success_rate", env.success_rate(app_id)},
            };
            emit({tick, "", "application", app_id, std::move(value)});
        }
    };
}

std::optional<double> flow_response_time(const Environment& env,
                                         const AppId& app_id,
                                         const std::vector<ServiceId>& flow,
                                         bool include_user_delay) {
    auto placement = env.placements.find(app_id);
    if (placement == env.placements.end() || placement->second.status != PlacementStatus::Fulfilled) {
        return std::nullopt;
    }
    const ServiceMapping& mapping = placement->second.mapping;
    double total = 0.0;
    for (const ServiceId& service : flow) {
        auto node = mapping.find(service);
        if (node == mapping.end()) {
            return std::nullopt;
        }
        auto proc = env.infra.node(node->second).assets.get("processing_time");
        if (proc) {
            total += scalar(*proc);
        }
    }
    for (std::size_t i = 0; i + 1 < flow.size(); ++i) {
        const NodeId& n1 = mapping.at(flow[i]);
        const NodeId& n2 = mapping.at(flow[i + 1]);
        if (n1 == n2) {
            continue;
        }
        const PathReservation* reservation = env.residual.reservation(app_id, flow[i], flow[i + 1]);
        if (reservation != nullptr) {
            total += path_latency(env.infra, reservation->path, capacity_link_fn(env.infra));
        }
    }
    if (include_user_delay && !flow.empty() && !env.user_hub.empty()) {
        const NodeId& source = mapping.at(flow.front());
        auto users = env.user_counts.find(source);
        long uc = users == env.user_counts.end() ? 0 : users->second;
        try {
            total += user_delay(env.infra, source, env.user_hub, uc);
        } catch (const NoRoute&) {
            // hub unreachable: no extra term
        }
    }
    return total;
}

MetricFn metric_response_time(bool include_user_delay) {
    return [include_user_delay](const Environment& env, long tick, const RecordEmitter& emit) {
        for (const auto& [app_id, app] : env.apps) {
            std::optional<double> worst;
            const auto& flows = app.flows();
            for (std::size_t i = 0; i < flows.size(); ++i) {
                auto rt = flow_response_time(env, app_id, flows[i], include_user_delay);
                nlohmann::json value = rt ? nlohmann::json(*rt) : nlohmann::json();
                emit({tick, "", "application", app_id + "/flow" + std::to_string(i), std::move(value)});
                if (rt && (!worst || *rt > *worst)) {
                    worst = rt;
                }
            }
            nlohmann::json value = worst ? nlohmann::json(*worst) : nlohmann::json();
            emit({tick, "", "application", app_id, std::move(value)});
        }
    };
}

MetricFn metric_alive_nodes() {
    return [](const Environment& env, long tick, const RecordEmitter& emit) {
        long alive = 0;
        for (const auto& [id, entry] : env.infra.nodes()) {
            (void)id;
            if (entry.active) {
                ++alive;
            }
        }
        emit({tick, "", "infrastructure", "-", alive});
    };
}

MetricFn metric_user_delay() {
    return [](const Environment& env, long tick, const RecordEmitter& emit) {
        if (env.user_hub.empty() || !env.infra.has_node(env.user_hub)) {
            return;
        }
        auto paths = shortest_paths_from(env.infra, env.user_hub, capacity_link_fn(env.infra));
        double sum = 0.0;
        double max = 0.0;
        long reachable = 0;
        for (const auto& [node, cost_path] : paths) {
            auto users = env.user_counts.find(node);
            double uc = users == env.user_counts.end() ? 0.0 : static_cast<double>(users->second);
            double delay = cost_path.first + uc * std::log1p(uc);
            sum += delay;
            max = std::max(max, delay);
            ++reachable;
        }
        if (reachable == 0) {
            return;
        }
        emit({tick, "", "infrastructure", "max", max});
        emit({tick, "", "infrastructure", "mean", sum / static_cast<double>(reachable)});
    };
}

MetricFn metric_user_counts() {
    return [](const Environment& env, long tick, const RecordEmitter& emit) {
        for (const auto& [node, count] : env.user_counts) {
            emit({tick, "", "node", node, count});
        }
    };
}

void write_snapshot(const Environment& env, const std::filesystem::path& run_dir, long tick) {
    std::filesystem::create_directories(run_dir / "snapshots");
    char name[32];
    std::snprintf(name, sizeof(name), "tick_%06ld.gml", tick);
    auto node_extra = [&env](const NodeId& id) {
        std::vector<std::pair<std::string, std::string>> out;
        const Bucket& residual = env.residual.node_residual(id);
        for (const auto& [asset, value] : residual) {
            const AssetSpec& spec = residual.specs()->at(asset);
            if (spec.consumable()) {
                out.emplace_back("residual_" + asset, format_asset(spec, value));
            }
        }
        return out;
    };
    std::ofstream file(run_dir / "snapshots" / name, std::ios::binary);
    if (!file) {
        throw IoError("cannot write snapshot for tick " + std::to_string(tick));
    }
    file << to_gml(env.infra, node_extra);
}

MetricFn make_metric(const std::string& name, const nlohmann::json& params) {
    if (name == "assets_node") {
        return metric_assets(Scope::Node);
    }
    if (name == "assets_link") {
        return metric_assets(Scope::Link);
    }
    if (name == "placement_state") {
        return metric_placement_state();
    }
    if (name == "response_time") {
        return metric_response_time(params.value("user_delay", false));
    }
    if (name == "alive_nodes") {
        return metric_alive_nodes();
    }
    if (name == "user_delay") {
        return metric_user_delay();
    }
    if (name == "user_counts") {
        return metric_user_counts();
    }
    throw ParseError("unknown callback: " + name);
}

bool is_known_metric(const std::string& name) {
    static const std::vector<std::string> known = {
        "assets_node", "assets_link", "placement_state", "response_time",
        "alive_nodes", "user_delay", "user_counts", "snapshot",
    };
    return std::find(known.begin(), known.end(), name) != known.end();
}

} // namespace cesim
