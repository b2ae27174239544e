#include "cesim/environment.hpp"

namespace cesim {

void Environment::snapshot_capacity() {
    original_capacity.clear();
    for (const auto& [id, entry] : infra.nodes()) {
        original_capacity.emplace(id, entry.assets);
    }
}

void Environment::run_lookup() {
    for (auto& [app_id, placement] : placements) {
        if (placement.status == PlacementStatus::Fulfilled) {
            continue;
        }
        auto strategy = strategies.find(app_id);
        auto app = apps.find(app_id);
        if (strategy == strategies.end() || app == apps.end()) {
            continue;
        }
        auto mapping = strategy->second->place(app->second, infra, residual);
        placement.mapping = mapping ? std::move(*mapping) : ServiceMapping{};
        placement.status = PlacementStatus::Pending;
    }
}

FulfilOutcome Environment::run_fulfil() {
    FulfilOutcome outcome = fulfil(placements, apps, infra, residual);
    ++elapsed_ticks;
    for (const auto& [app_id, placement] : placements) {
        if (placement.status == PlacementStatus::Fulfilled) {
            ++fulfilled_ticks[app_id];
        }
    }
    return outcome;
}

double Environment::success_rate(const AppId& app) const {
    if (elapsed_ticks == 0) {
        return 0.0;
    }
    auto it = fulfilled_ticks.find(app);
    long hits = it == fulfilled_ticks.end() ? 0 : it->second;
    return static_cast<double>(hits) / static_cast<double>(elapsed_ticks);
}

Environment make_environment(Infrastructure infra) {
    Environment env;
    env.infra = std::move(infra);
    env.residual = ResidualState(env.infra);
    env.snapshot_capacity();
    return env;
}

void add_application(Environment& env, Application app, std::shared_ptr<PlacementStrategy> strategy) {
    AppId id = app.id();
    if (env.apps.count(id)) {
        throw DuplicateId("application '" + id + "' already exists");
    }
    env.placements.emplace(id, Placement{id, {}, PlacementStatus::Pending});
    env.fulfilled_ticks.emplace(id, 0);
    env.apps.emplace(id, std::move(app));
    env.strategies.emplace(std::move(id), std::move(strategy));
}

} // namespace cesim
