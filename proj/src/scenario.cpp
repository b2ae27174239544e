#include "cesim/scenario.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cesim/dynamics.hpp"
#include "cesim/gml.hpp"
#include "cesim/topology.hpp"

namespace cesim {

namespace {

class ErrorCollector {
public:
    void add(const std::string& field, const std::string& message) {
        errors_.push_back(field + ": " + message);
    }

    void raise_if_any() const {
        if (errors_.empty()) {
            return;
        }
        std::ostringstream out;
        out << errors_.size() << " config error(s):";
        for (const auto& e : errors_) {
            out << "\n  - " << e;
        }
        throw ParseError(out.str());
    }

    bool empty() const { return errors_.empty(); }

private:
    std::vector<std::string> errors_;
};

const std::vector<std::string> kStrategyNames = {"first_fit", "best_fit", "min_energy", "static"};
const std::vector<std::string> kPolicyNames = {"degrade", "kill", "user_load", "link_failure"};

bool known(const std::vector<std::string>& names, const std::string& name) {
    return std::find(names.begin(), names.end(), name) != names.end();
}

AssetValue parse_bound(const AssetSpec* partial, AssetKind kind, const nlohmann::json& value,
                       const std::vector<std::string>& universe) {
    (void)partial;
    if (kind == AssetKind::Symbolic) {
        SymbolSet set;
        for (const auto& symbol : value) {
            auto it = std::find(universe.begin(), universe.end(), symbol.get<std::string>());
            if (it == universe.end()) {
                throw ParseError("symbol '" + symbol.get<std::string>() + "' not in universe");
            }
            set.insert(static_cast<std::size_t>(it - universe.begin()));
        }
        return set;
    }
    return value.get<double>();
}

SpecSetPtr parse_spec_set(const nlohmann::json& list, ErrorCollector& errors, const std::string& field) {
    auto specs = std::make_shared<SpecSet>();
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& item = list[i];
        const std::string where = field + "[" + std::to_string(i) + "]";
        try {
            std::string name = item.at("name").get<std::string>();
            AssetKind kind = asset_kind_from_string(item.at("kind").get<std::string>());
            std::vector<std::string> universe;
            if (item.contains("universe")) {
                universe = item["universe"].get<std::vector<std::string>>();
            }
            AssetValue lower = parse_bound(nullptr, kind, item.at("lower"), universe);
            AssetValue upper = parse_bound(nullptr, kind, item.at("upper"), universe);
            std::optional<bool> consumable;
            if (item.contains("consumable")) {
                consumable = item["consumable"].get<bool>();
            }
            specs->add(AssetSpec(name, kind, lower, upper, item.value("unit", ""), consumable, universe));
        } catch (const std::exception& e) {
            errors.add(where, e.what());
        }
    }
    return specs;
}

/// Path spec derived from a link spec with a kind override; convex domains
/// order their bounds the other way around.
AssetSpec override_kind(const AssetSpec& spec, AssetKind kind) {
    if (spec.kind() == AssetKind::Symbolic || kind == AssetKind::Symbolic) {
        throw ParseError("cannot override symbolic asset '" + spec.name() + "'");
    }
    double lo = scalar(spec.lower());
    double hi = scalar(spec.upper());
    double numeric_min = std::min(lo, hi);
    double numeric_max = std::max(lo, hi);
    if (kind == AssetKind::Convex) {
        return AssetSpec(spec.name(), kind, numeric_max, numeric_min, spec.unit(), spec.consumable());
    }
    if (kind == AssetKind::Multiplicative) {
        return AssetSpec(spec.name(), kind, std::max(0.0, numeric_min), std::min(1.0, numeric_max),
                         spec.unit(), spec.consumable());
    }
    return AssetSpec(spec.name(), kind, numeric_min, numeric_max, spec.unit(), spec.consumable());
}

struct SpecBundle {
    SpecSetPtr node;
    SpecSetPtr link;
    SpecSetPtr path;
};

SpecBundle parse_assets(const nlohmann::json& doc, ErrorCollector& errors) {
    SpecBundle bundle;
    const auto assets = doc.value("assets", nlohmann::json::object());
    bundle.node = assets.contains("node") ? parse_spec_set(assets["node"], errors, "assets.node")
                                          : default_node_specs();
    bundle.link = assets.contains("link") ? parse_spec_set(assets["link"], errors, "assets.link")
                                          : default_link_specs();
    if (!assets.contains("link") && !assets.contains("path_overrides")) {
        bundle.path = default_path_specs();
        return bundle;
    }
    auto path = std::make_shared<SpecSet>();
    nlohmann::json overrides = assets.value("path_overrides", nlohmann::json::object());
    if (!assets.contains("path_overrides") && !assets.contains("link")) {
        overrides = {{"bandwidth", "convex"}};
    }
    for (const auto& [name, spec] : *bundle.link) {
        try {
            if (overrides.contains(name)) {
                path->add(override_kind(spec, asset_kind_from_string(overrides[name].get<std::string>())));
            } else {
                path->add(spec);
            }
        } catch (const std::exception& e) {
            errors.add("assets.path_overrides." + name, e.what());
        }
    }
    bundle.path = path;
    return bundle;
}

TopologyParams parse_topology_params(const nlohmann::json& params) {
    TopologyParams out;
    out.tiers = params.value("tiers", out.tiers);
    out.fanout = params.value("fanout", out.fanout);
    out.extra_parents = params.value("extra_parents", out.extra_parents);
    out.tier_scale = params.value("tier_scale", out.tier_scale);
    out.hub_multiplier = params.value("hub_multiplier", out.hub_multiplier);
    out.edge_prob = params.value("edge_prob", out.edge_prob);
    out.initial_load = params.value("initial_load", out.initial_load);
    out.size_correlation = params.value("size_correlation", out.size_correlation);
    if (params.contains("node_ranges")) {
        for (const auto& [name, range] : params["node_ranges"].items()) {
            out.node_ranges[name] = {range[0].get<double>(), range[1].get<double>()};
        }
    }
    if (params.contains("link_ranges")) {
        for (const auto& [name, range] : params["link_ranges"].items()) {
            out.link_ranges[name] = {range[0].get<double>(), range[1].get<double>()};
        }
    }
    return out;
}

Bucket parse_bucket(const nlohmann::json& requirements, const SpecSetPtr& specs) {
    Bucket bucket(specs);
    for (const auto& [name, value] : requirements.items()) {
        const AssetSpec& spec = specs->at(name);
        if (spec.kind() == AssetKind::Symbolic) {
            bucket.set(name, spec.symbol_set(value.get<std::vector<std::string>>()));
        } else {
            bucket.set(name, value.get<double>());
        }
    }
    return bucket;
}

void validate_applications(const nlohmann::json& doc, const SpecBundle& specs, ErrorCollector& errors) {
    if (!doc.contains("applications")) {
        return;
    }
    std::set<std::string> app_ids;
    for (std::size_t i = 0; i < doc["applications"].size(); ++i) {
        const auto& app = doc["applications"][i];
        const std::string where = "applications[" + std::to_string(i) + "]";
        std::string app_id = app.value("id", "");
        if (app_id.empty()) {
            errors.add(where + ".id", "missing application id");
            continue;
        }
        if (!app_ids.insert(app_id).second) {
            errors.add(where + ".id", "duplicate application id '" + app_id + "'");
        }
        std::set<std::string> service_ids;
        for (const auto& service : app.value("services", nlohmann::json::array())) {
            std::string sid = service.value("id", "");
            if (sid.empty()) {
                errors.add(where + ".services", "service without id");
                continue;
            }
            service_ids.insert(sid);
            try {
                parse_bucket(service.value("requirements", nlohmann::json::object()), specs.node);
            } catch (const std::exception& e) {
                errors.add(where + ".services." + sid, e.what());
            }
        }
        for (const auto& interaction : app.value("interactions", nlohmann::json::array())) {
            std::string src = interaction.value("src", "");
            std::string dst = interaction.value("dst", "");
            if (!service_ids.count(src) || !service_ids.count(dst)) {
                errors.add(where + ".interactions", "endpoints '" + src + "'->'" + dst +
                                                        "' must be declared services");
            }
            try {
                parse_bucket(interaction.value("requirements", nlohmann::json::object()), specs.path);
            } catch (const std::exception& e) {
                errors.add(where + ".interactions", e.what());
            }
        }
        for (const auto& flow : app.value("flows", nlohmann::json::array())) {
            for (const auto& sid : flow) {
                if (!service_ids.count(sid.get<std::string>())) {
                    errors.add(where + ".flows", "flow references unknown service '" +
                                                     sid.get<std::string>() + "'");
                }
            }
        }
        if (app.contains("strategy")) {
            std::string strategy = app["strategy"].value("name", "");
            if (!known(kStrategyNames, strategy)) {
                errors.add(where + ".strategy.name", "unknown strategy '" + strategy + "'");
            }
            if (strategy == "static") {
                const nlohmann::json mapping = app["strategy"].value("mapping", nlohmann::json::object());
                for (const auto& [sid, node] : mapping.items()) {
                    (void)node;
                    if (!service_ids.count(sid)) {
                        errors.add(where + ".strategy.mapping", "unknown service '" + sid + "'");
                    }
                }
            }
        } else {
            errors.add(where + ".strategy", "missing strategy");
        }
    }
}

void validate_policies(const nlohmann::json& doc, ErrorCollector& errors) {
    for (std::size_t i = 0; i < doc.value("policies", nlohmann::json::array()).size(); ++i) {
        const auto& policy = doc["policies"][i];
        const std::string where = "policies[" + std::to_string(i) + "]";
        std::string name = policy.value("name", "");
        if (!known(kPolicyNames, name)) {
            errors.add(where + ".name", "unknown policy '" + name + "'");
            continue;
        }
        if (name == "degrade") {
            double x = policy.value("x_pct", 50.0);
            if (x < 0.0 || x > 100.0) {
                errors.add(where + ".x_pct", "degrade floor must be in [0, 100]");
            }
        } else if (name == "kill") {
            double x = policy.value("x_pct", 0.0);
            if (x <= 0.0 || x > 100.0) {
                errors.add(where + ".x_pct", "kill probability must be in (0, 100]");
            }
        } else if (name == "user_load") {
            if (!policy.contains("hub")) {
                errors.add(where + ".hub", "user_load needs a hub node");
            }
        } else if (name == "link_failure") {
            if (!policy.contains("a") || !policy.contains("b")) {
                errors.add(where, "link_failure needs link endpoints a and b");
            }
        }
    }
}

void validate_callbacks(const nlohmann::json& doc, ErrorCollector& errors) {
    for (std::size_t i = 0; i < doc.value("callbacks", nlohmann::json::array()).size(); ++i) {
        const auto& cb = doc["callbacks"][i];
        const std::string where = "callbacks[" + std::to_string(i) + "]";
        std::string name = cb.value("name", "");
        if (!is_known_metric(name)) {
            errors.add(where + ".name", "unknown callback '" + name + "'");
        }
        try {
            report_mode_from_string(cb.value("mode", "csv"));
        } catch (const std::exception& e) {
            errors.add(where + ".mode", e.what());
        }
    }
}

void validate_emulation(const nlohmann::json& doc, ErrorCollector& errors) {
    if (!doc.contains("emulation")) {
        return;
    }
    std::set<std::string> service_ids;
    for (const auto& app : doc.value("applications", nlohmann::json::array())) {
        for (const auto& service : app.value("services", nlohmann::json::array())) {
            service_ids.insert(service.value("id", ""));
        }
    }
    const nlohmann::json behaviours = doc["emulation"].value("behaviours", nlohmann::json::object());
    for (const auto& [service, binding] : behaviours.items()) {
        if (!service_ids.count(service)) {
            errors.add("emulation.behaviours." + service, "unknown service");
        }
        std::string type = binding.value("type", "");
        if (!is_known_behaviour(type)) {
            errors.add("emulation.behaviours." + service + ".type", "unknown behaviour '" + type + "'");
        }
    }
}

void validate_sweep(const nlohmann::json& doc, ErrorCollector& errors) {
    if (!doc.contains("sweep")) {
        return;
    }
    static const std::vector<std::string> dimensions = {"size", "topology", "strategy",
                                                        "policy", "load", "seed"};
    for (const auto& [key, values] : doc["sweep"].items()) {
        if (!known(dimensions, key)) {
            errors.add("sweep." + key, "unknown sweep dimension");
        } else if (!values.is_array() || values.empty()) {
            errors.add("sweep." + key, "sweep values must be a non-empty array");
        }
    }
}

std::shared_ptr<PlacementStrategy> make_strategy(const nlohmann::json& strategy) {
    const std::string name = strategy.value("name", "first_fit");
    if (name == "first_fit") {
        return std::make_shared<FirstFitStrategy>();
    }
    if (name == "best_fit") {
        return std::make_shared<BestFitStrategy>();
    }
    if (name == "min_energy") {
        std::map<std::string, double> weights;
        const nlohmann::json declared = strategy.value("weights", nlohmann::json::object());
        for (const auto& [asset, weight] : declared.items()) {
            weights[asset] = weight.get<double>();
        }
        return std::make_shared<MinEnergyStrategy>(std::move(weights));
    }
    if (name == "static") {
        ServiceMapping mapping;
        const nlohmann::json declared = strategy.value("mapping", nlohmann::json::object());
        for (const auto& [service, node] : declared.items()) {
            mapping[service] = node.get<std::string>();
        }
        return std::make_shared<StaticStrategy>(std::move(mapping));
    }
    throw ParseError("unknown strategy '" + name + "'");
}

} // namespace

ScenarioConfig ScenarioConfig::parse(nlohmann::json doc, std::filesystem::path base_dir) {
    ErrorCollector errors;
    if (!doc.is_object()) {
        throw ParseError("scenario config must be a json object");
    }

    nlohmann::json sim = doc.value("simulation", nlohmann::json::object());
    sim["max_ticks"] = sim.value("max_ticks", 1L);
    sim["seed"] = sim.value("seed", 1UL);
    sim["tick_period_ms"] = sim.value("tick_period_ms", 0.0);
    sim["fail_fast"] = sim.value("fail_fast", false);
    sim["remote"] = sim.value("remote", false);
    sim["emu_tick_ms"] = sim.value("emu_tick_ms", 1000.0);
    sim["out"] = sim.value("out", "runs");
    doc["simulation"] = sim;
    if (sim["max_ticks"].get<long>() < 1) {
        errors.add("simulation.max_ticks", "must be >= 1");
    }

    SpecBundle specs = parse_assets(doc, errors);

    if (doc.contains("infrastructure")) {
        const auto& infra = doc["infrastructure"];
        if (infra.contains("builder")) {
            try {
                topology_kind_from_string(infra["builder"].get<std::string>());
            } catch (const std::exception& e) {
                errors.add("infrastructure.builder", e.what());
            }
            if (infra.value("n", 0UL) < 2) {
                errors.add("infrastructure.n", "topology needs at least 2 nodes");
            }
        } else if (!infra.contains("gml")) {
            errors.add("infrastructure", "needs either a builder or a gml file");
        }
    } else {
        errors.add("infrastructure", "missing section");
    }

    validate_applications(doc, specs, errors);
    validate_policies(doc, errors);
    validate_callbacks(doc, errors);
    validate_emulation(doc, errors);
    validate_sweep(doc, errors);
    errors.raise_if_any();

    ScenarioConfig config;
    config.doc_ = std::move(doc);
    config.base_dir_ = std::move(base_dir);
    return config;
}

ScenarioConfig ScenarioConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("config '" + path.string() + "': " + e.what());
    }
    return parse(std::move(doc), std::filesystem::absolute(path).parent_path());
}

std::unique_ptr<Simulation> build_simulation(const ScenarioConfig& config, const BuildOverrides& overrides) {
    const nlohmann::json& doc = config.to_json();
    ErrorCollector errors;
    SpecBundle specs = parse_assets(doc, errors);
    errors.raise_if_any();

    SimulationConfig sim_config;
    const auto& sim = doc["simulation"];
    sim_config.max_ticks = overrides.ticks.value_or(sim["max_ticks"].get<long>());
    sim_config.seed = overrides.seed.value_or(sim["seed"].get<std::uint64_t>());
    sim_config.tick_period_ms = sim["tick_period_ms"].get<double>();
    sim_config.fail_fast = overrides.fail_fast.value_or(sim["fail_fast"].get<bool>());
    sim_config.remote = sim["remote"].get<bool>();
    sim_config.emu_tick_ms = sim["emu_tick_ms"].get<double>();
    sim_config.out_dir = overrides.out_dir.value_or(std::filesystem::path(sim["out"].get<std::string>()));
    sim_config.run_id = overrides.run_id.value_or(
        config.name() + "_seed" + std::to_string(sim_config.seed));

    // infrastructure
    Infrastructure infra;
    const auto& infra_doc = doc["infrastructure"];
    if (infra_doc.contains("builder")) {
        TopologyKind kind = topology_kind_from_string(infra_doc["builder"].get<std::string>());
        TopologyParams params = parse_topology_params(infra_doc.value("params", nlohmann::json::object()));
        infra = build_topology(kind, infra_doc["n"].get<std::size_t>(), params, sim_config.seed,
                               specs.node, specs.link, specs.path);
    } else {
        std::filesystem::path gml_path = config.base_dir() / infra_doc["gml"].get<std::string>();
        infra = read_gml_file(gml_path.string(), specs.node, specs.link, specs.path);
    }

    Environment env = make_environment(std::move(infra));

    for (const auto& app_doc : doc.value("applications", nlohmann::json::array())) {
        Application app(app_doc["id"].get<std::string>(), specs.node, specs.path);
        for (const auto& service : app_doc.value("services", nlohmann::json::array())) {
            app.add_service(service["id"].get<std::string>(),
                            parse_bucket(service.value("requirements", nlohmann::json::object()), specs.node));
        }
        for (const auto& interaction : app_doc.value("interactions", nlohmann::json::array())) {
            app.add_interaction(interaction["src"].get<std::string>(), interaction["dst"].get<std::string>(),
                                parse_bucket(interaction.value("requirements", nlohmann::json::object()),
                                             specs.path));
        }
        for (const auto& flow : app_doc.value("flows", nlohmann::json::array())) {
            app.add_flow(flow.get<std::vector<std::string>>());
        }
        add_application(env, std::move(app), make_strategy(app_doc["strategy"]));
    }

    auto simulation = std::make_unique<Simulation>(sim_config, std::move(env));
    add_core_triggers(simulation->graph());
    add_default_step_events(simulation->graph());
    bind_default_handlers(*simulation);

    // policies run inside the update event, in declaration order
    std::vector<std::function<void(Environment&, long)>> policy_steps;
    for (const auto& policy : doc.value("policies", nlohmann::json::array())) {
        const std::string name = policy["name"].get<std::string>();
        if (name == "degrade") {
            DegradePolicy degrade(policy.value("x_pct", 50.0),
                                  policy.value("horizon", sim_config.max_ticks),
                                  policy.value("assets", std::vector<std::string>{}));
            policy_steps.push_back([degrade](Environment& env_ref, long t) {
                degrade_step(degrade, env_ref, t);
            });
        } else if (name == "kill") {
            auto kill = std::make_shared<KillPolicy>(policy["x_pct"].get<double>(),
                                                     simulation->make_stream("policy/kill"));
            policy_steps.push_back([kill](Environment& env_ref, long t) { kill->step(env_ref, t); });
        } else if (name == "user_load") {
            UserTrace trace;
            if (policy.contains("trace") && policy["trace"].contains("csv")) {
                trace = UserTrace::from_csv(
                    (config.base_dir() / policy["trace"]["csv"].get<std::string>()).string());
            } else {
                nlohmann::json synth =
                    policy.contains("trace") ? policy["trace"].value("synthetic", nlohmann::json::object())
                                             : nlohmann::json::object();
                std::vector<NodeId> nodes;
                for (const auto& [id, entry] : simulation->env().infra.nodes()) {
                    (void)entry;
                    nodes.push_back(id);
                }
                trace = UserTrace::synthetic(std::move(nodes), synth.value("users", 3000L),
                                             simulation->make_stream("policy/user_trace"));
            }
            std::vector<UserModifier> modifiers;
            for (const auto& modifier : policy.value("modifiers", nlohmann::json::array())) {
                modifiers.push_back(UserModifier{
                    modifier["tick"].get<long>(),
                    modifier["op"].get<std::string>() == "double" ? UserModifierOp::Double
                                                                  : UserModifierOp::Halve});
            }
            auto user_load = std::make_shared<UserLoadPolicy>(std::move(trace), std::move(modifiers),
                                                              policy["hub"].get<std::string>());
            policy_steps.push_back([user_load](Environment& env_ref, long t) { user_load->step(env_ref, t); });
        } else if (name == "link_failure") {
            LinkFailure failure{policy["a"].get<std::string>(), policy["b"].get<std::string>(),
                                policy.value("tick", 1L), policy.value("factor", 10.0)};
            policy_steps.push_back([failure](Environment& env_ref, long t) { failure.step(env_ref, t); });
        }
    }
    simulation->set_event_handler("update_policy", [policy_steps](Environment& env_ref, long t) {
        for (const auto& step : policy_steps) {
            step(env_ref, t);
        }
    });

    // callbacks attach to the fulfilment event so they observe final state
    for (const auto& cb : doc.value("callbacks", nlohmann::json::array())) {
        const std::string name = cb["name"].get<std::string>();
        ReportMode mode = report_mode_from_string(cb.value("mode", "csv"));
        if (overrides.format && mode != ReportMode::Gml && *overrides.format != ReportMode::Gml) {
            mode = *overrides.format;
        }
        if (name == "snapshot" || mode == ReportMode::Gml) {
            auto ticks = cb.value("ticks", std::vector<long>{sim_config.max_ticks});
            auto& snapshot_ticks = simulation->config().snapshot_ticks;
            snapshot_ticks.insert(snapshot_ticks.end(), ticks.begin(), ticks.end());
            std::sort(snapshot_ticks.begin(), snapshot_ticks.end());
            continue;
        }
        Scope scope = Scope::Simulation;
        simulation->graph().add_event(EventSpec{name, scope, true, mode});
        simulation->graph().connect("placement_fulfilment", name);
        simulation->reporter().set_mode(name, mode);
        simulation->set_callback(name, make_metric(name, cb));
    }

    if (sim_config.remote && doc.contains("emulation")) {
        const auto& emu = doc["emulation"];
        const nlohmann::json behaviours = emu.value("behaviours", nlohmann::json::object());
        for (const auto& [service, binding] : behaviours.items()) {
            simulation->emulation()->register_behaviour(service, binding["type"].get<std::string>(), binding);
        }
        const nlohmann::json interfaces = emu.value("interfaces", nlohmann::json::object());
        for (const auto& [channel, kind] : interfaces.items()) {
            auto arrow = channel.find("->");
            if (arrow == std::string::npos) {
                throw ParseError("emulation interface channel must be 'src->dst': " + channel);
            }
            simulation->emulation()->set_interface(channel.substr(0, arrow), channel.substr(arrow + 2),
                                                   comm_kind_from_string(kind.get<std::string>()));
        }
        // remote metrics are csv by default
        simulation->reporter().set_mode("remote_image_count", ReportMode::Csv);
        simulation->reporter().set_mode("remote_accuracy", ReportMode::Csv);
    }

    return simulation;
}

std::string SweepPoint::run_id() const {
    std::ostringstream out;
    std::string policy_id = policy;
    for (char& c : policy_id) {
        if (c == '(' || c == ')' || c == '.') {
            c = '_';
        }
    }
    out << "s" << size << "_" << topology << "_" << strategy << "_" << policy_id << "_l"
        << static_cast<int>(load * 100) << "_seed" << seed;
    return out.str();
}

std::vector<SweepPoint> sweep_points(const ScenarioConfig& config) {
    const nlohmann::json& doc = config.to_json();
    const nlohmann::json sweep = doc.value("sweep", nlohmann::json::object());
    const nlohmann::json& infra = doc["infrastructure"];

    auto sizes = sweep.value("size", std::vector<std::size_t>{infra.value("n", 2UL)});
    auto topologies = sweep.value("topology", std::vector<std::string>{infra.value("builder", "random")});
    std::string base_strategy = "first_fit";
    if (doc.contains("applications") && !doc["applications"].empty()) {
        base_strategy = doc["applications"][0]["strategy"].value("name", "first_fit");
    }
    auto strategies = sweep.value("strategy", std::vector<std::string>{base_strategy});
    auto policies = sweep.value("policy", std::vector<std::string>{"none"});
    auto loads = sweep.value("load", std::vector<double>{0.0});
    auto seeds = sweep.value("seed", std::vector<std::uint64_t>{doc["simulation"]["seed"].get<std::uint64_t>()});

    std::vector<SweepPoint> points;
    for (std::size_t size : sizes) {
        for (const auto& topology : topologies) {
            for (const auto& strategy : strategies) {
                for (const auto& policy : policies) {
                    for (double load : loads) {
                        for (std::uint64_t seed : seeds) {
                            points.push_back(SweepPoint{size, topology, strategy, policy, load, seed});
                        }
                    }
                }
            }
        }
    }
    return points;
}

namespace {

nlohmann::json parse_policy_expr(const std::string& expr) {
    auto open = expr.find('(');
    std::string name = open == std::string::npos ? expr : expr.substr(0, open);
    nlohmann::json policy = {{"name", name}};
    if (open != std::string::npos) {
        auto close = expr.find(')', open);
        if (close == std::string::npos) {
            throw ParseError("malformed policy expression '" + expr + "'");
        }
        policy["x_pct"] = std::stod(expr.substr(open + 1, close - open - 1));
    }
    return policy;
}

} // namespace

ScenarioConfig apply_sweep_point(const ScenarioConfig& config, const SweepPoint& point) {
    nlohmann::json doc = config.to_json();
    doc.erase("sweep");
    doc["infrastructure"]["builder"] = point.topology;
    doc["infrastructure"]["n"] = point.size;
    doc["infrastructure"]["params"]["initial_load"] = point.load;
    doc["simulation"]["seed"] = point.seed;
    if (doc.contains("applications")) {
        for (auto& app : doc["applications"]) {
            if (app["strategy"].value("name", "") != "static") {
                app["strategy"] = {{"name", point.strategy}};
            }
        }
    }
    if (point.policy != "none") {
        nlohmann::json policies = nlohmann::json::array();
        policies.push_back(parse_policy_expr(point.policy));
        doc["policies"] = policies;
    }
    return ScenarioConfig::parse(std::move(doc), config.base_dir());
}

int run_scenario(const ScenarioConfig& config, const BuildOverrides& overrides, std::ostream& out) {
    std::unique_ptr<Simulation> simulation;
    try {
        simulation = build_simulation(config, overrides);
    } catch (const ParseError& e) {
        out << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SimError& e) {
        out << "config error: " << e.what() << "\n";
        return 2;
    }
    try {
        RunReport report = simulation->run();
        long fulfilled = 0;
        for (const auto& [app, status] : report.final_status) {
            (void)app;
            if (status == "fulfilled") {
                ++fulfilled;
            }
        }
        out << "run " << report.run_id << ": " << report.ticks << " ticks, "
            << format_value(report.ticks_per_second) << " ticks/s, " << fulfilled << "/"
            << report.final_status.size() << " placements fulfilled\n"
            << "outputs: " << (simulation->config().out_dir / report.run_id).string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        out << "runtime failure: " << e.what() << "\n";
        return 1;
    }
}

int run_sweep(const ScenarioConfig& config, const BuildOverrides& overrides, unsigned jobs,
              std::ostream& out) {
    std::vector<SweepPoint> points;
    std::vector<ScenarioConfig> configs;
    try {
        points = sweep_points(config);
        configs.reserve(points.size());
        for (const SweepPoint& point : points) {
            configs.push_back(apply_sweep_point(config, point));
        }
    } catch (const SimError& e) {
        out << "config error: " << e.what() << "\n";
        return 2;
    }
    out << "sweep: " << points.size() << " runs\n";

    const std::filesystem::path out_dir =
        overrides.out_dir.value_or(std::filesystem::path(config.to_json()["simulation"]["out"].get<std::string>()));

    std::vector<SweepRow> rows(points.size());
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    std::mutex log_mutex;

    auto worker = [&]() {
        for (;;) {
            std::size_t index = next.fetch_add(1);
            if (index >= points.size()) {
                return;
            }
            const SweepPoint& point = points[index];
            SweepRow row;
            row.point = point;
            const std::filesystem::path run_dir = out_dir / point.run_id();
            try {
                if (std::filesystem::exists(run_dir / "report.json")) {
                    // resume: reuse the completed run
                    std::ifstream in(run_dir / "report.json");
                    nlohmann::json report;
                    in >> report;
                    double sum = 0.0;
                    std::size_t count = 0;
                    const nlohmann::json apps = report.value("applications", nlohmann::json::object());
                    for (const auto& [app, info] : apps.items()) {
                        (void)app;
                        sum += info.value("success_rate", 0.0);
                        ++count;
                    }
                    row.success_rate = count > 0 ? sum / static_cast<double>(count) : 0.0;
                } else {
                    BuildOverrides run_overrides = overrides;
                    run_overrides.out_dir = out_dir;
                    run_overrides.run_id = point.run_id();
                    auto simulation = build_simulation(configs[index], run_overrides);
                    RunReport report = simulation->run();
                    double sum = 0.0;
                    for (const auto& [app, rate] : report.success_rates) {
                        (void)app;
                        sum += rate;
                    }
                    row.success_rate = report.success_rates.empty()
                                           ? 0.0
                                           : sum / static_cast<double>(report.success_rates.size());
                    row.ticks_per_second = report.ticks_per_second;
                }
            } catch (const std::exception& e) {
                failures.fetch_add(1);
                std::lock_guard<std::mutex> lock(log_mutex);
                out << "run " << point.run_id() << " failed: " << e.what() << "\n";
            }
            rows[index] = row;
        }
    };

    jobs = std::max(1u, jobs);
    std::vector<std::thread> threads;
    for (unsigned i = 0; i < jobs; ++i) {
        threads.emplace_back(worker);
    }
    for (auto& thread : threads) {
        thread.join();
    }

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream summary(out_dir / "sweep_summary.csv", std::ios::binary);
        summary << "run_id,topology,size,strategy,policy,load,seed,success_rate,ticks_per_s\n";
        for (const SweepRow& row : rows) {
            summary << row.point.run_id() << ',' << row.point.topology << ',' << row.point.size << ','
                    << row.point.strategy << ',' << row.point.policy << ',' << format_value(row.point.load)
                    << ',' << row.point.seed << ',' << format_value(row.success_rate) << ','
                    << format_value(row.ticks_per_second) << '\n';
        }
    }
    {
        // grouped means by topology x strategy x policy
        std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, long>> groups;
        for (const SweepRow& row : rows) {
            auto& slot = groups[{row.point.topology, row.point.strategy, row.point.policy}];
            slot.first += row.success_rate;
            slot.second += 1;
        }
        std::ofstream aggregate(out_dir / "sweep_aggregate.csv", std::ios::binary);
        aggregate << "topology,strategy,policy,mean_success_rate,runs\n";
        for (const auto& [key, slot] : groups) {
            aggregate << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ','
                      << format_value(slot.first / static_cast<double>(slot.second)) << ',' << slot.second
                      << '\n';
        }
    }
    out << "summary: " << (out_dir / "sweep_summary.csv").string() << "\n";
    return failures.load() == 0 ? 0 : 1;
}

} // namespace cesim
