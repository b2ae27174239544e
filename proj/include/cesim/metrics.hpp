#pragma once

#include <functional>
#include <optional>

#include "cesim/environment.hpp"
#include "cesim/reporting.hpp"

namespace cesim {

using RecordEmitter = std::function<void(ReportRecord)>;

/// A callback body: reads the environment, emits records. Registered under
/// a callback id whose report mode routes the records to a sink.
using MetricFn = std::function<void(const Environment&, long tick, const RecordEmitter&)>;

/// One record per (subject, asset) with current residual and capacity.
MetricFn metric_assets(Scope scope);

/// Per app: mapping, status and the success rate so far.
MetricFn metric_placement_state();

/// Per flow: sum of processing times plus reserved-path latencies; the app
/// record is the max over flows (critical path). Unplaced apps emit null.
/// When `include_user_delay` is set, the user-delay of the flow's source
/// host is added as an extra source-side latency term.
MetricFn metric_response_time(bool include_user_delay);

std::optional<double> flow_response_time(const Environment& env,
                                         const AppId& app_id,
                                         const std::vector<ServiceId>& flow,
                                         bool include_user_delay);

MetricFn metric_alive_nodes();

/// Mean and max of delay(N) over nodes that can reach the hub.
MetricFn metric_user_delay();

/// Per node user count from the user-load policy.
MetricFn metric_user_counts();

/// Infrastructure snapshot with residuals as node/link attributes.
void write_snapshot(const Environment& env, const std::filesystem::path& run_dir, long tick);

/// Built-in callback registry used by the scenario layer.
MetricFn make_metric(const std::string& name, const nlohmann::json& params);
bool is_known_metric(const std::string& name);

} // namespace cesim
