#pragma once

#include <iosfwd>
#include <string>

#include "cesim/graph.hpp"

namespace cesim {

/// Serialize an infrastructure as GML: nodes carry their asset values plus
/// the active flag as flat attributes, links carry theirs. `extra_node`
/// can append additional flat attributes (residuals in snapshots).
using ExtraAttrsFn = std::function<std::vector<std::pair<std::string, std::string>>(const NodeId&)>;

std::string to_gml(const Infrastructure& infra,
                   const ExtraAttrsFn& extra_node = nullptr,
                   const ExtraAttrsFn& extra_link = nullptr);

void write_gml_file(const Infrastructure& infra, const std::string& path);

/// Parse a GML document back into an infrastructure governed by the given
/// spec sets. Attributes matching a declared asset become bucket entries.
Infrastructure infrastructure_from_gml(const std::string& text,
                                       SpecSetPtr node_specs,
                                       SpecSetPtr link_specs,
                                       SpecSetPtr path_specs);

Infrastructure read_gml_file(const std::string& path,
                             SpecSetPtr node_specs,
                             SpecSetPtr link_specs,
                             SpecSetPtr path_specs);

/// Application graphs use the same encoding: services as nodes with their
/// requirement attributes, interactions as edges, flows as repeated
/// graph-level `flow "s1|s2|..."` entries.
std::string application_to_gml(const Application& app);

Application application_from_gml(const std::string& text,
                                 std::string app_id,
                                 SpecSetPtr service_specs,
                                 SpecSetPtr interaction_specs);

/// Deterministic float formatting shared by every sink (9 significant digits).
std::string format_value(double value);
std::string format_asset(const AssetSpec& spec, const AssetValue& value);

} // namespace cesim
