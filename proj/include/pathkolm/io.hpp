#pragma once

#include <json.hpp>

#include <iosfwd>
#include <string>

#include "pathkolm/path_space.hpp"

namespace pathkolm {

/// CSV with columns node_time,<prefix>_1..<prefix>_d; one row per stored node.
/// `first_node` offsets the reported times (a path stored from node k0).
void write_path_csv(std::ostream& os, const ForwardPath& path, const std::string& prefix = "v", int first_node = 0);
ForwardPath read_path_csv(std::istream& is, const GridSpec& grid);

nlohmann::json to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);

/// {grid:{T,N,d}, endpoint:[...], window:[[...]], jump_at:null|index, class:"..."}
nlohmann::json to_json(const WindowPair& pair);
/// Re-validates the class claim of the document.
WindowPair pair_from_json(const nlohmann::json& j);

}  // namespace pathkolm
