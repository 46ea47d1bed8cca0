#include "pathkolm/io.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace pathkolm {

void write_path_csv(std::ostream& os, const ForwardPath& path, const std::string& prefix, int first_node) {
  const GridSpec& grid = path.grid();
  os << "node_time";
  for (int i = 1; i <= grid.dimension(); ++i) os << ',' << prefix << '_' << i;
  os << '\n' << std::setprecision(17);
  for (int k = 0; k < path.size(); ++k) {
    os << grid.time(first_node + k);
    for (int i = 0; i < grid.dimension(); ++i) os << ',' << path.values()(k, i);
    os << '\n';
  }
}

ForwardPath read_path_csv(std::istream& is, const GridSpec& grid) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("node_time", 0) != 0) throw DomainError("path CSV lacks its header");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != grid.dimension() + 1) throw DomainError("path CSV row has the wrong width");
    if (grid.node_index(row[0]) != static_cast<int>(rows.size())) throw DomainError("path CSV rows are not consecutive nodes");
    rows.push_back(std::move(row));
  }
  Samples<double> values(rows.size(), grid.dimension());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (int i = 0; i < grid.dimension(); ++i) values(k, i) = rows[k][i + 1];
  return ForwardPath(grid, std::move(values));
}

nlohmann::json to_json(const GridSpec& grid) {
  return {{"T", grid.horizon()}, {"N", grid.steps()}, {"d", grid.dimension()}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("T") || !j.contains("N") || !j.contains("d"))
    throw ConfigError("grid", "expected {T, N, d}");
  try {
    return GridSpec(j["T"].get<double>(), j["N"].get<int>(), j["d"].get<int>());
  } catch (const DomainError& e) {
    throw ConfigError("grid", e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("grid", e.what());
  }
}

nlohmann::json to_json(const WindowPair& pair) {
  nlohmann::json window = nlohmann::json::array();
  for (Eigen::Index j = 0; j < pair.window().rows(); ++j) {
    std::vector<double> row(pair.window().row(j).data(), pair.window().row(j).data() + pair.window().cols());
    window.push_back(row);
  }
  std::vector<double> x(pair.endpoint().data(), pair.endpoint().data() + pair.endpoint().size());
  nlohmann::json out = {{"grid", to_json(pair.grid())},
                        {"endpoint", x},
                        {"window", window},
                        {"jump_at", nullptr},
                        {"class", std::string(to_string(pair.pair_class()))}};
  if (pair.jump_at()) out["jump_at"] = *pair.jump_at();
  return out;
}

WindowPair pair_from_json(const nlohmann::json& j) {
  const GridSpec grid = grid_from_json(j.at("grid"));
  const auto x = j.at("endpoint").get<std::vector<double>>();
  const auto w = j.at("window").get<std::vector<std::vector<double>>>();
  if (static_cast<int>(x.size()) != grid.dimension()) throw ConfigError("endpoint", "dimension mismatch");
  if (static_cast<int>(w.size()) != grid.steps()) throw ConfigError("window", "expected N rows");
  Samples<double> window(grid.steps(), grid.dimension());
  for (int r = 0; r < grid.steps(); ++r) {
    if (static_cast<int>(w[r].size()) != grid.dimension()) throw ConfigError("window", "row width mismatch");
    for (int i = 0; i < grid.dimension(); ++i) window(r, i) = w[r][i];
  }
  std::optional<int> jump;
  if (j.contains("jump_at") && !j["jump_at"].is_null()) jump = j["jump_at"].get<int>();
  PairClass cls = PairClass::general;
  try {
    cls = pair_class_from_string(j.value("class", std::string("D")));
  } catch (const DomainError& e) {
    throw ConfigError("class", e.what());
  }
  Vector endpoint = Eigen::Map<const Vector>(x.data(), grid.dimension());
  try {
    return WindowPair(grid, std::move(endpoint), std::move(window), cls, jump);
  } catch (const DomainError& e) {
    throw ConfigError("class", e.what());
  }
}

}  // namespace pathkolm
