// Copyright 2026 The rnx Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "rnx/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "rnx/error.hpp"
#include "rnx/io.hpp"

namespace rnx {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::size_t line = 0;
  std::string value;
};

class Parser {
 public:
  Parser(const std::string& key, const Entry& entry) : key_(key), entry_(entry) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(fmt::format("line {}: key '{}': {}", entry_.line, key_, what));
  }

  double real(const std::string& token) const {
    const char* begin = token.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (token.empty() || *end != '\0' || errno == ERANGE) fail("'" + token + "' is not a number");
    return v;
  }

  std::size_t count(const std::string& token) const {
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
      fail("'" + token + "' is not a non-negative integer");
    }
    errno = 0;
    const unsigned long long v = std::strtoull(token.c_str(), nullptr, 10);
    if (errno == ERANGE) fail("'" + token + "' is out of range");
    return static_cast<std::size_t>(v);
  }

  double real() const { return real(entry_.value); }
  std::size_t count() const { return count(entry_.value); }

  bool boolean() const {
    if (entry_.value == "true" || entry_.value == "1") return true;
    if (entry_.value == "false" || entry_.value == "0") return false;
    fail("'" + entry_.value + "' is not true or false");
  }

  std::vector<std::string> list() const {
    std::vector<std::string> out;
    if (entry_.value == "none" || entry_.value.empty()) return out;
    std::stringstream ss(entry_.value);
    for (std::string item; std::getline(ss, item, ',');) {
      item = trim(item);
      if (item.empty()) fail("empty list element");
      out.push_back(item);
    }
    return out;
  }

  std::vector<std::size_t> count_list() const {
    std::vector<std::size_t> out;
    for (const auto& s : list()) out.push_back(count(s));
    return out;
  }

  std::vector<double> real_list() const {
    std::vector<double> out;
    for (const auto& s : list()) out.push_back(real(s));
    return out;
  }

  std::array<std::size_t, 3> triple() const {
    const auto v = count_list();
    if (v.size() != 3) fail(fmt::format("expected 3 values, got {}", v.size()));
    return {v[0], v[1], v[2]};
  }

  const std::string& text() const { return entry_.value; }

 private:
  const std::string& key_;
  const Entry& entry_;
};

using Setter = std::function<void(DetectorConfig&, const Parser&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"pillar_size_x", [](DetectorConfig& c, const Parser& p) { c.graph.grid.pillar_x = p.real(); }},
      {"pillar_size_y", [](DetectorConfig& c, const Parser& p) { c.graph.grid.pillar_y = p.real(); }},
      {"pillar_size_z", [](DetectorConfig& c, const Parser& p) { c.graph.grid.pillar_z = p.real(); }},
      {"x_min", [](DetectorConfig& c, const Parser& p) { c.graph.grid.x_min = p.real(); }},
      {"x_max", [](DetectorConfig& c, const Parser& p) { c.graph.grid.x_max = p.real(); }},
      {"y_min", [](DetectorConfig& c, const Parser& p) { c.graph.grid.y_min = p.real(); }},
      {"y_max", [](DetectorConfig& c, const Parser& p) { c.graph.grid.y_max = p.real(); }},
      {"z_min", [](DetectorConfig& c, const Parser& p) { c.graph.grid.z_min = p.real(); }},
      {"z_max", [](DetectorConfig& c, const Parser& p) { c.graph.grid.z_max = p.real(); }},
      {"grid_w", [](DetectorConfig& c, const Parser& p) { c.graph.grid.width_cells = p.count(); }},
      {"grid_h", [](DetectorConfig& c, const Parser& p) { c.graph.grid.height_cells = p.count(); }},
      {"pillar_channels", [](DetectorConfig& c, const Parser& p) { c.graph.grid.channels = p.count(); }},
      {"max_points_per_pillar",
       [](DetectorConfig& c, const Parser& p) { c.graph.grid.max_points_per_pillar = p.count(); }},
      {"point_columns",
       [](DetectorConfig& c, const Parser& p) { c.graph.schema.column_names = p.list(); }},
      // Resolved against point_columns after all lines are read.
      {"selected_columns", [](DetectorConfig&, const Parser&) {}},
      {"stage_channels", [](DetectorConfig& c, const Parser& p) { c.graph.stage_channels = p.triple(); }},
      {"stage_depths", [](DetectorConfig& c, const Parser& p) { c.graph.stage_depths = p.triple(); }},
      {"rep_branches", [](DetectorConfig& c, const Parser& p) { c.graph.rep_branches = p.count(); }},
      {"backbone",
       [](DetectorConfig& c, const Parser& p) {
         if (p.text() == "rep_dwc") c.graph.backbone = BackboneKind::kRepDwc;
         else if (p.text() == "dense") c.graph.backbone = BackboneKind::kDense;
         else p.fail("expected rep_dwc or dense, got '" + p.text() + "'");
       }},
      {"neck",
       [](DetectorConfig& c, const Parser& p) {
         if (p.text() == "fpn") c.graph.neck = NeckKind::kFpn;
         else if (p.text() == "pan") c.graph.neck = NeckKind::kPan;
         else if (p.text() == "mdfen") c.graph.neck = NeckKind::kMdfen;
         else p.fail("expected fpn, pan or mdfen, got '" + p.text() + "'");
       }},
      {"dcn_positions",
       [](DetectorConfig& c, const Parser& p) {
         c.graph.dcn_positions.clear();
         for (std::size_t v : p.count_list()) {
           if (v < 1 || v > 5) p.fail(fmt::format("position {} is outside 1..5", v));
           if (!c.graph.dcn_positions.insert(static_cast<int>(v)).second) {
             p.fail(fmt::format("position {} listed twice", v));
           }
         }
       }},
      {"dcn_groups", [](DetectorConfig& c, const Parser& p) { c.graph.dcn_groups = p.count(); }},
      {"dcn_points", [](DetectorConfig& c, const Parser& p) { c.graph.dcn_points = p.count(); }},
      {"head_channels", [](DetectorConfig& c, const Parser& p) { c.graph.head_channels = p.count(); }},
      {"bn_eps", [](DetectorConfig& c, const Parser& p) { c.graph.bn_eps = static_cast<float>(p.real()); }},
      {"class_names", [](DetectorConfig& c, const Parser& p) { c.runtime.class_names = p.list(); }},
      {"iou_thresholds",
       [](DetectorConfig& c, const Parser& p) { c.runtime.iou_thresholds = p.real_list(); }},
      {"score_threshold",
       [](DetectorConfig& c, const Parser& p) { c.runtime.score_threshold = p.real(); }},
      {"top_k", [](DetectorConfig& c, const Parser& p) { c.runtime.top_k = p.count(); }},
      {"nms_iou_threshold",
       [](DetectorConfig& c, const Parser& p) { c.runtime.nms_iou_threshold = p.real(); }},
      {"loss_focal", [](DetectorConfig& c, const Parser& p) { c.loss.focal = p.real(); }},
      {"loss_l1", [](DetectorConfig& c, const Parser& p) { c.loss.l1 = p.real(); }},
      {"loss_iou", [](DetectorConfig& c, const Parser& p) { c.loss.iou = p.real(); }},
      {"loss_diou", [](DetectorConfig& c, const Parser& p) { c.loss.diou = p.real(); }},
      {"loss_corner", [](DetectorConfig& c, const Parser& p) { c.loss.corner_mse = p.real(); }},
      {"iou_loss_normalize",
       [](DetectorConfig& c, const Parser& p) { c.runtime.normalize_iou_loss = p.boolean(); }},
  };
  return table;
}

constexpr const char* kMandatory[] = {
    "pillar_size_x", "pillar_size_y", "pillar_size_z", "x_min",         "x_max",
    "y_min",         "y_max",         "z_min",         "z_max",         "grid_w",
    "grid_h",        "point_columns", "selected_columns", "class_names", "neck"};

}  // namespace

DetectorConfig parse_config(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: key '{}': expected 'key = value'", line_no, line));
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(fmt::format("line {}: key '': missing key before '='", line_no));
    if (!setters().count(key)) throw ConfigError(fmt::format("line {}: key '{}': unknown key", line_no, key));
    auto [it, inserted] = entries.emplace(key, Entry{line_no, trim(line.substr(eq + 1))});
    if (!inserted) {
      throw ConfigError(fmt::format("line {}: key '{}': duplicate key (first set on line {})", line_no,
                                    key, it->second.line));
    }
  }
  for (const char* key : kMandatory) {
    if (!entries.count(key)) {
      throw ConfigError(fmt::format("line {}: key '{}': missing mandatory key", line_no, key));
    }
  }

  DetectorConfig cfg;
  cfg.graph = GraphConfig{};
  for (const auto& [key, entry] : entries) setters().at(key)(cfg, Parser(key, entry));

  {
    const Entry& entry = entries.at("selected_columns");
    const Parser p("selected_columns", entry);
    cfg.graph.schema.selected_columns.clear();
    const auto& names = cfg.graph.schema.column_names;
    for (const auto& name : p.list()) {
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) p.fail("column '" + name + "' is not in point_columns");
      cfg.graph.schema.selected_columns.push_back(static_cast<std::size_t>(it - names.begin()));
    }
  }
  if (!entries.count("dcn_positions") && cfg.graph.neck != NeckKind::kMdfen) {
    cfg.graph.dcn_positions.clear();
  }

  const std::size_t nc = cfg.runtime.class_names.size();
  cfg.graph.num_classes = nc;
  if (!entries.count("iou_thresholds")) {
    cfg.runtime.iou_thresholds.assign(nc, 0.5);
  } else if (cfg.runtime.iou_thresholds.size() != nc) {
    Parser("iou_thresholds", entries.at("iou_thresholds"))
        .fail(fmt::format("expected {} values (one per class), got {}", nc,
                          cfg.runtime.iou_thresholds.size()));
  }

  // Cross-key checks are reported against the line of the key that owns them.
  const auto check = [&](const char* key, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      const auto it = entries.find(key);
      throw ConfigError(fmt::format("line {}: key '{}': {}", it == entries.end() ? 0 : it->second.line,
                                    key, e.what()));
    }
  };
  check("point_columns", [&] { cfg.graph.schema.validate(); });
  check("grid_w", [&] { cfg.graph.grid.validate(); });
  check("class_names", [&] {
    if (nc == 0) throw ConfigError("at least one class is required");
  });
  check("neck", [&] { cfg.graph.validate(); });
  check("loss_focal", [&] { cfg.loss.validate(); });
  return cfg;
}

DetectorConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_config(const DetectorConfig& cfg) {
  const GraphConfig& g = cfg.graph;
  std::vector<std::string> selected;
  for (std::size_t i : g.schema.selected_columns) selected.push_back(g.schema.column_names.at(i));
  std::string out;
  const auto line = [&out](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  line("pillar_size_x", fmt::format("{}", g.grid.pillar_x));
  line("pillar_size_y", fmt::format("{}", g.grid.pillar_y));
  line("pillar_size_z", fmt::format("{}", g.grid.pillar_z));
  line("x_min", fmt::format("{}", g.grid.x_min));
  line("x_max", fmt::format("{}", g.grid.x_max));
  line("y_min", fmt::format("{}", g.grid.y_min));
  line("y_max", fmt::format("{}", g.grid.y_max));
  line("z_min", fmt::format("{}", g.grid.z_min));
  line("z_max", fmt::format("{}", g.grid.z_max));
  line("grid_w", fmt::format("{}", g.grid.width_cells));
  line("grid_h", fmt::format("{}", g.grid.height_cells));
  line("pillar_channels", fmt::format("{}", g.grid.channels));
  line("max_points_per_pillar", fmt::format("{}", g.grid.max_points_per_pillar));
  line("point_columns", fmt::format("{}", fmt::join(g.schema.column_names, ", ")));
  line("selected_columns", fmt::format("{}", fmt::join(selected, ", ")));
  line("stage_channels", fmt::format("{}", fmt::join(g.stage_channels, ", ")));
  line("stage_depths", fmt::format("{}", fmt::join(g.stage_depths, ", ")));
  line("rep_branches", fmt::format("{}", g.rep_branches));
  line("backbone", g.backbone == BackboneKind::kDense ? "dense" : "rep_dwc");
  line("neck", to_string(g.neck));
  line("dcn_positions",
       g.dcn_positions.empty() ? "none" : fmt::format("{}", fmt::join(g.dcn_positions, ", ")));
  line("dcn_groups", fmt::format("{}", g.dcn_groups));
  line("dcn_points", fmt::format("{}", g.dcn_points));
  line("head_channels", fmt::format("{}", g.head_channels));
  line("bn_eps", fmt::format("{}", g.bn_eps));
  line("class_names", fmt::format("{}", fmt::join(cfg.runtime.class_names, ", ")));
  line("iou_thresholds", fmt::format("{}", fmt::join(cfg.runtime.iou_thresholds, ", ")));
  line("score_threshold", fmt::format("{}", cfg.runtime.score_threshold));
  line("top_k", fmt::format("{}", cfg.runtime.top_k));
  line("nms_iou_threshold", fmt::format("{}", cfg.runtime.nms_iou_threshold));
  line("loss_focal", fmt::format("{}", cfg.loss.focal));
  line("loss_l1", fmt::format("{}", cfg.loss.l1));
  line("loss_iou", fmt::format("{}", cfg.loss.iou));
  line("loss_diou", fmt::format("{}", cfg.loss.diou));
  line("loss_corner", fmt::format("{}", cfg.loss.corner_mse));
  line("iou_loss_normalize", cfg.runtime.normalize_iou_loss ? "true" : "false");
  return out;
}

}  // namespace rnx
