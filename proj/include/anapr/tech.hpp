// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "anapr/geometry.hpp"

namespace anapr {

struct LayerRule {
  Axis direction = Axis::horizontal;
  double width = 1.0;  // grid steps
};

struct EolRule {
  double space = 2.0;
  double within = 1.0;
  double par_width = 3.0;
  double par_space = 2.0;
};

// Technology and search-cost parameters for the two-layer router. Every
// length except grid_step is expressed in routing grid steps; grid_step
// itself is the physical pitch in microns.
struct TechRules {
  double grid_step = 1.0;
  std::array<LayerRule, 2> layers{LayerRule{Axis::horizontal, 1.0}, LayerRule{Axis::vertical, 1.0}};
  double via_cost = 10.0;
  double drc_penalty = 1000.0;
  double bend_penalty = 2.0;
  double min_wire_length = 2.0;
  double min_wire_area = 2.0;
  EolRule eol;
  double parallel_spacing = 2.0;
  // Post-route backstop on direction changes per two-pin connection.
  int bend_cap = 4;
  double history_increment = 5.0;
  int routing_margin = 10;

  Axis axis(int layer) const { return layers.at(static_cast<std::size_t>(layer)).direction; }
  double width(int layer) const { return layers.at(static_cast<std::size_t>(layer)).width; }
  double max_width() const { return std::max(layers[0].width, layers[1].width); }
  // Layer whose preferred direction is `a`.
  int layer_for(Axis a) const { return layers[0].direction == a ? 0 : 1; }
};

// Concrete desk-scale values used by tests and the bundled data files.
TechRules desk_tech();

void validate(const TechRules& tech);
TechRules tech_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TechRules& tech);
TechRules load_tech(const std::filesystem::path& path);

}  // namespace anapr
