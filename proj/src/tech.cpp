// SPDX-License-Identifier: Apache-2.0
#include "anapr/tech.hpp"

#include <fstream>

#include "anapr/error.hpp"

namespace anapr {

namespace {
constexpr const char* kModule = "tech";
using nlohmann::json;

Axis parse_dir(const std::string& s) {
  if (s == "horizontal" || s == "h") return Axis::horizontal;
  if (s == "vertical" || s == "v") return Axis::vertical;
  throw ParseError(kModule, "unknown layer direction '" + s + "'");
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(kModule, std::string("field '") + key + "' has the wrong type");
  }
}
}  // namespace

TechRules desk_tech() { return TechRules{}; }

void validate(const TechRules& t) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0)) throw ValidationError(kModule, std::string(what) + " must be positive");
  };
  positive(t.grid_step, "grid_step");
  positive(t.layers[0].width, "layer 0 width");
  positive(t.layers[1].width, "layer 1 width");
  positive(t.min_wire_length, "min_wire_length");
  positive(t.min_wire_area, "min_wire_area");
  positive(t.eol.space, "eol space");
  positive(t.eol.within, "eol within");
  positive(t.eol.par_width, "eol par_width");
  positive(t.eol.par_space, "eol par_space");
  positive(t.parallel_spacing, "parallel_spacing");
  if (t.layers[0].direction == t.layers[1].direction) {
    throw ValidationError(kModule, "the two routing layers must have different directions");
  }
  if (t.via_cost < 0 || t.drc_penalty < 0 || t.bend_penalty < 0) {
    throw ValidationError(kModule, "via, drc and bend costs must be non-negative");
  }
  if (t.bend_cap < 0 || t.routing_margin < 0 || !(t.history_increment > 0)) {
    throw ValidationError(kModule, "bend_cap, routing_margin or history_increment out of range");
  }
}

TechRules tech_from_json(const json& j) {
  if (!j.is_object()) throw ParseError(kModule, "tech root must be an object");
  TechRules t;
  t.grid_step = get(j, "grid_step", t.grid_step);
  if (j.contains("layers")) {
    const auto& jl = j.at("layers");
    if (!jl.is_array() || jl.size() != 2) {
      throw ValidationError(kModule, "exactly two routing layers are supported");
    }
    for (std::size_t i = 0; i < 2; ++i) {
      t.layers[i].direction = parse_dir(get<std::string>(jl[i], "dir", "horizontal"));
      t.layers[i].width = get(jl[i], "width", 1.0);
    }
  }
  t.via_cost = get(j, "via_cost", t.via_cost);
  t.drc_penalty = get(j, "drc_penalty", t.drc_penalty);
  t.bend_penalty = get(j, "bend_penalty", t.bend_penalty);
  t.min_wire_length = get(j, "min_wire_length", t.min_wire_length);
  t.min_wire_area = get(j, "min_wire_area", t.min_wire_area);
  if (j.contains("eol")) {
    const auto& je = j.at("eol");
    t.eol.space = get(je, "space", t.eol.space);
    t.eol.within = get(je, "within", t.eol.within);
    t.eol.par_width = get(je, "par_width", t.eol.par_width);
    t.eol.par_space = get(je, "par_space", t.eol.par_space);
  }
  t.parallel_spacing = get(j, "parallel_spacing", t.parallel_spacing);
  t.bend_cap = get(j, "bend_cap", t.bend_cap);
  t.history_increment = get(j, "history_increment", t.history_increment);
  t.routing_margin = get(j, "routing_margin", t.routing_margin);
  validate(t);
  return t;
}

json to_json(const TechRules& t) {
  json layers = json::array();
  for (const auto& l : t.layers) {
    layers.push_back({{"dir", l.direction == Axis::horizontal ? "horizontal" : "vertical"},
                      {"width", l.width}});
  }
  return {{"format_version", 1},
          {"grid_step", t.grid_step},
          {"layers", layers},
          {"via_cost", t.via_cost},
          {"drc_penalty", t.drc_penalty},
          {"bend_penalty", t.bend_penalty},
          {"min_wire_length", t.min_wire_length},
          {"min_wire_area", t.min_wire_area},
          {"eol",
           {{"space", t.eol.space},
            {"within", t.eol.within},
            {"par_width", t.eol.par_width},
            {"par_space", t.eol.par_space}}},
          {"parallel_spacing", t.parallel_spacing},
          {"bend_cap", t.bend_cap},
          {"history_increment", t.history_increment},
          {"routing_margin", t.routing_margin}};
}

TechRules load_tech(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(kModule, "cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(kModule, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return tech_from_json(j);
}

}  // namespace anapr
