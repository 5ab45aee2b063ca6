// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "anapr/routing_graph.hpp"
#include "anapr/tech.hpp"

namespace anapr {

enum class Rule : std::uint8_t {
  min_length,
  min_area,
  eol_spacing,
  parallel_spacing,
  obstacle_overlap,
  bend_excess
};

struct Violation {
  Rule rule = Rule::min_length;
  int net = -1;
  int layer = -1;  // -1 when the rule is not tied to a layer
  Rect offender;
  std::optional<GeomRecord> counterpart;
  // Segment centre, or the centre of the offending line end for EOL.
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Violation&) const = default;
};

bool operator<(const Violation& a, const Violation& b);
const char* to_string(Rule r);
nlohmann::json to_json(const Violation& v);

// Rules for one candidate wire against the committed geometry, foreign
// nets only. A zero-length candidate is a via landing pad: it takes the
// spacing, end-of-line and obstacle rules but no length or area rule.
//
// Along-axis extent [u0,u1], lateral extent [v0,v1] of the physical rect:
//   parallel_spacing  foreign metal inside (u0,u1) x (v0-s, v1+s)
//   eol_spacing       foreign metal inside (u1, u1+space) x (v0-within, v1+within)
//                     when foreign metal also sits in (u1-par_width, u1) x
//                     (v1, v1+par_space) or its mirror below; same at u0
//   obstacle_overlap  interior overlap with a device body or foreign pin pad
std::vector<Violation> check_segment(const WireSegment& candidate, const GeometryIndex& index,
                                     const TechRules& tech, int net);
std::vector<Violation> check_via(Point at, const GeometryIndex& index, const TechRules& tech, int net);

// Every segment and via of the route, plus bend_excess for connections
// with more than tech.bend_cap direction changes. Throws ContractError
// when a connection path is not a chain of graph edges.
std::vector<Violation> check_route(const Route& route, const RoutingGraph& graph);

// 1 when materialising the step from -> to (a unit track step or a via)
// would break a spacing, end-of-line or obstacle rule.
bool violation_indicator(const RoutingGraph& graph, std::uint32_t from, std::uint32_t to, int net);

enum class StepClass { clean, movable, fixed };

// As violation_indicator, but tells apart steps that break a rule against
// foreign pin pads (fixed) from steps that only crowd routed metal.
StepClass classify_step(const RoutingGraph& graph, std::uint32_t from, std::uint32_t to, int net);

}  // namespace anapr
