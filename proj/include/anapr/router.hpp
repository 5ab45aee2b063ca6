// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anapr/floorplan.hpp"
#include "anapr/netlist.hpp"
#include "anapr/routing_graph.hpp"
#include "anapr/tech.hpp"

namespace anapr {

struct SearchParams {
  double kappa = 3.0;
  double q = 0.0001;
  double via_cost = 10.0;
  double drc_cost = 1000.0;
  double bend_penalty = 2.0;
  int max_iterations = 35;
  bool use_history = true;
  int bend_cap = -1;  // direction changes per connection, negative for no limit
  void validate() const;
};

// Costs and bend cap taken from the technology, search constants at
// their defaults.
SearchParams search_params(const TechRules& tech);

enum class Side : std::uint8_t { left, right, bottom, top };
const char* to_string(Side s);

struct Terminal {
  RVertex at;
  std::size_t pin = 0;
  Side side = Side::left;
  bool operator==(const Terminal&) const = default;
};

struct NetTask {
  int net = -1;
  std::string id;
  std::vector<Terminal> terminals;
  int failure_count = 0;
  double hpwl = 0.0;  // microns, over the projected terminals
  int pin_count = 0;
  bool routable = true;
  std::string diagnostic;
};

// Candidate boundary vertices of one placed pin: left/right for
// horizontal pins, bottom/top for vertical ones. On each side the vertex
// slides along the body edge, nearest first, to one at least a routing
// pitch from every foreign terminal; failing that it stays put. Sides
// that fall on an obstacle, outside the grid or on a vertex owned by
// another net are dropped.
std::vector<Terminal> pin_sides(const Netlist& nl, std::size_t pin, const PlacementMap& placements,
                                const RoutingGraph& graph, int net);

// Side assignment of one net minimising the HPWL of the terminals.
// Exhaustive up to six pins, greedy per pin beyond. nullopt when some pin
// has no usable side.
std::optional<std::vector<Terminal>> assign_sides(std::span<const std::vector<Terminal>> options);

// Projects every net in id order and registers the chosen terminals as
// owned vertices and pin pads in `graph`.
std::vector<NetTask> project_pins(const Netlist& nl, const PlacementMap& placements, RoutingGraph& graph);

// Minimum spanning tree under Manhattan distance (layer ignored). Edges
// are pairs of terminal indices; ties go to the lower index pair.
std::vector<std::pair<std::size_t, std::size_t>> decompose_net(std::span<const RVertex> terminals);

// Descending (failure_count, hpwl, pin_count), then net ascending.
std::vector<std::size_t> order_nets(std::span<const NetTask> tasks);

struct SearchResult {
  bool found = false;
  Connection connection;
  std::size_t expanded = 0;
};

// Reusable buffers for repeated searches on one graph.
class SearchWorkspace {
public:
  SearchWorkspace();
  ~SearchWorkspace();
  SearchWorkspace(SearchWorkspace&&) noexcept;
  SearchWorkspace& operator=(SearchWorkspace&&) noexcept;
  struct Impl;
  Impl& impl() { return *impl_; }

private:
  std::unique_ptr<Impl> impl_;
};

// Bidirectional A* between two vertices with strict alternation. The
// state carries the axis of the last planar move, so the bend penalty is
// charged exactly on direction changes, and the bends spent so far when
// params.bend_cap is set; paths over the cap are never returned.
SearchResult astar_two_pin(const RoutingGraph& graph, const RVertex& source, const RVertex& target, int net,
                           const SearchParams& params, SearchWorkspace* workspace = nullptr);

// Cost of a vertex path under the search cost function.
double path_cost(const RoutingGraph& graph, std::span<const RVertex> path, int net, const SearchParams& params);

enum class NetStatus : std::uint8_t { routed, failed, unroutable };
const char* to_string(NetStatus s);

struct RouteEvent {
  enum class Kind : std::uint8_t { committed, search_failed, drc_failed, audit_failed };
  int iteration = 0;
  int net = -1;
  Kind kind = Kind::committed;
  std::vector<RVertex> credited;  // vertices that received history
};

struct RoutedLayout {
  std::vector<NetTask> tasks;                // indexed by net
  std::vector<std::optional<Route>> routes;  // indexed by net
  std::vector<NetStatus> status;             // indexed by net
  std::vector<RouteEvent> events;
  int iterations = 0;
  bool success = false;
  double wirelength_um = 0.0;
  int vias = 0;
  std::vector<std::string> failed_nets() const;
};

// Negotiated rip-up and reroute. Each iteration routes the pending nets in
// order_nets order. A net whose route breaks a rule gets history on its
// vertices (terminals excepted) and stays pending; the nets it ran into are
// ripped up and become pending too. Committed routes are re-checked at the
// end of every iteration.
RoutedLayout route_all(RoutingGraph& graph, std::vector<NetTask> tasks, const SearchParams& params);

struct RoutingRun {
  RoutingGraph graph;
  RoutedLayout layout;
};

RoutingRun route_placement(const Netlist& nl, const PlacementMap& placements, const TechRules& tech,
                           const SearchParams& params);

}  // namespace anapr
