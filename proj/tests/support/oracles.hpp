// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations the tests compare against.
#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "anapr/drc.hpp"
#include "anapr/floorplan.hpp"
#include "anapr/netlist.hpp"
#include "anapr/router.hpp"
#include "anapr/routing_graph.hpp"

namespace anapr::testing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Plain Dijkstra over (vertex, last planar axis, bends) with the search
// cost function spelled out again from scratch.
double dijkstra_cost(const RoutingGraph& g, const RVertex& s, const RVertex& t, int net, const SearchParams& p);

// Random 2-layer lattice of side n with random single-cell obstacles.
struct RandomGrid {
  RoutingGraph graph;
  RVertex source;
  RVertex target;
};
RandomGrid random_grid(std::mt19937_64& rng, int n, double obstacle_fraction, const TechRules& tech);

// Violation set of check_segment as (rule, counterpart record id) pairs,
// computed by sampling the open windows at quarter-step points.
using ViolationKey = std::tuple<int, std::uint64_t>;
std::set<ViolationKey> raster_violations(const WireSegment& s, const GeometryIndex& index, const TechRules& tech,
                                         int net);
std::set<ViolationKey> keys_of(std::span<const Violation> v);

// Minimum spanning tree weight by enumerating every labelled tree
// (Pruefer sequences); n <= 7.
int brute_force_mst(std::span<const RVertex> terminals);

// Minimum terminal HPWL over every side combination.
long long brute_force_sides(std::span<const std::vector<Terminal>> options);

// Terminal reward recomputed from raw placements.
double recompute_reward(const Netlist& nl, const PlacementMap& m, const GridConfig& grid, const RewardWeights& w);

// DRR padding recomputed from the device pins.
Padding recompute_padding(const Netlist& nl, std::size_t device, const TechRules& tech, const GridConfig& grid);

// Union of padded footprints as a row-major mask.
std::vector<std::uint8_t> footprint_mask(const Netlist& nl, const PlacementMap& m, int resolution);

// --- fixtures ---------------------------------------------------------------------

// Device with pins given as {id, dx, dy, dir}.
struct PinSpec {
  std::string id;
  int dx;
  int dy;
  const char* dir;
};
nlohmann::json device_json(const std::string& id, std::vector<std::pair<int, int>> variants,
                           std::vector<PinSpec> pins, int cls = 0, const std::string& block = "B0");
nlohmann::json net_json(const std::string& id, std::vector<std::string> pins, const char* kind = "signal");
nlohmann::json netlist_json(nlohmann::json devices, nlohmann::json nets,
                            nlohmann::json constraints = nlohmann::json::array());

// Random small netlist: n devices of 3..6 cells, up to m two- or three-pin nets.
Netlist random_netlist(std::mt19937_64& rng, int devices, int nets);

// Two devices joined by one net, sides in 2..5, for exhaustive checks.
Netlist toy_pair(std::mt19937_64& rng);

// Best terminal reward over every legal placement of a two-device netlist.
double exhaustive_optimum(const FloorplanEnv& env);

// Two nets contending for a three-track corridor between two blocks. The
// longer net A takes the corridor first; B's direct path then breaks
// spacing against A and must learn to go around the upper block.
struct Corridor {
  RoutingGraph graph;
  std::vector<NetTask> tasks;
  SearchParams params;
};
Corridor corridor_fixture();

std::string data_dir();

}  // namespace anapr::testing
