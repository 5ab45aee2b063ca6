// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "anapr/geometry.hpp"
#include "anapr/netlist.hpp"
#include "anapr/tech.hpp"

namespace anapr {

struct GridConfig {
  int resolution = 256;
  double cell_pitch = 1.0;     // microns per cell
  double target_aspect = 1.0;  // width / height
  double drr_margin = 3.0;     // zeta, cells
  void validate() const;
};

// Routing room reserved around a device, in cells per side.
struct Padding {
  int horizontal = 0;  // left and right
  int vertical = 0;    // bottom and top
  bool operator==(const Padding&) const = default;
};

struct Placement {
  std::size_t device = 0;
  int variant = 0;
  int x = 0;  // lower-left cell of the unpadded body
  int y = 0;
  Padding pad;
  bool operator==(const Placement&) const = default;
};

// Indexed by device; nullopt for devices not placed yet.
using PlacementMap = std::vector<std::optional<Placement>>;

CellRect body_rect(const Netlist& nl, const Placement& p);
CellRect padded_rect(const Netlist& nl, const Placement& p);
// Absolute pin location in cells.
Point pin_position(const Netlist& nl, std::size_t pin, const Placement& p);

// Dynamic routing-resource padding of one device:
//   lambda = zeta + |pins in that direction| * (max spacing + max width)
// evaluated in microns and rounded up to whole cells. Horizontal pins pad
// left/right, vertical pins pad bottom/top.
Padding drr_padding(const Netlist& nl, std::size_t device, const TechRules& tech,
                    const GridConfig& grid);
std::vector<Padding> compute_paddings(const Netlist& nl, const TechRules& tech,
                                      const GridConfig& grid, bool drr_enabled);

// Sum of per-net bounding-box half perimeters over placed pins, in microns.
double recompute_hpwl(const PlacementMap& placements, const Netlist& nl, double cell_pitch);

struct AreaStats {
  CellRect bbox;               // of unpadded bodies
  long long device_area = 0;   // sum of unpadded body areas
  double dead_space = 0.0;     // 1 - device_area / bbox area, 0 when nothing is placed
  double aspect = 0.0;         // bbox width / height
};
AreaStats area_stats(const PlacementMap& placements, const Netlist& nl);

// Alignment: members share the origin coordinate across the axis
// (horizontal -> same y, vertical -> same x). Symmetry: members taken in
// pairs mirror about one common axis line, an odd trailing member sits on it.
bool constraints_satisfied(const PlacementMap& placements, const Netlist& nl);

struct RewardWeights {
  double alpha = 10.0;
  double beta = 100.0;
  double gamma = 5.0;
  double violation_penalty = -1000.0;
  double hpwl_min = 1.0;  // microns
};

// -(alpha * F / sum A + beta * HPWL / HPWL_min + gamma * (Ar* - Ar)^2)
double final_reward(const AreaStats& area, double hpwl, double target_aspect,
                    const RewardWeights& w);

enum class PlacementOrder { area_desc, input, random };

struct EnvOptions {
  GridConfig grid;
  RewardWeights weights;
  bool drr = true;
  PlacementOrder order = PlacementOrder::area_desc;
  std::uint64_t seed = 0;  // random order and HPWL_min estimation
  int hpwl_budget = 20000;
  // When set, HPWL_min is taken as given instead of estimated.
  std::optional<double> hpwl_min;
  // When non-empty, replaces the DRR computation.
  std::vector<Padding> paddings;
  double dead_space_weight = 1.0;
};

struct Action {
  std::size_t device = 0;
  int variant = 0;
  int x = 0;
  int y = 0;
  bool operator==(const Action&) const = default;
};

// Legal-action mask over (variant, x, y); variants a device lacks are false.
class ActionMask {
public:
  ActionMask() = default;
  explicit ActionMask(int resolution)
      : resolution_(resolution),
        bits_(static_cast<std::size_t>(3) * resolution * resolution, 0) {}

  int resolution() const { return resolution_; }
  bool at(int variant, int x, int y) const { return bits_[index(variant, x, y)] != 0; }
  void set(int variant, int x, int y, bool v) { bits_[index(variant, x, y)] = v ? 1 : 0; }
  std::size_t count() const;
  std::size_t count(int variant) const;
  bool any() const { return count() > 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

private:
  std::size_t index(int v, int x, int y) const {
    return (static_cast<std::size_t>(v) * resolution_ + static_cast<std::size_t>(y)) * resolution_ +
           static_cast<std::size_t>(x);
  }
  int resolution_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct FloorplanState {
  int resolution = 0;
  std::vector<std::uint8_t> occupancy;  // row-major, union of padded footprints
  PlacementMap placements;
  std::size_t step = 0;
  std::vector<std::size_t> order;
  double hpwl = 0.0;        // microns
  double dead_space = 0.0;  // fraction
  bool terminal = false;
  bool stalled = false;

  bool occupied(int x, int y) const {
    return occupancy[static_cast<std::size_t>(y) * resolution + static_cast<std::size_t>(x)] != 0;
  }
  bool operator==(const FloorplanState&) const = default;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
};

// The placement MDP. Immutable after construction; states are value
// snapshots so one environment can serve any number of concurrent drivers.
class FloorplanEnv {
public:
  FloorplanEnv(Netlist netlist, const TechRules& tech, EnvOptions options = {});

  const Netlist& netlist() const { return netlist_; }
  const GridConfig& grid() const { return options_.grid; }
  const EnvOptions& options() const { return options_; }
  const RewardWeights& weights() const { return weights_; }
  const std::vector<Padding>& paddings() const { return paddings_; }
  const std::vector<std::size_t>& order() const { return order_; }
  double hpwl_min() const { return weights_.hpwl_min; }

  FloorplanState reset() const;
  std::optional<std::size_t> next_device(const FloorplanState& s) const;
  Placement make_placement(std::size_t device, int variant, int x, int y) const;

  ActionMask legal_action_mask(const FloorplanState& s, std::size_t device) const;
  // Applies the action in place. Throws IllegalActionError and leaves the
  // state untouched when the action is not legal.
  StepResult step(FloorplanState& s, const Action& a) const;
  double terminal_reward(const FloorplanState& s) const;

  // Reward of a set of placements (the penalty when incomplete or a
  // constraint is violated). Shared by the annealer so both report alike.
  double evaluate(const PlacementMap& placements) const;
  // True when `p` fits on the grid and its padded footprint is disjoint
  // from every other placed device.
  bool fits(const PlacementMap& placements, const Placement& p) const;
  // Rebuilds a state by stepping every device in environment order. The
  // first device missing from `placements` ends the episode as stalled.
  FloorplanState replay(const PlacementMap& placements) const;

  nlohmann::json checkpoint(const FloorplanState& s) const;
  FloorplanState restore(const nlohmann::json& j) const;

private:
  Netlist netlist_;
  EnvOptions options_;
  RewardWeights weights_;
  std::vector<Padding> paddings_;
  std::vector<std::size_t> order_;
};

// Best HPWL the annealer reaches within `budget` steps; 1.0 when the
// netlist has no net with two or more pins. Cached per input fingerprint.
double estimate_hpwl_min(const Netlist& nl, const GridConfig& grid,
                         std::span<const Padding> paddings, int budget, std::uint64_t seed = 0);
std::size_t hpwl_min_cache_size();

}  // namespace anapr
