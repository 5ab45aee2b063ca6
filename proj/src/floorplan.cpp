// SPDX-License-Identifier: Apache-2.0
#include "anapr/floorplan.hpp"

#include <cstdlib>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "anapr/error.hpp"

namespace anapr {

namespace {
constexpr const char* kModule = "floorplan";

std::string cell_name(int x, int y) {
  return "(" + std::to_string(x) + "," + std::to_string(y) + ")";
}

// Prefix sums over the occupancy grid: emptiness of any rectangle in O(1).
class OccupancySums {
public:
  explicit OccupancySums(const FloorplanState& s) : n_(s.resolution + 1), sums_(n_ * n_, 0) {
    for (int y = 0; y < s.resolution; ++y) {
      for (int x = 0; x < s.resolution; ++x) {
        sums_[at(x + 1, y + 1)] =
            (s.occupied(x, y) ? 1 : 0) + sums_[at(x, y + 1)] + sums_[at(x + 1, y)] - sums_[at(x, y)];
      }
    }
  }
  int count(const CellRect& r) const {
    return sums_[at(r.x1, r.y1)] - sums_[at(r.x0, r.y1)] - sums_[at(r.x1, r.y0)] + sums_[at(r.x0, r.y0)];
  }

private:
  std::size_t at(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(x);
  }
  int n_;
  std::vector<int> sums_;
};

// Doubled centre coordinate of a body along one axis.
long long doubled_centre(const CellRect& r, Axis a) {
  return a == Axis::vertical ? static_cast<long long>(r.x0) + r.x1 : static_cast<long long>(r.y0) + r.y1;
}

}  // namespace

void GridConfig::validate() const {
  if (resolution < 8) throw ValidationError(kModule, "grid resolution must be at least 8");
  if (!(cell_pitch > 0)) throw ValidationError(kModule, "cell pitch must be positive");
  if (!(target_aspect > 0)) throw ValidationError(kModule, "target aspect ratio must be positive");
  if (!(drr_margin >= 0)) throw ValidationError(kModule, "DRR margin must be non-negative");
}

CellRect body_rect(const Netlist& nl, const Placement& p) {
  const Shape& s = nl.device(p.device).variants.at(static_cast<std::size_t>(p.variant));
  return {p.x, p.y, p.x + s.width, p.y + s.height};
}

CellRect padded_rect(const Netlist& nl, const Placement& p) {
  CellRect r = body_rect(nl, p);
  return {r.x0 - p.pad.horizontal, r.y0 - p.pad.vertical, r.x1 + p.pad.horizontal,
          r.y1 + p.pad.vertical};
}

Point pin_position(const Netlist& nl, std::size_t pin, const Placement& p) {
  Point off = nl.pin_offset(pin, p.variant);
  return {p.x + off.x, p.y + off.y};
}

Padding drr_padding(const Netlist& nl, std::size_t device, const TechRules& tech,
                    const GridConfig& grid) {
  const Device& d = nl.device(device);
  int horizontal_pins = 0;
  int vertical_pins = 0;
  for (auto pi : d.pins) {
    (nl.pin(pi).direction == PinDirection::horizontal ? horizontal_pins : vertical_pins)++;
  }
  // Every net currently shares the technology minimum; the max over
  // Nets(i) therefore reduces to the technology values.
  const double spacing = tech.parallel_spacing * tech.grid_step;
  const double width = tech.max_width() * tech.grid_step;
  const double zeta = grid.drr_margin * grid.cell_pitch;
  auto to_cells = [&](int pins) {
    const double lambda = zeta + pins * (spacing + width);
    return static_cast<int>(std::ceil(lambda / grid.cell_pitch - 1e-9));
  };
  return {to_cells(horizontal_pins), to_cells(vertical_pins)};
}

std::vector<Padding> compute_paddings(const Netlist& nl, const TechRules& tech,
                                      const GridConfig& grid, bool drr_enabled) {
  std::vector<Padding> out(nl.devices().size());
  if (!drr_enabled) return out;
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = drr_padding(nl, d, tech, grid);
  return out;
}

double recompute_hpwl(const PlacementMap& placements, const Netlist& nl, double cell_pitch) {
  long long total = 0;
  for (const auto& net : nl.nets()) {
    int placed = 0;
    int xmin = std::numeric_limits<int>::max(), xmax = std::numeric_limits<int>::min();
    int ymin = xmin, ymax = xmax;
    for (auto pi : net.pins) {
      const auto& p = placements[nl.pin(pi).owner];
      if (!p) continue;
      Point q = pin_position(nl, pi, *p);
      xmin = std::min(xmin, q.x);
      xmax = std::max(xmax, q.x);
      ymin = std::min(ymin, q.y);
      ymax = std::max(ymax, q.y);
      ++placed;
    }
    if (placed >= 2) total += (xmax - xmin) + (ymax - ymin);
  }
  return static_cast<double>(total) * cell_pitch;
}

AreaStats area_stats(const PlacementMap& placements, const Netlist& nl) {
  AreaStats st;
  for (const auto& p : placements) {
    if (!p) continue;
    CellRect r = body_rect(nl, *p);
    st.bbox = st.bbox.united(r);
    st.device_area += r.area();
  }
  if (!st.bbox.empty()) {
    st.dead_space = 1.0 - static_cast<double>(st.device_area) / static_cast<double>(st.bbox.area());
    st.aspect = static_cast<double>(st.bbox.width()) / static_cast<double>(st.bbox.height());
  }
  return st;
}

bool constraints_satisfied(const PlacementMap& placements, const Netlist& nl) {
  for (const auto& c : nl.constraints()) {
    std::vector<CellRect> bodies;
    for (auto m : c.members) {
      if (!placements[m]) return false;
      bodies.push_back(body_rect(nl, *placements[m]));
    }
    if (c.kind == ConstraintKind::alignment) {
      for (const auto& b : bodies) {
        const bool same = c.axis == Axis::horizontal ? b.y0 == bodies.front().y0 : b.x0 == bodies.front().x0;
        if (!same) return false;
      }
      continue;
    }
    // Symmetry about a vertical axis mirrors x and keeps y, and vice versa.
    const Axis across = c.axis;
    std::optional<long long> axis2;  // doubled-doubled axis position
    std::size_t i = 0;
    for (; i + 1 < bodies.size(); i += 2) {
      const CellRect& a = bodies[i];
      const CellRect& b = bodies[i + 1];
      const bool level = across == Axis::vertical ? a.y0 == b.y0 : a.x0 == b.x0;
      if (!level) return false;
      const long long s = doubled_centre(a, across) + doubled_centre(b, across);
      if (axis2 && *axis2 != s) return false;
      axis2 = s;
    }
    if (i < bodies.size()) {
      const long long s = 2 * doubled_centre(bodies[i], across);
      if (axis2 && *axis2 != s) return false;
    }
  }
  return true;
}

double final_reward(const AreaStats& area, double hpwl, double target_aspect,
                    const RewardWeights& w) {
  const double area_ratio =
      area.device_area > 0 ? static_cast<double>(area.bbox.area()) / static_cast<double>(area.device_area)
                           : 1.0;
  const double aspect = area.bbox.empty() ? target_aspect : area.aspect;
  const double d = target_aspect - aspect;
  return -(w.alpha * area_ratio + w.beta * hpwl / w.hpwl_min + w.gamma * d * d);
}

std::size_t ActionMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::size_t ActionMask::count(int variant) const {
  const std::size_t plane = static_cast<std::size_t>(resolution_) * resolution_;
  auto first = bits_.begin() + static_cast<std::ptrdiff_t>(plane * static_cast<std::size_t>(variant));
  return static_cast<std::size_t>(std::count(first, first + static_cast<std::ptrdiff_t>(plane), std::uint8_t{1}));
}

// --- environment --------------------------------------------------------------

FloorplanEnv::FloorplanEnv(Netlist netlist, const TechRules& tech, EnvOptions options)
    : netlist_(std::move(netlist)), options_(std::move(options)), weights_(options_.weights) {
  options_.grid.validate();
  if (!(weights_.alpha > 0 && weights_.beta > 0 && weights_.gamma > 0)) {
    throw ValidationError(kModule, "reward weights must be positive");
  }
  const std::size_t n = netlist_.devices().size();
  if (!options_.paddings.empty()) {
    if (options_.paddings.size() != n) {
      throw ValidationError(kModule, "padding override does not match the device count");
    }
    paddings_ = options_.paddings;
  } else {
    paddings_ = compute_paddings(netlist_, tech, options_.grid, options_.drr);
  }

  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  switch (options_.order) {
    case PlacementOrder::area_desc:
      std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
        const long long aa = netlist_.device(a).variants.front().area();
        const long long ab = netlist_.device(b).variants.front().area();
        if (aa != ab) return aa > ab;
        return netlist_.device(a).id < netlist_.device(b).id;
      });
      break;
    case PlacementOrder::input:
      break;
    case PlacementOrder::random: {
      std::mt19937_64 rng(options_.seed);
      std::shuffle(order_.begin(), order_.end(), rng);
      break;
    }
  }

  if (options_.hpwl_min) {
    if (!(*options_.hpwl_min > 0)) throw ValidationError(kModule, "HPWL_min must be positive");
    weights_.hpwl_min = *options_.hpwl_min;
  } else {
    weights_.hpwl_min = estimate_hpwl_min(netlist_, options_.grid, paddings_, options_.hpwl_budget,
                                          options_.seed);
  }
}

Placement FloorplanEnv::make_placement(std::size_t device, int variant, int x, int y) const {
  return {device, variant, x, y, paddings_.at(device)};
}

FloorplanState FloorplanEnv::reset() const {
  FloorplanState s;
  const int r = options_.grid.resolution;
  s.resolution = r;
  s.occupancy.assign(static_cast<std::size_t>(r) * r, 0);
  s.placements.assign(netlist_.devices().size(), std::nullopt);
  s.order = order_;
  if (order_.empty()) {
    s.terminal = true;
  } else if (!legal_action_mask(s, order_.front()).any()) {
    s.terminal = true;
    s.stalled = true;
  }
  return s;
}

std::optional<std::size_t> FloorplanEnv::next_device(const FloorplanState& s) const {
  if (s.terminal || s.step >= s.order.size()) return std::nullopt;
  return s.order[s.step];
}

ActionMask FloorplanEnv::legal_action_mask(const FloorplanState& s, std::size_t device) const {
  const int r = s.resolution;
  ActionMask mask(r);
  if (s.placements.at(device)) return mask;
  OccupancySums sums(s);
  const Device& d = netlist_.device(device);
  const Padding& pad = paddings_[device];
  for (std::size_t v = 0; v < d.variants.size(); ++v) {
    const Shape& sh = d.variants[v];
    for (int y = pad.vertical; y + sh.height + pad.vertical <= r; ++y) {
      for (int x = pad.horizontal; x + sh.width + pad.horizontal <= r; ++x) {
        CellRect fp{x - pad.horizontal, y - pad.vertical, x + sh.width + pad.horizontal,
                    y + sh.height + pad.vertical};
        if (sums.count(fp) == 0) mask.set(static_cast<int>(v), x, y, true);
      }
    }
  }
  return mask;
}

StepResult FloorplanEnv::step(FloorplanState& s, const Action& a) const {
  if (s.terminal) throw IllegalActionError(kModule, "episode is already terminal");
  const std::size_t expected = s.order[s.step];
  if (a.device != expected) {
    throw IllegalActionError(kModule, "expected device '" + netlist_.device(expected).id +
                                          "' at step " + std::to_string(s.step));
  }
  const Device& d = netlist_.device(a.device);
  if (a.variant < 0 || a.variant >= static_cast<int>(d.variants.size())) {
    throw IllegalActionError(kModule, "device '" + d.id + "' has no variant " + std::to_string(a.variant));
  }
  const Placement p = make_placement(a.device, a.variant, a.x, a.y);
  const CellRect fp = padded_rect(netlist_, p);
  const int r = s.resolution;
  if (fp.x0 < 0 || fp.y0 < 0 || fp.x1 > r || fp.y1 > r) {
    const int cx = std::clamp(fp.x0 < 0 ? fp.x0 : fp.x1 - 1, -1, r);
    const int cy = std::clamp(fp.y0 < 0 ? fp.y0 : fp.y1 - 1, -1, r);
    throw IllegalActionError(kModule, "padded footprint of '" + d.id + "' leaves the grid at cell " +
                                          cell_name(cx, cy));
  }
  for (int y = fp.y0; y < fp.y1; ++y) {
    for (int x = fp.x0; x < fp.x1; ++x) {
      if (s.occupied(x, y)) {
        throw IllegalActionError(kModule, "cell " + cell_name(x, y) + " is already occupied");
      }
    }
  }

  const double hpwl_before = s.hpwl;
  const double ds_before = s.dead_space;
  for (int y = fp.y0; y < fp.y1; ++y) {
    std::fill_n(s.occupancy.begin() + static_cast<std::ptrdiff_t>(y) * r + fp.x0, fp.width(), 1);
  }
  s.placements[a.device] = p;
  ++s.step;
  s.hpwl = recompute_hpwl(s.placements, netlist_, options_.grid.cell_pitch);
  s.dead_space = area_stats(s.placements, netlist_).dead_space;

  StepResult res;
  res.reward = -((s.hpwl - hpwl_before) / weights_.hpwl_min +
                 options_.dead_space_weight * (s.dead_space - ds_before));
  if (s.step == s.order.size()) {
    s.terminal = true;
  } else if (!legal_action_mask(s, s.order[s.step]).any()) {
    s.terminal = true;
    s.stalled = true;
  }
  res.done = s.terminal;
  return res;
}

double FloorplanEnv::evaluate(const PlacementMap& placements) const {
  for (const auto& p : placements) {
    if (!p) return weights_.violation_penalty;
  }
  if (!constraints_satisfied(placements, netlist_)) return weights_.violation_penalty;
  const double hpwl = recompute_hpwl(placements, netlist_, options_.grid.cell_pitch);
  return final_reward(area_stats(placements, netlist_), hpwl, options_.grid.target_aspect, weights_);
}

double FloorplanEnv::terminal_reward(const FloorplanState& s) const {
  if (!s.terminal) throw ContractError(kModule, "terminal_reward called on a non-terminal state");
  if (s.stalled) return weights_.violation_penalty;
  return evaluate(s.placements);
}

bool FloorplanEnv::fits(const PlacementMap& placements, const Placement& p) const {
  const CellRect fp = padded_rect(netlist_, p);
  const int r = options_.grid.resolution;
  if (fp.x0 < 0 || fp.y0 < 0 || fp.x1 > r || fp.y1 > r) return false;
  for (const auto& q : placements) {
    if (!q || q->device == p.device) continue;
    if (padded_rect(netlist_, *q).intersects(fp)) return false;
  }
  return true;
}

FloorplanState FloorplanEnv::replay(const PlacementMap& placements) const {
  FloorplanState s = reset();
  while (auto d = next_device(s)) {
    const auto& p = placements.at(*d);
    if (!p) {
      s.terminal = true;
      s.stalled = true;
      break;
    }
    step(s, {*d, p->variant, p->x, p->y});
  }
  return s;
}

nlohmann::json FloorplanEnv::checkpoint(const FloorplanState& s) const {
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t i = 0; i < s.step; ++i) {
    const Placement& p = *s.placements[s.order[i]];
    steps.push_back({{"device", netlist_.device(p.device).id}, {"variant", p.variant}, {"x", p.x}, {"y", p.y}});
  }
  nlohmann::json order = nlohmann::json::array();
  for (auto d : s.order) order.push_back(netlist_.device(d).id);
  return {{"format_version", 1},
          {"kind", "floorplan_checkpoint"},
          {"netlist_fingerprint", std::to_string(netlist_.fingerprint())},
          {"resolution", s.resolution},
          {"order", order},
          {"steps", steps},
          {"terminal", s.terminal},
          {"stalled", s.stalled}};
}

FloorplanState FloorplanEnv::restore(const nlohmann::json& j) const {
  try {
    if (j.at("netlist_fingerprint").get<std::string>() != std::to_string(netlist_.fingerprint())) {
      throw ValidationError(kModule, "checkpoint belongs to a different netlist");
    }
    if (j.at("resolution").get<int>() != options_.grid.resolution) {
      throw ValidationError(kModule, "checkpoint grid resolution differs from the environment");
    }
    std::size_t i = 0;
    for (const auto& id : j.at("order")) {
      auto d = netlist_.find_device(id.get<std::string>());
      if (!d || i >= order_.size() || order_[i] != *d) {
        throw ValidationError(kModule, "checkpoint placement order differs from the environment");
      }
      ++i;
    }
    FloorplanState s = reset();
    for (const auto& js : j.at("steps")) {
      auto d = netlist_.find_device(js.at("device").get<std::string>());
      if (!d) throw ValidationError(kModule, "checkpoint references an unknown device");
      step(s, {*d, js.at("variant").get<int>(), js.at("x").get<int>(), js.at("y").get<int>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(kModule, std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace anapr
