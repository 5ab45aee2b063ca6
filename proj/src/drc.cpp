// SPDX-License-Identifier: Apache-2.0
#include "anapr/drc.hpp"

#include <algorithm>
#include <cstdlib>
#include <tuple>

#include "anapr/error.hpp"

namespace anapr {

namespace {
constexpr const char* kModule = "drc";

// Rectangle helper in segment-local (along, across) coordinates.
struct Frame {
  Axis axis;
  Rect make(double u0, double u1, double v0, double v1) const {
    return axis == Axis::horizontal ? Rect{u0, v0, u1, v1} : Rect{v0, u0, v1, u1};
  }
};

class Checker {
public:
  Checker(const GeometryIndex& index, const TechRules& tech, int net, std::vector<Violation>* out)
      : index_(index), tech_(tech), net_(net), out_(out) {}

  bool hit() const { return hit_; }

  // Spacing, end-of-line and obstacle rules for one rect on one layer.
  void metal(int layer, const Rect& r) {
    const Frame f{tech_.axis(layer)};
    const bool horizontal = f.axis == Axis::horizontal;
    const double u0 = horizontal ? r.xlo : r.ylo;
    const double u1 = horizontal ? r.xhi : r.yhi;
    const double v0 = horizontal ? r.ylo : r.xlo;
    const double v1 = horizontal ? r.yhi : r.xhi;
    const double vc = (v0 + v1) / 2;
    const double s = tech_.parallel_spacing;
    const EolRule& e = tech_.eol;

    region(Rule::parallel_spacing, layer, r, f.make(u0, u1, v0 - s, v1 + s), (u0 + u1) / 2, vc, f);
    if (done()) return;

    const bool par_high = index_.any_foreign(layer, f.make(u1 - e.par_width, u1, v1, v1 + e.par_space), net_) ||
                          index_.any_foreign(layer, f.make(u1 - e.par_width, u1, v0 - e.par_space, v0), net_);
    if (par_high) region(Rule::eol_spacing, layer, r, f.make(u1, u1 + e.space, v0 - e.within, v1 + e.within), u1, vc, f);
    if (done()) return;
    const bool par_low = index_.any_foreign(layer, f.make(u0, u0 + e.par_width, v1, v1 + e.par_space), net_) ||
                         index_.any_foreign(layer, f.make(u0, u0 + e.par_width, v0 - e.par_space, v0), net_);
    if (par_low) region(Rule::eol_spacing, layer, r, f.make(u0 - e.space, u0, v0 - e.within, v1 + e.within), u0, vc, f);
    if (done()) return;

    if (!out_) {
      hit_ = index_.any_foreign_obstacle(r, net_);
      return;
    }
    for (const auto& rec : index_.query_obstacles(r)) {
      if (rec.net == net_) continue;
      push({Rule::obstacle_overlap, net_, layer, r, rec, (r.xlo + r.xhi) / 2, (r.ylo + r.yhi) / 2});
    }
  }

  void push(Violation v) {
    hit_ = true;
    if (out_) out_->push_back(std::move(v));
  }

private:
  bool done() const { return !out_ && hit_; }

  void region(Rule rule, int layer, const Rect& r, const Rect& window, double u, double v, const Frame& f) {
    const double x = f.axis == Axis::horizontal ? u : v;
    const double y = f.axis == Axis::horizontal ? v : u;
    if (!out_) {
      hit_ = index_.any_foreign(layer, window, net_);
      return;
    }
    for (const auto& rec : index_.query(layer, window)) {
      if (rec.net == net_) continue;
      push({rule, net_, layer, r, rec, x, y});
    }
  }

  const GeometryIndex& index_;
  const TechRules& tech_;
  int net_;
  std::vector<Violation>* out_;
  bool hit_ = false;
};

}  // namespace

bool operator<(const Violation& a, const Violation& b) {
  auto key = [](const Violation& v) {
    return std::make_tuple(static_cast<int>(v.rule), v.net, v.layer, v.offender.xlo, v.offender.ylo, v.offender.xhi,
                           v.offender.yhi, v.counterpart ? v.counterpart->id : 0, v.x, v.y);
  };
  return key(a) < key(b);
}

const char* to_string(Rule r) {
  switch (r) {
    case Rule::min_length: return "min_length";
    case Rule::min_area: return "min_area";
    case Rule::eol_spacing: return "eol_spacing";
    case Rule::parallel_spacing: return "parallel_spacing";
    case Rule::obstacle_overlap: return "obstacle_overlap";
    case Rule::bend_excess: return "bend_excess";
  }
  return "?";
}

nlohmann::json to_json(const Violation& v) {
  auto rect = [](const Rect& r) { return nlohmann::json::array({r.xlo, r.ylo, r.xhi, r.yhi}); };
  nlohmann::json j{{"rule", to_string(v.rule)}, {"net", v.net},       {"layer", v.layer},
                   {"rect", rect(v.offender)},  {"at", {v.x, v.y}}};
  if (v.counterpart) {
    j["counterpart"] = {{"net", v.counterpart->net}, {"layer", v.counterpart->layer}, {"rect", rect(v.counterpart->rect)}};
  }
  return j;
}

std::vector<Violation> check_segment(const WireSegment& s, const GeometryIndex& index, const TechRules& tech, int net) {
  if (s.from.x != s.to.x && s.from.y != s.to.y) throw ContractError(kModule, "segment is not axis-aligned");
  const bool pad = s.from == s.to;
  if (!pad) {
    const Axis along = s.from.y == s.to.y ? Axis::horizontal : Axis::vertical;
    if (along != tech.axis(s.layer)) throw ContractError(kModule, "segment runs against its layer direction");
  }
  std::vector<Violation> out;
  const Rect r = segment_rect(s);
  const double cx = (r.xlo + r.xhi) / 2, cy = (r.ylo + r.yhi) / 2;
  if (!pad) {
    const double length = std::abs(s.to.x - s.from.x) + std::abs(s.to.y - s.from.y) + s.width;
    if (length < tech.min_wire_length) out.push_back({Rule::min_length, net, s.layer, r, std::nullopt, cx, cy});
    if (length * s.width < tech.min_wire_area) out.push_back({Rule::min_area, net, s.layer, r, std::nullopt, cx, cy});
  }
  Checker c(index, tech, net, &out);
  c.metal(s.layer, r);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Violation> check_via(Point at, const GeometryIndex& index, const TechRules& tech, int net) {
  std::vector<Violation> out;
  for (int layer = 0; layer < 2; ++layer) {
    auto v = check_segment({layer, at, at, tech.width(layer)}, index, tech, net);
    out.insert(out.end(), v.begin(), v.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Violation> check_route(const Route& route, const RoutingGraph& graph) {
  const TechRules& tech = graph.tech();
  std::vector<Violation> out;
  for (const auto& c : route.connections) {
    for (std::size_t i = 1; i < c.path.size(); ++i) {
      const RVertex& a = c.path[i - 1];
      const RVertex& b = c.path[i];
      const int dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y), dz = std::abs(a.layer - b.layer);
      bool ok = dx + dy + dz == 1 && graph.contains(a) && graph.contains(b);
      if (ok && dz == 0) ok = (dx == 1) == (tech.axis(a.layer) == Axis::horizontal);
      if (!ok) throw ContractError(kModule, "route of net " + std::to_string(route.net) + " is not a connected chain");
    }
    for (const auto& s : c.segments) {
      auto v = check_segment(s, graph.geometry(), tech, route.net);
      out.insert(out.end(), v.begin(), v.end());
    }
    for (const auto& p : c.vias) {
      auto v = check_via(p, graph.geometry(), tech, route.net);
      out.insert(out.end(), v.begin(), v.end());
    }
    if (c.bends > tech.bend_cap && !c.path.empty()) {
      Rect box{1e300, 1e300, -1e300, -1e300};
      for (const auto& p : c.path) {
        box.xlo = std::min(box.xlo, p.x - 0.5);
        box.ylo = std::min(box.ylo, p.y - 0.5);
        box.xhi = std::max(box.xhi, p.x + 0.5);
        box.yhi = std::max(box.yhi, p.y + 0.5);
      }
      out.push_back({Rule::bend_excess, route.net, -1, box, std::nullopt, (box.xlo + box.xhi) / 2,
                     (box.ylo + box.yhi) / 2});
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool violation_indicator(const RoutingGraph& graph, std::uint32_t from, std::uint32_t to, int net) {
  const TechRules& tech = graph.tech();
  const RVertex& a = graph.vertex(from);
  const RVertex& b = graph.vertex(to);
  Checker c(graph.geometry(), tech, net, nullptr);
  if (a.layer == b.layer) {
    Point p{a.x, a.y}, q{b.x, b.y};
    if (q < p) std::swap(p, q);
    c.metal(a.layer, segment_rect({a.layer, p, q, tech.width(a.layer)}));
    return c.hit();
  }
  for (int layer = 0; layer < 2 && !c.hit(); ++layer) c.metal(layer, via_rect({a.x, a.y}, tech.width(layer)));
  return c.hit();
}

StepClass classify_step(const RoutingGraph& graph, std::uint32_t from, std::uint32_t to, int net) {
  if (!violation_indicator(graph, from, to, net)) return StepClass::clean;
  const TechRules& tech = graph.tech();
  const RVertex& a = graph.vertex(from);
  const RVertex& b = graph.vertex(to);
  std::vector<Violation> found;
  Checker c(graph.geometry(), tech, net, &found);
  if (a.layer == b.layer) {
    Point p{a.x, a.y}, q{b.x, b.y};
    if (q < p) std::swap(p, q);
    c.metal(a.layer, segment_rect({a.layer, p, q, tech.width(a.layer)}));
  } else {
    for (int layer = 0; layer < 2; ++layer) c.metal(layer, via_rect({a.x, a.y}, tech.width(layer)));
  }
  const bool pad = std::any_of(found.begin(), found.end(), [](const Violation& v) {
    return v.counterpart && v.counterpart->kind == GeomKind::pin_pad;
  });
  return pad ? StepClass::fixed : StepClass::movable;
}

}  // namespace anapr
