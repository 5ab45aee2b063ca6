// SPDX-License-Identifier: Apache-2.0
#include "anapr/routing_graph.hpp"

#include <algorithm>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "anapr/error.hpp"

namespace anapr {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace {
constexpr const char* kModule = "routing-grid";

using BPoint = bg::model::point<double, 2, bg::cs::cartesian>;
using BBox = bg::model::box<BPoint>;
using Entry = std::pair<BBox, std::uint64_t>;
using Tree = bgi::rtree<Entry, bgi::quadratic<16>>;

BBox to_box(const Rect& r) { return {BPoint(r.xlo, r.ylo), BPoint(r.xhi, r.yhi)}; }
}  // namespace

Rect segment_rect(const WireSegment& s) {
  const double h = s.width / 2.0;
  return {s.from.x - h, s.from.y - h, s.to.x + h, s.to.y + h};
}

Rect via_rect(Point at, double width) {
  const double h = width / 2.0;
  return {at.x - h, at.y - h, at.x + h, at.y + h};
}

Rect cell_block_rect(const CellRect& c) { return {c.x0 - 0.5, c.y0 - 0.5, c.x1 - 0.5, c.y1 - 0.5}; }

std::vector<WireSegment> Route::segments() const {
  std::vector<WireSegment> out;
  for (const auto& c : connections) out.insert(out.end(), c.segments.begin(), c.segments.end());
  return out;
}

std::vector<Point> Route::vias() const {
  std::vector<Point> out;
  for (const auto& c : connections) out.insert(out.end(), c.vias.begin(), c.vias.end());
  return out;
}

std::vector<RVertex> Route::vertices() const {
  std::vector<RVertex> out;
  for (const auto& c : connections) out.insert(out.end(), c.path.begin(), c.path.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Connection materialize(std::vector<RVertex> path, const TechRules& tech) {
  Connection c;
  c.path = std::move(path);
  const auto& p = c.path;
  std::size_t run = 0;
  std::optional<Axis> last_axis;
  for (std::size_t i = 1; i <= p.size(); ++i) {
    if (i < p.size() && p[i].layer == p[run].layer) {
      const Axis a = p[i].x != p[i - 1].x ? Axis::horizontal : Axis::vertical;
      if (last_axis && *last_axis != a) ++c.bends;
      last_axis = a;
      continue;
    }
    if (i - 1 > run) {
      Point a{p[run].x, p[run].y};
      Point b{p[i - 1].x, p[i - 1].y};
      if (b < a) std::swap(a, b);
      c.segments.push_back({p[run].layer, a, b, tech.width(p[run].layer)});
    }
    if (i < p.size()) c.vias.push_back({p[i].x, p[i].y});
    run = i;
  }
  return c;
}

// --- GeometryIndex ----------------------------------------------------------------

struct GeometryIndex::Trees {
  std::array<Tree, 2> layers;
  Tree obstacles;
};

GeometryIndex::GeometryIndex() : trees_(std::make_unique<Trees>()) {}
GeometryIndex::~GeometryIndex() = default;
GeometryIndex::GeometryIndex(const GeometryIndex& o)
    : trees_(std::make_unique<Trees>(*o.trees_)), records_(o.records_), next_id_(o.next_id_) {}
GeometryIndex& GeometryIndex::operator=(const GeometryIndex& o) {
  if (this != &o) {
    trees_ = std::make_unique<Trees>(*o.trees_);
    records_ = o.records_;
    next_id_ = o.next_id_;
  }
  return *this;
}
GeometryIndex::GeometryIndex(GeometryIndex&&) noexcept = default;
GeometryIndex& GeometryIndex::operator=(GeometryIndex&&) noexcept = default;

std::uint64_t GeometryIndex::insert(int net, int layer, GeomKind kind, const Rect& rect) {
  if (layer < -1 || layer > 1) throw ContractError(kModule, "geometry layer out of range");
  const std::uint64_t id = next_id_++;
  records_.emplace(id, GeomRecord{id, net, layer, kind, rect});
  (layer < 0 ? trees_->obstacles : trees_->layers[static_cast<std::size_t>(layer)]).insert({to_box(rect), id});
  return id;
}

void GeometryIndex::remove(std::uint64_t id) {
  auto it = records_.find(id);
  if (it == records_.end()) return;
  const GeomRecord& r = it->second;
  (r.layer < 0 ? trees_->obstacles : trees_->layers[static_cast<std::size_t>(r.layer)]).remove({to_box(r.rect), id});
  records_.erase(it);
}

namespace {
template <typename Fn>
void visit(const Tree& tree, const Rect& window, Fn&& fn) {
  for (auto it = tree.qbegin(bgi::intersects(to_box(window))); it != tree.qend(); ++it) {
    if (!fn(it->second)) return;
  }
}
}  // namespace

std::vector<GeomRecord> GeometryIndex::query(int layer, const Rect& window) const {
  std::vector<GeomRecord> out;
  visit(trees_->layers.at(static_cast<std::size_t>(layer)), window, [&](std::uint64_t id) {
    const GeomRecord& r = records_.at(id);
    if (r.rect.overlaps(window)) out.push_back(r);
    return true;
  });
  std::sort(out.begin(), out.end(), [](const GeomRecord& a, const GeomRecord& b) { return a.id < b.id; });
  return out;
}

std::vector<GeomRecord> GeometryIndex::query_obstacles(const Rect& window) const {
  std::vector<GeomRecord> out;
  visit(trees_->obstacles, window, [&](std::uint64_t id) {
    const GeomRecord& r = records_.at(id);
    if (r.rect.overlaps(window)) out.push_back(r);
    return true;
  });
  std::sort(out.begin(), out.end(), [](const GeomRecord& a, const GeomRecord& b) { return a.id < b.id; });
  return out;
}

bool GeometryIndex::any_foreign(int layer, const Rect& window, int net) const {
  bool hit = false;
  visit(trees_->layers.at(static_cast<std::size_t>(layer)), window, [&](std::uint64_t id) {
    const GeomRecord& r = records_.at(id);
    hit = r.net != net && r.rect.overlaps(window);
    return !hit;
  });
  return hit;
}

bool GeometryIndex::any_foreign_obstacle(const Rect& window, int net) const {
  bool hit = false;
  visit(trees_->obstacles, window, [&](std::uint64_t id) {
    const GeomRecord& r = records_.at(id);
    hit = r.net != net && r.rect.overlaps(window);
    return !hit;
  });
  return hit;
}

std::vector<GeomRecord> GeometryIndex::records() const {
  std::vector<GeomRecord> out;
  out.reserve(records_.size());
  for (const auto& [id, r] : records_) out.push_back(r);
  std::sort(out.begin(), out.end(), [](const GeomRecord& a, const GeomRecord& b) { return a.id < b.id; });
  return out;
}

// --- RoutingGraph -----------------------------------------------------------------

RoutingGraph::RoutingGraph(const CellRect& area, const TechRules& tech, std::span<const CellRect> obstacles)
    : tech_(tech), area_(area) {
  validate(tech_);
  if (area.empty()) throw ValidationError(kModule, "routing area is empty");
  auto blocked = [&](int x, int y) {
    return std::any_of(obstacles.begin(), obstacles.end(),
                       [&](const CellRect& o) { return o.intersects({x, y, x + 1, y + 1}); });
  };
  for (int layer = 0; layer < 2; ++layer) {
    for (int y = area.y0; y < area.y1; ++y) {
      for (int x = area.x0; x < area.x1; ++x) {
        if (blocked(x, y)) continue;
        index_.emplace(key(x, y, layer), static_cast<std::uint32_t>(nodes_.size()));
        nodes_.push_back({RVertex{x, y, layer}, {kNone, kNone, kNone}, 0});
      }
    }
  }
  for (auto& n : nodes_) {
    const RVertex& v = n.v;
    const bool horizontal = tech_.axis(v.layer) == Axis::horizontal;
    const std::array<RVertex, 3> cand{
        horizontal ? RVertex{v.x - 1, v.y, v.layer} : RVertex{v.x, v.y - 1, v.layer},
        horizontal ? RVertex{v.x + 1, v.y, v.layer} : RVertex{v.x, v.y + 1, v.layer},
        RVertex{v.x, v.y, 1 - v.layer}};
    for (const auto& c : cand) {
      if (auto it = index_.find(key(c.x, c.y, c.layer)); it != index_.end()) n.nbr[n.degree++] = it->second;
    }
  }
  history_.assign(nodes_.size(), 0.0);
  for (const auto& o : obstacles) geometry_.insert(-1, -1, GeomKind::device, cell_block_rect(o));
}

std::size_t RoutingGraph::track_edge_count() const {
  std::size_t twice = 0;
  for (const auto& n : nodes_) {
    for (std::uint8_t k = 0; k < n.degree; ++k) twice += nodes_[n.nbr[k]].v.layer == n.v.layer ? 1 : 0;
  }
  return twice / 2;
}

std::size_t RoutingGraph::via_edge_count() const {
  std::size_t count = 0;
  for (const auto& n : nodes_) {
    if (n.v.layer != 0) continue;
    for (std::uint8_t k = 0; k < n.degree; ++k) count += nodes_[n.nbr[k]].v.layer != 0 ? 1 : 0;
  }
  return count;
}

std::optional<std::uint32_t> RoutingGraph::find(const RVertex& v) const {
  if (v.layer < 0 || v.layer > 1) return std::nullopt;
  auto it = index_.find(key(v.x, v.y, v.layer));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool RoutingGraph::is_obstacle_cell(int x, int y) const {
  return x >= area_.x0 && x < area_.x1 && y >= area_.y0 && y < area_.y1 && !contains({x, y, 0});
}

double RoutingGraph::history(const RVertex& v) const {
  auto i = find(v);
  return i ? history_[*i] : 0.0;
}

std::size_t RoutingGraph::add_history(std::span<const RVertex> vertices, double increment) {
  if (!(increment > 0)) throw ContractError(kModule, "history increment must be positive");
  std::size_t skipped = 0;
  for (const auto& v : vertices) {
    if (auto i = find(v)) {
      history_[*i] += increment;
    } else {
      ++skipped;
    }
  }
  ignored_history_ += skipped;
  return skipped;
}

void RoutingGraph::set_owner(int x, int y, int net) { owners_[key(x, y, 0)] = net; }

std::optional<int> RoutingGraph::owner(int x, int y) const {
  if (owners_.empty()) return std::nullopt;
  auto it = owners_.find(key(x, y, 0));
  if (it == owners_.end()) return std::nullopt;
  return it->second;
}

bool RoutingGraph::add_terminal(int net, int x, int y) {
  if (owner(x, y)) return false;
  set_owner(x, y, net);
  geometry_.insert(net, -1, GeomKind::pin_pad, via_rect({x, y}, tech_.max_width()));
  for (int layer = 0; layer < 2; ++layer) geometry_.insert(net, layer, GeomKind::pin_pad, via_rect({x, y}, tech_.width(layer)));
  return true;
}

void RoutingGraph::commit(const Route& route) {
  if (committed(route.net)) throw ContractError(kModule, "net " + std::to_string(route.net) + " is already committed");
  auto& ids = committed_[route.net];
  for (const auto& c : route.connections) {
    for (const auto& s : c.segments) ids.push_back(geometry_.insert(route.net, s.layer, GeomKind::wire, segment_rect(s)));
    for (const auto& v : c.vias) {
      for (int layer = 0; layer < 2; ++layer) {
        ids.push_back(geometry_.insert(route.net, layer, GeomKind::via_pad, via_rect(v, tech_.width(layer))));
      }
    }
  }
}

void RoutingGraph::uncommit(int net) {
  auto it = committed_.find(net);
  if (it == committed_.end()) return;
  for (auto id : it->second) geometry_.remove(id);
  committed_.erase(it);
}

RoutingGraph build_routing_graph(const Netlist& nl, const PlacementMap& placements, const TechRules& tech) {
  CellRect extent;
  std::vector<CellRect> bodies;
  for (const auto& p : placements) {
    if (!p) continue;
    extent = extent.united(padded_rect(nl, *p));
    bodies.push_back(body_rect(nl, *p));
  }
  if (bodies.empty()) throw ValidationError(kModule, "cannot build a routing grid without placed devices");
  const int m = tech.routing_margin;
  return RoutingGraph({extent.x0 - m, extent.y0 - m, extent.x1 + m, extent.y1 + m}, tech, bodies);
}

}  // namespace anapr
