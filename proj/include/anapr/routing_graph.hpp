// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "anapr/floorplan.hpp"
#include "anapr/geometry.hpp"
#include "anapr/tech.hpp"

namespace anapr {

struct RVertex {
  int x = 0;
  int y = 0;
  int layer = 0;
  auto operator<=>(const RVertex&) const = default;
};

// Axis-aligned wire centreline on one layer, from <= to. A zero-length
// segment stands for a via landing pad.
struct WireSegment {
  int layer = 0;
  Point from;
  Point to;
  double width = 1.0;
  auto operator<=>(const WireSegment&) const = default;
};

// Physical extent: the centreline grown by half the width on every side.
Rect segment_rect(const WireSegment& s);
// Landing pad of a via on one layer.
Rect via_rect(Point at, double width);
// Body of a device covering cells [x0,x1) x [y0,y1) in vertex coordinates.
Rect cell_block_rect(const CellRect& cells);

// Path of one two-pin connection and the geometry it materialises to.
struct Connection {
  std::vector<RVertex> path;
  std::vector<WireSegment> segments;
  std::vector<Point> vias;
  int bends = 0;
  double cost = 0.0;
};

struct Route {
  int net = -1;
  std::vector<Connection> connections;
  double cost = 0.0;

  std::vector<WireSegment> segments() const;
  std::vector<Point> vias() const;
  std::vector<RVertex> vertices() const;  // sorted, unique
};

// Splits a vertex path into maximal straight segments and vias.
Connection materialize(std::vector<RVertex> path, const TechRules& tech);

// --- spatial index ------------------------------------------------------------

enum class GeomKind : std::uint8_t { wire, via_pad, pin_pad, device };

struct GeomRecord {
  std::uint64_t id = 0;
  int net = -1;    // -1 for device bodies
  int layer = -1;  // -1 for obstacles, which block both layers
  GeomKind kind = GeomKind::wire;
  Rect rect;
  auto operator<=>(const GeomRecord&) const = default;
};

// Per-layer R-trees of committed routing geometry plus one tree of
// obstacles. Queries return records whose interior meets the window.
class GeometryIndex {
public:
  GeometryIndex();
  ~GeometryIndex();
  GeometryIndex(const GeometryIndex&);
  GeometryIndex& operator=(const GeometryIndex&);
  GeometryIndex(GeometryIndex&&) noexcept;
  GeometryIndex& operator=(GeometryIndex&&) noexcept;

  std::uint64_t insert(int net, int layer, GeomKind kind, const Rect& rect);
  void remove(std::uint64_t id);
  std::vector<GeomRecord> query(int layer, const Rect& window) const;
  std::vector<GeomRecord> query_obstacles(const Rect& window) const;
  // True when some record on `layer` of a net other than `net` meets the window.
  bool any_foreign(int layer, const Rect& window, int net) const;
  bool any_foreign_obstacle(const Rect& window, int net) const;
  const GeomRecord& record(std::uint64_t id) const { return records_.at(id); }
  std::vector<GeomRecord> records() const;  // ordered by id
  std::size_t size() const { return records_.size(); }

private:
  struct Trees;
  std::unique_ptr<Trees> trees_;
  std::unordered_map<std::uint64_t, GeomRecord> records_;
  std::uint64_t next_id_ = 1;
};

// --- graph ----------------------------------------------------------------------

// Grid graph over two layers. Vertex (x, y, l) sits at point (x, y); layer
// tracks run along the layer's preferred direction and vias join the two
// layers at one (x, y). Vertices under device bodies are absent.
class RoutingGraph {
public:
  static constexpr std::uint32_t kNone = 0xffffffffU;

  // Full lattice over the cells of `area`, minus the obstacle blocks.
  RoutingGraph(const CellRect& area, const TechRules& tech, std::span<const CellRect> obstacles = {});

  const TechRules& tech() const { return tech_; }
  const CellRect& area() const { return area_; }

  std::size_t vertex_count() const { return nodes_.size(); }
  std::size_t track_edge_count() const;
  std::size_t via_edge_count() const;
  std::optional<std::uint32_t> find(const RVertex& v) const;
  bool contains(const RVertex& v) const { return find(v).has_value(); }
  const RVertex& vertex(std::uint32_t i) const { return nodes_[i].v; }
  // Up to three neighbours: two along the layer direction and the via.
  std::span<const std::uint32_t> neighbors(std::uint32_t i) const {
    return {nodes_[i].nbr.data(), nodes_[i].degree};
  }
  bool is_obstacle_cell(int x, int y) const;

  double history(std::uint32_t i) const { return history_[i]; }
  double history(const RVertex& v) const;
  // Unknown vertices are skipped; returns how many were skipped.
  std::size_t add_history(std::span<const RVertex> vertices, double increment);
  std::size_t ignored_history() const { return ignored_history_; }

  // Terminal ownership of (x, y), shared by both layers.
  void set_owner(int x, int y, int net);
  // Claims (x, y) for `net` and adds its pin pad: an obstacle for foreign
  // wires plus landing metal on both layers. False when already owned.
  bool add_terminal(int net, int x, int y);
  std::optional<int> owner(int x, int y) const;
  // Whether a search for `net` may enter vertex i.
  bool passable(std::uint32_t i, int net) const {
    auto o = owner(nodes_[i].v.x, nodes_[i].v.y);
    return !o || *o == net;
  }

  GeometryIndex& geometry() { return geometry_; }
  const GeometryIndex& geometry() const { return geometry_; }
  void commit(const Route& route);
  void uncommit(int net);
  bool committed(int net) const { return committed_.count(net) != 0; }

private:
  struct Node {
    RVertex v;
    std::array<std::uint32_t, 3> nbr{kNone, kNone, kNone};
    std::uint8_t degree = 0;
  };
  static std::uint64_t key(int x, int y, int layer) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(y) & 0x7fffffffU) << 1) | static_cast<std::uint64_t>(layer);
  }

  TechRules tech_;
  CellRect area_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  std::vector<double> history_;
  std::size_t ignored_history_ = 0;
  std::unordered_map<std::uint64_t, int> owners_;
  GeometryIndex geometry_;
  std::unordered_map<int, std::vector<std::uint64_t>> committed_;
};

// Lattice over the padded placement bounding box grown by the routing
// margin, with every placed device body carved out.
RoutingGraph build_routing_graph(const Netlist& nl, const PlacementMap& placements, const TechRules& tech);

}  // namespace anapr
