// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

#ifndef ANAPR_DATA_DIR
#define ANAPR_DATA_DIR "data"
#endif

namespace anapr::testing {

double dijkstra_cost(const RoutingGraph& g, const RVertex& s, const RVertex& t, int net, const SearchParams& p) {
  const int levels = p.bend_cap < 0 ? 1 : p.bend_cap + 1;
  const auto si = g.find(s);
  const auto ti = g.find(t);
  if (!si || !ti) return kInf;
  const std::size_t n = g.vertex_count();
  auto id = [&](std::uint32_t v, int axis, int bends) {
    return (static_cast<std::size_t>(v) * 3 + static_cast<std::size_t>(axis)) * static_cast<std::size_t>(levels) +
           static_cast<std::size_t>(bends);
  };
  std::vector<double> dist(n * 3 * static_cast<std::size_t>(levels), kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[id(*si, 0, 0)] = 0.0;
  pq.push({0.0, id(*si, 0, 0)});
  while (!pq.empty()) {
    auto [d, st] = pq.top();
    pq.pop();
    if (d > dist[st]) continue;
    const int bends = static_cast<int>(st % static_cast<std::size_t>(levels));
    const int axis = static_cast<int>(st / static_cast<std::size_t>(levels) % 3);
    const auto vi = static_cast<std::uint32_t>(st / static_cast<std::size_t>(levels) / 3);
    if (vi == *ti) return d;
    const RVertex v = g.vertex(vi);
    // Lattice moves derived from the layer directions, not the adjacency.
    std::vector<RVertex> moves;
    if (g.tech().axis(v.layer) == Axis::horizontal) {
      moves = {{v.x - 1, v.y, v.layer}, {v.x + 1, v.y, v.layer}};
    } else {
      moves = {{v.x, v.y - 1, v.layer}, {v.x, v.y + 1, v.layer}};
    }
    moves.push_back({v.x, v.y, 1 - v.layer});
    for (const RVertex& w : moves) {
      const auto wi = g.find(w);
      if (!wi) continue;
      const auto owner = g.owner(w.x, w.y);
      if (owner && *owner != net) continue;
      const bool via = w.layer != v.layer;
      int next_axis = axis;
      int next_bends = bends;
      double c = via ? p.via_cost : 1.0;
      if (!via) {
        next_axis = g.tech().axis(v.layer) == Axis::horizontal ? 1 : 2;
        if (axis != 0 && axis != next_axis) {
          c += p.bend_penalty;
          if (p.bend_cap >= 0 && ++next_bends > p.bend_cap) continue;
        }
      }
      if (p.drc_cost > 0) {
        const StepClass hit = classify_step(g, vi, *wi, net);
        if (hit == StepClass::fixed) continue;
        if (hit == StepClass::movable) c += p.drc_cost;
      }
      if (p.use_history) c += g.history(*wi);
      const std::size_t ns = id(*wi, next_axis, next_bends);
      if (d + c < dist[ns]) {
        dist[ns] = d + c;
        pq.push({d + c, ns});
      }
    }
  }
  return kInf;
}

RandomGrid random_grid(std::mt19937_64& rng, int n, double obstacle_fraction, const TechRules& tech) {
  std::vector<CellRect> blocks;
  std::bernoulli_distribution blocked(obstacle_fraction);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      if (blocked(rng)) blocks.push_back({x, y, x + 1, y + 1});
    }
  }
  RoutingGraph g({0, 0, n, n}, tech, blocks);
  std::uniform_int_distribution<int> coord(0, n - 1), layer(0, 1);
  auto pick = [&] {
    while (true) {
      RVertex v{coord(rng), coord(rng), layer(rng)};
      if (g.contains(v)) return v;
    }
  };
  RVertex s = pick();
  RVertex t = pick();
  while (t == s) t = pick();
  return {std::move(g), s, t};
}

namespace {

bool inside_open(double px, double py, const Rect& r) { return r.xlo < px && px < r.xhi && r.ylo < py && py < r.yhi; }

// Quarter-offset sample points of the open window that also lie in `r`.
bool raster_meets(const Rect& window, const Rect& r) {
  if (window.xhi <= window.xlo || window.yhi <= window.ylo) return false;
  for (double px = std::floor(window.xlo * 2) / 2 + 0.25; px < window.xhi; px += 0.5) {
    for (double py = std::floor(window.ylo * 2) / 2 + 0.25; py < window.yhi; py += 0.5) {
      if (inside_open(px, py, window) && inside_open(px, py, r)) return true;
    }
  }
  return false;
}

}  // namespace

std::set<ViolationKey> raster_violations(const WireSegment& s, const GeometryIndex& index, const TechRules& tech,
                                         int net) {
  std::set<ViolationKey> out;
  const double hw = s.width / 2;
  const Rect r{std::min(s.from.x, s.to.x) - hw, std::min(s.from.y, s.to.y) - hw, std::max(s.from.x, s.to.x) + hw,
               std::max(s.from.y, s.to.y) + hw};
  const bool pad = s.from == s.to;
  if (!pad) {
    const double len = std::abs(s.to.x - s.from.x) + std::abs(s.to.y - s.from.y) + s.width;
    if (len < tech.min_wire_length) out.insert({static_cast<int>(Rule::min_length), 0});
    if (len * s.width < tech.min_wire_area) out.insert({static_cast<int>(Rule::min_area), 0});
  }
  const bool horizontal = tech.axis(s.layer) == Axis::horizontal;
  auto window = [&](double u0, double u1, double v0, double v1) {
    return horizontal ? Rect{u0, v0, u1, v1} : Rect{v0, u0, v1, u1};
  };
  const double u0 = horizontal ? r.xlo : r.ylo, u1 = horizontal ? r.xhi : r.yhi;
  const double v0 = horizontal ? r.ylo : r.xlo, v1 = horizontal ? r.yhi : r.xhi;
  std::vector<GeomRecord> foreign, obstacles;
  for (const auto& rec : index.records()) {
    if (rec.net == net) continue;
    if (rec.layer == s.layer) foreign.push_back(rec);
    if (rec.layer == -1) obstacles.push_back(rec);
  }
  auto any_meets = [&](const Rect& w) {
    return std::any_of(foreign.begin(), foreign.end(), [&](const GeomRecord& g) { return raster_meets(w, g.rect); });
  };
  const double sp = tech.parallel_spacing;
  const EolRule& e = tech.eol;
  for (const auto& g : foreign) {
    if (raster_meets(window(u0, u1, v0 - sp, v1 + sp), g.rect)) out.insert({static_cast<int>(Rule::parallel_spacing), g.id});
  }
  const bool par_high = any_meets(window(u1 - e.par_width, u1, v1, v1 + e.par_space)) ||
                        any_meets(window(u1 - e.par_width, u1, v0 - e.par_space, v0));
  const bool par_low = any_meets(window(u0, u0 + e.par_width, v1, v1 + e.par_space)) ||
                       any_meets(window(u0, u0 + e.par_width, v0 - e.par_space, v0));
  for (const auto& g : foreign) {
    if (par_high && raster_meets(window(u1, u1 + e.space, v0 - e.within, v1 + e.within), g.rect)) {
      out.insert({static_cast<int>(Rule::eol_spacing), g.id});
    }
    if (par_low && raster_meets(window(u0 - e.space, u0, v0 - e.within, v1 + e.within), g.rect)) {
      out.insert({static_cast<int>(Rule::eol_spacing), g.id});
    }
  }
  for (const auto& g : obstacles) {
    if (raster_meets(r, g.rect)) out.insert({static_cast<int>(Rule::obstacle_overlap), g.id});
  }
  return out;
}

std::set<ViolationKey> keys_of(std::span<const Violation> v) {
  std::set<ViolationKey> out;
  for (const auto& x : v) out.insert({static_cast<int>(x.rule), x.counterpart ? x.counterpart->id : 0});
  return out;
}

int brute_force_mst(std::span<const RVertex> t) {
  const int n = static_cast<int>(t.size());
  if (n < 2) return 0;
  if (n == 2) return std::abs(t[0].x - t[1].x) + std::abs(t[0].y - t[1].y);
  auto dist = [&](int a, int b) { return std::abs(t[a].x - t[b].x) + std::abs(t[a].y - t[b].y); };
  std::vector<int> seq(static_cast<std::size_t>(n - 2), 0);
  int best = std::numeric_limits<int>::max();
  while (true) {
    std::vector<int> degree(static_cast<std::size_t>(n), 1);
    for (int v : seq) ++degree[static_cast<std::size_t>(v)];
    int weight = 0;
    for (int v : seq) {
      int leaf = 0;
      while (degree[static_cast<std::size_t>(leaf)] != 1) ++leaf;
      weight += dist(leaf, v);
      --degree[static_cast<std::size_t>(leaf)];
      --degree[static_cast<std::size_t>(v)];
    }
    int a = -1, b = -1;
    for (int v = 0; v < n; ++v) {
      if (degree[static_cast<std::size_t>(v)] == 1) (a < 0 ? a : b) = v;
    }
    weight += dist(a, b);
    best = std::min(best, weight);
    std::size_t k = 0;
    while (k < seq.size() && ++seq[k] == n) seq[k++] = 0;
    if (k == seq.size()) break;
  }
  return best;
}

long long brute_force_sides(std::span<const std::vector<Terminal>> options) {
  long long best = -1;
  std::vector<Terminal> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == options.size()) {
      int x0 = chosen[0].at.x, x1 = x0, y0 = chosen[0].at.y, y1 = y0;
      for (const auto& c : chosen) {
        x0 = std::min(x0, c.at.x);
        x1 = std::max(x1, c.at.x);
        y0 = std::min(y0, c.at.y);
        y1 = std::max(y1, c.at.y);
      }
      const long long h = (x1 - x0) + (y1 - y0);
      if (best < 0 || h < best) best = h;
      return;
    }
    for (const auto& t : options[i]) {
      chosen.push_back(t);
      rec(i + 1);
      chosen.pop_back();
    }
  };
  if (!options.empty()) rec(0);
  return best;
}

namespace {

Point offset_of(const Netlist& nl, std::size_t pin, int variant) {
  const Pin& p = nl.pin(pin);
  const auto& shapes = nl.device(p.owner).variants;
  const Shape& s0 = shapes.front();
  const Shape& sv = shapes.at(static_cast<std::size_t>(variant));
  auto scale = [](int off, int to, int from) {
    const int v = static_cast<int>(std::floor(static_cast<double>(off) * to / from + 0.5));
    return to < 2 ? 0 : std::clamp(v, 1, to - 1);
  };
  if (variant == 0) return {p.dx, p.dy};
  return {scale(p.dx, sv.width, s0.width), scale(p.dy, sv.height, s0.height)};
}

}  // namespace

double recompute_reward(const Netlist& nl, const PlacementMap& m, const GridConfig& grid, const RewardWeights& w) {
  int x0 = 1 << 30, y0 = 1 << 30, x1 = -(1 << 30), y1 = -(1 << 30);
  double area = 0;
  for (const auto& p : m) {
    if (!p) return w.violation_penalty;
    const Shape& s = nl.device(p->device).variants[static_cast<std::size_t>(p->variant)];
    x0 = std::min(x0, p->x);
    y0 = std::min(y0, p->y);
    x1 = std::max(x1, p->x + s.width);
    y1 = std::max(y1, p->y + s.height);
    area += static_cast<double>(s.width) * s.height;
  }
  double hpwl = 0;
  for (const auto& net : nl.nets()) {
    std::vector<double> xs, ys;
    for (auto pi : net.pins) {
      const auto& p = m[nl.pin(pi).owner];
      const Point o = offset_of(nl, pi, p->variant);
      xs.push_back(p->x + o.x);
      ys.push_back(p->y + o.y);
    }
    if (xs.size() < 2) continue;
    hpwl += (*std::max_element(xs.begin(), xs.end()) - *std::min_element(xs.begin(), xs.end())) +
            (*std::max_element(ys.begin(), ys.end()) - *std::min_element(ys.begin(), ys.end()));
  }
  hpwl *= grid.cell_pitch;
  const double floor_area = static_cast<double>(x1 - x0) * (y1 - y0);
  const double aspect = static_cast<double>(x1 - x0) / (y1 - y0);
  return -(w.alpha * floor_area / area + w.beta * hpwl / w.hpwl_min +
           w.gamma * (grid.target_aspect - aspect) * (grid.target_aspect - aspect));
}

Padding recompute_padding(const Netlist& nl, std::size_t device, const TechRules& tech, const GridConfig& grid) {
  int nh = 0, nv = 0;
  for (const auto& p : nl.pins()) {
    if (p.owner != device) continue;
    if (p.direction == PinDirection::horizontal) ++nh; else ++nv;
  }
  // lambda = zeta + n * (spacing + width), microns
  auto cells = [&](int n) {
    const double lambda_um = grid.drr_margin * grid.cell_pitch + n * (tech.parallel_spacing + tech.max_width()) * tech.grid_step;
    const double c = lambda_um / grid.cell_pitch;
    const double r = std::round(c);
    return static_cast<int>(std::abs(c - r) < 1e-9 ? r : std::ceil(c));
  };
  return {cells(nh), cells(nv)};
}

std::vector<std::uint8_t> footprint_mask(const Netlist& nl, const PlacementMap& m, int resolution) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(resolution) * resolution, 0);
  for (const auto& p : m) {
    if (!p) continue;
    const Shape& s = nl.device(p->device).variants[static_cast<std::size_t>(p->variant)];
    for (int y = p->y - p->pad.vertical; y < p->y + s.height + p->pad.vertical; ++y) {
      for (int x = p->x - p->pad.horizontal; x < p->x + s.width + p->pad.horizontal; ++x) {
        mask[static_cast<std::size_t>(y) * resolution + static_cast<std::size_t>(x)] = 1;
      }
    }
  }
  return mask;
}

nlohmann::json device_json(const std::string& id, std::vector<std::pair<int, int>> variants,
                           std::vector<PinSpec> pins, int cls, const std::string& block) {
  nlohmann::json v = nlohmann::json::array();
  for (auto [w, h] : variants) v.push_back({w, h});
  nlohmann::json ps = nlohmann::json::array();
  for (const auto& p : pins) ps.push_back({{"id", p.id}, {"dx", p.dx}, {"dy", p.dy}, {"dir", p.dir}});
  return {{"id", id}, {"name", id}, {"variants", v}, {"class", cls}, {"subblock", block}, {"pins", ps}};
}

nlohmann::json net_json(const std::string& id, std::vector<std::string> pins, const char* kind) {
  return {{"id", id}, {"kind", kind}, {"pins", pins}};
}

nlohmann::json netlist_json(nlohmann::json devices, nlohmann::json nets, nlohmann::json constraints) {
  return {{"format_version", 1}, {"devices", devices}, {"nets", nets}, {"constraints", constraints}};
}

Netlist random_netlist(std::mt19937_64& rng, int devices, int nets) {
  std::uniform_int_distribution<int> side(3, 6);
  nlohmann::json ds = nlohmann::json::array();
  std::vector<std::string> pins;
  for (int d = 0; d < devices; ++d) {
    const int w = side(rng), h = side(rng);
    std::vector<PinSpec> ps{{"d" + std::to_string(d) + "a", 1, h / 2, "h"},
                            {"d" + std::to_string(d) + "b", w / 2, 1, "v"}};
    for (const auto& p : ps) pins.push_back(p.id);
    ds.push_back(device_json("D" + std::to_string(d), {{w, h}, {h, w}}, ps, d % kFunctionalClasses));
  }
  std::shuffle(pins.begin(), pins.end(), rng);
  nlohmann::json ns = nlohmann::json::array();
  std::size_t next = 0;
  std::uniform_int_distribution<int> fanout(2, 3);
  for (int k = 0; k < nets && next + 2 <= pins.size(); ++k) {
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(fanout(rng)), pins.size() - next);
    ns.push_back(net_json("n" + std::to_string(k), {pins.begin() + static_cast<long>(next),
                                                    pins.begin() + static_cast<long>(next + take)}));
    next += take;
  }
  return netlist_from_json(netlist_json(ds, ns));
}

Netlist toy_pair(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> side(2, 5);
  auto dev = [&](const std::string& id) {
    const int w = side(rng), h = side(rng);
    return device_json(id, {{w, h}}, {{id + ".p", std::max(1, w / 2), std::max(1, h / 2), "h"}});
  };
  return netlist_from_json(netlist_json({dev("A"), dev("B")}, {net_json("n", {"A.p", "B.p"})}));
}

double exhaustive_optimum(const FloorplanEnv& env) {
  const Netlist& nl = env.netlist();
  const int r = env.grid().resolution;
  double best = -kInf;
  PlacementMap m(nl.devices().size());
  const std::size_t a = env.order()[0], b = env.order()[1];
  for (int va = 0; va < static_cast<int>(nl.device(a).variants.size()); ++va) {
    for (int ya = 0; ya < r; ++ya) {
      for (int xa = 0; xa < r; ++xa) {
        const Placement pa = env.make_placement(a, va, xa, ya);
        m.assign(m.size(), std::nullopt);
        if (!env.fits(m, pa)) continue;
        m[a] = pa;
        for (int vb = 0; vb < static_cast<int>(nl.device(b).variants.size()); ++vb) {
          for (int yb = 0; yb < r; ++yb) {
            for (int xb = 0; xb < r; ++xb) {
              const Placement pb = env.make_placement(b, vb, xb, yb);
              if (!env.fits(m, pb)) continue;
              m[b] = pb;
              best = std::max(best, env.evaluate(m));
              m[b].reset();
            }
          }
        }
      }
    }
  }
  return best;
}

Corridor corridor_fixture() {
  TechRules tech = desk_tech();
  // corridor rows y = 7..9 between a lower block and a tall upper block
  std::vector<CellRect> blocks{{8, 0, 23, 7}, {8, 10, 23, 26}};
  RoutingGraph g({0, 0, 31, 31}, tech, blocks);
  auto task = [](int net, const char* id, RVertex a, RVertex b) {
    NetTask t;
    t.net = net;
    t.id = id;
    t.terminals = {{a, 0, Side::right}, {b, 1, Side::left}};
    t.pin_count = 2;
    t.hpwl = std::abs(a.x - b.x) + std::abs(a.y - b.y);
    return t;
  };
  std::vector<NetTask> tasks{task(0, "A", {2, 8, 0}, {28, 8, 0}), task(1, "B", {5, 11, 1}, {25, 11, 1})};
  for (const auto& t : tasks) {
    for (const auto& term : t.terminals) g.add_terminal(t.net, term.at.x, term.at.y);
  }
  SearchParams p = search_params(tech);
  // spacing conflicts are cheap, so B first tries the corridor
  p.drc_cost = 0.5;
  return {std::move(g), std::move(tasks), p};
}

std::string data_dir() { return ANAPR_DATA_DIR; }

}  // namespace anapr::testing
