// SPDX-License-Identifier: Apache-2.0
#include "anapr/router.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>

#include <spdlog/spdlog.h>

#include "anapr/drc.hpp"
#include "anapr/error.hpp"

namespace anapr {

namespace {
constexpr const char* kModule = "router";
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kExhaustivePins = 6;

int manhattan(const RVertex& a, const RVertex& b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

long long terminal_hpwl(std::span<const Terminal> ts) {
  if (ts.size() < 2) return 0;
  int x0 = ts[0].at.x, x1 = x0, y0 = ts[0].at.y, y1 = y0;
  for (const auto& t : ts) {
    x0 = std::min(x0, t.at.x);
    x1 = std::max(x1, t.at.x);
    y0 = std::min(y0, t.at.y);
    y1 = std::max(y1, t.at.y);
  }
  return static_cast<long long>(x1 - x0) + (y1 - y0);
}
}  // namespace

void SearchParams::validate() const {
  if (!(kappa >= 1)) throw ValidationError(kModule, "kappa must be >= 1");
  if (!(q >= 0)) throw ValidationError(kModule, "q must be non-negative");
  if (via_cost < 0 || drc_cost < 0 || bend_penalty < 0) {
    throw ValidationError(kModule, "via, drc and bend costs must be non-negative");
  }
  if (max_iterations < 1) throw ValidationError(kModule, "at least one routing iteration is required");
}

SearchParams search_params(const TechRules& tech) {
  SearchParams p;
  p.via_cost = tech.via_cost;
  p.drc_cost = tech.drc_penalty;
  p.bend_penalty = tech.bend_penalty;
  p.bend_cap = tech.bend_cap;
  return p;
}

const char* to_string(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::bottom: return "bottom";
    case Side::top: return "top";
  }
  return "?";
}

const char* to_string(NetStatus s) {
  switch (s) {
    case NetStatus::routed: return "routed";
    case NetStatus::failed: return "failed";
    case NetStatus::unroutable: return "unroutable";
  }
  return "?";
}

// --- projection -------------------------------------------------------------------

std::vector<Terminal> pin_sides(const Netlist& nl, std::size_t pin, const PlacementMap& placements,
                                const RoutingGraph& graph, int net) {
  const Pin& p = nl.pin(pin);
  const auto& pl = placements.at(p.owner);
  if (!pl) return {};
  const TechRules& tech = graph.tech();
  const CellRect body = body_rect(nl, *pl);
  const Point at = pin_position(nl, pin, *pl);
  const bool horizontal = p.direction == PinDirection::horizontal;
  int layer = tech.layer_for(horizontal ? Axis::horizontal : Axis::vertical);
  if (layer < p.bottom_layer || layer > p.top_layer) layer = p.bottom_layer;
  // Foreign terminals closer than one routing pitch leave no legal landing.
  const int reach = tech.parallel_spacing + tech.max_width() - 1;
  auto crowded = [&](int x, int y) {
    for (int dy = -reach; dy <= reach; ++dy) {
      for (int dx = -reach; dx <= reach; ++dx) {
        if (auto o = graph.owner(x + dx, y + dy); o && *o != net) return true;
      }
    }
    return false;
  };
  auto usable = [&](int x, int y) {
    if (!graph.contains({x, y, layer})) return false;
    auto o = graph.owner(x, y);
    return !o || *o == net;
  };
  std::vector<Terminal> out;
  // Slide along the side (nearest first) to a spot clear of foreign terminals.
  auto consider = [&](int x, int y, Side side, int lo, int hi) {
    const int along = horizontal ? y : x;
    for (int d = 0; along - d >= lo || along + d < hi; ++d) {
      for (int s : {along + d, along - d}) {
        if (s < lo || s >= hi) continue;
        const int cx = horizontal ? x : s;
        const int cy = horizontal ? s : y;
        if (usable(cx, cy) && !crowded(cx, cy)) {
          out.push_back({{cx, cy, layer}, pin, side});
          return;
        }
      }
    }
    if (usable(x, y)) out.push_back({{x, y, layer}, pin, side});
  };
  if (horizontal) {
    consider(body.x0 - 1, at.y, Side::left, body.y0, body.y1);
    consider(body.x1, at.y, Side::right, body.y0, body.y1);
  } else {
    consider(at.x, body.y0 - 1, Side::bottom, body.x0, body.x1);
    consider(at.x, body.y1, Side::top, body.x0, body.x1);
  }
  return out;
}

std::optional<std::vector<Terminal>> assign_sides(std::span<const std::vector<Terminal>> options) {
  for (const auto& o : options) {
    if (o.empty()) return std::nullopt;
  }
  std::vector<Terminal> best;
  if (options.size() <= kExhaustivePins) {
    std::vector<std::size_t> idx(options.size(), 0);
    std::vector<Terminal> cur(options.size());
    long long best_hpwl = std::numeric_limits<long long>::max();
    while (true) {
      for (std::size_t i = 0; i < options.size(); ++i) cur[i] = options[i][idx[i]];
      const long long h = terminal_hpwl(cur);
      if (h < best_hpwl) {
        best_hpwl = h;
        best = cur;
      }
      // Odometer with the first pin most significant.
      std::size_t k = options.size();
      while (k > 0) {
        --k;
        if (++idx[k] < options[k].size()) break;
        idx[k] = 0;
        if (k == 0) return best;
      }
      if (options.empty()) return best;
    }
  }
  for (const auto& o : options) {
    std::optional<Terminal> pick;
    long long pick_hpwl = std::numeric_limits<long long>::max();
    for (const auto& t : o) {
      best.push_back(t);
      const long long h = terminal_hpwl(best);
      best.pop_back();
      if (h < pick_hpwl) {
        pick_hpwl = h;
        pick = t;
      }
    }
    best.push_back(*pick);
  }
  return best;
}

std::vector<NetTask> project_pins(const Netlist& nl, const PlacementMap& placements, RoutingGraph& graph) {
  const TechRules& tech = graph.tech();
  std::vector<NetTask> tasks;
  for (std::size_t n = 0; n < nl.nets().size(); ++n) {
    const Net& net = nl.net(n);
    NetTask t;
    t.net = static_cast<int>(n);
    t.id = net.id;
    t.pin_count = static_cast<int>(net.pins.size());
    if (net.pins.size() >= 2) {
      std::vector<std::vector<Terminal>> options;
      for (auto pi : net.pins) {
        options.push_back(pin_sides(nl, pi, placements, graph, t.net));
        if (options.back().empty() && t.routable) {
          t.routable = false;
          t.diagnostic = "pin '" + nl.pin(pi).id + "' of net '" + net.id + "' has no free boundary vertex";
        }
      }
      if (auto chosen = assign_sides(options)) {
        t.terminals = std::move(*chosen);
        for (const auto& term : t.terminals) graph.add_terminal(t.net, term.at.x, term.at.y);
        t.hpwl = static_cast<double>(terminal_hpwl(t.terminals)) * tech.grid_step;
      } else {
        spdlog::warn("{}", t.diagnostic);
      }
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<std::pair<std::size_t, std::size_t>> decompose_net(std::span<const RVertex> terminals) {
  const std::size_t n = terminals.size();
  std::vector<std::tuple<int, std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.emplace_back(manhattan(terminals[i], terminals[j]), i, j);
  }
  std::sort(edges.begin(), edges.end());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& [d, i, j] : edges) {
    const std::size_t a = root(i), b = root(j);
    if (a == b) continue;
    parent[b] = a;
    out.emplace_back(i, j);
  }
  return out;
}

std::vector<std::size_t> order_nets(std::span<const NetTask> tasks) {
  std::vector<std::size_t> idx(tasks.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const NetTask& x = tasks[a];
    const NetTask& y = tasks[b];
    if (x.failure_count != y.failure_count) return x.failure_count > y.failure_count;
    if (x.hpwl != y.hpwl) return x.hpwl > y.hpwl;
    if (x.pin_count != y.pin_count) return x.pin_count > y.pin_count;
    return x.net < y.net;
  });
  return idx;
}

// --- search ------------------------------------------------------------------------

struct SearchWorkspace::Impl {
  struct Side {
    std::vector<double> g;
    std::vector<std::uint32_t> parent;
    std::vector<std::uint32_t> seen;    // generation stamp of g
    std::vector<std::uint32_t> closed;  // generation stamp of closure
  };
  Side fwd, bwd;
  std::vector<std::uint32_t> cache_stamp;
  std::vector<std::uint8_t> cache_value;
  std::uint32_t generation = 0;

  void prepare(std::size_t states, std::size_t edge_slots) {
    if (fwd.g.size() != states || cache_stamp.size() != edge_slots) {
      for (Side* s : {&fwd, &bwd}) {
        s->g.assign(states, kInf);
        s->parent.assign(states, RoutingGraph::kNone);
        s->seen.assign(states, 0);
        s->closed.assign(states, 0);
      }
      cache_stamp.assign(edge_slots, 0);
      cache_value.assign(edge_slots, 0);
      generation = 0;
    }
    if (++generation == 0) {
      for (Side* s : {&fwd, &bwd}) {
        std::fill(s->seen.begin(), s->seen.end(), 0);
        std::fill(s->closed.begin(), s->closed.end(), 0);
      }
      std::fill(cache_stamp.begin(), cache_stamp.end(), 0);
      generation = 1;
    }
  }
};

SearchWorkspace::SearchWorkspace() : impl_(std::make_unique<Impl>()) {}
SearchWorkspace::~SearchWorkspace() = default;
SearchWorkspace::SearchWorkspace(SearchWorkspace&&) noexcept = default;
SearchWorkspace& SearchWorkspace::operator=(SearchWorkspace&&) noexcept = default;

namespace {

// Planar axis codes carried in the search state.
constexpr int kNoAxis = 0;
int axis_code(Axis a) { return a == Axis::horizontal ? 1 : 2; }

class BidirectionalSearch {
public:
  BidirectionalSearch(const RoutingGraph& g, int net, const SearchParams& p, SearchWorkspace::Impl& ws)
      : g_(g), net_(net), p_(p), ws_(ws), levels_(p.bend_cap < 0 ? 1U : static_cast<std::uint32_t>(p.bend_cap) + 1U) {}

  SearchResult run(std::uint32_t s, std::uint32_t t) {
    ws_.prepare(g_.vertex_count() * 3 * levels_, g_.vertex_count() * 3);
    gen_ = ws_.generation;
    src_ = g_.vertex(s);
    dst_ = g_.vertex(t);
    open(ws_.fwd, heap_f_, state(s, kNoAxis, 0), 0.0, RoutingGraph::kNone, h_to(dst_, s));
    open(ws_.bwd, heap_b_, state(t, kNoAxis, 0), 0.0, RoutingGraph::kNone, h_to(src_, t));
    bool forward = true;
    SearchResult res;
    while (true) {
      const double kf = top_key(ws_.fwd, heap_f_);
      const double kb = top_key(ws_.bwd, heap_b_);
      if (mu_ <= std::max(kf, kb) || kf == kInf || kb == kInf) break;
      if (forward) {
        expand(true);
      } else {
        expand(false);
      }
      ++res.expanded;
      forward = !forward;
    }
    if (mu_ == kInf) return res;
    res.found = true;
    std::vector<RVertex> path;
    for (std::uint32_t st = meet_f_; st != RoutingGraph::kNone; st = ws_.fwd.parent[st]) path.push_back(g_.vertex(vertex_of(st)));
    std::reverse(path.begin(), path.end());
    for (std::uint32_t st = ws_.bwd.parent[meet_b_]; st != RoutingGraph::kNone; st = ws_.bwd.parent[st]) {
      path.push_back(g_.vertex(vertex_of(st)));
    }
    res.connection = materialize(std::move(path), g_.tech());
    return res;
  }

private:
  struct Entry {
    double key;
    std::uint64_t seq;
    std::uint32_t state;
    double g;
    bool operator>(const Entry& o) const { return key != o.key ? key > o.key : seq > o.seq; }
  };
  using Heap = std::priority_queue<Entry, std::vector<Entry>, std::greater<>>;

  std::uint32_t state(std::uint32_t v, int axis, std::uint32_t bends) const {
    return (v * 3 + static_cast<std::uint32_t>(axis)) * levels_ + bends;
  }
  std::uint32_t vertex_of(std::uint32_t st) const { return st / levels_ / 3; }
  int axis_of(std::uint32_t st) const { return static_cast<int>(st / levels_ % 3); }
  std::uint32_t bends_of(std::uint32_t st) const { return st % levels_; }

  double h_to(const RVertex& goal, std::uint32_t v) const {
    const RVertex& a = g_.vertex(v);
    const double d = std::abs(a.x - goal.x) + std::abs(a.y - goal.y) + p_.via_cost * std::abs(a.layer - goal.layer);
    return d * (1.0 + p_.q);
  }

  double priority(double g, double h) const {
    if (g < h) return g + h;
    return (g + (2.0 * p_.kappa - 1.0) * h) / p_.kappa;
  }

  double g_of(const SearchWorkspace::Impl::Side& side, std::uint32_t st) const {
    return side.seen[st] == gen_ ? side.g[st] : kInf;
  }

  void open(SearchWorkspace::Impl::Side& side, Heap& heap, std::uint32_t st, double g, std::uint32_t parent, double h) {
    side.g[st] = g;
    side.seen[st] = gen_;
    side.parent[st] = parent;
    heap.push({priority(g, h), seq_++, st, g});
  }

  double top_key(SearchWorkspace::Impl::Side& side, Heap& heap) {
    while (!heap.empty()) {
      const Entry& e = heap.top();
      if (side.closed[e.state] != gen_ && side.g[e.state] == e.g) return e.key;
      heap.pop();
    }
    return kInf;
  }

  static bool turns(int a, int b) { return a != kNoAxis && b != kNoAxis && a != b; }

  // 0 clean, 1 crowds routed metal, 2 breaks a rule against a pin pad.
  std::uint8_t indicator(std::uint32_t u, std::uint32_t w) {
    if (p_.drc_cost <= 0) return 0;
    const std::uint32_t lo = std::min(u, w), hi = std::max(u, w);
    const auto nb = g_.neighbors(lo);
    std::size_t slot = 0;
    while (nb[slot] != hi) ++slot;
    const std::size_t key = static_cast<std::size_t>(lo) * 3 + slot;
    if (ws_.cache_stamp[key] != gen_) {
      ws_.cache_stamp[key] = gen_;
      ws_.cache_value[key] = static_cast<std::uint8_t>(classify_step(g_, u, w, net_));
    }
    return ws_.cache_value[key];
  }

  // Cost of the move u -> w excluding the bend term.
  double move_cost(std::uint32_t u, std::uint32_t w) {
    const bool via = g_.vertex(u).layer != g_.vertex(w).layer;
    double c = via ? p_.via_cost : 1.0;
    const std::uint8_t hit = indicator(u, w);
    if (hit == 2) return kInf;
    if (hit) c += p_.drc_cost;
    if (p_.use_history) c += g_.history(w);
    return c;
  }

  // A state with as few bends and no higher cost makes this one redundant.
  bool dominated(const SearchWorkspace::Impl::Side& side, std::uint32_t v, int axis, std::uint32_t bends, double g) const {
    for (std::uint32_t k = 0; k <= bends; ++k) {
      if (g_of(side, state(v, axis, k)) <= g) return true;
    }
    return false;
  }

  // Joins a new state on one side with every compatible state of the other.
  void meet(bool forward, std::uint32_t v, int axis, std::uint32_t bends, std::uint32_t st, double g) {
    const auto& other = forward ? ws_.bwd : ws_.fwd;
    for (int c = 0; c < 3; ++c) {
      const std::uint32_t join = turns(axis, c) ? 1U : 0U;
      for (std::uint32_t k = 0; k < levels_; ++k) {
        if (p_.bend_cap >= 0 && bends + k + join > static_cast<std::uint32_t>(p_.bend_cap)) break;
        const std::uint32_t os = state(v, c, k);
        const double go = g_of(other, os);
        if (go == kInf) continue;
        const double total = g + go + (join ? p_.bend_penalty : 0.0);
        if (total < mu_) {
          mu_ = total;
          meet_f_ = forward ? st : os;
          meet_b_ = forward ? os : st;
        }
      }
    }
  }

  // Backward states record the axis of the next planar move of the
  // forward path; both sides count the bends they contain.
  void expand(bool forward) {
    auto& side = forward ? ws_.fwd : ws_.bwd;
    Heap& heap = forward ? heap_f_ : heap_b_;
    const Entry e = heap.top();
    heap.pop();
    side.closed[e.state] = gen_;
    const std::uint32_t u = vertex_of(e.state);
    const int a = axis_of(e.state);
    const std::uint32_t k = bends_of(e.state);
    for (std::uint32_t w : g_.neighbors(u)) {
      if (!g_.passable(w, net_)) continue;
      const bool via = g_.vertex(u).layer != g_.vertex(w).layer;
      const int b = via ? a : axis_code(g_.tech().axis(g_.vertex(u).layer));
      const bool bend = !via && turns(a, b);
      std::uint32_t nk = k;
      if (bend && p_.bend_cap >= 0 && ++nk >= levels_) continue;
      const double ng = e.g + (forward ? move_cost(u, w) : move_cost(w, u)) + (bend ? p_.bend_penalty : 0.0);
      if (ng >= kInf) continue;
      const std::uint32_t ns = state(w, b, nk);
      if (side.closed[ns] == gen_ || dominated(side, w, b, nk, ng)) continue;
      open(side, heap, ns, ng, e.state, h_to(forward ? dst_ : src_, w));
      meet(forward, w, b, nk, ns, ng);
    }
  }

  const RoutingGraph& g_;
  int net_;
  const SearchParams& p_;
  SearchWorkspace::Impl& ws_;
  std::uint32_t gen_ = 0;
  RVertex src_, dst_;
  Heap heap_f_, heap_b_;
  std::uint64_t seq_ = 0;
  double mu_ = kInf;
  std::uint32_t meet_f_ = RoutingGraph::kNone;
  std::uint32_t meet_b_ = RoutingGraph::kNone;
  std::uint32_t levels_ = 1;
};

}  // namespace

SearchResult astar_two_pin(const RoutingGraph& graph, const RVertex& source, const RVertex& target, int net,
                           const SearchParams& params, SearchWorkspace* workspace) {
  params.validate();
  auto s = graph.find(source);
  auto t = graph.find(target);
  if (!s || !t) throw ContractError(kModule, "search endpoints must be graph vertices");
  if (source == target) throw ContractError(kModule, "search endpoints must differ");
  SearchWorkspace local;
  SearchWorkspace& ws = workspace ? *workspace : local;
  BidirectionalSearch search(graph, net, params, ws.impl());
  SearchResult res = search.run(*s, *t);
  if (res.found) res.connection.cost = path_cost(graph, res.connection.path, net, params);
  return res;
}

double path_cost(const RoutingGraph& graph, std::span<const RVertex> path, int net, const SearchParams& params) {
  double cost = 0.0;
  int last_axis = kNoAxis;
  for (std::size_t i = 1; i < path.size(); ++i) {
    auto u = graph.find(path[i - 1]);
    auto w = graph.find(path[i]);
    if (!u || !w) throw ContractError(kModule, "path leaves the routing graph");
    if (path[i - 1].layer != path[i].layer) {
      cost += params.via_cost;
    } else {
      const int a = axis_code(graph.tech().axis(path[i].layer));
      cost += 1.0;
      if (last_axis != kNoAxis && last_axis != a) cost += params.bend_penalty;
      last_axis = a;
    }
    if (params.drc_cost > 0 && violation_indicator(graph, *u, *w, net)) cost += params.drc_cost;
    if (params.use_history) cost += graph.history(*w);
  }
  return cost;
}

// --- negotiation -------------------------------------------------------------------

std::vector<std::string> RoutedLayout::failed_nets() const {
  std::vector<std::string> out;
  for (std::size_t n = 0; n < status.size(); ++n) {
    if (status[n] != NetStatus::routed) out.push_back(tasks[n].id);
  }
  return out;
}

namespace {

struct NetAttempt {
  std::optional<Route> route;
  bool search_failed = false;
};

NetAttempt route_net(RoutingGraph& graph, const NetTask& task, const SearchParams& params, SearchWorkspace& ws) {
  NetAttempt out;
  Route route;
  route.net = task.net;
  std::vector<RVertex> pts;
  for (const auto& t : task.terminals) pts.push_back(t.at);
  for (const auto& [i, j] : decompose_net(pts)) {
    if (pts[i] == pts[j]) continue;
    SearchResult r = astar_two_pin(graph, pts[i], pts[j], task.net, params, &ws);
    if (!r.found) {
      out.search_failed = true;
      out.route = std::move(route);
      return out;
    }
    route.cost += r.connection.cost;
    route.connections.push_back(std::move(r.connection));
  }
  out.route = std::move(route);
  return out;
}

// Route vertices minus the net's own terminal sites.
std::vector<RVertex> credit_set(const Route& route, const NetTask& task) {
  std::vector<RVertex> out;
  for (const auto& v : route.vertices()) {
    const bool own = std::any_of(task.terminals.begin(), task.terminals.end(),
                                 [&](const Terminal& t) { return t.at.x == v.x && t.at.y == v.y; });
    if (!own) out.push_back(v);
  }
  return out;
}

}  // namespace

RoutedLayout route_all(RoutingGraph& graph, std::vector<NetTask> tasks, const SearchParams& params) {
  params.validate();
  RoutedLayout out;
  const std::size_t n = tasks.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (tasks[i].net != static_cast<int>(i)) throw ContractError(kModule, "net tasks must be indexed by net");
  }
  out.routes.assign(n, std::nullopt);
  out.status.assign(n, NetStatus::failed);
  SearchWorkspace ws;
  const double increment = graph.tech().history_increment;

  std::vector<bool> pending(n, true);
  // Takes a committed net out again; its history is left alone.
  auto rip_up = [&](std::size_t b) {
    graph.uncommit(static_cast<int>(b));
    out.routes[b].reset();
    pending[b] = true;
  };

  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    out.iterations = iter;
    std::deque<std::size_t> queue;
    for (auto i : order_nets(tasks)) {
      if (tasks[i].routable && pending[i]) queue.push_back(i);
    }
    std::vector<int> tries(n, 0);
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      NetTask& task = tasks[i];
      ++tries[i];
      NetAttempt attempt = route_net(graph, task, params, ws);
      Route& route = *attempt.route;
      RouteEvent ev{iter, task.net, RouteEvent::Kind::committed, {}};
      const std::vector<Violation> found = attempt.search_failed ? std::vector<Violation>{} : check_route(route, graph);
      if (!attempt.search_failed && found.empty()) {
        graph.commit(route);
        out.routes[i] = std::move(route);
        pending[i] = false;
        out.events.push_back(std::move(ev));
        continue;
      }
      if (!found.empty()) {
        const Violation& v = found.front();
        spdlog::debug("iteration {}: net {} breaks {} at ({}, {}) layer {} against net {} ({} violations)", iter,
                      task.id, to_string(v.rule), v.x, v.y, v.layer, v.counterpart ? v.counterpart->net : -1,
                      found.size());
      }
      ev.kind = attempt.search_failed ? RouteEvent::Kind::search_failed : RouteEvent::Kind::drc_failed;
      ev.credited = credit_set(route, task);
      if (!ev.credited.empty()) graph.add_history(ev.credited, increment);
      ++task.failure_count;
      out.events.push_back(std::move(ev));
      if (tries[i] > 1) continue;
      // Committed nets it ran into make room; it retries now and they follow.
      std::set<std::size_t> blockers;
      for (const auto& v : found) {
        if (v.counterpart && v.counterpart->net >= 0 && v.counterpart->net != task.net &&
            v.counterpart->kind != GeomKind::pin_pad && out.routes[static_cast<std::size_t>(v.counterpart->net)]) {
          blockers.insert(static_cast<std::size_t>(v.counterpart->net));
        }
      }
      if (blockers.empty()) continue;
      for (auto b : blockers) {
        rip_up(b);
        if (tries[b] < 2) queue.push_back(b);
      }
      queue.push_front(i);
    }

    // A later commit can break an end-of-line rule of an earlier route.
    std::vector<std::size_t> broken;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.routes[i] && !check_route(*out.routes[i], graph).empty()) broken.push_back(i);
    }
    for (auto i : broken) {
      graph.uncommit(static_cast<int>(i));
      RouteEvent ev{iter, tasks[i].net, RouteEvent::Kind::audit_failed, credit_set(*out.routes[i], tasks[i])};
      if (!ev.credited.empty()) graph.add_history(ev.credited, increment);
      ++tasks[i].failure_count;
      out.routes[i].reset();
      pending[i] = true;
      out.events.push_back(std::move(ev));
    }

    std::size_t left = 0;
    for (std::size_t i = 0; i < n; ++i) left += tasks[i].routable && pending[i];
    spdlog::debug("routing iteration {}: {} audit failures, {} nets pending", iter, broken.size(), left);
    if (left == 0) break;
  }

  out.success = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!tasks[i].routable) {
      out.status[i] = NetStatus::unroutable;
      out.success = false;
    } else if (out.routes[i]) {
      out.status[i] = NetStatus::routed;
      for (const auto& s : out.routes[i]->segments()) {
        out.wirelength_um += (std::abs(s.to.x - s.from.x) + std::abs(s.to.y - s.from.y)) * graph.tech().grid_step;
      }
      out.vias += static_cast<int>(out.routes[i]->vias().size());
    } else {
      out.status[i] = NetStatus::failed;
      out.success = false;
    }
  }
  out.tasks = std::move(tasks);
  return out;
}

RoutingRun route_placement(const Netlist& nl, const PlacementMap& placements, const TechRules& tech,
                           const SearchParams& params) {
  RoutingRun run{build_routing_graph(nl, placements, tech), {}};
  std::vector<NetTask> tasks = project_pins(nl, placements, run.graph);
  run.layout = route_all(run.graph, std::move(tasks), params);
  return run;
}

}  // namespace anapr
