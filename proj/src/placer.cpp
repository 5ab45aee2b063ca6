// SPDX-License-Identifier: Apache-2.0
#include "anapr/placer.hpp"

#include <bit>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <tuple>

#include <spdlog/spdlog.h>

#include "anneal_core.hpp"

namespace anapr {

namespace {
constexpr const char* kModule = "placer";
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffU;
    h *= kFnvPrime;
  }
}

// Scores every candidate origin of one device against a fixed state.
class CandidateScorer {
public:
  CandidateScorer(const FloorplanEnv& env, const FloorplanState& s, std::size_t device)
      : env_(env), state_(s), device_(device) {
    const Netlist& nl = env.netlist();
    for (auto ni : nl.nets_of_device(device)) {
      NetView nv;
      for (auto pi : nl.net(ni).pins) {
        const Pin& pin = nl.pin(pi);
        if (pin.owner == device) {
          nv.own.push_back(pi);
          continue;
        }
        const auto& p = s.placements[pin.owner];
        if (!p) continue;
        Point q = pin_position(nl, pi, *p);
        nv.x0 = std::min(nv.x0, q.x);
        nv.x1 = std::max(nv.x1, q.x);
        nv.y0 = std::min(nv.y0, q.y);
        nv.y1 = std::max(nv.y1, q.y);
        ++nv.placed;
      }
      nets_.push_back(std::move(nv));
    }
    for (const auto& p : s.placements) {
      if (!p) continue;
      CellRect r = body_rect(nl, *p);
      bbox_ = bbox_.united(r);
      area_ += r.area();
    }
  }

  double score(Scorer scorer, int variant, int x, int y) const {
    const Netlist& nl = env_.netlist();
    long long delta = 0;
    for (const auto& nv : nets_) {
      int x0 = nv.x0, x1 = nv.x1, y0 = nv.y0, y1 = nv.y1;
      for (auto pi : nv.own) {
        Point off = nl.pin_offset(pi, variant);
        x0 = std::min(x0, x + off.x);
        x1 = std::max(x1, x + off.x);
        y0 = std::min(y0, y + off.y);
        y1 = std::max(y1, y + off.y);
      }
      const long long before = nv.placed >= 2 ? (nv.x1 - nv.x0) + (nv.y1 - nv.y0) : 0;
      const long long after =
          nv.placed + static_cast<int>(nv.own.size()) >= 2 ? (x1 - x0) + (y1 - y0) : 0;
      delta += after - before;
    }
    const double dhpwl = static_cast<double>(delta) * env_.grid().cell_pitch;
    if (scorer == Scorer::hpwl_delta) return -dhpwl;
    const Shape& sh = nl.device(device_).variants[static_cast<std::size_t>(variant)];
    CellRect body{x, y, x + sh.width, y + sh.height};
    CellRect bb = bbox_.united(body);
    const double ds = 1.0 - static_cast<double>(area_ + body.area()) / static_cast<double>(bb.area());
    return -(dhpwl / env_.hpwl_min() + env_.options().dead_space_weight * (ds - state_.dead_space));
  }

private:
  struct NetView {
    std::vector<std::size_t> own;
    int x0 = std::numeric_limits<int>::max();
    int x1 = std::numeric_limits<int>::min();
    int y0 = std::numeric_limits<int>::max();
    int y1 = std::numeric_limits<int>::min();
    int placed = 0;
  };
  const FloorplanEnv& env_;
  const FloorplanState& state_;
  std::size_t device_;
  std::vector<NetView> nets_;
  CellRect bbox_;
  long long area_ = 0;
};

}  // namespace

std::optional<Action> best_action(const FloorplanEnv& env, const FloorplanState& s,
                                  const ActionMask& mask, Scorer scorer) {
  auto device = env.next_device(s);
  if (!device) return std::nullopt;
  CandidateScorer cs(env, s, *device);
  const int r = mask.resolution();
  const int variants = static_cast<int>(env.netlist().device(*device).variants.size());
  std::optional<Action> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int v = 0; v < variants; ++v) {
    for (int y = 0; y < r; ++y) {
      for (int x = 0; x < r; ++x) {
        if (!mask.at(v, x, y)) continue;
        const double sc = cs.score(scorer, v, x, y);
        if (!best || sc > best_score) {
          best = Action{*device, v, x, y};
          best_score = sc;
        }
      }
    }
  }
  return best;
}

FloorplanState greedy_rollout(const FloorplanEnv& env, Scorer scorer) {
  return run_policy(env, greedy_hook(env, scorer)).state;
}

void SaSchedule::validate() const {
  if (!(t0 > 0)) throw ValidationError(kModule, "initial temperature must be positive");
  if (!(cooling > 0 && cooling < 1)) throw ValidationError(kModule, "cooling factor must lie in (0,1)");
  if (steps_per_temperature < 1) throw ValidationError(kModule, "steps per temperature must be >= 1");
  if (budget < 1) throw ValidationError(kModule, "annealing budget must be >= 1");
  if (restarts < 1) throw ValidationError(kModule, "restart count must be >= 1");
}

// --- annealing -----------------------------------------------------------------

namespace detail {

namespace {

enum class Move : std::uint8_t { relocate, swap, variant, repair };

class Annealer {
public:
  Annealer(const FloorplanEnv& env, const SaSchedule& sched, std::uint64_t seed)
      : env_(env), nl_(env.netlist()), sched_(sched), rng_(seed), r_(env.grid().resolution) {
    for (std::size_t d = 0; d < nl_.devices().size(); ++d) {
      if (nl_.device(d).variants.size() > 1) multi_variant_ = true;
    }
  }

  // Proposes a neighbour of `cur`. Returns false when the move is infeasible.
  bool propose(const PlacementMap& cur, PlacementMap& next, Move& kind, double temperature) {
    const std::size_t n = cur.size();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng_);
    const bool constrained = !nl_.constraints().empty();
    const double p_repair = constrained ? 0.2 : 0.0;
    const double rest = 1.0 - p_repair;
    if (u < p_repair) {
      kind = Move::repair;
    } else if (u < p_repair + rest * 0.5 || n < 2) {
      kind = Move::relocate;
    } else if (u < p_repair + rest * 0.75 || !multi_variant_) {
      kind = Move::swap;
    } else {
      kind = Move::variant;
    }
    if (kind == Move::swap && n < 2) kind = Move::relocate;
    next = cur;
    switch (kind) {
      case Move::relocate:
        return relocate(next, temperature);
      case Move::swap:
        return swap(next);
      case Move::variant:
        return change_variant(next);
      case Move::repair:
        return repair(next);
    }
    return false;
  }

  std::mt19937_64& rng() { return rng_; }

private:
  std::size_t pick_device(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

  bool relocate(PlacementMap& m, double temperature) {
    const std::size_t d = pick_device(m.size());
    const int variant = m[d] ? m[d]->variant : 0;
    const Shape& sh = nl_.device(d).variants[static_cast<std::size_t>(variant)];
    const Padding pad = env_.paddings()[d];
    const int xmin = pad.horizontal, xmax = r_ - sh.width - pad.horizontal;
    const int ymin = pad.vertical, ymax = r_ - sh.height - pad.vertical;
    if (xmax < xmin || ymax < ymin) return false;
    int x = 0, y = 0;
    if (!m[d] || std::uniform_int_distribution<int>(0, 1)(rng_) == 0) {
      x = std::uniform_int_distribution<int>(xmin, xmax)(rng_);
      y = std::uniform_int_distribution<int>(ymin, ymax)(rng_);
    } else {
      const int radius = std::max(1, static_cast<int>(std::lround(r_ / 4.0 * temperature / sched_.t0)));
      std::uniform_int_distribution<int> step(-radius, radius);
      x = std::clamp(m[d]->x + step(rng_), xmin, xmax);
      y = std::clamp(m[d]->y + step(rng_), ymin, ymax);
      if (x == m[d]->x && y == m[d]->y) return false;
    }
    Placement p = env_.make_placement(d, variant, x, y);
    if (!env_.fits(m, p)) return false;
    m[d] = p;
    return true;
  }

  bool swap(PlacementMap& m) {
    const std::size_t a = pick_device(m.size());
    std::size_t b = pick_device(m.size() - 1);
    if (b >= a) ++b;
    if (!m[a] || !m[b]) return false;
    Placement pa = env_.make_placement(a, m[a]->variant, m[b]->x, m[b]->y);
    Placement pb = env_.make_placement(b, m[b]->variant, m[a]->x, m[a]->y);
    m[a] = pa;
    m[b] = pb;
    return env_.fits(m, pa) && env_.fits(m, pb);
  }

  bool change_variant(PlacementMap& m) {
    const std::size_t d = pick_device(m.size());
    const int variants = static_cast<int>(nl_.device(d).variants.size());
    if (!m[d] || variants < 2) return false;
    int v = std::uniform_int_distribution<int>(0, variants - 2)(rng_);
    if (v >= m[d]->variant) ++v;
    Placement p = env_.make_placement(d, v, m[d]->x, m[d]->y);
    if (!env_.fits(m, p)) return false;
    m[d] = p;
    return true;
  }

  // Moves one constraint member so that it agrees with the others.
  bool repair(PlacementMap& m) {
    const auto& cs = nl_.constraints();
    const Constraint& c = cs[pick_device(cs.size())];
    if (c.members.size() < 2) return false;
    const std::size_t k = 1 + pick_device(c.members.size() - 1);
    const std::size_t anchor = c.members[0];
    const std::size_t d = c.members[k];
    if (!m[anchor] || !m[d]) return false;
    Placement p = *m[d];
    const CellRect a = body_rect(nl_, *m[anchor]);
    const Shape& sh = nl_.device(d).variants[static_cast<std::size_t>(p.variant)];
    if (c.kind == ConstraintKind::alignment) {
      (c.axis == Axis::horizontal ? p.y : p.x) = c.axis == Axis::horizontal ? a.y0 : a.x0;
    } else {
      const bool vertical = c.axis == Axis::vertical;
      const bool paired = k % 2 == 1;
      const std::size_t partner = paired ? c.members[k - 1] : anchor;
      if (!m[partner]) return false;
      const CellRect pr = body_rect(nl_, *m[partner]);
      // Doubled-doubled axis position taken from the first pair.
      const CellRect b = m[c.members[1]] ? body_rect(nl_, *m[c.members[1]]) : a;
      const long long axis4 = vertical ? (a.x0 + a.x1) + (b.x0 + b.x1) : (a.y0 + a.y1) + (b.y0 + b.y1);
      const int extent = vertical ? sh.width : sh.height;
      long long twice_origin = 0;
      if (k == 1) {
        // Level the first pair; the axis follows.
        if (vertical) p.y = a.y0; else p.x = a.x0;
        if (p == *m[d]) return false;
        m[d] = p;
        return env_.fits(m, p);
      }
      if (paired) {
        const long long c_partner = vertical ? pr.x0 + pr.x1 : pr.y0 + pr.y1;
        twice_origin = axis4 - c_partner - extent;
        if (vertical) p.y = pr.y0; else p.x = pr.x0;
      } else {
        twice_origin = axis4 / 2 - extent;
        if (axis4 % 2 != 0) return false;
      }
      if (twice_origin % 2 != 0) return false;
      (vertical ? p.x : p.y) = static_cast<int>(twice_origin / 2);
    }
    if (p == *m[d]) return false;
    m[d] = p;
    return env_.fits(m, p);
  }

  const FloorplanEnv& env_;
  const Netlist& nl_;
  const SaSchedule& sched_;
  std::mt19937_64 rng_;
  int r_;
  bool multi_variant_ = false;
};

}  // namespace

AnnealRun anneal_run(const FloorplanEnv& env, const SaSchedule& sched, std::uint64_t seed,
                     const PlacementMap& initial, const Objective& objective) {
  AnnealRun run;
  PlacementMap cur = initial;
  double cur_value = objective(cur);
  run.best = cur;
  run.best_value = cur_value;
  run.best_trace.reserve(static_cast<std::size_t>(sched.budget));
  run.best_trace.push_back(cur_value);
  run.hash = kFnvOffset;
  fnv_mix(run.hash, std::bit_cast<std::uint64_t>(cur_value));
  if (cur.empty()) return run;

  // Reward differences are measured relative to the starting value.
  const double scale = std::max(1.0, std::abs(cur_value));
  Annealer annealer(env, sched, seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PlacementMap next;
  for (int step = 1; step < sched.budget; ++step) {
    const double temperature = sched.t0 * std::pow(sched.cooling, (step - 1) / sched.steps_per_temperature);
    Move kind{};
    bool accepted = false;
    if (annealer.propose(cur, next, kind, temperature)) {
      const double value = objective(next);
      const double delta = (value - cur_value) / scale;
      if (delta >= 0 || unit(annealer.rng()) < std::exp(delta / temperature)) {
        cur.swap(next);
        cur_value = value;
        accepted = true;
        ++run.accepted;
        if (cur_value > run.best_value) {
          run.best_value = cur_value;
          run.best = cur;
        }
      }
    }
    run.best_trace.push_back(run.best_value);
    fnv_mix(run.hash, static_cast<std::uint64_t>(kind));
    fnv_mix(run.hash, accepted ? 1U : 0U);
    fnv_mix(run.hash, std::bit_cast<std::uint64_t>(cur_value));
  }
  return run;
}

}  // namespace detail

AnnealResult anneal(const FloorplanEnv& env, const SaSchedule& schedule) {
  schedule.validate();
  const FloorplanState start = greedy_rollout(env, Scorer::partial_reward);
  auto objective = [&env](const PlacementMap& m) { return env.evaluate(m); };

  std::vector<std::future<detail::AnnealRun>> jobs;
  for (int i = 0; i < schedule.restarts; ++i) {
    const std::uint64_t seed = detail::splitmix64(schedule.seed + static_cast<std::uint64_t>(i));
    jobs.push_back(std::async(std::launch::async, [&, seed] {
      return detail::anneal_run(env, schedule, seed, start.placements, objective);
    }));
  }
  AnnealResult out;
  std::uint64_t hash = kFnvOffset;
  std::optional<detail::AnnealRun> best;
  for (int i = 0; i < schedule.restarts; ++i) {
    detail::AnnealRun run = jobs[static_cast<std::size_t>(i)].get();
    fnv_mix(hash, run.hash);
    out.accepted += run.accepted;
    if (!best || run.best_value > best->best_value) {
      best = std::move(run);
      out.restart = i;
    }
  }
  out.state = env.replay(best->best);
  out.reward = best->best_value;
  out.best_trace = std::move(best->best_trace);
  out.trajectory_hash = hash;
  spdlog::debug("anneal: best reward {:.6f} from restart {}", out.reward, out.restart);
  return out;
}

// --- policy hooks ---------------------------------------------------------------

PolicyRun run_policy(const FloorplanEnv& env, const PolicyHook& hook) {
  const CircuitGraph graph = build_circuit_graph(env.netlist());
  const FeatureTable features = extract_node_features(graph, env.netlist());
  PolicyRun run;
  run.state = env.reset();
  while (auto device = env.next_device(run.state)) {
    const ActionMask mask = env.legal_action_mask(run.state, *device);
    const Action a = hook.choose(run.state, mask, features);
    const std::size_t step_no = run.state.step + 1;
    const int r = mask.resolution();
    const bool legal = a.device == *device && a.variant >= 0 && a.variant < kMaxShapeVariants &&
                       a.x >= 0 && a.x < r && a.y >= 0 && a.y < r && mask.at(a.variant, a.x, a.y);
    if (!legal) {
      throw PolicyError("policy '" + hook.identity + "' chose a mask-false action at step " +
                        std::to_string(step_no) + " (device '" + env.netlist().device(*device).id + "')");
    }
    const StepResult res = env.step(run.state, a);
    run.actions.push_back(a);
    run.step_rewards.push_back(res.reward);
    spdlog::debug("{} step {}: {} v{} ({},{}) reward {:.6f}", hook.identity, step_no,
                  env.netlist().device(a.device).id, a.variant, a.x, a.y, res.reward);
  }
  return run;
}

PolicyHook greedy_hook(const FloorplanEnv& env, Scorer scorer) {
  PolicyHook h;
  h.identity = scorer == Scorer::hpwl_delta ? "greedy-hpwl" : "greedy-reward";
  h.choose = [&env, scorer](const FloorplanState& s, const ActionMask& mask, const FeatureTable&) {
    auto a = best_action(env, s, mask, scorer);
    return a ? *a : Action{};
  };
  return h;
}

PolicyHook replay_hook(std::vector<Action> actions) {
  PolicyHook h;
  h.identity = "replay";
  h.choose = [actions = std::move(actions)](const FloorplanState& s, const ActionMask&, const FeatureTable&) {
    if (s.step < actions.size()) return actions[s.step];
    return Action{std::numeric_limits<std::size_t>::max(), 0, -1, -1};
  };
  return h;
}

std::vector<Action> actions_of(const FloorplanEnv& env, const FloorplanState& s) {
  std::vector<Action> out;
  for (std::size_t i = 0; i < s.step; ++i) {
    const Placement& p = *s.placements[env.order()[i]];
    out.push_back({p.device, p.variant, p.x, p.y});
  }
  return out;
}

// --- HPWL_min ---------------------------------------------------------------------

namespace {
using CacheKey = std::tuple<std::uint64_t, int, std::uint64_t, std::uint64_t, int, std::uint64_t>;
std::mutex g_cache_mutex;
std::map<CacheKey, double> g_cache;
}  // namespace

double estimate_hpwl_min(const Netlist& nl, const GridConfig& grid, std::span<const Padding> paddings,
                         int budget, std::uint64_t seed) {
  bool has_net = false;
  for (const auto& n : nl.nets()) has_net = has_net || n.pins.size() >= 2;
  if (!has_net || nl.devices().empty()) return 1.0;

  std::uint64_t pad_hash = kFnvOffset;
  for (const auto& p : paddings) {
    fnv_mix(pad_hash, static_cast<std::uint64_t>(p.horizontal));
    fnv_mix(pad_hash, static_cast<std::uint64_t>(p.vertical));
  }
  const CacheKey key{nl.fingerprint(), grid.resolution, std::bit_cast<std::uint64_t>(grid.cell_pitch),
                     pad_hash, budget, seed};
  {
    std::lock_guard lock(g_cache_mutex);
    if (auto it = g_cache.find(key); it != g_cache.end()) return it->second;
  }

  EnvOptions opts;
  opts.grid = grid;
  opts.hpwl_min = 1.0;
  opts.paddings.assign(paddings.begin(), paddings.end());
  FloorplanEnv env(nl, desk_tech(), opts);
  const FloorplanState start = greedy_rollout(env, Scorer::hpwl_delta);
  SaSchedule sched;
  sched.budget = std::max(1, budget);
  sched.restarts = 1;
  sched.seed = seed;
  auto objective = [&env, &nl](const PlacementMap& m) {
    for (const auto& p : m) {
      if (!p) return -1e9;
    }
    return -recompute_hpwl(m, nl, env.grid().cell_pitch);
  };
  double best = 1.0;
  if (!start.stalled) {
    auto run = detail::anneal_run(env, sched, detail::splitmix64(seed), start.placements, objective);
    if (-run.best_value > 0) best = -run.best_value;
  }
  std::lock_guard lock(g_cache_mutex);
  g_cache.emplace(key, best);
  return best;
}

std::size_t hpwl_min_cache_size() {
  std::lock_guard lock(g_cache_mutex);
  return g_cache.size();
}

}  // namespace anapr
