// SPDX-License-Identifier: Apache-2.0
// Acceptance suite. One line per criterion: "criterion N: PASS|FAIL ...".
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "anapr/corpus.hpp"
#include "anapr/error.hpp"
#include "anapr/pipeline.hpp"
#include "anapr/placer.hpp"
#include "oracles.hpp"

#ifndef ANAPR_CLI
#define ANAPR_CLI "anapr"
#endif

using namespace anapr;
using namespace anapr::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

SearchParams exact_params() {
  SearchParams p;
  p.kappa = 1.0;
  p.q = 0.0;
  p.drc_cost = 0.0;
  p.use_history = false;
  return p;
}

// 1: exact search cost equals Dijkstra on 200 random 16x16x2 grids, < 10 s.
Verdict exact_search() {
  std::mt19937_64 rng(1001);
  const TechRules tech = desk_tech();
  SearchWorkspace ws;
  int mismatches = 0, reachable = 0;
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 200; ++i) {
    RandomGrid rg = random_grid(rng, 16, 0.2, tech);
    const SearchParams p = exact_params();
    const double want = dijkstra_cost(rg.graph, rg.source, rg.target, 0, p);
    const SearchResult r = astar_two_pin(rg.graph, rg.source, rg.target, 0, p, &ws);
    if (r.found != (want < kInf)) {
      ++mismatches;
      continue;
    }
    if (!r.found) continue;
    ++reachable;
    const double got = path_cost(rg.graph, r.connection.path, 0, p);
    worst = std::max(worst, std::abs(got - want));
    if (std::abs(got - want) > 1e-9) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0,
          fmt::format("{} mismatches over 200 grids ({} reachable), max |diff| {:.3g}, {:.2f} s (limit 10 s)",
                      mismatches, reachable, worst, secs)};
}

// 2: weighted search lands in [opt, 3 opt].
Verdict weighted_search() {
  std::mt19937_64 rng(1001);
  const TechRules tech = desk_tech();
  SearchWorkspace ws;
  int outside = 0, reachable = 0;
  double worst_ratio = 1.0;
  for (int i = 0; i < 200; ++i) {
    RandomGrid rg = random_grid(rng, 16, 0.2, tech);
    SearchParams p = exact_params();
    const double opt = dijkstra_cost(rg.graph, rg.source, rg.target, 0, p);
    p.kappa = 3.0;
    p.q = 1e-4;
    const SearchResult r = astar_two_pin(rg.graph, rg.source, rg.target, 0, p, &ws);
    if (r.found != (opt < kInf)) {
      ++outside;
      continue;
    }
    if (!r.found) continue;
    ++reachable;
    const double c = path_cost(rg.graph, r.connection.path, 0, p);
    if (opt > 0) worst_ratio = std::max(worst_ratio, c / opt);
    if (c < opt - 1e-9 || c > 3.0 * opt + 1e-9) ++outside;
  }
  return {outside == 0, fmt::format("{} outside [opt, 3 opt] over {} reachable, worst ratio {:.4f}", outside,
                                    reachable, worst_ratio)};
}

// 3: tie-breaking on obstacle-free plateaus never expands more. Corner to
// corner on one layer with no bend penalty: every optimal path costs
// dx + dy + 2 vias and differs only in the column where it crosses.
Verdict plateau() {
  const TechRules tech = desk_tech();
  int worse = 0, fewer = 0;
  std::size_t total0 = 0, total1 = 0;
  for (int k = 0; k < 20; ++k) {
    const int n = 8 + k;
    RoutingGraph g({0, 0, n, n}, tech);
    const RVertex s{0, 0, 0};
    const RVertex t{n - 1, n - 1, 0};
    SearchParams p = exact_params();
    p.bend_penalty = 0.0;
    const std::size_t e0 = astar_two_pin(g, s, t, 0, p).expanded;
    p.q = 1e-4;
    const std::size_t e1 = astar_two_pin(g, s, t, 0, p).expanded;
    total0 += e0;
    total1 += e1;
    worse += e1 > e0;
    fewer += e1 < e0;
  }
  return {worse == 0 && fewer >= 1,
          fmt::format("expanded {} with q=1e-4 vs {} with q=0; {} instances worse, {} strictly fewer", total1,
                      total0, worse, fewer)};
}

// 4: segment checks equal the raster oracle on 500 scenes.
Verdict segment_oracle() {
  std::mt19937_64 rng(4004);
  const TechRules tech = desk_tech();
  std::uniform_int_distribution<int> c(0, 14), len(0, 6), layer(0, 1), kind(0, 9);
  int mismatches = 0, nonempty = 0;
  for (int scene = 0; scene < 500; ++scene) {
    GeometryIndex idx;
    const int shapes = 1 + scene % 10;
    for (int i = 0; i < shapes; ++i) {
      const int l = layer(rng), x = c(rng), y = c(rng), n = len(rng), k = kind(rng);
      if (k == 0) {
        idx.insert(-1, -1, GeomKind::device, cell_block_rect({x, y, x + 1 + n % 3, y + 1 + n % 2}));
      } else if (k == 1) {
        idx.insert(2, -1, GeomKind::pin_pad, via_rect({x, y}, 1.0));
      } else {
        WireSegment s{l, {x, y}, tech.axis(l) == Axis::horizontal ? Point{x + n, y} : Point{x, y + n}, 1.0};
        idx.insert(k % 2, l, k == 2 ? GeomKind::via_pad : GeomKind::wire, segment_rect(s));
      }
    }
    const int l = layer(rng), x = c(rng), y = c(rng), n = len(rng);
    WireSegment cand{l, {x, y}, tech.axis(l) == Axis::horizontal ? Point{x + n, y} : Point{x, y + n}, 1.0};
    const auto want = raster_violations(cand, idx, tech, 0);
    mismatches += keys_of(check_segment(cand, idx, tech, 0)) != want;
    nonempty += !want.empty();
  }
  return {mismatches == 0, fmt::format("{} of 500 scenes differ ({} scenes with violations)", mismatches, nonempty)};
}

// 5: corridor contention resolved, detour avoids the first failed attempt.
Verdict corridor() {
  auto run = [] {
    Corridor c = corridor_fixture();
    return route_all(c.graph, c.tasks, c.params);
  };
  const RoutedLayout a = run();
  const RoutedLayout b = run();
  std::vector<RVertex> first;
  for (const auto& e : a.events) {
    if (e.net == 1 && e.kind != RouteEvent::Kind::committed) {
      first = e.credited;
      break;
    }
  }
  int hits = 0;
  if (a.routes[1]) {
    for (const auto& c : a.routes[1]->connections)
      for (const auto& v : c.path) hits += std::find(first.begin(), first.end(), v) != first.end();
  }
  bool same = a.iterations == b.iterations && a.routes.size() == b.routes.size();
  for (std::size_t n = 0; same && n < a.routes.size(); ++n) {
    same = a.routes[n].has_value() == b.routes[n].has_value() &&
           (!a.routes[n] || a.routes[n]->connections[0].path == b.routes[n]->connections[0].path);
  }
  const bool pass = a.success && a.iterations <= 35 && !first.empty() && hits == 0 && same;
  return {pass, fmt::format("success={} iterations={} (limit 35), first-attempt history vertices {}, reused {}, "
                            "deterministic={}",
                            a.success, a.iterations, first.size(), hits, same)};
}

EnvOptions property_options(int resolution, bool drr) {
  EnvOptions o;
  o.grid.resolution = resolution;
  o.drr = drr;
  o.hpwl_min = 10.0;
  return o;
}

// 6: reward and padding match recompute oracles; ideal case is -110.
Verdict reward_oracle() {
  std::mt19937_64 rng(6006);
  const TechRules tech = desk_tech();
  int checked = 0, bad = 0;
  double worst = 0.0;
  for (int trial = 0; checked < 100 && trial < 1000; ++trial) {
    Netlist nl = random_netlist(rng, 2 + trial % 5, 3);
    EnvOptions o = property_options(48, trial % 2 == 0);
    o.grid.cell_pitch = 0.5 + (trial % 4) * 0.25;
    o.grid.target_aspect = 0.5 + (trial % 3) * 0.5;
    o.hpwl_min = 5.0 + trial;
    FloorplanEnv env(nl, tech, o);
    for (std::size_t d = 0; d < nl.devices().size(); ++d) {
      bad += !(drr_padding(nl, d, tech, o.grid) == recompute_padding(nl, d, tech, o.grid));
    }
    SaSchedule sch;
    sch.budget = 200;
    sch.restarts = 1;
    sch.seed = static_cast<std::uint64_t>(trial);
    const FloorplanState s = trial % 2 ? greedy_rollout(env, Scorer::hpwl_delta) : anneal(env, sch).state;
    if (s.stalled) continue;
    const double got = env.terminal_reward(s);
    const double want = recompute_reward(nl, s.placements, o.grid, env.weights());
    const double rel = std::abs(got - want) / std::max(1e-300, std::abs(want));
    worst = std::max(worst, rel);
    bad += rel > 1e-9;
    ++checked;
  }
  AreaStats ideal;
  ideal.bbox = {0, 0, 10, 10};
  ideal.device_area = 100;
  ideal.aspect = 1.0;
  RewardWeights w;
  w.hpwl_min = 42.0;
  const double r = final_reward(ideal, 42.0, 1.0, w);
  return {bad == 0 && checked == 100 && r == -110.0,
          fmt::format("{} states, {} mismatches, max relative error {:.3g} (tolerance 1e-9), ideal reward {}", checked,
                      bad, worst, r)};
}

// 7: mask soundness and occupancy over 10,000 property steps.
Verdict mask_properties() {
  std::mt19937_64 rng(7007);
  const TechRules tech = desk_tech();
  long steps = 0, true_errors = 0, false_accepted = 0, occupancy_mismatch = 0, true_actions = 0;
  for (int episode = 0; steps < 10000; ++episode) {
    const int res = 16 + (episode % 3) * 8;
    Netlist nl = random_netlist(rng, 2 + episode % 6, 3);
    FloorplanEnv env(nl, tech, property_options(res, episode % 2 == 0));
    FloorplanState s = env.reset();
    std::uniform_int_distribution<int> v(0, 2), c(0, res - 1);
    std::bernoulli_distribution pick_legal(0.5);
    while (auto d = env.next_device(s)) {
      if (steps >= 10000) break;
      ++steps;
      const ActionMask m = env.legal_action_mask(s, *d);
      Action a{*d, v(rng), c(rng), c(rng)};
      if (pick_legal(rng)) {
        std::vector<Action> legal;
        for (int vv = 0; vv < 3; ++vv)
          for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x)
              if (m.at(vv, x, y)) legal.push_back({*d, vv, x, y});
        if (!legal.empty()) a = legal[std::uniform_int_distribution<std::size_t>(0, legal.size() - 1)(rng)];
      }
      const FloorplanState before = s;
      if (m.at(a.variant, a.x, a.y)) {
        ++true_actions;
        try {
          env.step(s, a);
        } catch (const Error&) {
          ++true_errors;
        }
      } else {
        try {
          env.step(s, a);
          ++false_accepted;
        } catch (const IllegalActionError&) {
          occupancy_mismatch += !(s == before);
        }
      }
      occupancy_mismatch += s.occupancy != footprint_mask(nl, s.placements, res);
    }
  }
  return {true_errors == 0 && false_accepted == 0 && occupancy_mismatch == 0,
          fmt::format("{} steps ({} mask-true): {} errors on mask-true, {} mask-false accepted, {} occupancy "
                      "mismatches",
                      steps, true_actions, true_errors, false_accepted, occupancy_mismatch)};
}

// 8: annealing finds the exhaustive optimum of 2-device toys.
Verdict anneal_optimum() {
  std::mt19937_64 rng(8008);
  const TechRules tech = desk_tech();
  int hits = 0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    Netlist nl = toy_pair(rng);
    EnvOptions o;
    o.grid.resolution = 16;
    o.seed = static_cast<std::uint64_t>(trial);
    FloorplanEnv env(nl, tech, o);
    const double best = exhaustive_optimum(env);
    SaSchedule sch;
    sch.restarts = 4;
    sch.seed = static_cast<std::uint64_t>(trial);
    const AnnealResult r = anneal(env, sch);
    hits += r.reward >= best - 1e-9 * std::max(1.0, std::abs(best));
  }
  const double secs = seconds_since(t0);
  return {hits >= 95 && secs < 60.0,
          fmt::format("optimum found in {}/100 trials (need 95), {:.1f} s (limit 60 s)", hits, secs)};
}

fs::path corpus_dir() { return fs::path(data_dir()) / "corpus"; }

// 9: corpus routes completely with DRR and worse without it.
Verdict corpus_drr() {
  const TechRules tech = desk_tech();
  const auto entries = load_manifest(corpus_dir());
  int fail_drr = 0, fail_plain = 0;
  double runtime = 0.0;
  for (const auto& e : entries) {
    const Netlist nl = load_netlist(corpus_dir() / e.file);
    for (bool drr : {true, false}) {
      PnrOptions o;
      o.env.grid.resolution = e.resolution;
      o.env.drr = drr;
      o.env.seed = 42;
      o.sa.seed = 42;
      o.circuit = e.name;
      const PnrOutcome r = run_pnr(nl, tech, o);
      spdlog::info("{} drr={} routed={} iterations={} {:.1f} s", e.name, drr, r.doc.success, r.doc.iterations,
                   r.metrics.runtime);
      if (drr) {
        fail_drr += r.metrics.routing_failed;
        runtime += r.metrics.runtime;
      } else {
        fail_plain += r.metrics.routing_failed;
      }
    }
  }
  const double n = static_cast<double>(entries.size());
  const double mean = runtime / std::max(1.0, n);
  return {entries.size() == 20 && fail_drr == 0 && fail_plain > fail_drr && mean < 60.0,
          fmt::format("{} circuits: failures {:.0f}% with DRR, {:.0f}% without; mean pnr runtime {:.1f} s (limit 60 s)",
                      entries.size(), 100.0 * fail_drr / n, 100.0 * fail_plain / n, mean)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 10: the CLI is byte-for-byte reproducible with a fixed seed.
Verdict cli_determinism() {
  const auto entries = load_manifest(corpus_dir());
  const fs::path work = fs::temp_directory_path() / "anapr_acceptance";
  fs::remove_all(work);
  int differ = 0, errors = 0;
  for (const auto& e : entries) {
    std::string outputs[2][2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = work / ("run" + std::to_string(run));
      fs::create_directories(out);
      const std::string cmd = fmt::format("\"{}\" --seed 42 --out-dir \"{}\" pnr \"{}\" --grid {} > /dev/null 2>&1",
                                          ANAPR_CLI, out.string(), (corpus_dir() / e.file).string(), e.resolution);
      const int rc = std::system(cmd.c_str());
      if (rc == -1 || !WIFEXITED(rc) || (WEXITSTATUS(rc) != 0 && WEXITSTATUS(rc) != 2)) ++errors;
      outputs[run][0] = slurp(out / (e.name + ".layout.json"));
      outputs[run][1] = slurp(out / (e.name + ".metrics.json"));
    }
    differ += outputs[0][0].empty() || outputs[0][0] != outputs[1][0] || outputs[0][1] != outputs[1][1];
  }
  fs::remove_all(work);
  return {entries.size() == 20 && differ == 0 && errors == 0,
          fmt::format("{} circuits, {} with differing layout or metrics, {} CLI errors", entries.size(), differ,
                      errors)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("acceptance suite");
  int only = 0;
  app.add_option("--criterion", only, "Run one criterion (1-10); all when omitted")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  const std::map<int, std::function<Verdict()>> criteria{
      {1, exact_search},   {2, weighted_search}, {3, plateau},        {4, segment_oracle}, {5, corridor},
      {6, reward_oracle},  {7, mask_properties}, {8, anneal_optimum}, {9, corpus_drr},     {10, cli_determinism}};
  int failed = 0;
  for (const auto& [n, fn] : criteria) {
    if (only && n != only) continue;
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << fmt::format("criterion {}: {} {}", n, v.pass ? "PASS" : "FAIL", v.detail) << std::endl;
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
