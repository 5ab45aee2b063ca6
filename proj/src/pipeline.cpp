// SPDX-License-Identifier: Apache-2.0
#include "anapr/pipeline.hpp"

#include <chrono>

#include <spdlog/spdlog.h>

namespace anapr {

PlaceOutcome run_placer(const FloorplanEnv& env, const PnrOptions& options) {
  PlaceOutcome out;
  switch (options.driver) {
    case Driver::greedy:
      out.state = greedy_rollout(env, Scorer::partial_reward);
      break;
    case Driver::sa: {
      AnnealResult r = anneal(env, options.sa);
      out.state = std::move(r.state);
      break;
    }
    case Driver::replay:
      out.state = run_policy(env, replay_hook(options.replay)).state;
      break;
  }
  out.reward = env.terminal_reward(out.state);
  return out;
}

PnrOutcome run_route(const Netlist& nl, const TechRules& tech, const PlacementMap& placements,
                     const GridConfig& grid, const SearchParams& search, std::uint64_t seed,
                     const std::string& circuit) {
  PnrOutcome out;
  bool any_placed = false;
  bool all_placed = true;
  for (const auto& p : placements) {
    any_placed = any_placed || p.has_value();
    all_placed = all_placed && p.has_value();
  }
  if (!any_placed) {
    out.doc = make_layout_doc(nl, placements, grid, tech, nullptr, seed, circuit);
    out.doc.routed = true;
    out.doc.success = all_placed && nl.nets().empty();
    out.doc.iterations = 0;
    for (auto& n : out.doc.nets) n.status = NetStatus::unroutable;
  } else {
    RoutingRun run = route_placement(nl, placements, tech, search);
    out.doc = make_layout_doc(nl, placements, grid, tech, &run.layout, seed, circuit);
    out.doc.success = run.layout.success && all_placed;
  }
  out.metrics = compute_metrics(out.doc);
  out.exit_code = out.doc.success ? kExitOk : kExitRoutingFailed;
  return out;
}

PnrOutcome run_pnr(const Netlist& nl, const TechRules& tech, const PnrOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  FloorplanEnv env(nl, tech, options.env);
  PlaceOutcome placed = run_placer(env, options);
  if (placed.state.stalled) spdlog::warn("placement stalled after {} of {} devices", placed.state.step, placed.state.order.size());
  const SearchParams search = options.search.value_or(search_params(tech));
  PnrOutcome out = run_route(nl, tech, placed.state.placements, options.env.grid, search, options.env.seed, options.circuit);
  out.metrics.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace anapr
