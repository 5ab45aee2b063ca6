// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anapr/floorplan.hpp"
#include "anapr/layout_io.hpp"
#include "anapr/placer.hpp"
#include "anapr/router.hpp"

namespace anapr {

enum class Driver { greedy, sa, replay };

struct PnrOptions {
  EnvOptions env;
  Driver driver = Driver::sa;
  SaSchedule sa;
  std::optional<SearchParams> search;  // defaults come from the technology
  std::vector<Action> replay;          // for Driver::replay
  std::string circuit;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitRoutingFailed = 2;

struct PlaceOutcome {
  FloorplanState state;
  double reward = 0.0;
};

PlaceOutcome run_placer(const FloorplanEnv& env, const PnrOptions& options);

struct PnrOutcome {
  LayoutDoc doc;
  MetricsReport metrics;
  int exit_code = kExitOk;
};

// place -> build routing graph -> route_all -> metrics.
PnrOutcome run_pnr(const Netlist& nl, const TechRules& tech, const PnrOptions& options);

// Routes an existing placement.
PnrOutcome run_route(const Netlist& nl, const TechRules& tech, const PlacementMap& placements,
                     const GridConfig& grid, const SearchParams& search, std::uint64_t seed,
                     const std::string& circuit);

}  // namespace anapr
