// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "anapr/floorplan.hpp"
#include "anapr/placer.hpp"

namespace anapr::detail {

using Objective = std::function<double(const PlacementMap&)>;

struct AnnealRun {
  PlacementMap best;
  double best_value = 0.0;
  std::uint64_t hash = 0;
  std::vector<double> best_trace;
  std::size_t accepted = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// One annealing chain maximising `objective` from `initial`.
AnnealRun anneal_run(const FloorplanEnv& env, const SaSchedule& schedule, std::uint64_t seed,
                     const PlacementMap& initial, const Objective& objective);

}  // namespace anapr::detail
