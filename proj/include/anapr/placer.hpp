// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "anapr/error.hpp"
#include "anapr/floorplan.hpp"
#include "anapr/netlist.hpp"

namespace anapr {

enum class Scorer { hpwl_delta, partial_reward };

// Picks the mask-true action with the highest score; the first one in
// (variant, y, x) order wins ties. nullopt when the mask is empty.
std::optional<Action> best_action(const FloorplanEnv& env, const FloorplanState& s,
                                  const ActionMask& mask, Scorer scorer);

FloorplanState greedy_rollout(const FloorplanEnv& env, Scorer scorer);

struct SaSchedule {
  double t0 = 1.0;
  double cooling = 0.97;
  int steps_per_temperature = 200;
  int budget = 20000;  // states visited per restart, the initial one included
  int restarts = 4;
  std::uint64_t seed = 0;
  void validate() const;
};

struct AnnealResult {
  FloorplanState state;
  double reward = 0.0;
  std::uint64_t trajectory_hash = 0;
  // Best-so-far reward after each visited state of the winning restart.
  std::vector<double> best_trace;
  std::size_t accepted = 0;
  int restart = 0;
};

// Simulated annealing over complete placements, started from the greedy
// partial-reward construction and scored with FloorplanEnv::evaluate.
AnnealResult anneal(const FloorplanEnv& env, const SaSchedule& schedule);

class PolicyError : public Error {
public:
  explicit PolicyError(const std::string& what) : Error("placer", what) {}
};

struct PolicyHook {
  std::string identity;
  std::function<Action(const FloorplanState&, const ActionMask&, const FeatureTable&)> choose;
};

struct PolicyRun {
  FloorplanState state;
  std::vector<Action> actions;
  std::vector<double> step_rewards;
};

// Steps the environment with hook-chosen actions until terminal. A
// mask-false action aborts with a PolicyError naming the step (1-based).
PolicyRun run_policy(const FloorplanEnv& env, const PolicyHook& hook);

PolicyHook greedy_hook(const FloorplanEnv& env, Scorer scorer);
PolicyHook replay_hook(std::vector<Action> actions);

// Environment-order actions that rebuild a complete placement.
std::vector<Action> actions_of(const FloorplanEnv& env, const FloorplanState& s);

}  // namespace anapr
