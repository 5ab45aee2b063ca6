// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "anapr/placer.hpp"
#include "oracles.hpp"

using namespace anapr;
using namespace anapr::testing;
using nlohmann::json;

namespace {

Netlist four_devices() {
  return netlist_from_json(netlist_json(
      {device_json("A", {{4, 6}, {6, 4}}, {{"a1", 1, 3, "h"}, {"a2", 2, 1, "v"}}),
       device_json("B", {{5, 5}}, {{"b1", 1, 2, "h"}, {"b2", 2, 4, "v"}}),
       device_json("C", {{3, 4}, {4, 3}}, {{"c1", 1, 2, "h"}}),
       device_json("D", {{4, 4}}, {{"d1", 2, 1, "v"}, {"d2", 3, 2, "h"}})},
      {net_json("n1", {"a1", "b1"}), net_json("n2", {"a2", "c1", "d1"}), net_json("n3", {"b2", "d2"})}));
}

EnvOptions options(int resolution) {
  EnvOptions o;
  o.grid.resolution = resolution;
  o.drr = false;
  o.hpwl_min = 12.0;
  return o;
}

// Uniform choice over the mask-true actions.
PolicyHook random_hook(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  PolicyHook h;
  h.identity = "random";
  h.choose = [rng](const FloorplanState& s, const ActionMask& m, const FeatureTable&) {
    std::vector<Action> legal;
    for (int v = 0; v < 3; ++v)
      for (int y = 0; y < m.resolution(); ++y)
        for (int x = 0; x < m.resolution(); ++x)
          if (m.at(v, x, y)) legal.push_back({0, v, x, y});
    Action a = legal[std::uniform_int_distribution<std::size_t>(0, legal.size() - 1)(*rng)];
    a.device = s.order[s.step];
    return a;
  };
  return h;
}

}  // namespace

TEST_SUITE("placer") {

TEST_CASE("greedy beats the median random rollout") {
  Netlist nl = four_devices();
  FloorplanEnv env(nl, desk_tech(), options(20));
  const double greedy = env.terminal_reward(greedy_rollout(env, Scorer::partial_reward));
  std::vector<double> rewards;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    rewards.push_back(env.terminal_reward(run_policy(env, random_hook(seed)).state));
  }
  std::nth_element(rewards.begin(), rewards.begin() + 50, rewards.end());
  CHECK(greedy >= rewards[50]);
}

TEST_CASE("best action picks the top score, first on ties") {
  Netlist nl = four_devices();
  FloorplanEnv env(nl, desk_tech(), options(20));
  FloorplanState s = env.reset();
  auto d = *env.next_device(s);
  ActionMask m = env.legal_action_mask(s, d);
  auto a = best_action(env, s, m, Scorer::hpwl_delta);
  REQUIRE(a);
  // nothing placed yet: every action scores zero, so the first one wins
  CHECK(*a == Action{d, 0, 0, 0});
  ActionMask empty(20);
  CHECK_FALSE(best_action(env, s, empty, Scorer::hpwl_delta));
}

TEST_CASE("record and replay reproduce the terminal state") {
  Netlist nl = four_devices();
  FloorplanEnv env(nl, desk_tech(), options(20));
  PolicyRun recorded = run_policy(env, random_hook(3));
  PolicyRun replayed = run_policy(env, replay_hook(recorded.actions));
  CHECK(replayed.state == recorded.state);
  CHECK(replayed.step_rewards == recorded.step_rewards);
  CHECK(actions_of(env, recorded.state) == recorded.actions);
}

TEST_CASE("mask-false choice aborts with the step") {
  Netlist nl = four_devices();
  FloorplanEnv env(nl, desk_tech(), options(20));
  PolicyRun good = run_policy(env, greedy_hook(env, Scorer::hpwl_delta));
  std::vector<Action> log(good.actions.begin(), good.actions.begin() + 2);
  log.push_back(log[0]);
  log[2].device = good.state.order[2];
  try {
    run_policy(env, replay_hook(log));
    FAIL("expected a policy error");
  } catch (const PolicyError& e) {
    CHECK(std::string(e.what()).find("step 3") != std::string::npos);
  }
}

TEST_CASE("annealing is seed determined and never worse than its start") {
  Netlist nl = four_devices();
  FloorplanEnv env(nl, desk_tech(), options(20));
  SaSchedule sch;
  sch.budget = 3000;
  sch.restarts = 2;
  sch.seed = 17;
  AnnealResult a = anneal(env, sch);
  AnnealResult b = anneal(env, sch);
  CHECK(a.trajectory_hash == b.trajectory_hash);
  CHECK(a.state == b.state);
  CHECK(a.reward == env.terminal_reward(a.state));
  CHECK(a.reward >= env.terminal_reward(greedy_rollout(env, Scorer::partial_reward)));
  REQUIRE(a.best_trace.size() == 3000);
  CHECK(std::is_sorted(a.best_trace.begin(), a.best_trace.end()));
  sch.seed = 18;
  CHECK(anneal(env, sch).trajectory_hash != a.trajectory_hash);
}

TEST_CASE("annealing keeps symmetry") {
  json j = netlist_json({device_json("A", {{4, 4}}, {{"a", 1, 2, "h"}}), device_json("B", {{4, 4}}, {{"b", 3, 2, "h"}}),
                         device_json("C", {{3, 5}}, {{"c", 1, 2, "h"}})},
                        {net_json("n", {"a", "b", "c"})},
                        {{{"kind", "symmetry"}, {"axis", "vertical"}, {"members", {"A", "B"}}}});
  Netlist nl = netlist_from_json(j);
  FloorplanEnv env(nl, desk_tech(), options(20));
  SaSchedule sch;
  sch.budget = 4000;
  sch.restarts = 2;
  AnnealResult r = anneal(env, sch);
  CHECK(r.reward > -1000.0);
  CHECK(constraints_satisfied(r.state.placements, nl));
}

TEST_CASE("schedule validation") {
  SaSchedule s;
  s.cooling = 1.0;
  CHECK_THROWS(s.validate());
  s = {};
  s.budget = 0;
  CHECK_THROWS(s.validate());
}

}  // TEST_SUITE
