// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "anapr/error.hpp"
#include "anapr/netlist.hpp"
#include "oracles.hpp"

using namespace anapr;
using namespace anapr::testing;
using nlohmann::json;

TEST_SUITE("netlist") {

TEST_CASE("minimal netlist") {
  Netlist nl = netlist_from_json(netlist_json({device_json("M0", {{4, 4}}, {})}, json::array()));
  CHECK(nl.devices().size() == 1);
  CHECK(nl.nets().empty());
}

TEST_CASE("dangling pin reference is named") {
  json j = netlist_json({device_json("M0", {{4, 4}}, {{"p1", 1, 2, "h"}})}, {net_json("n", {"p1", "p9"})});
  try {
    netlist_from_json(j);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("p9") != std::string::npos);
  }
}

TEST_CASE("malformed input") {
  CHECK_THROWS_AS(netlist_from_json(json::array()), ParseError);
  json zero = netlist_json({device_json("M0", {{0, 4}}, {})}, json::array());
  CHECK_THROWS_AS(netlist_from_json(zero), ValidationError);
  json four = netlist_json({device_json("M0", {{4, 4}, {4, 5}, {5, 4}, {6, 6}}, {})}, json::array());
  CHECK_THROWS_AS(netlist_from_json(four), ValidationError);
  json dup = netlist_json({device_json("M0", {{4, 4}}, {}), device_json("M0", {{4, 4}}, {})}, json::array());
  CHECK_THROWS_AS(netlist_from_json(dup), ValidationError);
  json shared = netlist_json({device_json("M0", {{4, 4}}, {{"p", 1, 2, "h"}, {"q", 2, 1, "v"}})},
                             {net_json("a", {"p", "q"}), net_json("b", {"p", "q"})});
  CHECK_THROWS_AS(netlist_from_json(shared), ValidationError);
  json outside = netlist_json({device_json("M0", {{4, 4}}, {{"p", 4, 2, "h"}})}, json::array());
  CHECK_THROWS_AS(netlist_from_json(outside), ValidationError);
}

TEST_CASE("json round trip") {
  Netlist nl = load_netlist(data_dir() + "/ota8.json");
  CHECK(netlist_from_json(to_json(nl)) == nl);
  CHECK(netlist_from_json(to_json(nl)).fingerprint() == nl.fingerprint());
}

TEST_CASE("ota fixture matches its manifest") {
  Netlist nl = load_netlist(data_dir() + "/ota8.json");
  json manifest;
  std::ifstream(data_dir() + "/ota8.manifest.json") >> manifest;
  // counts straight from the raw file, independent of the loader
  json raw;
  std::ifstream(data_dir() + "/ota8.json") >> raw;
  std::size_t raw_pins = 0, raw_refs = 0;
  for (const auto& d : raw["devices"]) raw_pins += d["pins"].size();
  for (const auto& n : raw["nets"]) raw_refs += n["pins"].size();
  CHECK(nl.devices().size() == manifest["devices"].get<std::size_t>());
  CHECK(nl.devices().size() == raw["devices"].size());
  CHECK(nl.pins().size() == manifest["pins"].get<std::size_t>());
  CHECK(nl.pins().size() == raw_pins);
  CHECK(nl.nets().size() == manifest["nets"].get<std::size_t>());
  CircuitGraph g = build_circuit_graph(nl);
  CHECK(g.count(EdgeKind::pin_belongs_to_net) == raw_refs);
  CHECK(g.count(EdgeKind::constraint) == manifest["constraint_edges"].get<std::size_t>());
}

TEST_CASE("circuit graph edge counts") {
  json one = netlist_json({device_json("M0", {{4, 4}}, {{"a", 1, 2, "h"}, {"b", 2, 1, "v"}})},
                          {net_json("n", {"a", "b"})});
  CircuitGraph g = build_circuit_graph(netlist_from_json(one));
  CHECK(g.count(EdgeKind::device_has_pin) == 2);
  CHECK(g.count(EdgeKind::pin_belongs_to_net) == 2);
  CHECK(g.count(EdgeKind::constraint) == 0);

  json sym = netlist_json({device_json("A", {{4, 4}}, {}), device_json("B", {{4, 4}}, {}), device_json("C", {{4, 4}}, {})},
                          json::array(), {{{"kind", "symmetry"}, {"axis", "vertical"}, {"members", {"A", "B", "C"}}}});
  CircuitGraph gs = build_circuit_graph(netlist_from_json(sym));
  // unordered pairs of three members
  std::size_t pairs = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) ++pairs;
  CHECK(gs.count(EdgeKind::constraint) == pairs);
}

TEST_CASE("graph invariants on random netlists") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Netlist nl = random_netlist(rng, 2 + trial % 6, 4);
    CircuitGraph g = build_circuit_graph(nl);
    std::size_t refs = 0;
    for (const auto& n : nl.nets()) refs += n.pins.size();
    CHECK(g.count(EdgeKind::device_has_pin) == nl.pins().size());
    CHECK(g.count(EdgeKind::pin_belongs_to_net) == refs);
    CHECK(g.count(NodeKind::device) == nl.devices().size());
    for (const auto& e : g.edges) {
      REQUIRE(e.from < g.nodes.size());
      REQUIRE(e.to < g.nodes.size());
    }
  }
}

TEST_CASE("feature table") {
  Netlist nl = load_netlist(data_dir() + "/ota8.json");
  CircuitGraph g = build_circuit_graph(nl);
  FeatureTable t = extract_node_features(g, nl);
  const FeatureRow* m1 = t.find("device:M1", g);
  REQUIRE(m1 != nullptr);
  REQUIRE(m1->values.size() == kDeviceFeatureWidth);
  CHECK(m1->values[0] == doctest::Approx(48));
  CHECK(m1->values[3] == doctest::Approx(3));
  double onehot = 0;
  for (std::size_t i = 4; i < m1->values.size(); ++i) onehot += m1->values[i];
  CHECK(onehot == 1.0);
  const FeatureRow* pin = t.find("pin:M1.g", g);
  REQUIRE(pin != nullptr);
  CHECK(pin->values.size() == pin_feature_width(2));
  const FeatureRow* net = t.find("net:VDD", g);
  REQUIRE(net != nullptr);
  CHECK(net->values == std::vector<double>{3, 3});

  std::ostringstream csv;
  write_feature_csv(csv, t, g);
  std::size_t lines = 0;
  for (char c : csv.str()) lines += c == '\n';
  CHECK(lines == t.rows.size() + 1);
}

TEST_CASE("pin offsets under variants stay inside") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Netlist nl = random_netlist(rng, 4, 3);
    for (std::size_t p = 0; p < nl.pins().size(); ++p) {
      const Device& d = nl.device(nl.pin(p).owner);
      for (int v = 0; v < static_cast<int>(d.variants.size()); ++v) {
        Point o = nl.pin_offset(p, v);
        CHECK(o.x > 0);
        CHECK(o.x < d.variants[static_cast<std::size_t>(v)].width);
        CHECK(o.y > 0);
        CHECK(o.y < d.variants[static_cast<std::size_t>(v)].height);
      }
    }
  }
}

}  // TEST_SUITE
