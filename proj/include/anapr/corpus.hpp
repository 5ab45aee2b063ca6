// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anapr/floorplan.hpp"
#include "anapr/netlist.hpp"
#include "anapr/tech.hpp"

namespace anapr {

struct CircuitSpec {
  std::string name;
  int devices = 5;
  int blocks = 3;
  std::uint64_t seed = 0;
};

// Random netlist: devices 4..11 cells a side with three shape variants,
// pins at least 5 cells apart along a side, nets of 2-4 pins plus power
// and ground nets of up to 6.
nlohmann::json generate_circuit_json(const CircuitSpec& spec);

// Row-major placement with DRR halos and a two-cell gap, used as the
// routability witness. Empty when it does not fit the grid.
PlacementMap spread_placement(const Netlist& nl, const std::vector<Padding>& paddings, int resolution);

struct CorpusEntry {
  std::string name;
  std::string file;
  int devices = 0;
  int blocks = 0;
  int resolution = 0;
  std::uint64_t seed = 0;  // seed of the accepted attempt
};

// Generates `count` circuits spanning 5..40 devices and 3..24 blocks,
// retrying each until the spread witness routes. Writes one netlist JSON
// per circuit plus manifest.json into `dir`.
std::vector<CorpusEntry> generate_corpus(const std::filesystem::path& dir, int count, std::uint64_t seed,
                                         const TechRules& tech);
std::vector<CorpusEntry> load_manifest(const std::filesystem::path& dir);

}  // namespace anapr
