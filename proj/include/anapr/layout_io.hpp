// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "anapr/drc.hpp"
#include "anapr/floorplan.hpp"
#include "anapr/router.hpp"
#include "anapr/tech.hpp"

namespace anapr {

inline constexpr int kLayoutFormatVersion = 1;

struct MetricsReport {
  std::string circuit;
  double dead_space = 0.0;  // percent
  double hpwl = 0.0;        // microns
  double wirelength = 0.0;  // microns
  int vias = 0;
  int routing_iterations = 0;
  bool routing_failed = false;
  double runtime = 0.0;  // seconds; never written to layout files
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const MetricsReport& m, bool with_runtime = false);

struct PlacedDevice {
  std::string id;
  int variant = 0;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  Padding pad;
  CellRect body() const { return {x, y, x + w, y + h}; }
  CellRect padded() const { return {x - pad.horizontal, y - pad.vertical, x + w + pad.horizontal, y + h + pad.vertical}; }
};

struct PinRecord {
  std::string id;
  int x = 0;  // absolute cell
  int y = 0;
};

struct TerminalRecord {
  std::string pin;
  RVertex at;
  Side side = Side::left;
};

struct NetRecord {
  std::string id;
  NetStatus status = NetStatus::failed;
  int failures = 0;
  std::vector<PinRecord> pins;
  std::vector<TerminalRecord> terminals;
  std::vector<std::vector<RVertex>> paths;  // one per two-pin connection
};

// Self-contained placement or routed layout; everything the metrics,
// DRC report and renderer need is in here.
struct LayoutDoc {
  std::string circuit;
  std::uint64_t seed = 0;
  GridConfig grid;
  TechRules tech;
  std::vector<PlacedDevice> devices;
  std::vector<NetRecord> nets;
  bool routed = false;  // a routing pass was run
  int iterations = 0;
  bool success = false;
};

LayoutDoc make_layout_doc(const Netlist& nl, const PlacementMap& placements, const GridConfig& grid,
                          const TechRules& tech, const RoutedLayout* routing, std::uint64_t seed,
                          const std::string& circuit);

nlohmann::json to_json(const LayoutDoc& doc);
LayoutDoc layout_from_json(const nlohmann::json& j);
LayoutDoc load_layout(const std::filesystem::path& path);

// Placement of `doc` re-expressed against a netlist.
PlacementMap placements_of(const LayoutDoc& doc, const Netlist& nl);

// Metrics recomputed from the document alone.
MetricsReport compute_metrics(const LayoutDoc& doc);

// Routing graph of the document with terminals registered and every
// routed net committed.
RoutingGraph rebuild_graph(const LayoutDoc& doc);
std::vector<Violation> drc_report(const LayoutDoc& doc);

std::string render_svg(const LayoutDoc& doc);

// --- aggregation ---------------------------------------------------------------

// Quartile with linear interpolation between closest ranks,
// position p * (n - 1) in the sorted sample.
double quantile(std::vector<double> values, double p);

struct Spread {
  double iqm = 0.0;
  double iqr = 0.0;
};
// IQM averages the values inside [Q1, Q3].
Spread iqm_iqr(const std::vector<double>& values);

struct StatsSummary {
  std::size_t runs = 0;
  std::size_t failures = 0;
  double failure_rate = 0.0;  // percent, over all runs
  // Over successful runs only.
  Spread dead_space, hpwl, wirelength, vias, iterations, runtime;
};

StatsSummary aggregate_stats(const std::vector<MetricsReport>& reports);
nlohmann::json to_json(const StatsSummary& s);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path, const char* module);

}  // namespace anapr
