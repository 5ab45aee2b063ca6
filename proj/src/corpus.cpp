// SPDX-License-Identifier: Apache-2.0
#include "anapr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <spdlog/spdlog.h>

#include "anapr/error.hpp"
#include "anapr/layout_io.hpp"
#include "anapr/router.hpp"

namespace anapr {

namespace {
constexpr const char* kModule = "corpus";
constexpr int kPinPitch = 5;
constexpr int kMaxAttempts = 50;

struct Slot {
  bool horizontal;
  int offset;  // dy for horizontal pins, dx for vertical ones
};

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
}  // namespace

nlohmann::json generate_circuit_json(const CircuitSpec& spec) {
  using nlohmann::json;
  std::mt19937_64 rng(spec.seed);
  const int n = spec.devices;
  std::vector<int> ws(n), hs(n);
  std::vector<std::vector<Slot>> free_slots(n);
  std::vector<int> block_of(n);
  for (int i = 0; i < n; ++i) block_of[i] = i % spec.blocks;
  std::shuffle(block_of.begin(), block_of.end(), rng);

  json devices = json::array();
  for (int i = 0; i < n; ++i) {
    ws[i] = uniform(rng, 4, 11);
    hs[i] = uniform(rng, 4, 11);
    for (int off = 2; off <= hs[i] - 2; off += kPinPitch) free_slots[i].push_back({true, off});
    for (int off = 2; off <= ws[i] - 2; off += kPinPitch) free_slots[i].push_back({false, off});
    std::shuffle(free_slots[i].begin(), free_slots[i].end(), rng);
    const int w = ws[i], h = hs[i];
    auto scaled = [](int v, double f) { return std::max(3, static_cast<int>(std::lround(v * f))); };
    devices.push_back({{"id", "M" + std::to_string(i)},
                       {"name", "M" + std::to_string(i)},
                       {"variants", {{w, h}, {scaled(w, 1.25), scaled(h, 0.8)}, {scaled(w, 0.8), scaled(h, 1.25)}}},
                       {"class", uniform(rng, 0, kUnknownFunctionalClass - 1)},
                       {"subblock", "B" + std::to_string(block_of[i])},
                       {"pins", json::array()}});
  }

  json nets = json::array();
  int pin_counter = 0;
  auto make_net = [&](const std::string& id, const char* kind, int pins_wanted) {
    std::vector<int> candidates;
    for (int i = 0; i < n; ++i) {
      if (!free_slots[i].empty()) candidates.push_back(i);
    }
    if (static_cast<int>(candidates.size()) < 2) return false;
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(static_cast<std::size_t>(std::min<int>(pins_wanted, static_cast<int>(candidates.size()))));
    std::sort(candidates.begin(), candidates.end());
    json ids = json::array();
    for (int d : candidates) {
      const Slot s = free_slots[d].back();
      free_slots[d].pop_back();
      const std::string pid = "P" + std::to_string(pin_counter++);
      devices[static_cast<std::size_t>(d)]["pins"].push_back(
          {{"id", pid},
           {"dx", s.horizontal ? ws[d] / 2 : s.offset},
           {"dy", s.horizontal ? s.offset : hs[d] / 2},
           {"dir", s.horizontal ? "h" : "v"},
           {"kind", kind},
           {"layers", {0, 1}}});
      ids.push_back(pid);
    }
    nets.push_back({{"id", id}, {"kind", kind}, {"pins", ids}});
    return true;
  };
  make_net("VDD", "power", std::min(6, std::max(2, n / 4)));
  make_net("GND", "ground", std::min(6, std::max(2, n / 4)));
  const int signals = std::max(1, static_cast<int>(std::lround(n * 0.7)));
  for (int k = 0; k < signals; ++k) {
    if (!make_net("N" + std::to_string(k), "signal", uniform(rng, 2, 4))) break;
  }
  return {{"format_version", 1}, {"devices", devices}, {"nets", nets}, {"constraints", json::array()}};
}

PlacementMap spread_placement(const Netlist& nl, const std::vector<Padding>& paddings, int resolution) {
  const std::size_t n = nl.devices().size();
  PlacementMap out(n);
  const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
  int x = 0, y = 0, row_height = 0, col = 0;
  for (std::size_t d = 0; d < n; ++d) {
    const Shape& s = nl.device(d).variants.front();
    const Padding& p = paddings[d];
    const int fw = s.width + 2 * p.horizontal + 2;
    const int fh = s.height + 2 * p.vertical + 2;
    if (col == cols) {
      col = 0;
      x = 0;
      y += row_height;
      row_height = 0;
    }
    out[d] = Placement{d, 0, x + p.horizontal + 1, y + p.vertical + 1, p};
    x += fw;
    row_height = std::max(row_height, fh);
    ++col;
    if (x > resolution || y + fh > resolution) return PlacementMap(n);
  }
  return out;
}

std::vector<CorpusEntry> generate_corpus(const std::filesystem::path& dir, int count, std::uint64_t seed,
                                         const TechRules& tech) {
  if (count < 1) throw ValidationError(kModule, "corpus needs at least one circuit");
  std::filesystem::create_directories(dir);
  std::vector<CorpusEntry> entries;
  nlohmann::json manifest = nlohmann::json::array();
  for (int i = 0; i < count; ++i) {
    const double t = count > 1 ? static_cast<double>(i) / (count - 1) : 0.0;
    CircuitSpec spec;
    spec.devices = 5 + static_cast<int>(std::lround(35 * t));
    spec.blocks = 3 + static_cast<int>(std::lround(21 * t));
    spec.name = "synth" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1);
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
      spec.seed = seed * 1000003ULL + static_cast<std::uint64_t>(i) * 101ULL + static_cast<std::uint64_t>(attempt);
      nlohmann::json j = generate_circuit_json(spec);
      Netlist nl = netlist_from_json(j);
      GridConfig probe;
      const auto pads = compute_paddings(nl, tech, probe, true);
      PlacementMap witness = spread_placement(nl, pads, 1 << 20);
      CellRect extent;
      for (const auto& p : witness) extent = extent.united(padded_rect(nl, *p));
      const int resolution = ((std::max(extent.x1, extent.y1) + 15) / 16) * 16;
      if (resolution > 512) continue;
      RoutingRun run = route_placement(nl, witness, tech, search_params(tech));
      if (!run.layout.success) {
        spdlog::info("{}: witness attempt {} failed to route, regenerating", spec.name, attempt);
        continue;
      }
      CorpusEntry e{spec.name, spec.name + ".json", spec.devices, spec.blocks, resolution, spec.seed};
      write_json(dir / e.file, j);
      manifest.push_back({{"name", e.name},
                          {"file", e.file},
                          {"devices", e.devices},
                          {"blocks", e.blocks},
                          {"resolution", e.resolution},
                          {"seed", e.seed},
                          {"witness_iterations", run.layout.iterations}});
      entries.push_back(e);
      accepted = true;
    }
    if (!accepted) throw Error(kModule, "no routable witness for " + spec.name);
  }
  write_json(dir / "manifest.json", {{"format_version", 1}, {"circuits", manifest}});
  return entries;
}

std::vector<CorpusEntry> load_manifest(const std::filesystem::path& dir) {
  const nlohmann::json j = read_json(dir / "manifest.json", kModule);
  std::vector<CorpusEntry> out;
  try {
    for (const auto& c : j.at("circuits")) {
      out.push_back({c.at("name").get<std::string>(), c.at("file").get<std::string>(), c.at("devices").get<int>(),
                     c.at("blocks").get<int>(), c.at("resolution").get<int>(), c.at("seed").get<std::uint64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(kModule, std::string("malformed manifest: ") + e.what());
  }
  return out;
}

}  // namespace anapr
