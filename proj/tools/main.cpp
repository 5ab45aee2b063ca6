// SPDX-License-Identifier: Apache-2.0
// anapr: place, route and inspect analog layouts.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "anapr/corpus.hpp"
#include "anapr/error.hpp"
#include "anapr/layout_io.hpp"
#include "anapr/netlist.hpp"
#include "anapr/pipeline.hpp"
#include "anapr/tech.hpp"

namespace fs = std::filesystem;
using namespace anapr;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string tech;
  std::string out_dir = ".";
  bool json_logs = false;
  bool verbose = false;
};

struct FloorplanFlags {
  int grid = 256;
  double pitch = 1.0;
  double aspect = 1.0;
  double drr_margin = 3.0;
  int hpwl_budget = 20000;
  std::string order = "area-desc";
  bool no_drr = false;
};

struct PlaceFlags {
  std::string driver = "sa";
  int restarts = 4;
  int sa_budget = 20000;
  std::string replay;
};

struct RouteFlags {
  int max_iter = 35;
  double kappa = 3.0;
  double q = 0.0001;
  std::optional<double> via_cost;
  std::optional<double> drc_cost;
};

void add_floorplan_flags(CLI::App* app, FloorplanFlags& f) {
  app->add_option("--grid", f.grid, "Placement grid resolution (cells per side)")->check(CLI::Range(8, 4096));
  app->add_option("--pitch", f.pitch, "Cell pitch in microns")->check(CLI::PositiveNumber);
  app->add_option("--aspect", f.aspect, "Target aspect ratio (width / height)")->check(CLI::PositiveNumber);
  app->add_option("--drr-margin", f.drr_margin, "Base routing margin per side, cells")->check(CLI::NonNegativeNumber);
  app->add_option("--hpwl-budget", f.hpwl_budget, "Annealing steps for the HPWL_min estimate");
  app->add_option("--order", f.order, "Device placement order")->check(CLI::IsMember({"area-desc", "input", "random"}));
  app->add_flag("--no-drr", f.no_drr, "Disable routing-resource padding");
}

void add_place_flags(CLI::App* app, PlaceFlags& f) {
  app->add_option("--driver", f.driver, "Placement driver")->check(CLI::IsMember({"greedy", "sa", "replay"}));
  app->add_option("--restarts", f.restarts, "Annealing restarts")->check(CLI::PositiveNumber);
  app->add_option("--sa-budget", f.sa_budget, "Annealing states per restart")->check(CLI::PositiveNumber);
  app->add_option("--replay", f.replay, "Placement JSON to replay (driver replay)");
}

void add_route_flags(CLI::App* app, RouteFlags& f) {
  app->add_option("--max-iter", f.max_iter, "Rip-up and reroute iterations")->check(CLI::PositiveNumber);
  app->add_option("--kappa", f.kappa, "Dynamic weighting factor")->check(CLI::Range(1.0, 1e9));
  app->add_option("--q", f.q, "Heuristic tie-break factor")->check(CLI::NonNegativeNumber);
  app->add_option("--via-cost", f.via_cost, "Via cost (overrides the technology)");
  app->add_option("--drc-cost", f.drc_cost, "DRC penalty (overrides the technology)");
}

void setup_logging(const Globals& g) {
  auto logger = spdlog::stderr_color_mt("anapr");
  spdlog::set_default_logger(logger);
  if (g.json_logs) {
    spdlog::set_pattern(R"({"time":"%Y-%m-%dT%H:%M:%S.%e","level":"%l","msg":"%v"})");
  } else {
    spdlog::set_pattern("%^[%l]%$ %v");
  }
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
}

TechRules load_tech_or_default(const Globals& g) { return g.tech.empty() ? desk_tech() : load_tech(g.tech); }

EnvOptions env_options(const FloorplanFlags& f, const Globals& g) {
  EnvOptions o;
  o.grid.resolution = f.grid;
  o.grid.cell_pitch = f.pitch;
  o.grid.target_aspect = f.aspect;
  o.grid.drr_margin = f.drr_margin;
  o.hpwl_budget = f.hpwl_budget;
  o.drr = !f.no_drr;
  o.seed = g.seed;
  o.order = f.order == "input" ? PlacementOrder::input
            : f.order == "random" ? PlacementOrder::random
                                  : PlacementOrder::area_desc;
  return o;
}

SearchParams search_options(const RouteFlags& f, const TechRules& tech) {
  SearchParams p = search_params(tech);
  p.max_iterations = f.max_iter;
  p.kappa = f.kappa;
  p.q = f.q;
  if (f.via_cost) p.via_cost = *f.via_cost;
  if (f.drc_cost) p.drc_cost = *f.drc_cost;
  p.validate();
  return p;
}

PnrOptions pnr_options(const Netlist& nl, const TechRules& tech, const FloorplanFlags& ff, const PlaceFlags& pf,
                       const Globals& g, const std::string& circuit) {
  PnrOptions o;
  o.env = env_options(ff, g);
  o.driver = pf.driver == "greedy" ? Driver::greedy : pf.driver == "replay" ? Driver::replay : Driver::sa;
  o.sa.restarts = pf.restarts;
  o.sa.budget = pf.sa_budget;
  o.sa.seed = g.seed;
  o.circuit = circuit;
  if (o.driver == Driver::replay) {
    if (pf.replay.empty()) throw ValidationError("cli", "--driver replay needs --replay <placement.json>");
    const PlacementMap pm = placements_of(load_layout(pf.replay), nl);
    FloorplanEnv env(nl, tech, o.env);
    for (auto d : env.order()) {
      if (!pm[d]) throw ValidationError("cli", "replayed placement lacks device '" + nl.device(d).id + "'");
      o.replay.push_back({d, pm[d]->variant, pm[d]->x, pm[d]->y});
    }
  }
  return o;
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

void print_metrics(const MetricsReport& m, const std::vector<std::string>& failed) {
  nlohmann::json j{{"circuit", m.circuit},
                   {"wirelength_um", m.wirelength},
                   {"vias", m.vias},
                   {"iterations", m.routing_iterations},
                   {"failed_nets", failed},
                   {"hpwl_um", m.hpwl},
                   {"dead_space_pct", m.dead_space}};
  std::cout << j.dump() << std::endl;
}

std::vector<std::string> failed_nets(const LayoutDoc& doc) {
  std::vector<std::string> out;
  for (const auto& n : doc.nets) {
    if (n.status != NetStatus::routed) out.push_back(n.id);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cli", "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analog placement and routing"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--tech", g.tech, "Technology rules JSON (default: built-in desk values)");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_flag("--json-logs", g.json_logs, "Emit log lines as JSON");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  FloorplanFlags ff;
  PlaceFlags pf;
  RouteFlags rf;
  std::string netlist_path, placement_path, layout_path, svg_path, corpus_dir;
  int corpus_count = 20;
  int bench_limit = 0;

  auto* place = app.add_subcommand("place", "Place a netlist");
  place->add_option("netlist", netlist_path, "Netlist JSON")->required()->check(CLI::ExistingFile);
  add_floorplan_flags(place, ff);
  add_place_flags(place, pf);

  auto* route = app.add_subcommand("route", "Route a placement");
  route->add_option("netlist", netlist_path, "Netlist JSON")->required()->check(CLI::ExistingFile);
  route->add_option("placement", placement_path, "Placement JSON")->required()->check(CLI::ExistingFile);
  add_route_flags(route, rf);

  auto* pnr = app.add_subcommand("pnr", "Place and route a netlist");
  pnr->add_option("netlist", netlist_path, "Netlist JSON")->required()->check(CLI::ExistingFile);
  add_floorplan_flags(pnr, ff);
  add_place_flags(pnr, pf);
  add_route_flags(pnr, rf);

  auto* drc = app.add_subcommand("drc-report", "Check a routed layout against the rules");
  drc->add_option("layout", layout_path, "Layout JSON")->required()->check(CLI::ExistingFile);

  auto* render = app.add_subcommand("render", "Render a layout to SVG");
  render->add_option("layout", layout_path, "Layout or placement JSON")->required()->check(CLI::ExistingFile);
  render->add_option("-o,--output", svg_path, "SVG file (default: <out-dir>/<circuit>.svg)");

  auto* bench = app.add_subcommand("bench", "Place and route every circuit of a corpus");
  bench->add_option("corpus", corpus_dir, "Corpus directory with manifest.json")->required()->check(CLI::ExistingDirectory);
  bench->add_option("--limit", bench_limit, "Only the first N circuits");
  add_floorplan_flags(bench, ff);
  add_place_flags(bench, pf);
  add_route_flags(bench, rf);

  auto* features = app.add_subcommand("features", "Write the node feature table as CSV");
  features->add_option("netlist", netlist_path, "Netlist JSON")->required()->check(CLI::ExistingFile);

  auto* corpus = app.add_subcommand("corpus", "Generate the synthetic corpus");
  corpus->add_option("dir", corpus_dir, "Output directory")->required();
  corpus->add_option("--count", corpus_count, "Number of circuits")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  setup_logging(g);
  const fs::path out_dir(g.out_dir);

  try {
    const TechRules tech = load_tech_or_default(g);

    if (*place) {
      const Netlist nl = load_netlist(netlist_path);
      const std::string circuit = stem(netlist_path);
      PnrOptions o = pnr_options(nl, tech, ff, pf, g, circuit);
      FloorplanEnv env(nl, tech, o.env);
      PlaceOutcome res = run_placer(env, o);
      LayoutDoc doc = make_layout_doc(nl, res.state.placements, o.env.grid, tech, nullptr, g.seed, circuit);
      write_json(out_dir / (circuit + ".placement.json"), to_json(doc));
      const MetricsReport m = compute_metrics(doc);
      std::cout << nlohmann::json{{"circuit", circuit}, {"reward", res.reward}, {"hpwl_um", m.hpwl},
                                  {"dead_space_pct", m.dead_space}, {"stalled", res.state.stalled}}
                       .dump()
                << std::endl;
      return res.state.stalled ? kExitRoutingFailed : kExitOk;
    }

    if (*route) {
      const Netlist nl = load_netlist(netlist_path);
      const LayoutDoc placed = load_layout(placement_path);
      const std::string circuit = placed.circuit.empty() ? stem(netlist_path) : placed.circuit;
      PnrOutcome res = run_route(nl, tech, placements_of(placed, nl), placed.grid, search_options(rf, tech), g.seed, circuit);
      write_json(out_dir / (circuit + ".layout.json"), to_json(res.doc));
      print_metrics(res.metrics, failed_nets(res.doc));
      return res.exit_code;
    }

    if (*pnr) {
      const Netlist nl = load_netlist(netlist_path);
      const std::string circuit = stem(netlist_path);
      PnrOptions o = pnr_options(nl, tech, ff, pf, g, circuit);
      o.search = search_options(rf, tech);
      PnrOutcome res = run_pnr(nl, tech, o);
      write_json(out_dir / (circuit + ".layout.json"), to_json(res.doc));
      write_json(out_dir / (circuit + ".metrics.json"), to_json(res.metrics));
      spdlog::info("{}: pnr finished in {:.2f} s", circuit, res.metrics.runtime);
      print_metrics(res.metrics, failed_nets(res.doc));
      return res.exit_code;
    }

    if (*drc) {
      const LayoutDoc doc = load_layout(layout_path);
      nlohmann::json report = nlohmann::json::array();
      for (const auto& v : drc_report(doc)) {
        nlohmann::json jv = to_json(v);
        jv["net"] = v.net >= 0 ? nlohmann::json(doc.nets.at(static_cast<std::size_t>(v.net)).id) : nlohmann::json();
        if (v.counterpart && v.counterpart->net >= 0) {
          jv["counterpart"]["net"] = doc.nets.at(static_cast<std::size_t>(v.counterpart->net)).id;
        }
        report.push_back(std::move(jv));
      }
      const std::string circuit = doc.circuit.empty() ? stem(layout_path) : doc.circuit;
      write_json(out_dir / (circuit + ".drc.json"),
                 {{"format_version", kLayoutFormatVersion}, {"circuit", circuit}, {"violations", report}});
      std::cout << nlohmann::json{{"circuit", circuit}, {"violations", report.size()}}.dump() << std::endl;
      return report.empty() ? kExitOk : kExitRoutingFailed;
    }

    if (*render) {
      const LayoutDoc doc = load_layout(layout_path);
      const std::string circuit = doc.circuit.empty() ? stem(layout_path) : doc.circuit;
      const fs::path target = svg_path.empty() ? out_dir / (circuit + ".svg") : fs::path(svg_path);
      write_text(target, render_svg(doc));
      return kExitOk;
    }

    if (*bench) {
      std::vector<MetricsReport> reports;
      auto entries = load_manifest(corpus_dir);
      if (bench_limit > 0 && static_cast<std::size_t>(bench_limit) < entries.size()) entries.resize(static_cast<std::size_t>(bench_limit));
      for (const auto& e : entries) {
        const Netlist nl = load_netlist(fs::path(corpus_dir) / e.file);
        FloorplanFlags local = ff;
        local.grid = e.resolution;
        PnrOptions o = pnr_options(nl, tech, local, pf, g, e.name);
        o.search = search_options(rf, tech);
        PnrOutcome res = run_pnr(nl, tech, o);
        write_json(out_dir / (e.name + ".layout.json"), to_json(res.doc));
        spdlog::info("{}: {} in {:.2f} s", e.name, res.doc.success ? "routed" : "FAILED", res.metrics.runtime);
        reports.push_back(res.metrics);
      }
      const StatsSummary s = aggregate_stats(reports);
      nlohmann::json runs = nlohmann::json::array();
      for (const auto& r : reports) runs.push_back(to_json(r, true));
      write_json(out_dir / "bench.json", {{"summary", to_json(s)}, {"runs", runs}});
      std::cout << to_json(s).dump() << std::endl;
      return s.failures == 0 ? kExitOk : kExitRoutingFailed;
    }

    if (*features) {
      const Netlist nl = load_netlist(netlist_path);
      const CircuitGraph graph = build_circuit_graph(nl);
      write_feature_csv(std::cout, extract_node_features(graph, nl), graph);
      return kExitOk;
    }

    if (*corpus) {
      const auto entries = generate_corpus(corpus_dir, corpus_count, g.seed, tech);
      std::cout << nlohmann::json{{"circuits", entries.size()}, {"dir", corpus_dir}}.dump() << std::endl;
      return kExitOk;
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitInput;
  }
  return kExitOk;
}
