// SPDX-License-Identifier: Apache-2.0
#include "anapr/layout_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "anapr/error.hpp"

namespace anapr {

namespace {
constexpr const char* kModule = "layout-io";
using nlohmann::json;

Side parse_side(const std::string& s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  if (s == "bottom") return Side::bottom;
  if (s == "top") return Side::top;
  throw ParseError(kModule, "unknown terminal side '" + s + "'");
}

NetStatus parse_status(const std::string& s) {
  if (s == "routed") return NetStatus::routed;
  if (s == "failed") return NetStatus::failed;
  if (s == "unroutable") return NetStatus::unroutable;
  throw ParseError(kModule, "unknown net status '" + s + "'");
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}
}  // namespace

json to_json(const MetricsReport& m, bool with_runtime) {
  json j{{"circuit", m.circuit},
         {"dead_space_pct", m.dead_space},
         {"hpwl_um", m.hpwl},
         {"wirelength_um", m.wirelength},
         {"vias", m.vias},
         {"routing_iterations", m.routing_iterations},
         {"routing_failed", m.routing_failed},
         {"seed", m.seed}};
  if (with_runtime) j["runtime_s"] = m.runtime;
  return j;
}

LayoutDoc make_layout_doc(const Netlist& nl, const PlacementMap& placements, const GridConfig& grid,
                          const TechRules& tech, const RoutedLayout* routing, std::uint64_t seed,
                          const std::string& circuit) {
  LayoutDoc doc;
  doc.circuit = circuit;
  doc.seed = seed;
  doc.grid = grid;
  doc.tech = tech;
  for (const auto& p : placements) {
    if (!p) continue;
    const Shape& s = nl.device(p->device).variants[static_cast<std::size_t>(p->variant)];
    doc.devices.push_back({nl.device(p->device).id, p->variant, p->x, p->y, s.width, s.height, p->pad});
  }
  for (std::size_t n = 0; n < nl.nets().size(); ++n) {
    NetRecord rec;
    rec.id = nl.net(n).id;
    for (auto pi : nl.net(n).pins) {
      const auto& p = placements[nl.pin(pi).owner];
      if (!p) continue;
      Point at = pin_position(nl, pi, *p);
      rec.pins.push_back({nl.pin(pi).id, at.x, at.y});
    }
    if (routing) {
      const NetTask& task = routing->tasks.at(n);
      rec.status = routing->status.at(n);
      rec.failures = task.failure_count;
      for (const auto& t : task.terminals) rec.terminals.push_back({nl.pin(t.pin).id, t.at, t.side});
      if (const auto& r = routing->routes.at(n)) {
        for (const auto& c : r->connections) rec.paths.push_back(c.path);
      }
    }
    doc.nets.push_back(std::move(rec));
  }
  if (routing) {
    doc.routed = true;
    doc.iterations = routing->iterations;
    doc.success = routing->success;
  }
  return doc;
}

json to_json(const LayoutDoc& doc) {
  json devices = json::array();
  for (const auto& d : doc.devices) {
    devices.push_back({{"device", d.id},
                       {"variant", d.variant},
                       {"x", d.x},
                       {"y", d.y},
                       {"w", d.w},
                       {"h", d.h},
                       {"pad", {d.pad.horizontal, d.pad.vertical}}});
  }
  json nets = json::array();
  for (const auto& n : doc.nets) {
    json pins = json::array();
    for (const auto& p : n.pins) pins.push_back({{"pin", p.id}, {"x", p.x}, {"y", p.y}});
    json jn{{"id", n.id}, {"pins", pins}};
    if (doc.routed) {
      jn["status"] = to_string(n.status);
      jn["failures"] = n.failures;
      json terms = json::array();
      for (const auto& t : n.terminals) {
        terms.push_back({{"pin", t.pin}, {"x", t.at.x}, {"y", t.at.y}, {"layer", t.at.layer}, {"side", to_string(t.side)}});
      }
      jn["terminals"] = terms;
      json conns = json::array();
      for (const auto& path : n.paths) {
        const Connection c = materialize(path, doc.tech);
        json jp = json::array(), js = json::array(), jv = json::array();
        for (const auto& v : path) jp.push_back({v.x, v.y, v.layer});
        for (const auto& s : c.segments) {
          js.push_back({{"layer", s.layer}, {"from", {s.from.x, s.from.y}}, {"to", {s.to.x, s.to.y}}, {"width", s.width}});
        }
        for (const auto& v : c.vias) jv.push_back({v.x, v.y});
        conns.push_back({{"path", jp}, {"segments", js}, {"vias", jv}, {"bends", c.bends}});
      }
      jn["connections"] = conns;
    }
    nets.push_back(std::move(jn));
  }
  json j{{"format_version", kLayoutFormatVersion},
         {"kind", doc.routed ? "layout" : "placement"},
         {"circuit", doc.circuit},
         {"seed", doc.seed},
         {"grid", {{"resolution", doc.grid.resolution}, {"cell_pitch", doc.grid.cell_pitch}, {"target_aspect", doc.grid.target_aspect}, {"drr_margin", doc.grid.drr_margin}}},
         {"tech", to_json(doc.tech)},
         {"placements", devices},
         {"nets", nets}};
  if (doc.routed) j["routing"] = {{"iterations", doc.iterations}, {"success", doc.success}};
  j["metrics"] = to_json(compute_metrics(doc));
  return j;
}

LayoutDoc layout_from_json(const json& j) {
  try {
    if (j.at("format_version").get<int>() != kLayoutFormatVersion) {
      throw ParseError(kModule, "unsupported layout format_version");
    }
    LayoutDoc doc;
    doc.circuit = j.at("circuit").get<std::string>();
    doc.seed = j.at("seed").get<std::uint64_t>();
    const auto& g = j.at("grid");
    doc.grid.resolution = g.at("resolution").get<int>();
    doc.grid.cell_pitch = g.at("cell_pitch").get<double>();
    doc.grid.drr_margin = g.value("drr_margin", doc.grid.drr_margin);
    doc.grid.target_aspect = g.at("target_aspect").get<double>();
    doc.tech = tech_from_json(j.at("tech"));
    for (const auto& d : j.at("placements")) {
      PlacedDevice pd;
      pd.id = d.at("device").get<std::string>();
      pd.variant = d.at("variant").get<int>();
      pd.x = d.at("x").get<int>();
      pd.y = d.at("y").get<int>();
      pd.w = d.at("w").get<int>();
      pd.h = d.at("h").get<int>();
      pd.pad = {d.at("pad").at(0).get<int>(), d.at("pad").at(1).get<int>()};
      doc.devices.push_back(std::move(pd));
    }
    doc.routed = j.contains("routing");
    if (doc.routed) {
      doc.iterations = j.at("routing").at("iterations").get<int>();
      doc.success = j.at("routing").at("success").get<bool>();
    }
    for (const auto& n : j.at("nets")) {
      NetRecord rec;
      rec.id = n.at("id").get<std::string>();
      for (const auto& p : n.at("pins")) rec.pins.push_back({p.at("pin").get<std::string>(), p.at("x").get<int>(), p.at("y").get<int>()});
      if (doc.routed) {
        rec.status = parse_status(n.at("status").get<std::string>());
        rec.failures = n.at("failures").get<int>();
        for (const auto& t : n.at("terminals")) {
          rec.terminals.push_back({t.at("pin").get<std::string>(),
                                   {t.at("x").get<int>(), t.at("y").get<int>(), t.at("layer").get<int>()},
                                   parse_side(t.at("side").get<std::string>())});
        }
        for (const auto& c : n.at("connections")) {
          std::vector<RVertex> path;
          for (const auto& v : c.at("path")) path.push_back({v.at(0).get<int>(), v.at(1).get<int>(), v.at(2).get<int>()});
          rec.paths.push_back(std::move(path));
        }
      }
      doc.nets.push_back(std::move(rec));
    }
    return doc;
  } catch (const json::exception& e) {
    throw ParseError(kModule, std::string("malformed layout: ") + e.what());
  }
}

LayoutDoc load_layout(const std::filesystem::path& path) { return layout_from_json(read_json(path, kModule)); }

PlacementMap placements_of(const LayoutDoc& doc, const Netlist& nl) {
  PlacementMap out(nl.devices().size());
  for (const auto& d : doc.devices) {
    auto idx = nl.find_device(d.id);
    if (!idx) throw ValidationError(kModule, "placement names unknown device '" + d.id + "'");
    const auto& variants = nl.device(*idx).variants;
    if (d.variant < 0 || d.variant >= static_cast<int>(variants.size())) {
      throw ValidationError(kModule, "device '" + d.id + "' has no variant " + std::to_string(d.variant));
    }
    out[*idx] = Placement{*idx, d.variant, d.x, d.y, d.pad};
  }
  return out;
}

MetricsReport compute_metrics(const LayoutDoc& doc) {
  MetricsReport m;
  m.circuit = doc.circuit;
  m.seed = doc.seed;
  CellRect bbox;
  long long area = 0;
  for (const auto& d : doc.devices) {
    bbox = bbox.united(d.body());
    area += d.body().area();
  }
  if (!bbox.empty()) m.dead_space = 100.0 * (1.0 - static_cast<double>(area) / static_cast<double>(bbox.area()));
  long long hp = 0;
  for (const auto& n : doc.nets) {
    if (n.pins.size() < 2) continue;
    int x0 = n.pins[0].x, x1 = x0, y0 = n.pins[0].y, y1 = y0;
    for (const auto& p : n.pins) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    hp += (x1 - x0) + (y1 - y0);
  }
  m.hpwl = static_cast<double>(hp) * doc.grid.cell_pitch;
  long long wire = 0;
  for (const auto& n : doc.nets) {
    for (const auto& path : n.paths) {
      const Connection c = materialize(path, doc.tech);
      for (const auto& s : c.segments) wire += std::abs(s.to.x - s.from.x) + std::abs(s.to.y - s.from.y);
      m.vias += static_cast<int>(c.vias.size());
    }
  }
  m.wirelength = static_cast<double>(wire) * doc.tech.grid_step;
  m.routing_iterations = doc.iterations;
  m.routing_failed = doc.routed && !doc.success;
  return m;
}

RoutingGraph rebuild_graph(const LayoutDoc& doc) {
  if (doc.devices.empty()) throw ValidationError(kModule, "layout has no placed devices");
  CellRect extent;
  std::vector<CellRect> bodies;
  for (const auto& d : doc.devices) {
    extent = extent.united(d.padded());
    bodies.push_back(d.body());
  }
  const int m = doc.tech.routing_margin;
  RoutingGraph graph({extent.x0 - m, extent.y0 - m, extent.x1 + m, extent.y1 + m}, doc.tech, bodies);
  for (std::size_t n = 0; n < doc.nets.size(); ++n) {
    for (const auto& t : doc.nets[n].terminals) graph.add_terminal(static_cast<int>(n), t.at.x, t.at.y);
  }
  for (std::size_t n = 0; n < doc.nets.size(); ++n) {
    if (doc.nets[n].status != NetStatus::routed) continue;
    Route r;
    r.net = static_cast<int>(n);
    for (const auto& path : doc.nets[n].paths) r.connections.push_back(materialize(path, doc.tech));
    graph.commit(r);
  }
  return graph;
}

std::vector<Violation> drc_report(const LayoutDoc& doc) {
  RoutingGraph graph = rebuild_graph(doc);
  std::vector<Violation> out;
  for (std::size_t n = 0; n < doc.nets.size(); ++n) {
    if (doc.nets[n].status != NetStatus::routed) continue;
    Route r;
    r.net = static_cast<int>(n);
    for (const auto& path : doc.nets[n].paths) r.connections.push_back(materialize(path, doc.tech));
    auto v = check_route(r, graph);
    out.insert(out.end(), v.begin(), v.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string render_svg(const LayoutDoc& doc) {
  // SVG y grows downwards; layout y is negated.
  Rect box{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
           std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  auto grow = [&](const Rect& r) {
    box.xlo = std::min(box.xlo, r.xlo);
    box.ylo = std::min(box.ylo, r.ylo);
    box.xhi = std::max(box.xhi, r.xhi);
    box.yhi = std::max(box.yhi, r.yhi);
  };
  std::vector<Connection> conns;
  for (const auto& d : doc.devices) grow(cell_block_rect(d.padded()));
  for (const auto& n : doc.nets) {
    for (const auto& path : n.paths) {
      conns.push_back(materialize(path, doc.tech));
      for (const auto& s : conns.back().segments) grow(segment_rect(s));
      for (const auto& v : conns.back().vias) grow(via_rect(v, doc.tech.max_width()));
    }
  }
  if (box.xlo > box.xhi) box = {0, 0, 0, 0};
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n", box.xlo, -box.yhi,
                     box.width(), box.height());
  out += "<style>.device{fill:#d9d9d9;stroke:#404040;stroke-width:0.1}"
         ".halo{fill:none;stroke:#808080;stroke-width:0.1;stroke-dasharray:0.5,0.5}"
         ".m0{fill:#1f77b4;fill-opacity:0.7}.m1{fill:#d62728;fill-opacity:0.7}"
         ".via{fill:#000000}.label{font-size:1px;font-family:sans-serif}</style>\n";
  auto rect = [&](const Rect& r, const char* cls) {
    out += fmt::format("<rect class=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>\n", cls, r.xlo, -r.yhi,
                       r.width(), r.height());
  };
  for (const auto& d : doc.devices) {
    if (d.pad.horizontal > 0 || d.pad.vertical > 0) rect(cell_block_rect(d.padded()), "halo");
    rect(cell_block_rect(d.body()), "device");
  }
  for (const auto& c : conns) {
    for (const auto& s : c.segments) {
      const Rect r = segment_rect(s);
      out += fmt::format("<path class=\"m{}\" d=\"M{} {}H{}V{}H{}Z\"/>\n", s.layer, r.xlo, -r.yhi, r.xhi, -r.ylo, r.xlo);
    }
  }
  for (const auto& c : conns) {
    for (const auto& v : c.vias) rect(via_rect(v, doc.tech.max_width()), "via");
  }
  for (const auto& d : doc.devices) {
    const Rect r = cell_block_rect(d.body());
    out += fmt::format("<text class=\"label\" x=\"{}\" y=\"{}\">{}</text>\n", r.xlo + 0.2, -(r.ylo + r.yhi) / 2,
                       xml_escape(d.id));
  }
  out += "</svg>\n";
  return out;
}

// --- aggregation ---------------------------------------------------------------

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ContractError(kModule, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Spread iqm_iqr(const std::vector<double>& values) {
  if (values.empty()) return {};
  const double q1 = quantile(values, 0.25);
  const double q3 = quantile(values, 0.75);
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : values) {
    if (v >= q1 && v <= q3) {
      sum += v;
      ++count;
    }
  }
  // A sample always has a value inside [Q1, Q3] except in degenerate
  // interpolation gaps; fall back to the median then.
  const double iqm = count > 0 ? sum / static_cast<double>(count) : quantile(values, 0.5);
  return {iqm, q3 - q1};
}

StatsSummary aggregate_stats(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw ContractError(kModule, "aggregate_stats needs at least one report");
  StatsSummary s;
  s.runs = reports.size();
  std::vector<double> ds, hp, wl, vi, it, rt;
  for (const auto& r : reports) {
    if (r.routing_failed) {
      ++s.failures;
      continue;
    }
    ds.push_back(r.dead_space);
    hp.push_back(r.hpwl);
    wl.push_back(r.wirelength);
    vi.push_back(r.vias);
    it.push_back(r.routing_iterations);
    rt.push_back(r.runtime);
  }
  s.failure_rate = 100.0 * static_cast<double>(s.failures) / static_cast<double>(s.runs);
  s.dead_space = iqm_iqr(ds);
  s.hpwl = iqm_iqr(hp);
  s.wirelength = iqm_iqr(wl);
  s.vias = iqm_iqr(vi);
  s.iterations = iqm_iqr(it);
  s.runtime = iqm_iqr(rt);
  return s;
}

json to_json(const StatsSummary& s) {
  auto spread = [](const Spread& x) { return json{{"iqm", x.iqm}, {"iqr", x.iqr}}; };
  return {{"format_version", kLayoutFormatVersion},
          {"runs", s.runs},
          {"failures", s.failures},
          {"failure_rate_pct", s.failure_rate},
          {"dead_space_pct", spread(s.dead_space)},
          {"hpwl_um", spread(s.hpwl)},
          {"wirelength_um", spread(s.wirelength)},
          {"vias", spread(s.vias)},
          {"routing_iterations", spread(s.iterations)},
          {"runtime_s", spread(s.runtime)}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path, const char* module) {
  std::ifstream in(path);
  if (!in) throw ParseError(module, "cannot open '" + path.string() + "'");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(module, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace anapr
