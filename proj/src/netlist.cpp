// SPDX-License-Identifier: Apache-2.0
#include "anapr/netlist.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <set>

#include <spdlog/spdlog.h>

#include "anapr/error.hpp"

namespace anapr {

namespace {

constexpr const char* kModule = "netlist";

using nlohmann::json;

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(kModule, where + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(kModule, where + ": field '" + key + "' has the wrong type");
  }
}

PinDirection parse_direction(const std::string& s, const std::string& where) {
  if (s == "h" || s == "horizontal") return PinDirection::horizontal;
  if (s == "v" || s == "vertical") return PinDirection::vertical;
  throw ParseError(kModule, where + ": unknown pin direction '" + s + "'");
}

NetKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "signal") return NetKind::signal;
  if (s == "ground" || s == "gnd") return NetKind::ground;
  if (s == "power" || s == "pwr") return NetKind::power;
  throw ParseError(kModule, where + ": unknown net kind '" + s + "'");
}

Axis parse_axis(const std::string& s, const std::string& where) {
  if (s == "horizontal" || s == "h") return Axis::horizontal;
  if (s == "vertical" || s == "v") return Axis::vertical;
  throw ParseError(kModule, where + ": unknown axis '" + s + "'");
}

ConstraintKind parse_constraint_kind(const std::string& s, const std::string& where) {
  if (s == "symmetry") return ConstraintKind::symmetry;
  if (s == "alignment") return ConstraintKind::alignment;
  throw ParseError(kModule, where + ": unknown constraint kind '" + s + "'");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::device: return "device";
    case NodeKind::pin: return "pin";
    case NodeKind::net: return "net";
    case NodeKind::subblock: return "subblock";
  }
  return "?";
}

const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::device_has_pin: return "device_has_pin";
    case EdgeKind::pin_belongs_to_net: return "pin_belongs_to_net";
    case EdgeKind::constraint: return "constraint";
  }
  return "?";
}

const char* to_string(NetKind k) {
  switch (k) {
    case NetKind::signal: return "signal";
    case NetKind::ground: return "ground";
    case NetKind::power: return "power";
  }
  return "?";
}

const char* to_string(PinDirection d) {
  return d == PinDirection::horizontal ? "horizontal" : "vertical";
}

// --- Netlist ----------------------------------------------------------------

Netlist::Netlist(std::vector<Device> devices, std::vector<Pin> pins, std::vector<Net> nets,
                 std::vector<Constraint> constraints)
    : devices_(std::move(devices)),
      pins_(std::move(pins)),
      nets_(std::move(nets)),
      constraints_(std::move(constraints)) {
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    if (!device_index_.emplace(devices_[i].id, i).second) {
      throw ValidationError(kModule, "duplicate device id '" + devices_[i].id + "'");
    }
    const auto& d = devices_[i];
    if (d.variants.empty() || d.variants.size() > static_cast<std::size_t>(kMaxShapeVariants)) {
      throw ValidationError(kModule, "device '" + d.id + "' must have 1 to 3 shape variants, has " +
                                         std::to_string(d.variants.size()));
    }
    for (const auto& s : d.variants) {
      if (s.width <= 0 || s.height <= 0) {
        throw ValidationError(kModule, "device '" + d.id + "' has a zero-sized shape variant");
      }
    }
    if (d.functional_class < 0 || d.functional_class >= kFunctionalClasses) {
      throw ValidationError(kModule, "device '" + d.id + "' functional class out of range");
    }
  }
  for (std::size_t i = 0; i < pins_.size(); ++i) {
    const auto& p = pins_[i];
    if (!pin_index_.emplace(p.id, i).second) {
      throw ValidationError(kModule, "duplicate pin id '" + p.id + "'");
    }
    if (p.owner >= devices_.size()) {
      throw ValidationError(kModule, "pin '" + p.id + "' has no owning device");
    }
    const auto& owner = devices_[p.owner];
    if (std::find(owner.pins.begin(), owner.pins.end(), i) == owner.pins.end()) {
      throw ValidationError(kModule, "pin '" + p.id + "' is not listed by its device");
    }
    const Shape& s0 = owner.variants.front();
    if (p.dx <= 0 || p.dx >= s0.width || p.dy <= 0 || p.dy >= s0.height) {
      throw ValidationError(kModule, "pin '" + p.id + "' offset lies outside the interior of '" +
                                         owner.id + "'");
    }
    if (p.bottom_layer > p.top_layer || p.bottom_layer < 0) {
      throw ValidationError(kModule, "pin '" + p.id + "' has an invalid layer range");
    }
  }
  for (std::size_t d = 0; d < devices_.size(); ++d) {
    for (auto pi : devices_[d].pins) {
      if (pi >= pins_.size() || pins_[pi].owner != d) {
        throw ValidationError(kModule, "device '" + devices_[d].id + "' lists a foreign pin");
      }
    }
  }
  for (std::size_t n = 0; n < nets_.size(); ++n) {
    const auto& net = nets_[n];
    if (!net_index_.emplace(net.id, n).second) {
      throw ValidationError(kModule, "duplicate net id '" + net.id + "'");
    }
    if (net.pins.empty()) {
      throw ValidationError(kModule, "net '" + net.id + "' has no pins");
    }
    std::set<std::size_t> seen;
    for (auto pi : net.pins) {
      if (pi >= pins_.size()) {
        throw ValidationError(kModule, "net '" + net.id + "' references an unknown pin");
      }
      if (!seen.insert(pi).second) {
        throw ValidationError(kModule,
                              "net '" + net.id + "' lists pin '" + pins_[pi].id + "' twice");
      }
      auto& p = pins_[pi];
      if (p.net && *p.net != n) {
        throw ValidationError(kModule, "pin '" + p.id + "' belongs to nets '" +
                                           nets_[*p.net].id + "' and '" + net.id + "'");
      }
      p.net = n;
    }
  }
  for (const auto& c : constraints_) {
    if (c.members.size() < 2) {
      throw ValidationError(kModule, "constraint needs at least two members");
    }
    std::set<std::size_t> seen;
    for (auto m : c.members) {
      if (m >= devices_.size()) {
        throw ValidationError(kModule, "constraint references an unknown device");
      }
      if (!seen.insert(m).second) {
        throw ValidationError(kModule,
                              "constraint lists device '" + devices_[m].id + "' twice");
      }
    }
  }
}

std::optional<std::size_t> Netlist::find_device(const std::string& id) const {
  auto it = device_index_.find(id);
  if (it == device_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Netlist::find_pin(const std::string& id) const {
  auto it = pin_index_.find(id);
  if (it == pin_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Netlist::find_net(const std::string& id) const {
  auto it = net_index_.find(id);
  if (it == net_index_.end()) return std::nullopt;
  return it->second;
}

Point Netlist::pin_offset(std::size_t pin, int variant) const {
  const Pin& p = pins_.at(pin);
  const Device& d = devices_.at(p.owner);
  if (variant == 0) return {p.dx, p.dy};
  const Shape& s0 = d.variants.front();
  const Shape& sv = d.variants.at(static_cast<std::size_t>(variant));
  // round(a / b) half-up for non-negative a, b > 0
  auto rescale = [](long long off, long long to, long long from) {
    return static_cast<int>((2 * off * to + from) / (2 * from));
  };
  auto clamp_inside = [](int v, int extent) {
    if (extent < 2) return 0;
    return std::clamp(v, 1, extent - 1);
  };
  return {clamp_inside(rescale(p.dx, sv.width, s0.width), sv.width),
          clamp_inside(rescale(p.dy, sv.height, s0.height), sv.height)};
}

std::vector<std::size_t> Netlist::nets_of_device(std::size_t device) const {
  std::vector<std::size_t> out;
  for (auto pi : devices_.at(device).pins) {
    if (pins_[pi].net) out.push_back(*pins_[pi].net);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::uint64_t Netlist::fingerprint() const { return fnv1a(to_json(*this).dump()); }

// --- JSON ---------------------------------------------------------------------

Netlist netlist_from_json(const json& j, int layer_count) {
  if (!j.is_object()) throw ParseError(kModule, "netlist root must be an object");
  std::vector<Device> devices;
  std::vector<Pin> pins;
  std::vector<Net> nets;
  std::vector<Constraint> constraints;
  std::unordered_map<std::string, std::size_t> device_ids;
  std::unordered_map<std::string, std::size_t> pin_ids;

  const json empty = json::array();
  const json& jdevices = j.contains("devices") ? j.at("devices") : empty;
  if (!jdevices.is_array()) throw ParseError(kModule, "'devices' must be an array");
  for (const auto& jd : jdevices) {
    Device d;
    d.id = field<std::string>(jd, "id", "device");
    const std::string where = "device '" + d.id + "'";
    d.name = jd.value("name", d.id);
    auto variants = field<std::vector<std::vector<int>>>(jd, "variants", where);
    if (variants.empty() || variants.size() > static_cast<std::size_t>(kMaxShapeVariants)) {
      throw ValidationError(kModule, where + " must have 1 to 3 shape variants, has " +
                                         std::to_string(variants.size()));
    }
    for (const auto& v : variants) {
      if (v.size() != 2) throw ParseError(kModule, where + ": a variant must be [w, h]");
      if (v[0] <= 0 || v[1] <= 0) {
        throw ValidationError(kModule, where + " has a zero-sized shape variant");
      }
      d.variants.push_back({v[0], v[1]});
    }
    int cls = jd.value("class", 0);
    if (cls < 0 || cls >= kFunctionalClasses) {
      spdlog::warn("device '{}' has unknown functional class {}, using {}", d.id, cls,
                   kUnknownFunctionalClass);
      cls = kUnknownFunctionalClass;
    }
    d.functional_class = cls;
    d.subblock = jd.value("subblock", std::string{});
    if (device_ids.count(d.id)) throw ValidationError(kModule, "duplicate device id '" + d.id + "'");
    const std::size_t di = devices.size();
    device_ids.emplace(d.id, di);

    const json& jpins = jd.contains("pins") ? jd.at("pins") : empty;
    for (const auto& jp : jpins) {
      Pin p;
      p.id = field<std::string>(jp, "id", where + " pin");
      const std::string pwhere = "pin '" + p.id + "'";
      p.owner = di;
      p.dx = field<int>(jp, "dx", pwhere);
      p.dy = field<int>(jp, "dy", pwhere);
      p.direction = parse_direction(field<std::string>(jp, "dir", pwhere), pwhere);
      p.kind = parse_kind(jp.value("kind", std::string{"signal"}), pwhere);
      auto layers = jp.value("layers", std::vector<int>{0, layer_count - 1});
      if (layers.size() != 2) throw ParseError(kModule, pwhere + ": 'layers' must be [lo, hi]");
      p.bottom_layer = layers[0];
      p.top_layer = layers[1];
      if (p.bottom_layer < 0 || p.top_layer >= layer_count || p.bottom_layer > p.top_layer) {
        throw ValidationError(kModule, pwhere + " layer range outside the technology layer set");
      }
      if (pin_ids.count(p.id)) throw ValidationError(kModule, "duplicate pin id '" + p.id + "'");
      pin_ids.emplace(p.id, pins.size());
      d.pins.push_back(pins.size());
      pins.push_back(std::move(p));
    }
    devices.push_back(std::move(d));
  }

  const json& jnets = j.contains("nets") ? j.at("nets") : empty;
  if (!jnets.is_array()) throw ParseError(kModule, "'nets' must be an array");
  for (const auto& jn : jnets) {
    Net n;
    n.id = field<std::string>(jn, "id", "net");
    const std::string where = "net '" + n.id + "'";
    n.kind = parse_kind(jn.value("kind", std::string{"signal"}), where);
    for (const auto& pid : field<std::vector<std::string>>(jn, "pins", where)) {
      auto it = pin_ids.find(pid);
      if (it == pin_ids.end()) {
        throw ValidationError(kModule, where + " references unknown pin '" + pid + "'");
      }
      n.pins.push_back(it->second);
    }
    nets.push_back(std::move(n));
  }

  const json& jcons = j.contains("constraints") ? j.at("constraints") : empty;
  if (!jcons.is_array()) throw ParseError(kModule, "'constraints' must be an array");
  for (const auto& jc : jcons) {
    Constraint c;
    c.kind = parse_constraint_kind(field<std::string>(jc, "kind", "constraint"), "constraint");
    c.axis = parse_axis(jc.value("axis", std::string{"vertical"}), "constraint");
    for (const auto& did : field<std::vector<std::string>>(jc, "members", "constraint")) {
      auto it = device_ids.find(did);
      if (it == device_ids.end()) {
        throw ValidationError(kModule, "constraint references unknown device '" + did + "'");
      }
      c.members.push_back(it->second);
    }
    constraints.push_back(std::move(c));
  }
  return Netlist(std::move(devices), std::move(pins), std::move(nets), std::move(constraints));
}

json to_json(const Netlist& nl) {
  json jdevices = json::array();
  for (const auto& d : nl.devices()) {
    json jv = json::array();
    for (const auto& s : d.variants) jv.push_back({s.width, s.height});
    json jpins = json::array();
    for (auto pi : d.pins) {
      const Pin& p = nl.pin(pi);
      jpins.push_back({{"id", p.id},
                       {"dx", p.dx},
                       {"dy", p.dy},
                       {"dir", p.direction == PinDirection::horizontal ? "h" : "v"},
                       {"kind", to_string(p.kind)},
                       {"layers", {p.bottom_layer, p.top_layer}}});
    }
    jdevices.push_back({{"id", d.id},
                        {"name", d.name},
                        {"variants", jv},
                        {"class", d.functional_class},
                        {"subblock", d.subblock},
                        {"pins", jpins}});
  }
  json jnets = json::array();
  for (const auto& n : nl.nets()) {
    json ids = json::array();
    for (auto pi : n.pins) ids.push_back(nl.pin(pi).id);
    jnets.push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"pins", ids}});
  }
  json jcons = json::array();
  for (const auto& c : nl.constraints()) {
    json ids = json::array();
    for (auto m : c.members) ids.push_back(nl.device(m).id);
    jcons.push_back({{"kind", c.kind == ConstraintKind::symmetry ? "symmetry" : "alignment"},
                     {"axis", c.axis == Axis::horizontal ? "horizontal" : "vertical"},
                     {"members", ids}});
  }
  return {{"format_version", 1}, {"devices", jdevices}, {"nets", jnets}, {"constraints", jcons}};
}

Netlist load_netlist(const std::filesystem::path& path, int layer_count) {
  std::ifstream in(path);
  if (!in) throw ParseError(kModule, "cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(kModule, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return netlist_from_json(j, layer_count);
}

// --- circuit graph ------------------------------------------------------------

std::size_t CircuitGraph::count(EdgeKind k) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [k](const GraphEdge& e) { return e.kind == k; }));
}

std::size_t CircuitGraph::count(NodeKind k) const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [k](const GraphNode& n) { return n.kind == k; }));
}

CircuitGraph build_circuit_graph(const Netlist& nl) {
  CircuitGraph g;
  const std::size_t device_base = 0;
  for (std::size_t i = 0; i < nl.devices().size(); ++i) {
    g.nodes.push_back({NodeKind::device, i, "device:" + nl.device(i).id});
  }
  const std::size_t pin_base = g.nodes.size();
  for (std::size_t i = 0; i < nl.pins().size(); ++i) {
    g.nodes.push_back({NodeKind::pin, i, "pin:" + nl.pin(i).id});
  }
  const std::size_t net_base = g.nodes.size();
  for (std::size_t i = 0; i < nl.nets().size(); ++i) {
    g.nodes.push_back({NodeKind::net, i, "net:" + nl.net(i).id});
  }
  std::set<std::string> subblocks;
  for (const auto& d : nl.devices()) {
    if (!d.subblock.empty()) subblocks.insert(d.subblock);
  }
  std::size_t sb = 0;
  for (const auto& name : subblocks) g.nodes.push_back({NodeKind::subblock, sb++, "subblock:" + name});

  for (std::size_t pi = 0; pi < nl.pins().size(); ++pi) {
    g.edges.push_back({EdgeKind::device_has_pin, device_base + nl.pin(pi).owner, pin_base + pi});
  }
  for (std::size_t ni = 0; ni < nl.nets().size(); ++ni) {
    for (auto pi : nl.net(ni).pins) {
      g.edges.push_back({EdgeKind::pin_belongs_to_net, pin_base + pi, net_base + ni});
    }
  }
  for (const auto& c : nl.constraints()) {
    for (std::size_t a = 0; a < c.members.size(); ++a) {
      for (std::size_t b = a + 1; b < c.members.size(); ++b) {
        g.edges.push_back(
            {EdgeKind::constraint, device_base + c.members[a], device_base + c.members[b]});
      }
    }
  }
  return g;
}

// --- features -----------------------------------------------------------------

const FeatureRow* FeatureTable::find(const std::string& node_id, const CircuitGraph& g) const {
  for (const auto& r : rows) {
    if (g.nodes[r.node].id == node_id) return &r;
  }
  return nullptr;
}

FeatureTable extract_node_features(const CircuitGraph& graph, const Netlist& nl, int layer_count) {
  FeatureTable table;
  table.layer_count = layer_count;
  for (std::size_t n = 0; n < graph.nodes.size(); ++n) {
    const auto& node = graph.nodes[n];
    FeatureRow row{n, node.kind, {}};
    switch (node.kind) {
      case NodeKind::device: {
        const Device& d = nl.device(node.ref);
        const Shape& s = d.variants.front();
        row.values = {static_cast<double>(s.area()), static_cast<double>(s.width),
                      static_cast<double>(s.height), static_cast<double>(d.pins.size())};
        row.values.resize(kDeviceFeatureWidth, 0.0);
        row.values[4 + static_cast<std::size_t>(d.functional_class)] = 1.0;
        break;
      }
      case NodeKind::pin: {
        const Pin& p = nl.pin(node.ref);
        row.values.assign(pin_feature_width(layer_count), 0.0);
        row.values[0] = static_cast<double>(p.direction);
        row.values[1] = static_cast<double>(p.kind);
        row.values[2 + static_cast<std::size_t>(p.bottom_layer)] = 1.0;
        row.values[2 + static_cast<std::size_t>(layer_count + p.top_layer)] = 1.0;
        break;
      }
      case NodeKind::net: {
        const Net& net = nl.net(node.ref);
        std::set<std::size_t> devices;
        for (auto pi : net.pins) devices.insert(nl.pin(pi).owner);
        row.values = {static_cast<double>(devices.size()), static_cast<double>(net.pins.size())};
        break;
      }
      case NodeKind::subblock:
        continue;  // no documented features
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_feature_csv(std::ostream& os, const FeatureTable& table, const CircuitGraph& graph) {
  const std::size_t width = std::max({kDeviceFeatureWidth, kNetFeatureWidth,
                                      pin_feature_width(table.layer_count)});
  os << "node_id,node_type,width";
  for (std::size_t i = 0; i < width; ++i) os << ",f" << i;
  os << '\n';
  for (const auto& r : table.rows) {
    os << graph.nodes[r.node].id << ',' << to_string(r.kind) << ',' << r.values.size();
    for (std::size_t i = 0; i < width; ++i) {
      os << ',';
      if (i < r.values.size()) os << r.values[i];
    }
    os << '\n';
  }
}

}  // namespace anapr
