// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "anapr/geometry.hpp"

namespace anapr {

inline constexpr int kFunctionalClasses = 28;
inline constexpr int kUnknownFunctionalClass = kFunctionalClasses - 1;
inline constexpr int kMaxShapeVariants = 3;

enum class PinDirection : std::uint8_t { horizontal = 0, vertical = 1 };
enum class NetKind : std::uint8_t { signal = 0, ground = 1, power = 2 };
enum class ConstraintKind : std::uint8_t { symmetry = 0, alignment = 1 };

struct Shape {
  int width = 0;
  int height = 0;
  long long area() const { return static_cast<long long>(width) * height; }
  bool operator==(const Shape&) const = default;
};

struct Pin {
  std::string id;
  std::size_t owner = 0;  // device index
  int dx = 0;             // offset from the device lower-left, variant 0
  int dy = 0;
  PinDirection direction = PinDirection::horizontal;
  NetKind kind = NetKind::signal;
  int bottom_layer = 0;
  int top_layer = 0;
  std::optional<std::size_t> net;  // filled in from the net list
  bool operator==(const Pin&) const = default;
};

struct Device {
  std::string id;
  std::string name;
  std::vector<Shape> variants;
  std::vector<std::size_t> pins;  // pin indices
  int functional_class = 0;
  std::string subblock;
  bool operator==(const Device&) const = default;
};

struct Net {
  std::string id;
  NetKind kind = NetKind::signal;
  std::vector<std::size_t> pins;
  bool operator==(const Net&) const = default;
};

struct Constraint {
  ConstraintKind kind = ConstraintKind::alignment;
  Axis axis = Axis::horizontal;
  std::vector<std::size_t> members;  // device indices
  bool operator==(const Constraint&) const = default;
};

// Immutable circuit description. Entities are addressed by dense index;
// the string ids are kept for I/O and diagnostics.
class Netlist {
public:
  Netlist() = default;
  Netlist(std::vector<Device> devices, std::vector<Pin> pins, std::vector<Net> nets,
          std::vector<Constraint> constraints);

  const std::vector<Device>& devices() const { return devices_; }
  const std::vector<Pin>& pins() const { return pins_; }
  const std::vector<Net>& nets() const { return nets_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  const Device& device(std::size_t i) const { return devices_.at(i); }
  const Pin& pin(std::size_t i) const { return pins_.at(i); }
  const Net& net(std::size_t i) const { return nets_.at(i); }

  std::optional<std::size_t> find_device(const std::string& id) const;
  std::optional<std::size_t> find_pin(const std::string& id) const;
  std::optional<std::size_t> find_net(const std::string& id) const;

  // Pin offset under a shape variant: proportional rescale of the variant-0
  // offset, rounded half-up and clamped to the interior of the variant.
  Point pin_offset(std::size_t pin, int variant) const;

  // Nets touching a device, ascending.
  std::vector<std::size_t> nets_of_device(std::size_t device) const;

  // Stable content hash, used to key caches.
  std::uint64_t fingerprint() const;

  bool operator==(const Netlist& o) const {
    return devices_ == o.devices_ && pins_ == o.pins_ && nets_ == o.nets_ &&
           constraints_ == o.constraints_;
  }

private:
  std::vector<Device> devices_;
  std::vector<Pin> pins_;
  std::vector<Net> nets_;
  std::vector<Constraint> constraints_;
  std::unordered_map<std::string, std::size_t> device_index_;
  std::unordered_map<std::string, std::size_t> pin_index_;
  std::unordered_map<std::string, std::size_t> net_index_;
};

// Parses and validates the netlist JSON schema. `layer_count` bounds the
// pin layer ranges.
Netlist netlist_from_json(const nlohmann::json& j, int layer_count = 2);
nlohmann::json to_json(const Netlist& netlist);
Netlist load_netlist(const std::filesystem::path& path, int layer_count = 2);

// --- circuit graph ---------------------------------------------------------

enum class NodeKind : std::uint8_t { device, pin, net, subblock };
enum class EdgeKind : std::uint8_t { device_has_pin, pin_belongs_to_net, constraint };

struct GraphNode {
  NodeKind kind;
  std::size_t ref;  // index into the netlist table of that kind
  std::string id;   // "device:<id>", "pin:<id>", ...
};

struct GraphEdge {
  EdgeKind kind;
  std::size_t from;
  std::size_t to;
};

struct CircuitGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::size_t count(EdgeKind k) const;
  std::size_t count(NodeKind k) const;
};

CircuitGraph build_circuit_graph(const Netlist& netlist);

// --- node features ---------------------------------------------------------

inline constexpr std::size_t kDeviceFeatureWidth = 4 + kFunctionalClasses;
inline constexpr std::size_t kNetFeatureWidth = 2;
inline constexpr std::size_t pin_feature_width(int layer_count) {
  return 2 + 2 * static_cast<std::size_t>(layer_count);
}

struct FeatureRow {
  std::size_t node;  // index into CircuitGraph::nodes
  NodeKind kind;
  std::vector<double> values;
};

struct FeatureTable {
  int layer_count = 2;
  std::vector<FeatureRow> rows;
  const FeatureRow* find(const std::string& node_id, const CircuitGraph& g) const;
};

// Device rows:  area, width, height, pin_count, onehot(class, 28)
// Pin rows:     direction, net kind, onehot(bottom layer), onehot(top layer)
// Net rows:     connected device count, connected pin count
FeatureTable extract_node_features(const CircuitGraph& graph, const Netlist& netlist,
                                   int layer_count = 2);
void write_feature_csv(std::ostream& os, const FeatureTable& table, const CircuitGraph& graph);

const char* to_string(NodeKind k);
const char* to_string(EdgeKind k);
const char* to_string(NetKind k);
const char* to_string(PinDirection d);

}  // namespace anapr
