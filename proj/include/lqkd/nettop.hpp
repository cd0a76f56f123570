#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lqkd/error.hpp"

namespace lqkd {

/// Dense participant index, 0..n-1 in declaration order.
using ParticipantId = int;

inline constexpr std::uint64_t kMaxLocalDim = 1u << 20;
inline constexpr std::size_t kMaxLayers = 64;

struct Layer {
  std::string name;
  std::vector<ParticipantId> members;  // sorted, unique
  int ref_dim = 2;

  bool contains(ParticipantId p) const {
    return std::binary_search(members.begin(), members.end(), p);
  }

  bool operator==(const Layer&) const = default;
};

/// A hub-centric layered network: one preparer (the hub) that belongs to
/// every layer, and receivers that belong to one or more layers.
struct Network {
  std::vector<std::string> participants;
  ParticipantId hub = 0;
  std::vector<Layer> layers;

  int size() const { return static_cast<int>(participants.size()); }

  std::optional<ParticipantId> find(const std::string& name) const {
    auto it = std::find(participants.begin(), participants.end(), name);
    if (it == participants.end()) return std::nullopt;
    return static_cast<ParticipantId>(it - participants.begin());
  }

  /// Non-hub participants in id order.
  std::vector<ParticipantId> receivers() const {
    std::vector<ParticipantId> out;
    for (int p = 0; p < size(); ++p)
      if (p != hub) out.push_back(p);
    return out;
  }

  /// Indices of layers containing `p`, in declaration order.
  std::vector<int> layers_of(ParticipantId p) const {
    std::vector<int> out;
    for (std::size_t r = 0; r < layers.size(); ++r)
      if (layers[r].contains(p)) out.push_back(static_cast<int>(r));
    return out;
  }

  /// Number of layers containing `p`.
  int ell(ParticipantId p) const { return static_cast<int>(layers_of(p).size()); }

  /// Product of ref_dim over the layers containing `p`.
  std::uint64_t local_dim(ParticipantId p) const {
    std::uint64_t d = 1;
    for (int r : layers_of(p)) {
      d *= static_cast<std::uint64_t>(layers[r].ref_dim);
      if (d > kMaxLocalDim) return d;
    }
    return d;
  }

  bool operator==(const Network&) const = default;
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
};

/// Checks every structural invariant. Violations are returned as data.
inline ValidationResult validate(const Network& net) {
  ValidationResult res;
  auto add = [&](std::string msg) { res.violations.push_back(std::move(msg)); };

  if (net.size() < 2) add("network needs at least two participants");
  std::set<std::string> names;
  for (const auto& n : net.participants) {
    if (n.empty()) add("empty participant name");
    if (!names.insert(n).second) add("duplicate participant name '" + n + "'");
  }
  const bool hub_ok = net.hub >= 0 && net.hub < net.size();
  if (!hub_ok) add("hub is not a participant");
  if (net.layers.empty()) add("network has no layers");
  if (net.layers.size() > kMaxLayers) add("more than 64 layers");

  for (std::size_t r = 0; r < net.layers.size(); ++r) {
    const Layer& layer = net.layers[r];
    const std::string tag = "layer " + (layer.name.empty() ? std::to_string(r + 1) : layer.name) + ": ";
    if (layer.members.empty()) {
      add(tag + "empty layer");
      continue;
    }
    if (layer.ref_dim < 2) add(tag + "ref_dim must be at least 2");
    if (!std::is_sorted(layer.members.begin(), layer.members.end()) ||
        std::adjacent_find(layer.members.begin(), layer.members.end()) != layer.members.end())
      add(tag + "members must be unique");
    for (ParticipantId m : layer.members)
      if (m < 0 || m >= net.size()) add(tag + "unknown member id " + std::to_string(m));
    if (hub_ok && !layer.contains(net.hub)) add(tag + "hub not in layer");
    const bool has_receiver = std::any_of(layer.members.begin(), layer.members.end(),
                                          [&](ParticipantId m) { return m != net.hub; });
    if (!has_receiver) add(tag + "layer has no non-hub member");
  }

  if (hub_ok) {
    for (ParticipantId p : net.receivers()) {
      if (net.ell(p) == 0) add("participant " + net.participants[p] + " is in no layer");
      else if (net.local_dim(p) > kMaxLocalDim)
        add("participant " + net.participants[p] + " local dimension exceeds 2^20");
    }
  }
  return res;
}

inline void require_valid(const Network& net) {
  const auto res = validate(net);
  if (!res.ok()) {
    std::string msg = "invalid network:";
    for (const auto& v : res.violations) msg += " [" + v + "]";
    throw Error(msg);
  }
}

/// Local Hilbert-space dimension of each non-hub participant.
inline std::map<ParticipantId, std::uint64_t> local_dimensions(const Network& net) {
  require_valid(net);
  std::map<ParticipantId, std::uint64_t> out;
  for (ParticipantId p : net.receivers()) out[p] = net.local_dim(p);
  return out;
}

// ---------------------------------------------------------------------------
// JSON configuration

/// Parses `{"participants": [...], "hub": "...", "layers": [{"members": [...],
/// "ref_dim": 2, "name": "L1"}]}`. Layer names default to L1, L2, ...
/// Structural problems are left to validate(); malformed documents throw
/// ConfigError naming the field.
inline Network network_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("network", "expected a JSON object");
  Network net;
  if (!doc.contains("participants") || !doc["participants"].is_array())
    throw ConfigError("participants", "expected an array of names");
  for (const auto& p : doc["participants"]) {
    if (!p.is_string()) throw ConfigError("participants", "names must be strings");
    net.participants.push_back(p.get<std::string>());
  }
  if (!doc.contains("hub") || !doc["hub"].is_string())
    throw ConfigError("hub", "expected a participant name");
  const auto hub = net.find(doc["hub"].get<std::string>());
  if (!hub) throw ConfigError("hub", "unknown participant '" + doc["hub"].get<std::string>() + "'");
  net.hub = *hub;
  if (!doc.contains("layers") || !doc["layers"].is_array())
    throw ConfigError("layers", "expected an array of layers");
  int index = 0;
  for (const auto& l : doc["layers"]) {
    ++index;
    const std::string field = "layers[" + std::to_string(index - 1) + "]";
    if (!l.is_object()) throw ConfigError(field, "expected an object");
    Layer layer;
    layer.name = l.value("name", "L" + std::to_string(index));
    if (l.contains("ref_dim")) {
      if (!l["ref_dim"].is_number_integer()) throw ConfigError(field + ".ref_dim", "expected an integer");
      layer.ref_dim = l["ref_dim"].get<int>();
    }
    if (!l.contains("members") || !l["members"].is_array())
      throw ConfigError(field + ".members", "expected an array of names");
    for (const auto& m : l["members"]) {
      if (!m.is_string()) throw ConfigError(field + ".members", "names must be strings");
      const auto id = net.find(m.get<std::string>());
      if (!id) throw ConfigError(field + ".members", "unknown participant '" + m.get<std::string>() + "'");
      layer.members.push_back(*id);
    }
    std::sort(layer.members.begin(), layer.members.end());
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline nlohmann::ordered_json network_to_json(const Network& net) {
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& l : net.layers) {
    nlohmann::ordered_json members = nlohmann::ordered_json::array();
    for (auto m : l.members) members.push_back(net.participants.at(m));
    layers.push_back({{"name", l.name}, {"members", members}, {"ref_dim", l.ref_dim}});
  }
  return {{"participants", net.participants}, {"hub", net.participants.at(net.hub)}, {"layers", layers}};
}

/// The three-party, two-layer network used throughout: L1 = {Alice, Bob1},
/// L2 = {Alice, Bob1, Bob2}.
inline Network illustrative_network(int l1_ref_dim = 2, int l2_ref_dim = 2) {
  Network net;
  net.participants = {"Alice", "Bob1", "Bob2"};
  net.hub = 0;
  net.layers = {Layer{"L1", {0, 1}, l1_ref_dim}, Layer{"L2", {0, 1, 2}, l2_ref_dim}};
  return net;
}

/// Hub plus one receiver sharing a single layer.
inline Network two_party_network(int ref_dim = 2) {
  Network net;
  net.participants = {"Alice", "Bob"};
  net.hub = 0;
  net.layers = {Layer{"L1", {0, 1}, ref_dim}};
  return net;
}

}  // namespace lqkd
