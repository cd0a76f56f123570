#include <gtest/gtest.h>

#include <algorithm>

#include "lqkd/harness.hpp"
#include "lqkd/nettop.hpp"

using namespace lqkd;

namespace {

bool has_violation(const ValidationResult& r, const std::string& needle) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const std::string& v) { return v.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Validate, IllustrativeNetworkIsValid) {
  const auto res = validate(illustrative_network());
  EXPECT_TRUE(res.ok());
  EXPECT_TRUE(res.violations.empty());
}

TEST(Validate, EmptyLayer) {
  auto net = illustrative_network();
  net.layers[0].members.clear();
  EXPECT_TRUE(has_violation(validate(net), "empty layer"));
}

TEST(Validate, HubMissingFromLayer) {
  auto net = illustrative_network();
  net.layers[1].members = {1, 2};
  EXPECT_TRUE(has_violation(validate(net), "hub not in layer"));
}

TEST(Validate, SmallRefDimAndOrphans) {
  auto net = illustrative_network();
  net.layers[0].ref_dim = 1;
  EXPECT_TRUE(has_violation(validate(net), "ref_dim must be at least 2"));

  Network orphan = illustrative_network();
  orphan.participants.push_back("Bob3");
  EXPECT_TRUE(has_violation(validate(orphan), "Bob3 is in no layer"));

  Network hub_only = two_party_network();
  hub_only.layers.push_back(Layer{"solo", {0}, 2});
  EXPECT_TRUE(has_violation(validate(hub_only), "no non-hub member"));
}

TEST(Validate, IsIdempotent) {
  auto net = illustrative_network();
  net.layers[0].members.clear();
  const auto a = validate(net);
  const auto b = validate(net);
  EXPECT_EQ(a.violations, b.violations);
}

TEST(LocalDimensions, Examples) {
  auto dims = local_dimensions(illustrative_network());
  EXPECT_EQ(dims.at(1), 4u);
  EXPECT_EQ(dims.at(2), 2u);

  dims = local_dimensions(illustrative_network(3, 2));
  EXPECT_EQ(dims.at(1), 6u);
  EXPECT_EQ(dims.at(2), 2u);

  dims = local_dimensions(two_party_network());
  EXPECT_EQ(dims.at(1), 2u);
}

TEST(LocalDimensions, UniformQubitLayersGivePowersOfTwo) {
  Network net;
  net.participants = {"A", "B", "C", "D"};
  net.hub = 0;
  net.layers = {Layer{"a", {0, 1}, 2}, Layer{"b", {0, 1, 2}, 2}, Layer{"c", {0, 1, 2, 3}, 2}};
  for (ParticipantId p : net.receivers()) EXPECT_EQ(net.local_dim(p), 1u << net.ell(p));
}

TEST(LocalDimensions, InvalidNetworkThrows) {
  auto net = illustrative_network();
  net.layers[1].members = {1, 2};
  EXPECT_THROW(local_dimensions(net), Error);
}

TEST(NetworkJson, RoundTrip) {
  const auto net = illustrative_network(3, 2);
  const auto doc = nlohmann::json::parse(network_to_json(net).dump());
  EXPECT_EQ(network_from_json(doc), net);
}

TEST(NetworkJson, MinimalDocumentParses) {
  const auto doc = nlohmann::json::parse(R"({"participants": ["Alice","Bob1","Bob2"], "hub": "Alice",
    "layers": [{"members": ["Alice","Bob1"], "ref_dim": 2}, {"members": ["Alice","Bob1","Bob2"], "ref_dim": 2}]})");
  const auto net = network_from_json(doc);
  EXPECT_EQ(net.layers[0].name, "L1");
  EXPECT_EQ(net.layers[1].name, "L2");
  EXPECT_EQ(net, illustrative_network());
}

TEST(NetworkJson, ErrorsNameTheField) {
  try {
    network_from_json(nlohmann::json::parse(R"({"participants": ["A","B"], "hub": "C", "layers": []})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "hub");
  }
  try {
    network_from_json(nlohmann::json::parse(R"({"participants": ["A","B"], "hub": "A", "layers": [{"members": ["A","X"]}]})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "layers[0].members");
  }
  try {
    network_from_json(nlohmann::json::parse(R"({"participants": ["A","B"], "hub": "A", "layers": [{"members": ["A","B"], "ref_dim": "two"}]})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "layers[0].ref_dim");
  }
}

TEST(NetworkJson, ShippedConfigsAreValid) {
  for (const char* f : {"illustrative.json", "mixed_radix.json", "two_party.json", "four_party.json"}) {
    const auto net = load_network(std::string(LQKD_DATA_DIR) + "/" + f);
    EXPECT_TRUE(validate(net).ok()) << f;
  }
  EXPECT_EQ(load_network(std::string(LQKD_DATA_DIR) + "/illustrative.json"), illustrative_network());
  EXPECT_EQ(load_network(std::string(LQKD_DATA_DIR) + "/mixed_radix.json"), illustrative_network(3, 2));
}
