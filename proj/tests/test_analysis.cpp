#include <gtest/gtest.h>

#include <cmath>

#include "lqkd/analysis.hpp"

using namespace lqkd;

// Reference values computed independently at 30-digit precision.
namespace oracle {
constexpr double h_third = 0.918295834054489514787;
constexpr double log2_3 = 1.584962500721156181454;
constexpr double qubit_i_ae_096 = 0.118709100769307381775;
constexpr double ququart_i_ab_075 = 0.792481250360578090727;
constexpr double ququart_f_e_09 = 0.573861278752583056728;
constexpr double ququart_i_ae_09 = 0.340385075443678694425;
}  // namespace oracle

TEST(Entropy, Binary) {
  EXPECT_DOUBLE_EQ(binary_entropy(0.5), 1.0);
  EXPECT_DOUBLE_EQ(binary_entropy(0.0), 0.0);
  EXPECT_DOUBLE_EQ(binary_entropy(1.0), 0.0);
  EXPECT_NEAR(binary_entropy(1.0 / 3.0), oracle::h_third, 1e-15);
  EXPECT_THROW(binary_entropy(1.1), Error);
}

TEST(Entropy, Histograms) {
  EXPECT_DOUBLE_EQ(shannon_entropy({5, 5}), 1.0);
  EXPECT_NEAR(shannon_entropy({4, 4, 4}), oracle::log2_3, 1e-15);
  EXPECT_DOUBLE_EQ(shannon_entropy({7, 0}), 0.0);
  EXPECT_DOUBLE_EQ(shannon_entropy({}), 0.0);
  EXPECT_NEAR(symbol_entropy({0, 1, 1, -1, -1}), oracle::h_third, 1e-15);
}

TEST(Entropy, StandardErrorScales) {
  // uniform source: delta-method term vanishes, bias scale remains
  const double se = entropy_standard_error({500, 500});
  EXPECT_NEAR(se, std::sqrt(2.0) / (2.0 * 1000 * std::log(2.0)), 1e-15);
  // skewed source: delta-method term dominates
  const double p = 0.2, n = 10000;
  const double var = p * std::log2(p) * std::log2(p) + (1 - p) * std::log2(1 - p) * std::log2(1 - p) -
                     std::pow(p * std::log2(p) + (1 - p) * std::log2(1 - p), 2);
  EXPECT_NEAR(entropy_standard_error({2000, 8000}), std::sqrt(var / n), 1e-12);
  EXPECT_EQ(entropy_standard_error({}), 0.0);
}

TEST(CloningInfo, QubitOracles) {
  const auto one = mi_cloning_qubit(1.0);
  EXPECT_EQ(one.i_ab, 1.0);
  EXPECT_DOUBLE_EQ(one.f_e, 0.5);
  EXPECT_EQ(one.i_ae, 0.0);
  EXPECT_TRUE(one.valid);

  const auto r = mi_cloning_qubit(0.96);
  EXPECT_NEAR(r.f_e, 0.7, 1e-12);
  EXPECT_NEAR(r.i_ae, oracle::qubit_i_ae_096, 1e-12);
  EXPECT_NEAR(r.i_ab, 1.0 - binary_entropy(0.96), 1e-15);

  // F_E leaves [0, 1] below F = 3/4: clamped and flagged
  const auto low = mi_cloning_qubit(0.5);
  EXPECT_FALSE(low.valid);
  EXPECT_EQ(low.f_e, 1.0);
  EXPECT_NEAR(low.f_e_alt, 1.0, 1e-15);
  EXPECT_TRUE(mi_cloning_qubit(0.75).valid);
}

TEST(CloningInfo, QuquartOracles) {
  const auto one = mi_cloning_ququart(1.0);
  EXPECT_EQ(one.i_ab, 2.0);
  EXPECT_NEAR(one.f_e, 0.25, 1e-15);
  EXPECT_NEAR(one.i_ae, 0.0, 1e-15);

  EXPECT_NEAR(mi_cloning_ququart(0.75).i_ab, oracle::ququart_i_ab_075, 1e-12);
  EXPECT_NEAR(mi_cloning_ququart(0.25).i_ab, 0.0, 1e-12);

  const auto r = mi_cloning_ququart(0.9);
  EXPECT_NEAR(r.f_e, oracle::ququart_f_e_09, 1e-12);
  EXPECT_NEAR(r.i_ae, oracle::ququart_i_ae_09, 1e-12);
  EXPECT_TRUE(r.valid);

  const auto low = mi_cloning_ququart(0.5);
  EXPECT_FALSE(low.valid);
  EXPECT_EQ(low.f_e, 1.0);
  EXPECT_EQ(low.i_ae, 2.0);
}

TEST(CloningInfo, SymmetricChannel) {
  EXPECT_DOUBLE_EQ(symmetric_channel_information(2, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(symmetric_channel_information(3, 1.0), std::log2(3.0));
  EXPECT_NEAR(symmetric_channel_information(3, 1.0 / 3.0), 0.0, 1e-12);
  EXPECT_NEAR(symmetric_channel_information(2, 0.9), 1.0 - binary_entropy(0.9), 1e-15);
  EXPECT_THROW(symmetric_channel_information(1, 0.5), Error);
}

TEST(RoundsForConfidence, Examples) {
  EXPECT_EQ(rounds_for_confidence(0.25, 4), 1);
  EXPECT_EQ(rounds_for_confidence(1e-6, 4), 10);
  EXPECT_EQ(rounds_for_confidence(1e-6, 2), 20);
  EXPECT_EQ(rounds_for_confidence(0.5, 2), 1);
  EXPECT_EQ(rounds_for_confidence(0.49, 2), 2);
  EXPECT_THROW(rounds_for_confidence(0.0, 2), Error);
  EXPECT_THROW(rounds_for_confidence(0.1, 1), Error);
}

TEST(EmpiricalMi, Examples) {
  EXPECT_DOUBLE_EQ(empirical_mi({0, 1, 0, 1}, {0, 1, 0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(empirical_mi({0, 1, 0, 1}, {0, 0, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(empirical_mi({0, 1, 2, 3}, {3, 2, 1, 0}), 2.0);
  EXPECT_DOUBLE_EQ(empirical_mi({1, 1, 1}, {0, 1, 2}), 0.0);
  EXPECT_THROW(empirical_mi({0}, {0, 1}), Error);
  EXPECT_THROW(empirical_mi({}, {}), Error);
}

TEST(Wilson, Interval) {
  const auto a = wilson_interval(0, 100);
  EXPECT_EQ(a.lo, 0.0);
  EXPECT_GT(a.hi, 0.0);
  EXPECT_LT(a.hi, 0.05);
  const auto b = wilson_interval(50, 100);
  EXPECT_NEAR(b.lo + b.hi, 1.0, 1e-12);
  EXPECT_LT(b.lo, 0.5);
  const auto c = wilson_interval(0, 0);
  EXPECT_EQ(c.lo, 0.0);
  EXPECT_EQ(c.hi, 1.0);
}

TEST(ThreeSigma, Basics) {
  EXPECT_TRUE(within_three_sigma(500, 1000, 0.5));
  EXPECT_FALSE(within_three_sigma(600, 1000, 0.5));
  EXPECT_TRUE(within_three_sigma(0, 10, 0.0));
  EXPECT_FALSE(within_three_sigma(1, 10, 0.0));
  EXPECT_FALSE(within_three_sigma(0, 0, 0.5));
}

TEST(Pinpoint, CleanRunCompromisesNobody) {
  const auto net = illustrative_network();
  const auto v = pinpoint_eve(net, {{1, 1000, 0}, {2, 1000, 0}});
  EXPECT_TRUE(v.compromised.empty());
  EXPECT_EQ(v.secure_layers, (std::vector<int>{0, 1}));
}

TEST(Pinpoint, OuterReceiverAttacked) {
  const auto net = illustrative_network();
  const auto v = pinpoint_eve(net, {{1, 1000, 0}, {2, 1000, 250}});
  EXPECT_EQ(v.compromised, (std::vector<ParticipantId>{2}));
  EXPECT_EQ(v.secure_layers, (std::vector<int>{0}));
}

TEST(Pinpoint, InnerReceiverAttackedTaintsBothLayers) {
  const auto net = illustrative_network();
  const auto v = pinpoint_eve(net, {{1, 1000, 300}, {2, 1000, 0}});
  EXPECT_EQ(v.compromised, (std::vector<ParticipantId>{1}));
  EXPECT_TRUE(v.secure_layers.empty());
}

TEST(Pinpoint, SmallNoiseBelowThresholdIgnored) {
  const auto net = illustrative_network();
  // 1.2% on 1000 checks is within three sigma of the 1% threshold
  EXPECT_TRUE(pinpoint_eve(net, {{1, 1000, 12}, {2, 0, 0}}).compromised.empty());
  EXPECT_THROW(pinpoint_eve(net, {}, 0.0), Error);
}

TEST(KeyRate, Report) {
  KeyMaterial km;
  LayerKey k;
  k.layer = 0;
  k.alphabet = 2;
  k.holders = {0, 1};
  k.symbols = {{0, 1, 0, 1}, {0, 1, 0, 1}};
  k.rounds = {0, 2, 4, 6};
  km.layers.push_back(k);
  const auto r = key_rate_report(km, 10, {5});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].key_length, 4u);
  EXPECT_DOUBLE_EQ(r[0].entropy, 1.0);
  EXPECT_DOUBLE_EQ(r[0].symbols_per_transmission, 0.4);
  EXPECT_DOUBLE_EQ(r[0].retention_fraction, 0.5);
  EXPECT_DOUBLE_EQ(r[0].bits_per_transmission, 0.5);
}

TEST(KeyMaterialTest, Agreement) {
  LayerKey k;
  k.holders = {0, 1, 2};
  k.symbols = {{0, 1}, {0, 1}, {0, 1}};
  k.rounds = {3, 9};
  EXPECT_TRUE(k.agrees());
  EXPECT_EQ(k.length(), 2u);
  k.symbols[2][1] = 0;
  EXPECT_FALSE(k.agrees());
}
