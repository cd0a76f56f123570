#include <gtest/gtest.h>

#include "lqkd/harness.hpp"
#include "lqkd/sqkd_engine.hpp"

using namespace lqkd;

namespace {

SqkdConfig config(Network net, std::size_t n, std::uint64_t seed, const std::string& attack = "none") {
  SqkdConfig c;
  c.network = std::move(net);
  c.key_length = n;
  c.seed = seed;
  c.attack = parse_attack(attack);
  return c;
}

}  // namespace

TEST(SqkdRounds, CountFormula) {
  EXPECT_EQ(sqkd_round_count(10000, 0.25), 100000u);
  EXPECT_EQ(sqkd_round_count(1, 0.25), 10u);
  EXPECT_EQ(sqkd_round_count(3, 0.1), 27u);  // 26.4 -> 27
  EXPECT_EQ(sqkd_round_count(10, 0.1), 88u);  // 88.000000000001 stays 88
  EXPECT_EQ(config(illustrative_network(), 100, 1).rounds(), 1000u);
}

TEST(SiftSqkd, ComputationalRoundsWithMeasuringMembers) {
  const auto plan = compile_network(illustrative_network());
  SqkdRound rd;
  rd.set = 1;
  rd.actions = {ClassicalAction::measure_resend, ClassicalAction::measure_resend};
  EXPECT_EQ(sift_sqkd(plan, rd), (std::vector<int>{0, 1}));
  rd.actions[1] = ClassicalAction::reflect;
  EXPECT_EQ(sift_sqkd(plan, rd), (std::vector<int>{0}));
  rd.set = 2;
  EXPECT_TRUE(sift_sqkd(plan, rd).empty());
}

TEST(SqkdEngine, HonestRunHasNoErrors) {
  for (bool truncated : {false, true}) {
    auto cfg = config(illustrative_network(), 2000, 4);
    cfg.truncated = truncated;
    const auto run = run_sqkd(cfg);
    EXPECT_FALSE(run.report.abort);
    for (const auto& p : run.report.participants) {
      EXPECT_EQ(p.mismatches, 0u) << p.name;
      EXPECT_EQ(p.measured_mismatches, 0u) << p.name;
      EXPECT_GT(p.checked, 0u);
    }
    for (const auto& k : run.keys.layers) EXPECT_TRUE(k.agrees());
  }
}

TEST(SqkdEngine, YieldFractions) {
  const auto run = run_sqkd(config(illustrative_network(), 5000, 6));
  const std::size_t n = run.report.rounds;
  ASSERT_EQ(n, 50000u);
  EXPECT_TRUE(within_three_sigma(run.report.layer("L1").retained, n, 0.25));
  EXPECT_TRUE(within_three_sigma(run.report.layer("L2").retained, n, 0.125));
  EXPECT_GE(run.keys.layers[1].length(), 5000u);
}

TEST(SqkdEngine, CnotForwardOnFourierReflections) {
  // (|+> or |->) through a CNOT is read back wrongly half the time
  const auto run = run_sqkd(config(two_party_network(), 4000, 7, "two_way:Bob:cnot:identity"));
  std::size_t fourier_reflect = 0, wrong = 0, comp_wrong = 0;
  for (const auto& rd : run.transcript) {
    if (!rd.reflected(0)) continue;
    const int sent = run.plan.set(rd.set).states[static_cast<std::size_t>(rd.state)].local_values[0];
    if (rd.set == 2) {
      ++fourier_reflect;
      if (rd.alice_outcomes[0] != sent) ++wrong;
    } else if (rd.alice_outcomes[0] != sent) {
      ++comp_wrong;
    }
  }
  EXPECT_TRUE(within_three_sigma(wrong, fourier_reflect, 0.5)) << wrong << "/" << fourier_reflect;
  EXPECT_EQ(comp_wrong, 0u);
  const auto& p = run.report.participant("Bob");
  EXPECT_TRUE(within_three_sigma(p.mismatches, p.checked, 0.25)) << p.qber;
}

TEST(SqkdEngine, AttackOnOuterReceiverSparesInnerLayer) {
  const auto run = run_sqkd(config(illustrative_network(), 3000, 8, "two_way:Bob2:cnot:identity"));
  EXPECT_EQ(run.report.participant("Bob1").mismatches, 0u);
  EXPECT_GT(run.report.participant("Bob2").mismatches, 0u);
  EXPECT_EQ(run.report.pinpoint.secure_layers, (std::vector<int>{0}));
}

TEST(SqkdEngine, DeterministicAcrossThreadCounts) {
  auto a = config(illustrative_network(), 300, 12, "two_way:Bob1:random:3:random:4");
  auto b = a;
  a.threads = 1;
  b.threads = 3;
  EXPECT_EQ(sqkd_transcript_csv(run_sqkd(a).transcript), sqkd_transcript_csv(run_sqkd(b).transcript));
}

TEST(SqkdEngine, ConfigValidation) {
  auto c = config(illustrative_network(), 0, 1);
  EXPECT_THROW(run_sqkd(c), ConfigError);
  c.key_length = 10;
  c.delta = 0.0;
  EXPECT_THROW(run_sqkd(c), ConfigError);
}

TEST(Boyer, HonestYieldIsOneQuarter) {
  const auto run = run_boyer_baseline(5000, 0.25, 3);
  EXPECT_EQ(run.report.protocol, "boyer");
  EXPECT_EQ(run.report.rounds, 50000u);
  EXPECT_TRUE(within_three_sigma(run.keys.layers[0].length(), 50000, 0.25));
  EXPECT_TRUE(run.keys.layers[0].agrees());
  EXPECT_FALSE(run.report.abort);
}

TEST(Boyer, InterceptResendDetectedAtOneQuarter) {
  const auto run = run_boyer_baseline(5000, 0.25, 5, parse_attack("intercept_resend:Bob"));
  const auto& p = run.report.participant("Bob");
  EXPECT_TRUE(within_three_sigma(p.mismatches, p.checked, 0.25)) << p.qber;
  EXPECT_TRUE(run.report.abort);
}
