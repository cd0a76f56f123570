#include <gtest/gtest.h>

#include "lqkd/harness.hpp"
#include "lqkd/qkd_engine.hpp"

using namespace lqkd;

namespace {

QkdConfig config(Network net, std::size_t rounds, std::uint64_t seed, const std::string& attack = "none") {
  QkdConfig c;
  c.network = std::move(net);
  c.rounds = rounds;
  c.seed = seed;
  c.attack = parse_attack(attack);
  return c;
}

}  // namespace

TEST(Sift, RetainsLayersWhoseMembersMatchedTheSet) {
  const auto plan = compile_network(illustrative_network());
  QkdRound rd;
  rd.set = 1;
  rd.bases = {1, 1};
  EXPECT_EQ(sift(plan, rd), (std::vector<int>{0, 1}));
  rd.bases = {1, 2};
  EXPECT_EQ(sift(plan, rd), (std::vector<int>{0}));
  rd.bases = {2, 1};
  EXPECT_TRUE(sift(plan, rd).empty());
  rd.set = 2;
  rd.bases = {2, 2};
  EXPECT_EQ(sift(plan, rd), (std::vector<int>{0, 1}));
}

TEST(QkdEngine, HonestRunHasNoErrors) {
  for (bool truncated : {false, true}) {
    auto cfg = config(illustrative_network(), 20000, 3);
    cfg.truncated = truncated;
    const auto run = run_qkd(cfg);
    EXPECT_FALSE(run.report.abort);
    for (const auto& p : run.report.participants) {
      EXPECT_EQ(p.mismatches, 0u) << p.name;
      EXPECT_GT(p.checked, 0u);
    }
    for (const auto& k : run.keys.layers) {
      EXPECT_TRUE(k.agrees());
      EXPECT_GT(k.length(), 0u);
    }
  }
}

TEST(QkdEngine, RetentionFractions) {
  const auto run = run_qkd(config(illustrative_network(), 40000, 11));
  const auto& l1 = run.report.layer("L1");
  const auto& l2 = run.report.layer("L2");
  EXPECT_TRUE(within_three_sigma(l1.retained, 40000, 0.5)) << l1.retained;
  EXPECT_TRUE(within_three_sigma(l2.retained, 40000, 0.25)) << l2.retained;
}

TEST(QkdEngine, CheckRoundsAreExcludedFromKeys) {
  const auto run = run_qkd(config(illustrative_network(), 5000, 2));
  std::size_t checks = 0, retained_l1 = 0;
  for (const auto& rd : run.transcript) {
    if (rd.check) {
      ++checks;
      EXPECT_FALSE(rd.retained.empty());
    }
    if (std::find(rd.retained.begin(), rd.retained.end(), 0) != rd.retained.end() && !rd.check) ++retained_l1;
  }
  EXPECT_GT(checks, 0u);
  EXPECT_EQ(run.keys.layers[0].length(), retained_l1);
}

TEST(QkdEngine, DeterministicAcrossThreadCounts) {
  auto a = config(illustrative_network(), 3000, 77, "cloning:Bob1:0.85");
  auto b = a;
  a.threads = 1;
  b.threads = 4;
  const auto ra = run_qkd(a), rb = run_qkd(b);
  EXPECT_EQ(qkd_transcript_csv(ra.transcript), qkd_transcript_csv(rb.transcript));
  EXPECT_EQ(report_to_json(ra.report, ra.plan.network).dump(), report_to_json(rb.report, rb.plan.network).dump());
}

TEST(QkdEngine, SeedChangesTranscript) {
  const auto a = run_qkd(config(two_party_network(), 500, 1));
  const auto b = run_qkd(config(two_party_network(), 500, 2));
  EXPECT_NE(qkd_transcript_csv(a.transcript), qkd_transcript_csv(b.transcript));
}

TEST(QkdEngine, OutsiderLearnsNothingAboutInnerLayer) {
  const auto run = run_qkd(config(illustrative_network(), 40000, 5));
  const auto& l1 = run.report.layer("L1");
  ASSERT_TRUE(l1.mi_outsider.count("Bob2"));
  EXPECT_LT(l1.mi_outsider.at("Bob2"), 0.01);
  EXPECT_NEAR(l1.mi_member.at("Bob1"), 1.0, 0.01);
  EXPECT_TRUE(run.report.layer("L2").mi_outsider.empty());
}

TEST(QkdEngine, InterceptResendQber) {
  const auto run = run_qkd(config(two_party_network(), 40000, 9, "intercept_resend:Bob"));
  const auto& p = run.report.participant("Bob");
  EXPECT_TRUE(within_three_sigma(p.mismatches, p.checked, 0.25)) << p.qber;
  EXPECT_TRUE(run.report.abort);
  EXPECT_EQ(run.report.eve.kind, "intercept_resend");
  EXPECT_EQ(run.report.eve.attacked_rounds, 40000u);
}

TEST(QkdEngine, CloningOnOuterReceiverPinpointed) {
  const auto run = run_qkd(config(illustrative_network(), 40000, 13, "cloning:Bob2:0.8"));
  EXPECT_EQ(run.report.participant("Bob1").mismatches, 0u);
  EXPECT_TRUE(run.keys.layers[0].agrees());
  EXPECT_EQ(run.report.pinpoint.compromised, (std::vector<ParticipantId>{2}));
  EXPECT_EQ(run.report.pinpoint.secure_layers, (std::vector<int>{0}));
  const auto& p = run.report.participant("Bob2");
  EXPECT_TRUE(within_three_sigma(p.mismatches, p.checked, 0.2)) << p.qber;
}

TEST(QkdEngine, ConfigValidation) {
  auto c = config(illustrative_network(), 10, 1);
  c.check_fraction = 0.0;
  EXPECT_THROW(run_qkd(c), ConfigError);
  c.check_fraction = 0.1;
  c.rounds = 0;
  EXPECT_THROW(run_qkd(c), ConfigError);
  c.rounds = 10;
  c.attack = parse_attack("cloning:Carol:0.9");
  EXPECT_THROW(run_qkd(c), ConfigError);
}

TEST(QkdEngine, ReanalysisMatchesLiveReport) {
  const auto run = run_qkd(config(illustrative_network(), 4000, 8, "entangle_measure:Bob1"));
  const Adversary adv(parse_attack("entangle_measure:Bob1"), run.plan);
  const auto again = analyze_qkd(run.plan, run.transcript, adv);
  EXPECT_EQ(report_to_json(again, run.plan.network).dump(), report_to_json(run.report, run.plan.network).dump());
}
