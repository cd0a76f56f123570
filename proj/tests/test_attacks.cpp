#include <gtest/gtest.h>

#include <cmath>

#include "lqkd/attacks.hpp"
#include "lqkd/harness.hpp"

using namespace lqkd;

namespace {

// Probability that the receiver's readout of subsystem 0 differs from `sent`.
double readout_error(const JointState& st, const Basis& b, int sent) {
  const auto p = subsystem_probabilities(st, 0, b);
  return 1.0 - p[static_cast<std::size_t>(sent)];
}

std::vector<int> radices_for(int d) {
  if (d == 4) return {2, 2};
  if (d == 6) return {3, 2};
  return {d};
}

}  // namespace

TEST(AttackKind, StringRoundTrip) {
  for (auto k : {AttackKind::none, AttackKind::intercept_resend, AttackKind::entangle_measure, AttackKind::cloning,
                 AttackKind::two_way})
    EXPECT_EQ(attack_kind_from_string(to_string(k)), k);
  try {
    attack_kind_from_string("photon_splitting");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "attack.kind");
  }
}

TEST(InterceptResend, DetectionProbability) {
  EXPECT_DOUBLE_EQ(detection_probability_intercept(2, 1), 0.5);
  EXPECT_DOUBLE_EQ(detection_probability_intercept(4, 1), 0.75);
  EXPECT_NEAR(detection_probability_intercept(2, 10), 1.0 - 1.0 / 1024.0, 1e-15);
  EXPECT_DOUBLE_EQ(detection_probability_intercept(3, 0), 0.0);
  EXPECT_THROW(detection_probability_intercept(1, 2), Error);
}

TEST(InterceptResend, ForwardsEigenstateOfChosenBasis) {
  RandomStream rng(17);
  for (int i = 0; i < 200; ++i) {
    const auto r = intercept_resend(fourier_ket(4, 1), {2, 2}, rng);
    const Basis b = Basis::layered(r.basis, {2, 2});
    const Ket want = b.vector(r.outcome);
    EXPECT_NEAR(std::abs(inner(want, r.forwarded)), 1.0, 1e-12);
  }
}

TEST(InterceptResend, MonteCarloFrequencyMatchesFormula) {
  for (int d : {2, 4}) {
    for (int l : {1, 3}) {
      const auto t = intercept_detection_frequency(radices_for(d), l, 20000, 99 + static_cast<std::uint64_t>(d * 10 + l), 2);
      EXPECT_TRUE(within_three_sigma(t.detected, t.trials, detection_probability_intercept(d, l)))
          << d << " " << l << " " << t.frequency();
    }
  }
}

TEST(InterceptResend, FrequencyIndependentOfWorkers) {
  const auto a = intercept_detection_frequency({2, 2}, 2, 3000, 5, 1);
  const auto b = intercept_detection_frequency({2, 2}, 2, 3000, 5, 4);
  EXPECT_EQ(a.detected, b.detected);
}

TEST(EntangleMeasure, CnotShape) {
  const Matrix u = entangle_measure_unitary(3);
  EXPECT_TRUE(u.is_unitary());
  EXPECT_EQ(std::abs(u(2 * 3 + 0, 2 * 3 + 1)), 1.0);  // |2>|1> -> |2>|0>
  EXPECT_THROW(entangle_measure_unitary(1), Error);
}

TEST(EntangleMeasure, FourierErrorIsOneMinusOneOverD) {
  for (int d : {2, 3, 4}) {
    const auto st = apply_joint(entangle_measure_unitary(d), JointState::product({fourier_ket(d, 1), Ket::basis_state(d, 0)}), {0, 1});
    EXPECT_NEAR(readout_error(st, Basis::fourier(d), 1), 1.0 - 1.0 / d, 1e-12);
    const auto cs = apply_joint(entangle_measure_unitary(d), JointState::product({Ket::basis_state(d, d - 1), Ket::basis_state(d, 0)}), {0, 1});
    EXPECT_NEAR(readout_error(cs, Basis::computational(d), d - 1), 0.0, 1e-12);
  }
  // layered Fourier on a ququart
  const auto lb = Basis::layered(BasisKind::fourier, {2, 2});
  const auto st = apply_joint(entangle_measure_unitary(4), JointState::product({lb.vector(2), Ket::basis_state(4, 0)}), {0, 1});
  EXPECT_NEAR(readout_error(st, lb, 2), 0.75, 1e-12);
}

class CloningGrid : public ::testing::TestWithParam<int> {};

TEST_P(CloningGrid, IsometryAndErrorRates) {
  const int d = GetParam();
  const auto rad = radices_for(d);
  const Basis comp = Basis::layered(BasisKind::computational, rad);
  const Basis four = Basis::layered(BasisKind::fourier, rad);
  for (int k = 0; k <= 20; ++k) {
    const double F = k / 20.0;
    const Matrix V = cloning_isometry(rad, F);
    ASSERT_EQ(V.rows(), d * d * d);
    ASSERT_EQ(V.cols(), d);
    EXPECT_LT(V.isometry_error(), 1e-12) << "d=" << d << " F=" << F;
    const double D = 1.0 - F;
    for (int s = 0; s < d; ++s) {
      EXPECT_NEAR(readout_error(apply_isometry(V, comp.vector(s)), comp, s), D, 1e-10) << "comp d=" << d << " F=" << F;
      EXPECT_NEAR(readout_error(apply_isometry(V, four.vector(s)), four, s), D, 1e-10) << "fourier d=" << d << " F=" << F;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Dims, CloningGrid, ::testing::Values(2, 3, 4, 6));

TEST(Cloning, FidelityOneLeavesTravelerUntouched) {
  for (int d : {2, 4}) {
    const Matrix V = cloning_isometry(radices_for(d), 1.0);
    for (int s = 0; s < d; ++s) {
      const auto st = apply_isometry(V, Ket::basis_state(d, s));
      const auto p = subsystem_probabilities(st, 0, Basis::computational(d));
      EXPECT_NEAR(p[static_cast<std::size_t>(s)], 1.0, 1e-12);
    }
  }
}

TEST(Cloning, RejectsBadArguments) {
  EXPECT_THROW(cloning_isometry(2, 1.5), Error);
  EXPECT_THROW(cloning_isometry(2, -0.1), Error);
  EXPECT_THROW(cloning_isometry(std::vector<int>{1}, 0.5), Error);
}

TEST(Cloning, CompletedUnitaryExtendsIsometry) {
  const Matrix V = cloning_isometry({2, 2}, 0.8);
  const Unitary U = complete_isometry(V);
  ASSERT_EQ(U.dim(), 64);
  const int a = 16;
  for (int s = 0; s < 4; ++s)
    for (int r = 0; r < 64; ++r) EXPECT_LT(std::abs(U.matrix()(r, s * a) - V(r, s)), 1e-12);
}

TEST(TwoWay, ComponentSumRules) {
  RandomStream rng(21);
  for (int d : {2, 4}) {
    const Unitary f(random_unitary(d * d, rng));
    const Unitary b(random_unitary(d * d, rng));
    const auto c = two_way_components(f, b, d);
    ASSERT_EQ(c.ancilla_dim, d);
    for (int i = 0; i < d; ++i) {
      double total = 0.0;
      for (int j = 0; j < d; ++j) total += detail::squared_norm(c.E[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
    // the measure-resend probabilities sum to one over Bob's and Alice's outcomes
    for (int i = 0; i < d; ++i) {
      double total = 0.0;
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) total += analytic_two_way_detection(c, MeasureResendScenario{i, j, k});
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(TwoWay, IdentityLegsAreUndetectable) {
  for (int d : {2, 4}) {
    const Unitary id(Matrix::identity(d * d));
    const auto c = two_way_components(id, id, d);
    const Basis lb = Basis::layered(BasisKind::fourier, radices_for(d));
    for (int i = 0; i < d; ++i) {
      EXPECT_NEAR(analytic_two_way_detection(c, ReflectComputationalScenario{i}), 0.0, 1e-12);
      EXPECT_NEAR(analytic_two_way_detection(c, ReflectBasisScenario{i, lb}), 0.0, 1e-12);
      EXPECT_NEAR(analytic_two_way_detection(c, MeasureResendScenario{i, i, i}), 1.0, 1e-12);
    }
  }
}

TEST(TwoWay, CnotForwardScenarios) {
  for (int d : {2, 4}) {
    const Unitary cnot(entangle_measure_unitary(d));
    const Unitary id(Matrix::identity(d * d));
    const auto c = two_way_components(cnot, id, d);
    const Basis lb = Basis::layered(BasisKind::fourier, radices_for(d));
    for (int i = 0; i < d; ++i) {
      EXPECT_NEAR(analytic_two_way_detection(c, ReflectComputationalScenario{i}), 0.0, 1e-10);
      EXPECT_NEAR(analytic_two_way_detection(c, ReflectBasisScenario{i, lb}), 1.0 - 1.0 / d, 1e-10);
      EXPECT_NEAR(analytic_two_way_detection(c, MeasureResendScenario{i, i, i}), 1.0, 1e-10);
      EXPECT_NEAR(analytic_two_way_detection(c, MeasureResendScenario{i, (i + 1) % d, (i + 1) % d}), 0.0, 1e-10);
    }
  }
}

TEST(TwoWay, ScenarioRangeChecks) {
  const Unitary id(Matrix::identity(4));
  const auto c = two_way_components(id, id, 2);
  EXPECT_THROW(analytic_two_way_detection(c, ReflectComputationalScenario{2}), Error);
  EXPECT_THROW(analytic_two_way_detection(c, ReflectBasisScenario{0, Basis::fourier(3)}), Error);
  EXPECT_THROW(analytic_two_way_detection(c, MeasureResendScenario{0, 0, 5}), Error);
}

TEST(LegUnitary, Presets) {
  EXPECT_TRUE(leg_unitary(LegOperator{"identity", {}}, 2, 3).matrix().is_unitary());
  EXPECT_EQ(leg_unitary(LegOperator{"cnot", {}}, 4, 4).dim(), 16);
  EXPECT_THROW(leg_unitary(LegOperator{"cnot", {}}, 4, 2), ConfigError);
  EXPECT_THROW(leg_unitary(LegOperator{"random:x", {}}, 2, 2), ConfigError);
  EXPECT_THROW(leg_unitary(LegOperator{"swap", {}}, 2, 2), ConfigError);
  // random presets are reproducible and seed-dependent
  const auto a = leg_unitary(LegOperator{"random:7", {}}, 2, 2).matrix();
  const auto b = leg_unitary(LegOperator{"random:7", {}}, 2, 2).matrix();
  const auto c = leg_unitary(LegOperator{"random:8", {}}, 2, 2).matrix();
  EXPECT_EQ(a(1, 2), b(1, 2));
  EXPECT_NE(a(1, 2), c(1, 2));
  Matrix bad = Matrix::identity(4);
  bad(0, 0) = 2.0;
  EXPECT_THROW(leg_unitary(LegOperator{"identity", bad}, 2, 2), ConfigError);
  EXPECT_THROW(leg_unitary(LegOperator{"identity", Matrix::identity(3)}, 2, 2), ConfigError);
}

TEST(Adversary, TargetResolution) {
  const auto plan = compile_network(illustrative_network());
  AttackSpec s;
  s.kind = AttackKind::cloning;
  s.target = "Bob2";
  s.fidelity = 0.9;
  EXPECT_EQ(Adversary(s, plan).target_party(), 1);
  s.target = "Alice";
  EXPECT_THROW(Adversary(s, plan), ConfigError);
  s.target = "Carol";
  EXPECT_THROW(Adversary(s, plan), ConfigError);
  s.target = "Bob1";
  s.fidelity = 1.2;
  EXPECT_THROW(Adversary(s, plan), ConfigError);
  EXPECT_FALSE(Adversary().active());
  EXPECT_EQ(Adversary().target_party(), -1);
}

TEST(Adversary, LeavesOtherPartiesAlone) {
  const auto plan = compile_network(illustrative_network());
  const Adversary adv(parse_attack("intercept_resend:Bob1"), plan);
  RandomStream rng(1);
  EveRecord rec;
  const auto st = adv.forward(1, fourier_ket(2, 1), rng, rec);
  EXPECT_FALSE(rec.attacked);
  EXPECT_EQ(st.subsystem_count(), 1);
  adv.forward(0, fourier_ket(4, 1), rng, rec);
  EXPECT_TRUE(rec.attacked);
  EXPECT_TRUE(rec.basis == 1 || rec.basis == 2);
  EXPECT_GE(rec.outcome, 0);
}

TEST(Adversary, PartialAttackRate) {
  const auto plan = compile_network(two_party_network());
  const Adversary adv(parse_attack("entangle_measure:Bob:0.3"), plan);
  RandomStream rng(4);
  std::size_t hit = 0;
  const std::size_t n = 20000;
  for (std::size_t i = 0; i < n; ++i) {
    EveRecord rec;
    adv.forward(0, Ket::basis_state(2, 0), rng, rec);
    if (rec.attacked) ++hit;
  }
  EXPECT_TRUE(within_three_sigma(hit, n, 0.3));
}

TEST(Adversary, TwoWayAppendsBothAncillas) {
  const auto plan = compile_network(two_party_network());
  const Adversary adv(parse_attack("two_way:Bob:cnot:cnot"), plan);
  RandomStream rng(2);
  EveRecord rec;
  auto st = adv.forward(0, Ket::basis_state(2, 1), rng, rec);
  EXPECT_EQ(st.subsystem_count(), 2);
  st = adv.backward(0, st, rec);
  EXPECT_EQ(st.subsystem_count(), 3);
  adv.finish(st, rng, rec);
  EXPECT_EQ(rec.outcome, 3);  // both ancillas read 1
}
