#pragma once

// Layered semi-quantum protocol: receivers either measure computationally
// and resend, or reflect untouched; the hub re-measures everything that
// comes back in its preparation basis.

#include <cmath>
#include <cstdint>
#include <vector>

#include "lqkd/analysis.hpp"
#include "lqkd/attacks.hpp"
#include "lqkd/engine_common.hpp"
#include "lqkd/parallel.hpp"
#include "lqkd/resgen.hpp"
#include "lqkd/rng.hpp"

namespace lqkd {

inline constexpr double kDefaultDelta = 0.25;

enum class ClassicalAction { measure_resend = 0, reflect = 1 };

/// ceil(8 n (1 + delta)); products within 1e-9 of an integer are snapped to
/// it first so that floating-point noise cannot add a round.
inline std::size_t sqkd_round_count(std::size_t n, double delta) {
  const double x = 8.0 * static_cast<double>(n) * (1.0 + delta);
  const double near = std::round(x);
  if (std::abs(x - near) <= 1e-9 * std::max(1.0, near)) return static_cast<std::size_t>(near);
  return static_cast<std::size_t>(std::ceil(x));
}

struct SqkdConfig {
  Network network;
  bool truncated = false;
  std::size_t key_length = 256;
  double delta = kDefaultDelta;
  std::uint64_t seed = 1;
  AttackSpec attack;
  unsigned threads = 0;

  std::size_t rounds() const { return sqkd_round_count(key_length, delta); }

  void check() const {
    if (key_length < 1) throw ConfigError("key_length", "must be at least 1");
    if (!(delta > 0.0)) throw ConfigError("delta", "must be positive");
    attack.check();
  }
};

struct SqkdRound {
  std::size_t index = 0;
  int set = 1;
  int state = 0;
  std::vector<ClassicalAction> actions;  // per party
  std::vector<int> bob_outcomes;         // per party, -1 when reflected
  std::vector<int> alice_outcomes;       // hub's return readout per subsystem
  std::vector<int> retained;             // layers yielding a key symbol
  EveRecord eve;

  bool reflected(std::size_t i) const { return actions[i] == ClassicalAction::reflect; }
};

/// Layers whose receivers all measured on a computational-set round.
inline std::vector<int> sift_sqkd(const ResourcePlan& plan, const SqkdRound& rd) {
  std::vector<int> out;
  if (rd.set != 1) return out;
  for (std::size_t r = 0; r < plan.layer_count(); ++r) {
    bool ok = true;
    for (int i : plan.layer_parties(static_cast<int>(r)))
      if (rd.reflected(static_cast<std::size_t>(i))) ok = false;
    if (ok) out.push_back(static_cast<int>(r));
  }
  return out;
}

inline KeyMaterial extract_sqkd_keys(const ResourcePlan& plan, const std::vector<SqkdRound>& transcript) {
  KeyMaterial km = detail::empty_keys(plan);
  for (const auto& rd : transcript) {
    const auto& st = plan.set(rd.set).states[static_cast<std::size_t>(rd.state)];
    for (int r : rd.retained)
      detail::push_key_symbol(plan, km.layers[static_cast<std::size_t>(r)], st, rd.index,
                              [&](int i) { return rd.bob_outcomes[static_cast<std::size_t>(i)]; });
  }
  return km;
}

/// Checks use reflect rounds only: the hub's readout of a reflected
/// subsystem must equal what it sent.
inline Report analyze_sqkd(const ResourcePlan& plan, const std::vector<SqkdRound>& transcript, const Adversary& adv = {},
                           const char* protocol = "sqkd") {
  Report rep;
  rep.protocol = protocol;
  rep.rounds = transcript.size();
  detail::init_report(plan, rep);
  std::vector<std::size_t> retained(plan.layer_count(), 0);

  for (const auto& rd : transcript) {
    for (int r : rd.retained) ++retained[static_cast<std::size_t>(r)];
    const auto& st = plan.set(rd.set).states[static_cast<std::size_t>(rd.state)];
    std::vector<bool> wrong(plan.parties.size(), false);
    for (std::size_t i = 0; i < plan.parties.size(); ++i) {
      auto& ps = rep.participants[i];
      if (rd.reflected(i)) {
        ++ps.checked;
        wrong[i] = rd.alice_outcomes[i] != st.local_values[i];
        if (wrong[i]) ++ps.mismatches;
      } else if (rd.set == 1) {
        ++ps.measured_compared;
        if (rd.alice_outcomes[i] != rd.bob_outcomes[i]) ++ps.measured_mismatches;
      }
    }
    for (std::size_t r = 0; r < plan.layer_count(); ++r) {
      bool any = false, bad = false;
      for (int i : plan.layer_parties(static_cast<int>(r))) {
        if (!rd.reflected(static_cast<std::size_t>(i))) continue;
        any = true;
        bad = bad || wrong[static_cast<std::size_t>(i)];
      }
      if (!any) continue;
      ++rep.layers[r].checked;
      if (bad) ++rep.layers[r].mismatches;
    }
  }
  for (std::size_t r = 0; r < plan.layer_count(); ++r) rep.layers[r].retained = retained[r];

  const KeyMaterial keys = extract_sqkd_keys(plan, transcript);
  detail::fill_key_stats(
      plan, keys, transcript.size(), retained, adv, rep,
      [&](std::size_t t, int i) {
        const auto& rd = transcript[t];
        const auto ui = static_cast<std::size_t>(i);
        return rd.reflected(ui) ? -1 : rd.bob_outcomes[ui];
      },
      [&](std::size_t t) -> const EveRecord& { return transcript[t].eve; });
  detail::finish_report(plan, rep);
  return rep;
}

struct SqkdRun {
  ResourcePlan plan;
  std::vector<SqkdRound> transcript;
  KeyMaterial keys;
  Report report;
};

inline std::vector<SqkdRound> simulate_sqkd(const ResourcePlan& plan, const SqkdConfig& cfg, const Adversary& adv) {
  cfg.check();
  std::vector<std::vector<Basis>> bases;
  for (const auto& ps : plan.parties) bases.push_back({ps.basis(1), ps.basis(2)});
  const int n_states = static_cast<int>(plan.state_count());
  const std::size_t rounds = cfg.rounds();

  std::vector<SqkdRound> transcript(rounds);
  parallel_for(rounds, worker_count(cfg.threads), [&](std::size_t t) {
    RandomStream rng = round_stream(cfg.seed, t, StreamTag::round);
    SqkdRound& rd = transcript[t];
    rd.index = t;
    rd.set = 1 + rng.below(2);
    rd.state = rng.below(n_states);
    for (std::size_t i = 0; i < plan.parties.size(); ++i)
      rd.actions.push_back(rng.below(2) == 0 ? ClassicalAction::measure_resend : ClassicalAction::reflect);
    const auto& st = plan.set(rd.set).states[static_cast<std::size_t>(rd.state)];
    for (std::size_t i = 0; i < plan.parties.size(); ++i) {
      const int party = static_cast<int>(i);
      JointState travel = adv.forward(party, st.kets[i], rng, rd.eve);
      int bob = -1;
      if (!rd.reflected(i)) {
        // the fresh computational state Bob resends equals the collapsed one
        auto m = measure_joint(travel, 0, bases[i][0], rng);
        bob = m.outcome;
        travel = std::move(m.post);
      }
      travel = adv.backward(party, travel, rd.eve);
      auto back = measure_joint(travel, 0, bases[i][static_cast<std::size_t>(rd.set - 1)], rng);
      if (party == adv.target_party()) adv.finish(back.post, rng, rd.eve);
      rd.bob_outcomes.push_back(bob);
      rd.alice_outcomes.push_back(back.outcome);
    }
    rd.retained = sift_sqkd(plan, rd);
  });
  return transcript;
}

inline SqkdRun run_sqkd(const SqkdConfig& cfg) {
  cfg.check();
  SqkdRun run;
  run.plan = compile_plan(cfg.network, cfg.truncated);
  const Adversary adv(cfg.attack, run.plan);
  run.transcript = simulate_sqkd(run.plan, cfg, adv);
  run.keys = extract_sqkd_keys(run.plan, run.transcript);
  run.report = analyze_sqkd(run.plan, run.transcript, adv);
  return run;
}

/// Two-party baseline: one classical receiver, states {|0>, |1>, |+>, |->},
/// key from rounds where the receiver measured and the hub sent |0> or |1>.
/// The transcript uses the two-party network's labels (set 1 = {|0>, |1>}).
inline SqkdRun run_boyer_baseline(std::size_t n, double delta, std::uint64_t seed, const AttackSpec& attack = {},
                                  unsigned threads = 0) {
  SqkdConfig cfg;
  cfg.network = two_party_network(2);
  cfg.key_length = n;
  cfg.delta = delta;
  cfg.seed = seed;
  cfg.attack = attack;
  cfg.check();

  SqkdRun run;
  run.plan = compile_network(cfg.network);
  const Adversary adv(cfg.attack, run.plan);
  const Ket states[4] = {Ket::basis_state(2, 0), Ket::basis_state(2, 1), fourier_ket(2, 0), fourier_ket(2, 1)};
  const Basis z = Basis::computational(2);
  const Basis x = Basis::fourier(2);

  const std::size_t rounds = cfg.rounds();
  run.transcript.resize(rounds);
  parallel_for(rounds, worker_count(threads), [&](std::size_t t) {
    RandomStream rng = round_stream(seed, t, StreamTag::round);
    SqkdRound& rd = run.transcript[t];
    rd.index = t;
    const int which = rng.below(4);
    rd.set = which < 2 ? 1 : 2;
    rd.state = which % 2;
    rd.actions = {rng.below(2) == 0 ? ClassicalAction::measure_resend : ClassicalAction::reflect};
    JointState travel = adv.forward(0, states[which], rng, rd.eve);
    int bob = -1;
    if (!rd.reflected(0)) {
      auto m = measure_joint(travel, 0, z, rng);
      bob = m.outcome;
      travel = std::move(m.post);
    }
    travel = adv.backward(0, travel, rd.eve);
    auto back = measure_joint(travel, 0, which < 2 ? z : x, rng);
    adv.finish(back.post, rng, rd.eve);
    rd.bob_outcomes = {bob};
    rd.alice_outcomes = {back.outcome};
    if (rd.set == 1 && bob >= 0) rd.retained = {0};
  });
  run.keys = extract_sqkd_keys(run.plan, run.transcript);
  run.report = analyze_sqkd(run.plan, run.transcript, adv, "boyer");
  return run;
}

}  // namespace lqkd
