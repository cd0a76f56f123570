#pragma once

// Prepare-and-measure layered QKD: the hub sends one separable state per
// round, every receiver measures in a random basis, layers whose receivers
// all matched the hub's set are kept.

#include <cstdint>
#include <vector>

#include "lqkd/analysis.hpp"
#include "lqkd/attacks.hpp"
#include "lqkd/engine_common.hpp"
#include "lqkd/parallel.hpp"
#include "lqkd/resgen.hpp"
#include "lqkd/rng.hpp"

namespace lqkd {

inline constexpr double kDefaultCheckFraction = 0.1;

struct QkdConfig {
  Network network;
  bool truncated = false;
  std::size_t rounds = 10000;
  double check_fraction = kDefaultCheckFraction;
  std::uint64_t seed = 1;
  AttackSpec attack;
  unsigned threads = 0;  // 0 = hardware concurrency (capped by LQKD_THREADS)

  void check() const {
    if (rounds < 1) throw ConfigError("rounds", "must be at least 1");
    if (!(check_fraction > 0.0 && check_fraction < 1.0)) throw ConfigError("check_fraction", "must lie in (0, 1)");
    attack.check();
  }
};

struct QkdRound {
  std::size_t index = 0;
  int set = 1;                // 1 or 2
  int state = 0;              // index into the set
  std::vector<int> bases;     // per party, 1 or 2
  std::vector<int> outcomes;  // per party
  std::vector<int> retained;  // layer ids
  bool check = false;
  EveRecord eve;
};

/// Layers whose receivers all measured in the basis of the hub's set.
inline std::vector<int> sift(const ResourcePlan& plan, const QkdRound& round) {
  std::vector<int> out;
  for (std::size_t r = 0; r < plan.layer_count(); ++r) {
    bool ok = true;
    for (int i : plan.layer_parties(static_cast<int>(r)))
      if (round.bases[static_cast<std::size_t>(i)] != round.set) ok = false;
    if (ok) out.push_back(static_cast<int>(r));
  }
  return out;
}

/// Key symbols from retained rounds not spent on the check.
inline KeyMaterial extract_keys(const ResourcePlan& plan, const std::vector<QkdRound>& transcript) {
  KeyMaterial km = detail::empty_keys(plan);
  for (const auto& rd : transcript) {
    if (rd.check) continue;
    const auto& st = plan.set(rd.set).states[static_cast<std::size_t>(rd.state)];
    for (int r : rd.retained)
      detail::push_key_symbol(plan, km.layers[static_cast<std::size_t>(r)], st, rd.index,
                              [&](int i) { return rd.outcomes[static_cast<std::size_t>(i)]; });
  }
  return km;
}

inline Report analyze_qkd(const ResourcePlan& plan, const std::vector<QkdRound>& transcript, const Adversary& adv = {}) {
  Report rep;
  rep.protocol = "qkd";
  rep.rounds = transcript.size();
  detail::init_report(plan, rep);
  std::vector<std::size_t> retained(plan.layer_count(), 0);

  for (const auto& rd : transcript) {
    for (int r : rd.retained) ++retained[static_cast<std::size_t>(r)];
    if (!rd.check) continue;
    const auto& st = plan.set(rd.set).states[static_cast<std::size_t>(rd.state)];
    std::vector<bool> wrong(plan.parties.size(), false);
    for (std::size_t i = 0; i < plan.parties.size(); ++i) {
      if (rd.bases[i] != rd.set) continue;
      ++rep.participants[i].checked;
      wrong[i] = rd.outcomes[i] != st.local_values[i];
      if (wrong[i]) ++rep.participants[i].mismatches;
    }
    for (int r : rd.retained) {
      auto& ls = rep.layers[static_cast<std::size_t>(r)];
      ++ls.checked;
      for (int i : plan.layer_parties(r))
        if (wrong[static_cast<std::size_t>(i)]) {
          ++ls.mismatches;
          break;
        }
    }
  }
  for (std::size_t r = 0; r < plan.layer_count(); ++r) rep.layers[r].retained = retained[r];

  const KeyMaterial keys = extract_keys(plan, transcript);
  detail::fill_key_stats(
      plan, keys, transcript.size(), retained, adv, rep,
      [&](std::size_t t, int i) {
        const auto& rd = transcript[t];
        const auto ui = static_cast<std::size_t>(i);
        return (rd.bases[ui] - 1) * plan.parties[ui].dim + rd.outcomes[ui];
      },
      [&](std::size_t t) -> const EveRecord& { return transcript[t].eve; });
  detail::finish_report(plan, rep);
  return rep;
}

struct QkdRun {
  ResourcePlan plan;
  std::vector<QkdRound> transcript;
  KeyMaterial keys;
  Report report;
};

/// Simulates the transcript only. Round t draws from its own derived
/// streams, so the result does not depend on the worker count.
inline std::vector<QkdRound> simulate_qkd(const ResourcePlan& plan, const QkdConfig& cfg, const Adversary& adv) {
  cfg.check();
  std::vector<std::vector<Basis>> bases;
  for (const auto& ps : plan.parties) bases.push_back({ps.basis(1), ps.basis(2)});
  const int n_states = static_cast<int>(plan.state_count());

  std::vector<QkdRound> transcript(cfg.rounds);
  parallel_for(cfg.rounds, worker_count(cfg.threads), [&](std::size_t t) {
    RandomStream rng = round_stream(cfg.seed, t, StreamTag::round);
    QkdRound& rd = transcript[t];
    rd.index = t;
    rd.set = 1 + rng.below(2);
    rd.state = rng.below(n_states);
    rd.bases.resize(plan.parties.size());
    for (auto& b : rd.bases) b = 1 + rng.below(2);
    const auto& st = plan.set(rd.set).states[static_cast<std::size_t>(rd.state)];
    for (std::size_t i = 0; i < plan.parties.size(); ++i) {
      const Basis& basis = bases[i][static_cast<std::size_t>(rd.bases[i] - 1)];
      if (static_cast<int>(i) != adv.target_party()) {
        rd.outcomes.push_back(measure(st.kets[i], basis, rng).outcome);
        continue;
      }
      JointState travel = adv.forward(static_cast<int>(i), st.kets[i], rng, rd.eve);
      auto m = measure_joint(travel, 0, basis, rng);
      rd.outcomes.push_back(m.outcome);
      adv.finish(m.post, rng, rd.eve);
    }
    rd.retained = sift(plan, rd);
    RandomStream crng = round_stream(cfg.seed, t, StreamTag::check);
    rd.check = !rd.retained.empty() && crng.bernoulli(cfg.check_fraction);
  });
  return transcript;
}

inline QkdRun run_qkd(const QkdConfig& cfg) {
  cfg.check();
  QkdRun run;
  run.plan = compile_plan(cfg.network, cfg.truncated);
  const Adversary adv(cfg.attack, run.plan);
  run.transcript = simulate_qkd(run.plan, cfg, adv);
  run.keys = extract_keys(run.plan, run.transcript);
  run.report = analyze_qkd(run.plan, run.transcript, adv);
  return run;
}

}  // namespace lqkd
