#pragma once

// Pieces shared by the one-way and two-way protocol engines.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lqkd/analysis.hpp"
#include "lqkd/attacks.hpp"
#include "lqkd/key_material.hpp"
#include "lqkd/resgen.hpp"

namespace lqkd {

/// Compiles either the general construction or the truncated (3, 2) one.
inline ResourcePlan compile_plan(const Network& net, bool truncated) {
  return truncated ? compile_truncated(net) : compile_network(net);
}

namespace detail {

inline KeyMaterial empty_keys(const ResourcePlan& plan) {
  KeyMaterial km;
  for (std::size_t r = 0; r < plan.layer_count(); ++r) {
    LayerKey k;
    k.layer = static_cast<int>(r);
    k.alphabet = plan.alphabet[r];
    k.holders.push_back(plan.network.hub);
    for (int i : plan.layer_parties(static_cast<int>(r))) k.holders.push_back(plan.parties[static_cast<std::size_t>(i)].participant);
    k.symbols.resize(k.holders.size());
    km.layers.push_back(std::move(k));
  }
  return km;
}

/// Appends one key position for layer r unless the hub's state carries no
/// symbol for it. `outcome(i)` is party i's outcome.
template <class OutcomeFn>
void push_key_symbol(const ResourcePlan& plan, LayerKey& key, const SeparableState& st, std::size_t round, OutcomeFn&& outcome) {
  const int hub_symbol = st.layer_symbols[static_cast<std::size_t>(key.layer)];
  if (hub_symbol < 0) return;
  key.symbols[0].push_back(hub_symbol);
  for (std::size_t h = 1; h < key.holders.size(); ++h) {
    const int i = plan.party_index(key.holders[h]);
    const int o = outcome(i);
    key.symbols[h].push_back(o < 0 ? -1 : plan.symbol(static_cast<std::size_t>(i), o, key.layer));
  }
  key.rounds.push_back(round);
}

/// Fills key rates, agreement and information estimates. `view(round, i)`
/// is what non-member party i saw in that round; `eve(round)` her record.
template <class ViewFn, class EveFn>
void fill_key_stats(const ResourcePlan& plan, const KeyMaterial& keys, std::size_t rounds,
                    const std::vector<std::size_t>& retained, const Adversary& adv, Report& rep, ViewFn&& view,
                    EveFn&& eve) {
  const auto rates = key_rate_report(keys, rounds, retained);
  for (std::size_t r = 0; r < keys.layers.size(); ++r) {
    const LayerKey& k = keys.layers[r];
    LayerStats& ls = rep.layers[r];
    ls.rate = rates[r];
    ls.agreement = k.agrees();
    if (k.length() == 0) continue;
    for (std::size_t h = 1; h < k.holders.size(); ++h)
      ls.mi_member[plan.network.participants[static_cast<std::size_t>(k.holders[h])]] = empirical_mi(k.symbols[0], k.symbols[h]);
    for (std::size_t i = 0; i < plan.parties.size(); ++i) {
      const ParticipantId p = plan.parties[i].participant;
      if (plan.network.layers[r].contains(p)) continue;
      std::vector<int> seen;
      seen.reserve(k.length());
      for (std::size_t pos = 0; pos < k.length(); ++pos) seen.push_back(view(k.rounds[pos], static_cast<int>(i)));
      ls.mi_outsider[plan.network.participants[static_cast<std::size_t>(p)]] = empirical_mi(k.symbols[0], seen);
    }
  }

  if (!adv.active()) return;
  rep.eve.kind = to_string(adv.spec().kind);
  rep.eve.target = adv.spec().target;
  for (std::size_t t = 0; t < rounds; ++t)
    if (eve(t).attacked) ++rep.eve.attacked_rounds;
  const ParticipantId target = plan.parties[static_cast<std::size_t>(adv.target_party())].participant;
  for (std::size_t r = 0; r < keys.layers.size(); ++r) {
    if (!plan.network.layers[r].contains(target)) continue;
    const LayerKey& k = keys.layers[r];
    std::vector<int> xs, ys;
    for (std::size_t pos = 0; pos < k.length(); ++pos) {
      const EveRecord& e = eve(k.rounds[pos]);
      if (!e.attacked) continue;
      xs.push_back(k.symbols[0][pos]);
      ys.push_back(e.outcome * 3 + e.basis);
    }
    rep.eve.info_bits[plan.network.layers[r].name] = xs.empty() ? 0.0 : empirical_mi(xs, ys);
  }
}

inline void init_report(const ResourcePlan& plan, Report& rep) {
  for (const auto& ps : plan.parties) {
    ParticipantStats s;
    s.participant = ps.participant;
    s.name = plan.network.participants[static_cast<std::size_t>(ps.participant)];
    rep.participants.push_back(s);
  }
  for (std::size_t r = 0; r < plan.layer_count(); ++r) {
    LayerStats ls;
    ls.layer = static_cast<int>(r);
    ls.name = plan.network.layers[r].name;
    ls.alphabet = plan.alphabet[r];
    rep.layers.push_back(ls);
  }
}

inline void finish_report(const ResourcePlan& plan, Report& rep) {
  std::vector<ErrorCount> counts;
  for (auto& p : rep.participants) {
    finish_participant(p);
    counts.push_back({p.participant, p.checked, p.mismatches});
    if (p.mismatches > 0) rep.abort = true;
  }
  for (auto& l : rep.layers)
    l.qber = l.checked == 0 ? 0.0 : static_cast<double>(l.mismatches) / static_cast<double>(l.checked);
  rep.pinpoint = pinpoint_eve(plan.network, counts);
}

}  // namespace detail
}  // namespace lqkd
