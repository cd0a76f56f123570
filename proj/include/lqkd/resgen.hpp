#pragma once

// Compilation of a layered network into the two prepare sets of separable
// states, plus the mixed-radix digit codec used for key extraction.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lqkd/error.hpp"
#include "lqkd/nettop.hpp"
#include "lqkd/qmath.hpp"

namespace lqkd {

/// Mixed-radix place-value codec; digit 0 is the most significant.
class DigitCodec {
 public:
  explicit DigitCodec(std::vector<int> radices) : radices_(std::move(radices)) {
    if (radices_.empty()) throw Error("DigitCodec: no radices");
    for (int r : radices_) {
      if (r < 2) throw Error("DigitCodec: radix must be at least 2");
      if (size_ > (std::uint64_t{1} << 62) / static_cast<std::uint64_t>(r)) throw Error("DigitCodec: range overflow");
      size_ *= static_cast<std::uint64_t>(r);
    }
  }

  const std::vector<int>& radices() const { return radices_; }

  /// Number of representable values (product of the radices).
  std::uint64_t size() const { return size_; }

  std::uint64_t encode(std::span<const int> digits) const {
    if (digits.size() != radices_.size()) throw Error("DigitCodec::encode: wrong digit count");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < radices_.size(); ++i) {
      if (digits[i] < 0 || digits[i] >= radices_[i]) throw Error("DigitCodec::encode: digit out of range");
      v = v * static_cast<std::uint64_t>(radices_[i]) + static_cast<std::uint64_t>(digits[i]);
    }
    return v;
  }

  std::uint64_t encode(std::initializer_list<int> digits) const {
    const std::vector<int> v(digits);
    return encode(std::span<const int>(v));
  }

  std::vector<int> decode(std::uint64_t value) const {
    if (value >= size_) throw Error("DigitCodec::decode: value out of range");
    std::vector<int> digits(radices_.size());
    for (std::size_t i = radices_.size(); i-- > 0;) {
      digits[i] = static_cast<int>(value % static_cast<std::uint64_t>(radices_[i]));
      value /= static_cast<std::uint64_t>(radices_[i]);
    }
    return digits;
  }

 private:
  std::vector<int> radices_;
  std::uint64_t size_ = 1;
};

/// The two reference sets of one layer: symbol m maps to |m> (set 1) or the
/// Fourier ket |m'> (set 2) on every non-hub member.
struct ReferenceSets {
  int layer = 0;
  int ref_dim = 2;
  std::vector<ParticipantId> members;   // non-hub members
  std::vector<std::vector<Ket>> set1;   // [symbol][member]
  std::vector<std::vector<Ket>> set2;   // [symbol][member]
};

inline ReferenceSets reference_sets(const Network& net, int layer) {
  if (layer < 0 || layer >= static_cast<int>(net.layers.size())) throw Error("reference_sets: no such layer");
  const Layer& l = net.layers[static_cast<std::size_t>(layer)];
  if (l.ref_dim < 2) throw Error("reference_sets: ref_dim must be at least 2");
  ReferenceSets out;
  out.layer = layer;
  out.ref_dim = l.ref_dim;
  for (ParticipantId m : l.members)
    if (m != net.hub) out.members.push_back(m);
  for (int sym = 0; sym < l.ref_dim; ++sym) {
    out.set1.emplace_back(out.members.size(), Ket::basis_state(l.ref_dim, sym));
    out.set2.emplace_back(out.members.size(), fourier_ket(l.ref_dim, sym));
  }
  return out;
}

/// A receiver's local system: one mixed-radix digit per layer it belongs to.
struct PartySpace {
  ParticipantId participant = 0;
  std::vector<int> layers;
  std::vector<int> radices;
  int dim = 0;

  /// Measurement basis matching prepare set `set_id` (1 computational, 2 Fourier).
  Basis basis(int set_id) const {
    return Basis::layered(set_id == 1 ? BasisKind::computational : BasisKind::fourier, radices);
  }
};

/// One product state of a prepare set.
struct SeparableState {
  std::vector<int> layer_symbols;  // hub's key symbol per layer, -1 = none
  std::vector<int> local_values;   // per party: index of its basis ket
  std::vector<Ket> kets;           // per party
};

struct PrepareSet {
  int set_id = 1;
  std::vector<SeparableState> states;
};

/// Everything the protocol engines need to run on one network.
struct ResourcePlan {
  Network network;
  bool truncated = false;
  std::vector<PartySpace> parties;  // receivers in id order
  std::vector<int> alphabet;        // key alphabet size per layer
  PrepareSet s1;
  PrepareSet s2;
  /// key_table[party][outcome][layer]: key symbol, or -1 when the outcome
  /// yields none for that layer (or the party is not a member).
  std::vector<std::vector<std::vector<int>>> key_table;

  std::size_t state_count() const { return s1.states.size(); }
  std::size_t layer_count() const { return network.layers.size(); }

  const PrepareSet& set(int id) const { return id == 1 ? s1 : s2; }

  /// Index into `parties` for a participant, or -1 for the hub.
  int party_index(ParticipantId p) const {
    for (std::size_t i = 0; i < parties.size(); ++i)
      if (parties[i].participant == p) return static_cast<int>(i);
    return -1;
  }

  /// Party indices of the receivers in `layer`.
  std::vector<int> layer_parties(int layer) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < parties.size(); ++i)
      if (network.layers[static_cast<std::size_t>(layer)].contains(parties[i].participant)) out.push_back(static_cast<int>(i));
    return out;
  }

  int symbol(std::size_t party, int outcome, int layer) const {
    return key_table[party][static_cast<std::size_t>(outcome)][static_cast<std::size_t>(layer)];
  }
};

/// Tensors the per-layer reference sets and fuses each receiver's per-layer
/// factors into one qudit. State t of either set encodes the layer-symbol
/// tuple decode(t) (first-declared layer most significant); set 2 pairs the
/// same tuple enumeration with Fourier kets.
inline ResourcePlan compile_network(const Network& net) {
  require_valid(net);
  ResourcePlan plan;
  plan.network = net;
  const std::size_t k = net.layers.size();

  std::vector<int> ref_dims;
  for (const auto& l : net.layers) {
    ref_dims.push_back(l.ref_dim);
    plan.alphabet.push_back(l.ref_dim);
  }

  std::vector<DigitCodec> codecs;
  for (ParticipantId p : net.receivers()) {
    PartySpace ps;
    ps.participant = p;
    ps.layers = net.layers_of(p);
    for (int r : ps.layers) ps.radices.push_back(net.layers[static_cast<std::size_t>(r)].ref_dim);
    codecs.emplace_back(ps.radices);
    ps.dim = static_cast<int>(codecs.back().size());
    plan.parties.push_back(std::move(ps));
  }

  std::vector<Basis> fourier;
  for (const auto& ps : plan.parties) fourier.push_back(ps.basis(2));

  const DigitCodec tuples(ref_dims);
  if (tuples.size() > kMaxJointDim) throw Error("compile_network: more than 2^20 states per set");
  plan.s1.set_id = 1;
  plan.s2.set_id = 2;
  for (std::uint64_t t = 0; t < tuples.size(); ++t) {
    SeparableState a, b;
    a.layer_symbols = tuples.decode(t);
    b.layer_symbols = a.layer_symbols;
    for (std::size_t i = 0; i < plan.parties.size(); ++i) {
      std::vector<int> digits;
      for (int r : plan.parties[i].layers) digits.push_back(a.layer_symbols[static_cast<std::size_t>(r)]);
      const int value = static_cast<int>(codecs[i].encode(digits));
      a.local_values.push_back(value);
      b.local_values.push_back(value);
      a.kets.push_back(Ket::basis_state(plan.parties[i].dim, value));
      b.kets.push_back(fourier[i].vector(value));
    }
    plan.s1.states.push_back(std::move(a));
    plan.s2.states.push_back(std::move(b));
  }

  for (std::size_t i = 0; i < plan.parties.size(); ++i) {
    std::vector<std::vector<int>> table;
    for (int o = 0; o < plan.parties[i].dim; ++o) {
      std::vector<int> row(k, -1);
      const auto digits = codecs[i].decode(static_cast<std::uint64_t>(o));
      for (std::size_t pos = 0; pos < plan.parties[i].layers.size(); ++pos)
        row[static_cast<std::size_t>(plan.parties[i].layers[pos])] = digits[pos];
      table.push_back(std::move(row));
    }
    plan.key_table.push_back(std::move(table));
  }
  return plan;
}

/// Non-uniform two-layer construction with local dimensions (3, 2):
/// S1 = {|00>, |11>, |21>}, S2 = {|0'+>, |1'->, |2'->}. Outcome 0 of the
/// shared receiver carries no first-layer symbol; outcomes 1 and 2 map to
/// first-layer symbols 1 and 0. Requires layers {hub, X} and {hub, X, Y}.
inline ResourcePlan compile_truncated(const Network& net) {
  require_valid(net);
  if (net.layers.size() != 2 || net.size() != 3)
    throw Error("compile_truncated: needs three participants and two layers");
  const auto& inner = net.layers[0];
  const auto& outer = net.layers[1];
  if (inner.members.size() != 2 || outer.members.size() != 3)
    throw Error("compile_truncated: first layer must be {hub, X}, second {hub, X, Y}");
  ParticipantId x = inner.members[0] == net.hub ? inner.members[1] : inner.members[0];
  ParticipantId y = -1;
  for (ParticipantId m : outer.members)
    if (m != net.hub && m != x) y = m;
  if (y < 0) throw Error("compile_truncated: second layer must contain the first");

  ResourcePlan plan;
  plan.network = net;
  plan.truncated = true;
  plan.alphabet = {2, 2};

  const int xs[3] = {0, 1, 2};
  const int ys[3] = {0, 1, 1};
  const int l1[3] = {-1, 1, 0};
  const int l2[3] = {0, 1, 1};

  for (ParticipantId p : net.receivers()) {
    PartySpace ps;
    ps.participant = p;
    ps.layers = p == x ? std::vector<int>{0, 1} : std::vector<int>{1};
    ps.radices = {p == x ? 3 : 2};
    ps.dim = ps.radices[0];
    plan.parties.push_back(ps);
  }

  plan.s1.set_id = 1;
  plan.s2.set_id = 2;
  for (int t = 0; t < 3; ++t) {
    SeparableState a, b;
    a.layer_symbols = {l1[t], l2[t]};
    b.layer_symbols = a.layer_symbols;
    for (const auto& ps : plan.parties) {
      const int v = ps.participant == x ? xs[t] : ys[t];
      a.local_values.push_back(v);
      b.local_values.push_back(v);
      a.kets.push_back(Ket::basis_state(ps.dim, v));
      b.kets.push_back(fourier_ket(ps.dim, v));
    }
    plan.s1.states.push_back(std::move(a));
    plan.s2.states.push_back(std::move(b));
  }

  for (const auto& ps : plan.parties) {
    if (ps.participant == x)
      plan.key_table.push_back({{-1, 0}, {1, 1}, {0, 1}});
    else
      plan.key_table.push_back({{-1, 0}, {-1, 1}});
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Parallel decomposition

/// One layer's sub-protocol: its reference sets and where its digit sits in
/// each member's fused qudit.
struct LayerFactor {
  int layer = 0;
  ReferenceSets sets;
  std::vector<int> digit_position;  // per member of sets.members

  /// The single-layer network running this sub-protocol on its own.
  Network as_network(const Network& parent) const {
    Network sub;
    const Layer& l = parent.layers[static_cast<std::size_t>(layer)];
    for (ParticipantId m : l.members) sub.participants.push_back(parent.participants[static_cast<std::size_t>(m)]);
    sub.hub = *sub.find(parent.participants[static_cast<std::size_t>(parent.hub)]);
    Layer only{l.name, {}, l.ref_dim};
    for (int i = 0; i < sub.size(); ++i) only.members.push_back(i);
    sub.layers = {only};
    return sub;
  }
};

/// Splits a compiled plan into independent per-layer sub-protocols.
inline std::vector<LayerFactor> decompose_to_parallel(const ResourcePlan& plan) {
  if (plan.truncated) throw Error("decompose_to_parallel: truncated plans are not a tensor product of layers");
  std::vector<LayerFactor> out;
  for (std::size_t r = 0; r < plan.network.layers.size(); ++r) {
    LayerFactor f;
    f.layer = static_cast<int>(r);
    f.sets = reference_sets(plan.network, f.layer);
    for (ParticipantId m : f.sets.members) {
      const auto& ps = plan.parties[static_cast<std::size_t>(plan.party_index(m))];
      int pos = 0;
      while (ps.layers[static_cast<std::size_t>(pos)] != f.layer) ++pos;
      f.digit_position.push_back(pos);
    }
    out.push_back(std::move(f));
  }
  return out;
}

/// Rebuilds both prepare sets from per-layer factors by explicit Kronecker
/// products, grouping each receiver's factors in layer order.
inline std::pair<PrepareSet, PrepareSet> recompose(const Network& net, const std::vector<LayerFactor>& factors) {
  const std::vector<ParticipantId> receivers = net.receivers();
  std::uint64_t total = 1;
  for (const auto& f : factors) total *= static_cast<std::uint64_t>(f.sets.ref_dim);

  PrepareSet s1{1, {}}, s2{2, {}};
  std::vector<int> tuple(factors.size(), 0);
  for (std::uint64_t t = 0; t < total; ++t) {
    std::uint64_t rem = t;
    for (std::size_t r = factors.size(); r-- > 0;) {
      tuple[r] = static_cast<int>(rem % static_cast<std::uint64_t>(factors[r].sets.ref_dim));
      rem /= static_cast<std::uint64_t>(factors[r].sets.ref_dim);
    }
    SeparableState a, b;
    a.layer_symbols = tuple;
    b.layer_symbols = tuple;
    for (ParticipantId p : receivers) {
      std::optional<Ket> ka, kb;
      int value = 0;
      for (std::size_t r = 0; r < factors.size(); ++r) {
        const auto& fs = factors[r].sets;
        auto it = std::find(fs.members.begin(), fs.members.end(), p);
        if (it == fs.members.end()) continue;
        const auto slot = static_cast<std::size_t>(it - fs.members.begin());
        const Ket& fa = fs.set1[static_cast<std::size_t>(tuple[r])][slot];
        const Ket& fb = fs.set2[static_cast<std::size_t>(tuple[r])][slot];
        ka = ka ? kron(*ka, fa) : fa;
        kb = kb ? kron(*kb, fb) : fb;
        value = value * fs.ref_dim + tuple[r];
      }
      if (!ka) throw Error("recompose: participant " + net.participants[static_cast<std::size_t>(p)] + " has no factor");
      a.local_values.push_back(value);
      b.local_values.push_back(value);
      a.kets.push_back(*ka);
      b.kets.push_back(*kb);
    }
    s1.states.push_back(std::move(a));
    s2.states.push_back(std::move(b));
  }
  return {std::move(s1), std::move(s2)};
}

}  // namespace lqkd
