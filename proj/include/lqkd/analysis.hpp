#pragma once

// Entropies, mutual-information curves for cloning attacks, estimators and
// the report produced by the protocol engines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "lqkd/error.hpp"
#include "lqkd/key_material.hpp"
#include "lqkd/nettop.hpp"

namespace lqkd {

namespace detail {

/// x log2 x with the 0 log 0 = 0 convention.
inline double xlog2x(double x) { return x <= 0.0 ? 0.0 : x * std::log2(x); }

}  // namespace detail

inline double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error("binary_entropy: argument must lie in [0, 1]");
  return -detail::xlog2x(x) - detail::xlog2x(1.0 - x);
}

/// Shannon entropy (bits) of a histogram.
inline double shannon_entropy(const std::vector<std::size_t>& counts) {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  if (n == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) h -= detail::xlog2x(static_cast<double>(c) / static_cast<double>(n));
  return h;
}

/// Plug-in entropy of a symbol stream; negative symbols are skipped.
inline double symbol_entropy(const std::vector<int>& symbols) {
  std::map<int, std::size_t> hist;
  for (int s : symbols)
    if (s >= 0) ++hist[s];
  std::vector<std::size_t> counts;
  for (const auto& [s, c] : hist) counts.push_back(c);
  return shannon_entropy(counts);
}

/// Standard error of the plug-in entropy: the larger of the delta-method
/// term sqrt(Var[-log2 p]/N) and the second-order bias scale
/// (K-1)/(2 N ln 2) * sqrt(2), which dominates for uniform sources.
inline double entropy_standard_error(const std::vector<std::size_t>& counts) {
  std::size_t n = 0, k = 0;
  for (auto c : counts) {
    n += c;
    if (c > 0) ++k;
  }
  if (n == 0) return 0.0;
  const double N = static_cast<double>(n);
  double m1 = 0.0, m2 = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / N;
    m1 += p * std::log2(p);
    m2 += p * std::log2(p) * std::log2(p);
  }
  const double first = std::sqrt(std::max(0.0, m2 - m1 * m1) / N);
  const double second = std::sqrt(2.0) * static_cast<double>(k > 0 ? k - 1 : 0) / (2.0 * N * std::log(2.0));
  return std::max(first, second);
}

// ---------------------------------------------------------------------------
// Cloning-attack information curves

struct QubitCloningInfo {
  double i_ab = 0.0;      // 1 - h(F)
  double f_e = 0.0;       // 1/2 + sqrt(1 - F), clamped to [0, 1]
  double i_ae = 0.0;      // 1 - h(f_e)
  bool valid = true;      // false when the unclamped F_E left [0, 1]
  double f_e_alt = 0.0;   // 1/2 + sqrt(F (1 - F))
  double i_ae_alt = 0.0;  // 1 - h(f_e_alt)
};

inline QubitCloningInfo mi_cloning_qubit(double F) {
  if (!(F >= 0.0 && F <= 1.0)) throw Error("mi_cloning_qubit: F must lie in [0, 1]");
  QubitCloningInfo r;
  r.i_ab = 1.0 - binary_entropy(F);
  const double fe = 0.5 + std::sqrt(1.0 - F);
  r.valid = fe <= 1.0;
  r.f_e = std::clamp(fe, 0.0, 1.0);
  r.i_ae = 1.0 - binary_entropy(r.f_e);
  r.f_e_alt = std::clamp(0.5 + std::sqrt(F * (1.0 - F)), 0.0, 1.0);
  r.i_ae_alt = 1.0 - binary_entropy(r.f_e_alt);
  return r;
}

/// log2 d + F log2 F + (1-F) log2((1-F)/(d-1)): information left between
/// sender and receiver when errors are spread evenly over d-1 wrong outcomes.
inline double symmetric_channel_information(int d, double F) {
  if (d < 2) throw Error("symmetric_channel_information: d must be at least 2");
  if (!(F >= 0.0 && F <= 1.0)) throw Error("symmetric_channel_information: F must lie in [0, 1]");
  const double D = 1.0 - F;
  return std::log2(static_cast<double>(d)) + detail::xlog2x(F) + (D <= 0.0 ? 0.0 : D * std::log2(D / (d - 1)));
}

struct QuquartCloningInfo {
  double i_ab = 0.0;
  double f_e = 0.0;  // 3/4 - F/2 + sqrt(3 (1 - F))/2, clamped to [0, 1]
  double i_ae = 0.0;
  bool valid = true;
};

inline QuquartCloningInfo mi_cloning_ququart(double F) {
  if (!(F >= 0.0 && F <= 1.0)) throw Error("mi_cloning_ququart: F must lie in [0, 1]");
  QuquartCloningInfo r;
  r.i_ab = symmetric_channel_information(4, F);
  const double fe = 0.75 - F / 2.0 + std::sqrt(3.0 * (1.0 - F)) / 2.0;
  r.valid = fe <= 1.0;
  r.f_e = std::clamp(fe, 0.0, 1.0);
  r.i_ae = symmetric_channel_information(4, r.f_e);
  return r;
}

/// Smallest l with d^-l <= epsilon.
inline int rounds_for_confidence(double epsilon, int d) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("rounds_for_confidence: epsilon must lie in (0, 1)");
  if (d < 2) throw Error("rounds_for_confidence: d must be at least 2");
  // repeated division keeps exact powers (e.g. 4^-1 vs 0.25) on the right side
  double p = 1.0;
  int l = 0;
  while (p > epsilon) {
    p /= d;
    ++l;
  }
  return l;
}

/// Plug-in mutual information (bits) from joint frequencies; no bias
/// correction (bias is about (|X||Y|-1) / (2 N ln 2)).
inline double empirical_mi(const std::vector<int>& xs, const std::vector<int>& ys) {
  if (xs.size() != ys.size()) throw Error("empirical_mi: sequences differ in length");
  if (xs.empty()) throw Error("empirical_mi: empty sequences");
  std::map<int, std::size_t> px, py;
  std::map<std::pair<int, int>, std::size_t> pxy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ++px[xs[i]];
    ++py[ys[i]];
    ++pxy[{xs[i], ys[i]}];
  }
  const double n = static_cast<double>(xs.size());
  double mi = 0.0;
  for (const auto& [xy, c] : pxy) {
    const double pj = static_cast<double>(c) / n;
    const double pa = static_cast<double>(px[xy.first]) / n;
    const double pb = static_cast<double>(py[xy.second]) / n;
    mi += pj * std::log2(pj / (pa * pb));
  }
  return std::max(0.0, mi);
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval for k successes in n trials.
inline Interval wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054) {
  if (n == 0) return {0.0, 1.0};
  const double N = static_cast<double>(n);
  const double p = static_cast<double>(k) / N;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * N)) / (1 + z2 / N);
  const double half = z * std::sqrt(p * (1 - p) / N + z2 / (4 * N * N)) / (1 + z2 / N);
  // the bounds are exactly 0 / 1 at the extremes; avoid rounding residue
  return {k == 0 ? 0.0 : std::max(0.0, centre - half), k == n ? 1.0 : std::min(1.0, centre + half)};
}

/// |k/n - p| within three binomial standard deviations; exact match
/// required when p is 0 or 1.
inline bool within_three_sigma(std::size_t k, std::size_t n, double p) {
  if (n == 0) return false;
  const double f = static_cast<double>(k) / static_cast<double>(n);
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  if (sigma == 0.0) return f == p;
  return std::abs(f - p) <= 3.0 * sigma;
}

// ---------------------------------------------------------------------------
// Pinpointing

struct ErrorCount {
  ParticipantId participant = 0;
  std::size_t checked = 0;
  std::size_t mismatches = 0;
};

struct PinpointVerdict {
  std::vector<ParticipantId> compromised;
  std::vector<int> secure_layers;
};

inline constexpr double kPinpointThreshold = 0.01;

/// A participant is compromised when its error rate exceeds `threshold` by
/// more than three binomial standard deviations (evaluated at the threshold).
/// Secure layers are those with no compromised member.
inline PinpointVerdict pinpoint_eve(const Network& net, const std::vector<ErrorCount>& counts,
                                    double threshold = kPinpointThreshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("pinpoint_eve: threshold must lie in (0, 1)");
  PinpointVerdict v;
  for (const auto& c : counts) {
    if (c.checked == 0) continue;
    const double n = static_cast<double>(c.checked);
    const double rate = static_cast<double>(c.mismatches) / n;
    if (rate - threshold > 3.0 * std::sqrt(threshold * (1.0 - threshold) / n)) v.compromised.push_back(c.participant);
  }
  std::sort(v.compromised.begin(), v.compromised.end());
  for (std::size_t r = 0; r < net.layers.size(); ++r) {
    const bool clean = std::none_of(v.compromised.begin(), v.compromised.end(),
                                    [&](ParticipantId p) { return net.layers[r].contains(p); });
    if (clean) v.secure_layers.push_back(static_cast<int>(r));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Key rates

struct LayerRate {
  int layer = 0;
  std::size_t key_length = 0;
  double entropy = 0.0;                   // bits per key symbol
  double symbols_per_transmission = 0.0;  // key symbols / rounds
  double retention_fraction = 0.0;        // retained rounds / rounds
  double bits_per_transmission = 0.0;     // entropy * retention_fraction
};

/// `retained[r]` is the number of rounds retained for layer r out of `rounds`.
inline std::vector<LayerRate> key_rate_report(const KeyMaterial& keys, std::size_t rounds,
                                              const std::vector<std::size_t>& retained) {
  if (rounds == 0) throw Error("key_rate_report: no rounds");
  if (retained.size() != keys.layers.size()) throw Error("key_rate_report: retained counts do not match layers");
  std::vector<LayerRate> out;
  for (std::size_t r = 0; r < keys.layers.size(); ++r) {
    const auto& k = keys.layers[r];
    LayerRate lr;
    lr.layer = k.layer;
    lr.key_length = k.length();
    lr.entropy = symbol_entropy(k.hub_symbols());
    lr.symbols_per_transmission = static_cast<double>(k.length()) / static_cast<double>(rounds);
    lr.retention_fraction = static_cast<double>(retained[r]) / static_cast<double>(rounds);
    lr.bits_per_transmission = lr.entropy * lr.retention_fraction;
    out.push_back(lr);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

struct ParticipantStats {
  ParticipantId participant = 0;
  std::string name;
  std::size_t checked = 0;
  std::size_t mismatches = 0;
  double qber = 0.0;
  Interval ci;
  // two-way protocols: hub return readout vs receiver outcome on measured
  // key-set rounds (diagnostic only)
  std::size_t measured_compared = 0;
  std::size_t measured_mismatches = 0;
};

struct LayerStats {
  int layer = 0;
  std::string name;
  int alphabet = 2;
  std::size_t retained = 0;
  std::size_t checked = 0;
  std::size_t mismatches = 0;
  double qber = 0.0;
  LayerRate rate;
  bool agreement = true;
  std::map<std::string, double> mi_member;    // hub key vs member key
  std::map<std::string, double> mi_outsider;  // hub key vs non-member's view
};

struct EveSummary {
  std::string kind = "none";
  std::string target;
  std::size_t attacked_rounds = 0;
  std::map<std::string, double> info_bits;  // per layer: Eve's record vs hub key
};

struct Report {
  std::string protocol;
  std::size_t rounds = 0;
  bool abort = false;
  std::vector<ParticipantStats> participants;
  std::vector<LayerStats> layers;
  EveSummary eve;
  PinpointVerdict pinpoint;

  const ParticipantStats& participant(const std::string& name) const {
    for (const auto& p : participants)
      if (p.name == name) return p;
    throw Error("Report: no participant '" + name + "'");
  }
  const LayerStats& layer(const std::string& name) const {
    for (const auto& l : layers)
      if (l.name == name) return l;
    throw Error("Report: no layer '" + name + "'");
  }
};

inline void finish_participant(ParticipantStats& p) {
  p.qber = p.checked == 0 ? 0.0 : static_cast<double>(p.mismatches) / static_cast<double>(p.checked);
  p.ci = wilson_interval(p.mismatches, p.checked);
}

}  // namespace lqkd
