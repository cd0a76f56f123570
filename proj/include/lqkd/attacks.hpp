#pragma once

// Adversary models acting on the hub -> receiver leg (and, for two-way
// protocols, the return leg), plus the unitaries they are built from.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lqkd/error.hpp"
#include "lqkd/parallel.hpp"
#include "lqkd/qmath.hpp"
#include "lqkd/resgen.hpp"
#include "lqkd/rng.hpp"

namespace lqkd {

enum class AttackKind { none, intercept_resend, entangle_measure, cloning, two_way };

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::none: return "none";
    case AttackKind::intercept_resend: return "intercept_resend";
    case AttackKind::entangle_measure: return "entangle_measure";
    case AttackKind::cloning: return "cloning";
    case AttackKind::two_way: return "two_way";
  }
  return "none";
}

inline AttackKind attack_kind_from_string(const std::string& s) {
  for (auto k : {AttackKind::none, AttackKind::intercept_resend, AttackKind::entangle_measure, AttackKind::cloning,
                 AttackKind::two_way})
    if (s == to_string(k)) return k;
  throw ConfigError("attack.kind", "unknown attack kind '" + s + "'");
}

/// A two-way leg operator: a named preset ("identity", "cnot",
/// "random:<seed>") or an explicit matrix on traveler (x) ancilla.
struct LegOperator {
  std::string preset = "identity";
  std::optional<Matrix> matrix;
};

struct AttackSpec {
  AttackKind kind = AttackKind::none;
  std::string target;
  double fidelity = 1.0;  // cloning
  double p_attack = 1.0;  // fraction of the target's rounds attacked
  LegOperator forward;    // two-way
  LegOperator backward;   // two-way
  int ancilla_dim = 0;    // two-way; 0 = traveler dimension

  void check() const {
    if (kind == AttackKind::none) return;
    if (target.empty()) throw ConfigError("attack.target", "missing target participant");
    if (!(fidelity >= 0.0 && fidelity <= 1.0)) throw ConfigError("attack.F", "fidelity must lie in [0, 1]");
    if (!(p_attack > 0.0 && p_attack <= 1.0)) throw ConfigError("attack.p_attack", "must lie in (0, 1]");
    if (ancilla_dim < 0) throw ConfigError("attack.ancilla_dim", "must be positive");
  }
};

/// What Eve did and saw in one round. basis: 0 none, 1 computational,
/// 2 Fourier. outcome: her measurement result (intercept-resend) or the
/// computational readout of her ancillas, -1 when not attacked.
struct EveRecord {
  bool attacked = false;
  int basis = 0;
  int outcome = -1;
};

// ---------------------------------------------------------------------------
// Building blocks

/// Eve measures in a uniformly chosen basis and forwards the post-measurement
/// state. The Fourier choice uses the layered basis over `radices`.
struct InterceptResult {
  Ket forwarded;
  int outcome;
  BasisKind basis;
};

inline InterceptResult intercept_resend(const Ket& ket, const std::vector<int>& radices, RandomStream& rng) {
  const BasisKind kind = rng.below(2) == 0 ? BasisKind::computational : BasisKind::fourier;
  auto m = measure(ket, Basis::layered(kind, radices), rng);
  return {std::move(m.post), m.outcome, kind};
}

inline InterceptResult intercept_resend(const Ket& ket, int d, RandomStream& rng) {
  return intercept_resend(ket, std::vector<int>{d}, rng);
}

/// 1 - d^-l.
inline double detection_probability_intercept(int d, int l) {
  if (d < 2 || l < 0) throw Error("detection_probability_intercept: need d >= 2 and l >= 0");
  return 1.0 - std::pow(static_cast<double>(d), -static_cast<double>(l));
}

/// Generalized CNOT |i>|j> -> |i>|i+j mod d>.
inline Matrix entangle_measure_unitary(int d) {
  if (d < 2) throw Error("entangle_measure_unitary: d must be at least 2");
  Matrix u(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) u(i * d + (i + j) % d, i * d + j) = 1.0;
  return u;
}

namespace detail {

inline std::vector<int> digits_of(int value, const std::vector<int>& radices) {
  std::vector<int> out(radices.size());
  for (std::size_t f = radices.size(); f-- > 0;) {
    out[f] = value % radices[f];
    value /= radices[f];
  }
  return out;
}

inline int from_digits(const std::vector<int>& digits, const std::vector<int>& radices) {
  int v = 0;
  for (std::size_t f = 0; f < radices.size(); ++f) v = v * radices[f] + digits[f];
  return v;
}

/// Per-factor Weyl phase omega^(n . k).
inline Complex weyl_phase(const std::vector<int>& n, const std::vector<int>& k, const std::vector<int>& radices, int sign) {
  Complex p = 1.0;
  for (std::size_t f = 0; f < radices.size(); ++f)
    p *= root_of_unity(static_cast<std::int64_t>(sign) * n[f] * k[f], radices[f]);
  return p;
}

}  // namespace detail

/// Symmetric cloner on a traveler with mixed radices `radices` (dimension d)
/// and a d^2-dimensional ancilla, returned as the d^3 x d isometry
/// |s> -> sum_{m,n} a_mn X^m Z^n |s> (x) B_{m,-n}, where B_{m,n} are the
/// generalized Bell states (I (x) X^m Z^n)|Phi+>. Row index is
/// traveler * d^2 + ancilla. The receiver errs with probability D = 1 - F in
/// both the computational and the layered Fourier basis; F = 1 leaves the
/// traveler untouched.
inline Matrix cloning_isometry(const std::vector<int>& radices, double fidelity) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) throw Error("cloning_isometry: F must lie in [0, 1]");
  int d = 1;
  for (int r : radices) {
    if (r < 2) throw Error("cloning_isometry: radix must be at least 2");
    d *= r;
  }
  if (static_cast<std::size_t>(d) * static_cast<std::size_t>(d) * static_cast<std::size_t>(d) > kMaxJointDim)
    throw Error("cloning_isometry: traveler dimension too large");
  const double D = 1.0 - fidelity;
  const double dm1 = d - 1;
  double v, x, y;
  if (D <= 0.5) {
    v = std::sqrt(1.0 - 2.0 * D);
    x = std::sqrt(D / dm1);
    y = 0.0;
  } else {
    v = 0.0;
    x = std::sqrt(fidelity / dm1);
    y = std::sqrt((1.0 - 2.0 * fidelity) / (dm1 * dm1));
  }

  const int a = d * d;
  Matrix V(d * a, d);
  const double inv = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<std::vector<int>> dig(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) dig[static_cast<std::size_t>(i)] = detail::digits_of(i, radices);
  auto plus = [&](int p, int q) {
    std::vector<int> s(radices.size());
    for (std::size_t f = 0; f < radices.size(); ++f) s[f] = (dig[static_cast<std::size_t>(p)][f] + dig[static_cast<std::size_t>(q)][f]) % radices[f];
    return detail::from_digits(s, radices);
  };

  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) {
      const double amp = m == 0 && n == 0 ? v : (m == 0 || n == 0 ? x : y);
      if (amp == 0.0) continue;
      const auto& nd = dig[static_cast<std::size_t>(n)];
      for (int s = 0; s < d; ++s) {
        const int t = plus(s, m);
        const Complex head = amp * detail::weyl_phase(nd, dig[static_cast<std::size_t>(s)], radices, 1);
        // B_{m,-n} = d^-1/2 sum_k omega^(-n.k) |k>|k+m>
        for (int k = 0; k < d; ++k) {
          const Complex c = head * inv * detail::weyl_phase(nd, dig[static_cast<std::size_t>(k)], radices, -1);
          V(t * a + k * d + plus(k, m), s) += c;
        }
      }
    }
  return V;
}

inline Matrix cloning_isometry(int d, double fidelity) { return cloning_isometry(std::vector<int>{d}, fidelity); }

/// Extends an isometry whose columns are the images of |s>|0> (ancilla of
/// dimension rows / cols) to a unitary on the full space by Gram-Schmidt.
inline Unitary complete_isometry(const Matrix& iso) {
  const int n = iso.rows();
  const int d = iso.cols();
  if (n % d != 0) throw Error("complete_isometry: row count must be a multiple of column count");
  if (iso.isometry_error() > kUnitaryTolerance) throw Error("complete_isometry: columns are not orthonormal");
  const int a = n / d;
  std::vector<std::vector<Complex>> cols(static_cast<std::size_t>(n));
  std::vector<bool> filled(static_cast<std::size_t>(n), false);
  for (int s = 0; s < d; ++s) {
    auto& c = cols[static_cast<std::size_t>(s * a)];
    c.resize(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) c[static_cast<std::size_t>(r)] = iso(r, s);
    filled[static_cast<std::size_t>(s * a)] = true;
  }
  std::vector<std::vector<Complex>> basis;
  for (std::size_t j = 0; j < cols.size(); ++j)
    if (filled[j]) basis.push_back(cols[j]);

  int candidate = 0;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (filled[j]) continue;
    while (true) {
      if (candidate >= n) throw Error("complete_isometry: ran out of candidates");
      std::vector<Complex> v(static_cast<std::size_t>(n), 0.0);
      v[static_cast<std::size_t>(candidate++)] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) {
          Complex proj = 0.0;
          for (int k = 0; k < n; ++k) proj += std::conj(b[static_cast<std::size_t>(k)]) * v[static_cast<std::size_t>(k)];
          for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] -= proj * b[static_cast<std::size_t>(k)];
        }
      const double nrm = std::sqrt(detail::squared_norm(v));
      if (nrm < 1e-6) continue;
      for (auto& z : v) z /= nrm;
      cols[j] = v;
      basis.push_back(std::move(v));
      break;
    }
  }
  Matrix u(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) u(r, c) = cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
  return Unitary(std::move(u));
}

inline Unitary cloning_unitary(const std::vector<int>& radices, double fidelity) {
  return complete_isometry(cloning_isometry(radices, fidelity));
}

/// V|psi> as a two-subsystem state (traveler, ancilla).
inline JointState apply_isometry(const Matrix& iso, const Ket& ket) {
  if (iso.cols() != ket.dim() || iso.rows() % ket.dim() != 0) throw Error("apply_isometry: dimension mismatch");
  return JointState::adopt({ket.dim(), iso.rows() / ket.dim()}, iso.apply(ket.amplitudes()));
}

// ---------------------------------------------------------------------------
// Two-way attacks

/// E[i][j] = (<j| (x) I) U_F |i>|0>, F[i][j] likewise for U_B.
struct TwoWayComponents {
  int d = 2;
  int ancilla_dim = 2;
  std::vector<std::vector<std::vector<Complex>>> E;
  std::vector<std::vector<std::vector<Complex>>> F;
};

inline std::vector<std::vector<std::vector<Complex>>> leg_components(const Matrix& u, int d, int a) {
  if (u.rows() != d * a || u.cols() != d * a) throw Error("two_way_components: operator must be (d*a) x (d*a)");
  std::vector<std::vector<std::vector<Complex>>> out(
      static_cast<std::size_t>(d), std::vector<std::vector<Complex>>(static_cast<std::size_t>(d), std::vector<Complex>(static_cast<std::size_t>(a))));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int e = 0; e < a; ++e) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(e)] = u(j * a + e, i * a);
  return out;
}

inline TwoWayComponents two_way_components(const Unitary& forward, const Unitary& backward, int d) {
  if (d < 2 || forward.dim() % d != 0 || forward.dim() != backward.dim())
    throw Error("two_way_components: dimension mismatch");
  TwoWayComponents c;
  c.d = d;
  c.ancilla_dim = forward.dim() / d;
  c.E = leg_components(forward.matrix(), d, c.ancilla_dim);
  c.F = leg_components(backward.matrix(), d, c.ancilla_dim);
  return c;
}

/// Sent |i>, measured j by the receiver, k by the hub on return.
struct MeasureResendScenario {
  int sent, bob, alice;
};
/// Reflected computational state |i>; value is P(hub reads k != i).
struct ReflectComputationalScenario {
  int sent;
};
/// Reflected basis state j of `basis`; value is P(hub reads != j in it).
struct ReflectBasisScenario {
  int sent;
  Basis basis;
};
using TwoWayScenario = std::variant<MeasureResendScenario, ReflectComputationalScenario, ReflectBasisScenario>;

namespace detail {

inline double squared_norm_tensor(const std::vector<Complex>& t) { return squared_norm(t); }

/// Accumulates c * (e (x) f) into acc (length a*a).
inline void add_tensor(std::vector<Complex>& acc, Complex c, const std::vector<Complex>& e, const std::vector<Complex>& f) {
  const std::size_t a = f.size();
  for (std::size_t p = 0; p < e.size(); ++p) {
    if (e[p] == Complex{}) continue;
    const Complex ce = c * e[p];
    for (std::size_t q = 0; q < a; ++q) acc[p * a + q] += ce * f[q];
  }
}

}  // namespace detail

inline double analytic_two_way_detection(const TwoWayComponents& c, const TwoWayScenario& scenario) {
  const int d = c.d;
  const auto a = static_cast<std::size_t>(c.ancilla_dim);
  auto in_range = [d](int v) { return v >= 0 && v < d; };
  auto sz = [](int v) { return static_cast<std::size_t>(v); };

  if (const auto* s = std::get_if<MeasureResendScenario>(&scenario)) {
    if (!in_range(s->sent) || !in_range(s->bob) || !in_range(s->alice)) throw Error("analytic_two_way_detection: index out of range");
    return detail::squared_norm(c.E[sz(s->sent)][sz(s->bob)]) * detail::squared_norm(c.F[sz(s->bob)][sz(s->alice)]);
  }
  if (const auto* s = std::get_if<ReflectComputationalScenario>(&scenario)) {
    if (!in_range(s->sent)) throw Error("analytic_two_way_detection: index out of range");
    double p = 0.0;
    for (int k = 0; k < d; ++k) {
      if (k == s->sent) continue;
      std::vector<Complex> acc(a * a, 0.0);
      for (int j = 0; j < d; ++j) detail::add_tensor(acc, 1.0, c.E[sz(s->sent)][sz(j)], c.F[sz(j)][sz(k)]);
      p += detail::squared_norm(acc);
    }
    return p;
  }
  const auto& s = std::get<ReflectBasisScenario>(scenario);
  if (s.basis.dim() != d || !in_range(s.sent)) throw Error("analytic_two_way_detection: basis/index mismatch");
  std::vector<Complex> acc(a * a, 0.0);
  for (int n = 0; n < d; ++n) {
    const Complex pn = s.basis.component(s.sent, n);
    if (pn == Complex{}) continue;
    for (int y = 0; y < d; ++y) {
      const Complex py = std::conj(s.basis.component(s.sent, y));
      if (py == Complex{}) continue;
      for (int x = 0; x < d; ++x) detail::add_tensor(acc, pn * py, c.E[sz(n)][sz(x)], c.F[sz(x)][sz(y)]);
    }
  }
  return std::max(0.0, 1.0 - detail::squared_norm(acc));
}

/// Resolves a leg preset for a traveler of dimension d and ancilla a.
inline Unitary leg_unitary(const LegOperator& op, int d, int a) {
  if (op.matrix) {
    if (op.matrix->rows() != d * a || op.matrix->cols() != d * a)
      throw ConfigError("attack", "two-way matrix must be " + std::to_string(d * a) + "x" + std::to_string(d * a));
    if (!op.matrix->is_unitary()) throw ConfigError("attack", "two-way matrix is not unitary");
    return Unitary(*op.matrix);
  }
  if (op.preset == "identity") return Unitary(Matrix::identity(d * a));
  if (op.preset == "cnot") {
    if (a != d) throw ConfigError("attack", "cnot preset needs ancilla dimension equal to the traveler's");
    return Unitary(entangle_measure_unitary(d));
  }
  if (op.preset.rfind("random:", 0) == 0) {
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(op.preset.substr(7));
    } catch (const std::exception&) {
      throw ConfigError("attack", "bad random preset '" + op.preset + "'");
    }
    RandomStream rng(derive_round_seed(seed, 0, StreamTag::unitary));
    return Unitary(random_unitary(d * a, rng));
  }
  throw ConfigError("attack", "unknown operator preset '" + op.preset + "'");
}

// ---------------------------------------------------------------------------
// Adversary bound to a compiled network

/// Eve sitting on one receiver's channel. The traveler is carried as a joint
/// state whose subsystem 0 is the receiver's qudit; entangling attacks append
/// their ancillas after it.
class Adversary {
 public:
  Adversary() = default;

  Adversary(const AttackSpec& spec, const ResourcePlan& plan) : spec_(spec) {
    spec_.check();
    if (spec_.kind == AttackKind::none) return;
    const auto id = plan.network.find(spec_.target);
    if (!id) throw ConfigError("attack.target", "unknown participant '" + spec_.target + "'");
    target_ = plan.party_index(*id);
    if (target_ < 0) throw ConfigError("attack.target", "the hub cannot be a target");
    const PartySpace& ps = plan.parties[static_cast<std::size_t>(target_)];
    radices_ = ps.radices;
    d_ = ps.dim;
    switch (spec_.kind) {
      case AttackKind::entangle_measure:
        unitary_ = Unitary(entangle_measure_unitary(d_));
        break;
      case AttackKind::cloning:
        isometry_ = cloning_isometry(radices_, spec_.fidelity);
        break;
      case AttackKind::two_way: {
        const int a = spec_.ancilla_dim > 0 ? spec_.ancilla_dim : d_;
        unitary_ = leg_unitary(spec_.forward, d_, a);
        backward_ = leg_unitary(spec_.backward, d_, a);
        ancilla_ = a;
        break;
      }
      default:
        break;
    }
  }

  const AttackSpec& spec() const { return spec_; }
  bool active() const { return spec_.kind != AttackKind::none; }
  /// Party index of the target, -1 when inactive.
  int target_party() const { return target_; }

  /// Hub -> receiver leg for party `party`.
  JointState forward(int party, const Ket& ket, RandomStream& rng, EveRecord& rec) const {
    if (!active() || party != target_) return JointState::product({ket});
    if (spec_.p_attack < 1.0 && !rng.bernoulli(spec_.p_attack)) return JointState::product({ket});
    rec.attacked = true;
    switch (spec_.kind) {
      case AttackKind::intercept_resend: {
        auto r = intercept_resend(ket, radices_, rng);
        rec.basis = r.basis == BasisKind::computational ? 1 : 2;
        rec.outcome = r.outcome;
        return JointState::product({r.forwarded});
      }
      case AttackKind::entangle_measure:
        rec.basis = 1;
        return apply_joint(*unitary_, JointState::product({ket, Ket::basis_state(d_, 0)}), {0, 1});
      case AttackKind::cloning:
        rec.basis = 1;
        return apply_isometry(*isometry_, ket);
      case AttackKind::two_way:
        rec.basis = 1;
        return apply_joint(*unitary_, JointState::product({ket, Ket::basis_state(ancilla_, 0)}), {0, 1});
      default:
        return JointState::product({ket});
    }
  }

  /// Receiver -> hub leg (two-way attacks only); appends a fresh ancilla.
  JointState backward(int party, const JointState& st, const EveRecord& rec) const {
    if (spec_.kind != AttackKind::two_way || party != target_ || !rec.attacked) return st;
    std::vector<int> dims = st.dims();
    dims.push_back(ancilla_);
    std::vector<Complex> amps;
    amps.reserve(st.size() * static_cast<std::size_t>(ancilla_));
    for (const auto& z : st.amplitudes()) {
      amps.push_back(z);
      for (int e = 1; e < ancilla_; ++e) amps.push_back(0.0);
    }
    const int last = static_cast<int>(dims.size()) - 1;
    return apply_joint(*backward_, JointState::adopt(std::move(dims), std::move(amps)), {0, last});
  }

  /// Eve reads all her ancillas in the computational basis.
  void finish(const JointState& st, RandomStream& rng, EveRecord& rec) const {
    if (!rec.attacked || st.subsystem_count() < 2) return;
    JointState cur = st;
    int value = 0;
    for (int s = 1; s < cur.subsystem_count(); ++s) {
      auto m = measure_joint(cur, s, BasisKind::computational, rng);
      value = value * cur.dims()[static_cast<std::size_t>(s)] + m.outcome;
      cur = std::move(m.post);
    }
    rec.outcome = value;
  }

 private:
  AttackSpec spec_;
  int target_ = -1;
  int d_ = 0;
  int ancilla_ = 0;
  std::vector<int> radices_;
  std::optional<Unitary> unitary_;
  std::optional<Unitary> backward_;
  std::optional<Matrix> isometry_;
};

// ---------------------------------------------------------------------------
// Detection-probability Monte Carlo

struct DetectionTally {
  std::size_t trials = 0;
  std::size_t detected = 0;
  double frequency() const { return trials == 0 ? 0.0 : static_cast<double>(detected) / static_cast<double>(trials); }
};

/// Intercept-resend detection over `l` checked rounds in which Eve's basis
/// differed from the preparation basis and the receiver measured in the
/// preparation basis (rounds not meeting this are redrawn). A trial counts as
/// detected when any of its `l` rounds shows a mismatch.
inline DetectionTally intercept_detection_frequency(const std::vector<int>& radices, int l, std::size_t trials,
                                                    std::uint64_t seed, unsigned workers = 0) {
  if (l < 0) throw Error("intercept_detection_frequency: l must be non-negative");
  const Basis bases[2] = {Basis::layered(BasisKind::computational, radices), Basis::layered(BasisKind::fourier, radices)};
  const int d = bases[0].dim();
  std::vector<char> hit(trials, 0);
  parallel_for(trials, worker_count(workers), [&](std::size_t t) {
    RandomStream rng = round_stream(seed, t, StreamTag::trial);
    for (int r = 0; r < l; ++r) {
      while (true) {
        const int prep = rng.below(2);
        const int value = rng.below(d);
        const int eve = rng.below(2);
        const int bob = rng.below(2);
        if (eve == prep || bob != prep) continue;
        const auto e = measure(bases[prep].vector(value), bases[eve], rng);
        const auto b = measure(e.post, bases[bob], rng);
        if (b.outcome != value) hit[t] = 1;
        break;
      }
    }
  });
  DetectionTally out;
  out.trials = trials;
  for (char h : hit) out.detected += static_cast<std::size_t>(h);
  return out;
}

}  // namespace lqkd
