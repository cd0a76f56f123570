#pragma once

// Dense pure-state linear algebra for small qudit systems.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lqkd/error.hpp"
#include "lqkd/rng.hpp"

namespace lqkd {

using Complex = std::complex<double>;

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kUnitaryTolerance = 1e-10;
inline constexpr std::size_t kMaxJointDim = std::size_t{1} << 20;
inline constexpr int kMaxFourierDim = 4096;

enum class BasisKind { computational, fourier };

inline const char* to_string(BasisKind k) {
  return k == BasisKind::computational ? "computational" : "fourier";
}

namespace detail {

inline double squared_norm(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& a : v) s += std::norm(a);
  return s;
}

/// e^{2 pi i num / den} evaluated with the exponent reduced mod den.
inline Complex root_of_unity(std::int64_t num, std::int64_t den) {
  std::int64_t r = num % den;
  if (r < 0) r += den;
  const double angle = 2.0 * M_PI * static_cast<double>(r) / static_cast<double>(den);
  return {std::cos(angle), std::sin(angle)};
}

/// Samples an index from (possibly slightly unnormalized) probabilities.
inline int sample_index(std::span<const double> probs, RandomStream& rng) {
  double total = 0.0;
  for (double p : probs) total += p;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  int last_nonzero = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    last_nonzero = static_cast<int>(k);
    acc += probs[k];
    if (u < acc) return static_cast<int>(k);
  }
  return last_nonzero;
}

}  // namespace detail

/// Normalized pure state of one qudit.
class Ket {
 public:
  explicit Ket(std::vector<Complex> amplitudes) : amps_(std::move(amplitudes)) {
    if (amps_.size() < 2) throw Error("Ket: dimension must be at least 2");
    if (std::abs(detail::squared_norm(amps_) - 1.0) > kNormTolerance)
      throw Error("Ket: amplitudes are not normalized");
  }

  static Ket basis_state(int dim, int k) {
    if (k < 0 || k >= dim) throw Error("Ket::basis_state: index out of range");
    std::vector<Complex> a(static_cast<std::size_t>(dim));
    a[static_cast<std::size_t>(k)] = 1.0;
    return Ket(std::move(a));
  }

  int dim() const { return static_cast<int>(amps_.size()); }
  std::span<const Complex> amplitudes() const { return amps_; }
  const Complex& operator[](int k) const { return amps_[static_cast<std::size_t>(k)]; }

 private:
  std::vector<Complex> amps_;
};

/// j-th discrete Fourier ket of dimension d: (1/sqrt d) sum_k e^{2 pi i j k / d} |k>.
inline Ket fourier_ket(int d, int j) {
  if (d < 2) throw Error("fourier_ket: dimension must be at least 2");
  if (j < 0 || j >= d) throw Error("fourier_ket: index out of range");
  std::vector<Complex> a(static_cast<std::size_t>(d));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int k = 0; k < d; ++k) a[static_cast<std::size_t>(k)] = scale * detail::root_of_unity(std::int64_t{j} * k, d);
  return Ket(std::move(a));
}

inline Complex inner(const Ket& a, const Ket& b) {
  if (a.dim() != b.dim()) throw Error("inner: dimension mismatch");
  Complex s = 0.0;
  for (int k = 0; k < a.dim(); ++k) s += std::conj(a[k]) * b[k];
  return s;
}

/// Tensor product; `a` is the more significant factor.
inline Ket kron(const Ket& a, const Ket& b) {
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(a.dim()) * static_cast<std::size_t>(b.dim()));
  for (const auto& x : a.amplitudes())
    for (const auto& y : b.amplitudes()) out.push_back(x * y);
  return Ket(std::move(out));
}

/// Orthonormal measurement basis on a space factored by mixed radices (first
/// factor most significant). The Fourier kind is the tensor product of the
/// per-factor Fourier bases; with a single factor it is the plain DFT basis.
class Basis {
 public:
  static Basis computational(int dim) { return Basis(BasisKind::computational, {dim}); }
  static Basis fourier(int dim) { return Basis(BasisKind::fourier, {dim}); }
  static Basis layered(BasisKind kind, std::vector<int> radices) { return Basis(kind, std::move(radices)); }

  BasisKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::vector<int>& radices() const { return radices_; }

  /// k-th basis ket.
  Ket vector(int k) const {
    if (k < 0 || k >= dim_) throw Error("Basis::vector: index out of range");
    if (kind_ == BasisKind::computational) return Ket::basis_state(dim_, k);
    const auto row = vectors_.begin() + static_cast<std::ptrdiff_t>(k) * dim_;
    return Ket(std::vector<Complex>(row, row + dim_));
  }

  /// <b_k | psi> for a raw amplitude vector of length dim().
  Complex overlap(int k, std::span<const Complex> psi) const {
    if (kind_ == BasisKind::computational) return psi[static_cast<std::size_t>(k)];
    Complex s = 0.0;
    const Complex* row = vectors_.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(dim_);
    for (int n = 0; n < dim_; ++n) s += std::conj(row[n]) * psi[static_cast<std::size_t>(n)];
    return s;
  }

  /// Amplitude <n | b_k>.
  Complex component(int k, int n) const {
    if (kind_ == BasisKind::computational) return k == n ? 1.0 : 0.0;
    return vectors_[static_cast<std::size_t>(k) * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(n)];
  }

  bool operator==(const Basis& o) const { return kind_ == o.kind_ && radices_ == o.radices_; }

 private:
  Basis(BasisKind kind, std::vector<int> radices) : kind_(kind), radices_(std::move(radices)) {
    if (radices_.empty()) throw Error("Basis: no radices");
    std::size_t d = 1;
    for (int r : radices_) {
      if (r < 2) throw Error("Basis: radix must be at least 2");
      d *= static_cast<std::size_t>(r);
      if (d > kMaxJointDim) throw Error("Basis: dimension exceeds 2^20");
    }
    dim_ = static_cast<int>(d);
    if (kind_ == BasisKind::fourier) {
      if (dim_ > kMaxFourierDim) throw Error("Basis: Fourier basis dimension exceeds 4096");
      build_fourier();
    }
  }

  void build_fourier() {
    vectors_.assign(static_cast<std::size_t>(dim_) * static_cast<std::size_t>(dim_), Complex{});
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
    std::vector<int> jd(radices_.size()), nd(radices_.size());
    for (int j = 0; j < dim_; ++j) {
      split(j, jd);
      for (int n = 0; n < dim_; ++n) {
        split(n, nd);
        Complex phase = 1.0;
        for (std::size_t f = 0; f < radices_.size(); ++f)
          phase *= detail::root_of_unity(std::int64_t{jd[f]} * nd[f], radices_[f]);
        vectors_[static_cast<std::size_t>(j) * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(n)] = scale * phase;
      }
    }
  }

  void split(int value, std::vector<int>& digits) const {
    for (std::size_t f = radices_.size(); f-- > 0;) {
      digits[f] = value % radices_[f];
      value /= radices_[f];
    }
  }

  BasisKind kind_;
  std::vector<int> radices_;
  int dim_ = 0;
  std::vector<Complex> vectors_;  // row k = amplitudes of b_k (Fourier kind only)
};

inline std::vector<double> outcome_probabilities(const Ket& state, const Basis& basis) {
  if (state.dim() != basis.dim()) throw Error("outcome_probabilities: dimension mismatch");
  std::vector<double> p(static_cast<std::size_t>(basis.dim()));
  for (int k = 0; k < basis.dim(); ++k) p[static_cast<std::size_t>(k)] = std::norm(basis.overlap(k, state.amplitudes()));
  return p;
}

struct Measurement {
  int outcome;
  Ket post;
};

/// Born-rule projective measurement; the post-measurement state is the
/// basis ket of the observed outcome.
inline Measurement measure(const Ket& state, const Basis& basis, RandomStream& rng) {
  const auto p = outcome_probabilities(state, basis);
  const int k = detail::sample_index(p, rng);
  return {k, basis.vector(k)};
}

inline Measurement measure(const Ket& state, BasisKind kind, RandomStream& rng) {
  return measure(state, Basis::layered(kind, {state.dim()}), rng);
}

// ---------------------------------------------------------------------------

/// Dense row-major complex matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {}

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(const std::vector<std::vector<Complex>>& rows) {
    if (rows.empty()) throw Error("Matrix::from_rows: empty matrix");
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int r = 0; r < m.rows_; ++r) {
      if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != m.cols_) throw Error("Matrix::from_rows: ragged rows");
      for (int c = 0; c < m.cols_; ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Complex& operator()(int r, int c) { return data_[index(r, c)]; }
  const Complex& operator()(int r, int c) const { return data_[index(r, c)]; }

  Matrix adjoint() const {
    Matrix m(cols_, rows_);
    for (int r = 0; r < rows_; ++r)
      for (int c = 0; c < cols_; ++c) m(c, r) = std::conj((*this)(r, c));
    return m;
  }

  Matrix operator*(const Matrix& o) const {
    if (cols_ != o.rows_) throw Error("Matrix: dimension mismatch in product");
    Matrix m(rows_, o.cols_);
    for (int r = 0; r < rows_; ++r)
      for (int k = 0; k < cols_; ++k) {
        const Complex a = (*this)(r, k);
        if (a == Complex{}) continue;
        for (int c = 0; c < o.cols_; ++c) m(r, c) += a * o(k, c);
      }
    return m;
  }

  /// max |(A^dagger A - I)_{ij}|; zero for an isometry.
  double isometry_error() const {
    double err = 0.0;
    for (int i = 0; i < cols_; ++i)
      for (int j = 0; j < cols_; ++j) {
        Complex s = 0.0;
        for (int r = 0; r < rows_; ++r) s += std::conj((*this)(r, i)) * (*this)(r, j);
        err = std::max(err, std::abs(s - (i == j ? Complex{1.0} : Complex{})));
      }
    return err;
  }

  bool is_unitary(double tol = kUnitaryTolerance) const {
    return rows_ == cols_ && isometry_error() <= tol;
  }

  std::vector<Complex> apply(std::span<const Complex> v) const {
    if (static_cast<int>(v.size()) != cols_) throw Error("Matrix::apply: dimension mismatch");
    std::vector<Complex> out(static_cast<std::size_t>(rows_));
    for (int r = 0; r < rows_; ++r) {
      Complex s = 0.0;
      const Complex* row = data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_);
      for (int c = 0; c < cols_; ++c) s += row[c] * v[static_cast<std::size_t>(c)];
      out[static_cast<std::size_t>(r)] = s;
    }
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<Complex> data_;
};

/// Kronecker product, `a` most significant.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix m(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l) m(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return m;
}

// ---------------------------------------------------------------------------

/// Pure state of several subsystems; subsystem 0 is the most significant
/// digit of the amplitude index.
class JointState {
 public:
  JointState(std::vector<int> dims, std::vector<Complex> amplitudes)
      : dims_(std::move(dims)), amps_(std::move(amplitudes)) {
    check_shape();
    if (std::abs(detail::squared_norm(amps_) - 1.0) > kNormTolerance)
      throw Error("JointState: amplitudes are not normalized");
  }

  static JointState product(std::span<const Ket> factors) {
    if (factors.empty()) throw Error("JointState::product: no factors");
    std::vector<int> dims;
    std::vector<Complex> amps{1.0};
    for (const auto& f : factors) {
      dims.push_back(f.dim());
      std::vector<Complex> next;
      next.reserve(amps.size() * static_cast<std::size_t>(f.dim()));
      for (const auto& a : amps)
        for (const auto& b : f.amplitudes()) next.push_back(a * b);
      amps = std::move(next);
      if (amps.size() > kMaxJointDim) throw Error("JointState: dimension exceeds 2^20");
    }
    return adopt(std::move(dims), std::move(amps));
  }

  static JointState product(std::initializer_list<Ket> factors) {
    const std::vector<Ket> v(factors);
    return product(std::span<const Ket>(v));
  }

  /// Takes amplitudes the caller has already normalized (no tolerance check).
  static JointState adopt(std::vector<int> dims, std::vector<Complex> amplitudes) {
    JointState s;
    s.dims_ = std::move(dims);
    s.amps_ = std::move(amplitudes);
    s.check_shape();
    return s;
  }

  const std::vector<int>& dims() const { return dims_; }
  std::span<const Complex> amplitudes() const { return amps_; }
  std::size_t size() const { return amps_.size(); }
  int subsystem_count() const { return static_cast<int>(dims_.size()); }
  double norm() const { return std::sqrt(detail::squared_norm(amps_)); }

  Complex amplitude(std::span<const int> digits) const {
    if (digits.size() != dims_.size()) throw Error("JointState::amplitude: wrong digit count");
    std::size_t idx = 0;
    for (std::size_t s = 0; s < dims_.size(); ++s) idx = idx * static_cast<std::size_t>(dims_[s]) + static_cast<std::size_t>(digits[s]);
    return amps_[idx];
  }

 private:
  JointState() = default;

  void check_shape() const {
    if (dims_.empty()) throw Error("JointState: no subsystems");
    std::size_t n = 1;
    for (int d : dims_) {
      if (d < 1) throw Error("JointState: subsystem dimension must be positive");
      n *= static_cast<std::size_t>(d);
      if (n > kMaxJointDim) throw Error("JointState: dimension exceeds 2^20");
    }
    if (n != amps_.size()) throw Error("JointState: amplitude count does not match dims");
  }

  std::vector<int> dims_;
  std::vector<Complex> amps_;
};

namespace detail {

/// Index bookkeeping for acting on a subset of subsystems.
struct SubsystemLayout {
  std::size_t sub_dim = 1;
  std::vector<std::size_t> offsets;  // full-index offset of each sub-index
  std::vector<std::size_t> bases;    // full indices whose selected digits are all zero
};

inline SubsystemLayout subsystem_layout(const std::vector<int>& dims, std::span<const int> subs) {
  const int n = static_cast<int>(dims.size());
  std::vector<std::size_t> stride(static_cast<std::size_t>(n), 1);
  for (int i = n - 2; i >= 0; --i) stride[static_cast<std::size_t>(i)] = stride[static_cast<std::size_t>(i + 1)] * static_cast<std::size_t>(dims[static_cast<std::size_t>(i + 1)]);

  std::vector<bool> selected(static_cast<std::size_t>(n), false);
  for (int s : subs) {
    if (s < 0 || s >= n) throw Error("subsystem index out of range");
    if (selected[static_cast<std::size_t>(s)]) throw Error("subsystem listed twice");
    selected[static_cast<std::size_t>(s)] = true;
  }

  SubsystemLayout lay;
  for (int s : subs) lay.sub_dim *= static_cast<std::size_t>(dims[static_cast<std::size_t>(s)]);
  lay.offsets.resize(lay.sub_dim);
  for (std::size_t k = 0; k < lay.sub_dim; ++k) {
    std::size_t rem = k, off = 0;
    for (std::size_t t = subs.size(); t-- > 0;) {
      const auto s = static_cast<std::size_t>(subs[t]);
      off += (rem % static_cast<std::size_t>(dims[s])) * stride[s];
      rem /= static_cast<std::size_t>(dims[s]);
    }
    lay.offsets[k] = off;
  }

  std::vector<int> rest;
  for (int i = 0; i < n; ++i)
    if (!selected[static_cast<std::size_t>(i)]) rest.push_back(i);
  std::size_t rest_dim = 1;
  for (int r : rest) rest_dim *= static_cast<std::size_t>(dims[static_cast<std::size_t>(r)]);
  lay.bases.resize(rest_dim);
  for (std::size_t k = 0; k < rest_dim; ++k) {
    std::size_t rem = k, off = 0;
    for (std::size_t t = rest.size(); t-- > 0;) {
      const auto s = static_cast<std::size_t>(rest[t]);
      off += (rem % static_cast<std::size_t>(dims[s])) * stride[s];
      rem /= static_cast<std::size_t>(dims[s]);
    }
    lay.bases[k] = off;
  }
  return lay;
}

}  // namespace detail

/// A matrix that has been checked to be unitary within kUnitaryTolerance.
class Unitary {
 public:
  explicit Unitary(Matrix m) : m_(std::move(m)) {
    if (!m_.is_unitary(kUnitaryTolerance)) throw Error("Unitary: matrix is not unitary");
  }

  const Matrix& matrix() const { return m_; }
  int dim() const { return m_.rows(); }

 private:
  Matrix m_;
};

namespace detail {

inline JointState apply_validated(const Matrix& unitary, const JointState& state, std::span<const int> subsystems) {
  const auto lay = subsystem_layout(state.dims(), subsystems);
  if (unitary.rows() != unitary.cols() || static_cast<std::size_t>(unitary.rows()) != lay.sub_dim)
    throw Error("apply_joint: matrix dimension does not match subsystems");
  const auto in = state.amplitudes();
  std::vector<Complex> out(in.size());
  std::vector<Complex> local(lay.sub_dim);
  for (std::size_t base : lay.bases) {
    for (std::size_t k = 0; k < lay.sub_dim; ++k) local[k] = in[base + lay.offsets[k]];
    const auto mapped = unitary.apply(local);
    for (std::size_t k = 0; k < lay.sub_dim; ++k) out[base + lay.offsets[k]] = mapped[k];
  }
  auto result = JointState::adopt(state.dims(), std::move(out));
  if (std::abs(result.norm() - state.norm()) > kUnitaryTolerance) throw Error("apply_joint: norm not preserved");
  return result;
}

}  // namespace detail

/// Applies `unitary` to the listed subsystems (first listed = most
/// significant factor of the matrix index). Throws on a dimension mismatch
/// or a matrix that is not unitary within 1e-10.
inline JointState apply_joint(const Matrix& unitary, const JointState& state, std::span<const int> subsystems) {
  if (unitary.rows() == unitary.cols() && !unitary.is_unitary(kUnitaryTolerance))
    throw Error("apply_joint: matrix is not unitary");
  return detail::apply_validated(unitary, state, subsystems);
}

inline JointState apply_joint(const Unitary& unitary, const JointState& state, std::span<const int> subsystems) {
  return detail::apply_validated(unitary.matrix(), state, subsystems);
}

inline JointState apply_joint(const Unitary& unitary, const JointState& state, std::initializer_list<int> subsystems) {
  const std::vector<int> v(subsystems);
  return apply_joint(unitary, state, std::span<const int>(v));
}

inline JointState apply_joint(const Matrix& unitary, const JointState& state, std::initializer_list<int> subsystems) {
  const std::vector<int> v(subsystems);
  return apply_joint(unitary, state, std::span<const int>(v));
}

/// Outcome distribution of measuring one subsystem in `basis`.
inline std::vector<double> subsystem_probabilities(const JointState& state, int subsystem, const Basis& basis) {
  const int subs[] = {subsystem};
  const auto lay = detail::subsystem_layout(state.dims(), subs);
  if (static_cast<int>(lay.sub_dim) != basis.dim()) throw Error("measure_joint: basis dimension mismatch");
  const auto amps = state.amplitudes();
  std::vector<double> p(lay.sub_dim, 0.0);
  std::vector<Complex> local(lay.sub_dim);
  for (std::size_t base : lay.bases) {
    for (std::size_t k = 0; k < lay.sub_dim; ++k) local[k] = amps[base + lay.offsets[k]];
    for (int b = 0; b < basis.dim(); ++b) p[static_cast<std::size_t>(b)] += std::norm(basis.overlap(b, local));
  }
  return p;
}

struct JointMeasurement {
  int outcome;
  JointState post;
};

/// Projective measurement of one subsystem; the post-state is renormalized
/// and the measured subsystem is left in the observed basis ket.
inline JointMeasurement measure_joint(const JointState& state, int subsystem, const Basis& basis, RandomStream& rng) {
  if (subsystem < 0 || subsystem >= state.subsystem_count()) throw Error("measure_joint: subsystem index out of range");
  const auto p = subsystem_probabilities(state, subsystem, basis);
  const int b = detail::sample_index(p, rng);

  const int subs[] = {subsystem};
  const auto lay = detail::subsystem_layout(state.dims(), subs);
  const auto amps = state.amplitudes();
  const double scale = 1.0 / std::sqrt(p[static_cast<std::size_t>(b)]);
  std::vector<Complex> out(amps.size());
  std::vector<Complex> local(lay.sub_dim);
  for (std::size_t base : lay.bases) {
    for (std::size_t k = 0; k < lay.sub_dim; ++k) local[k] = amps[base + lay.offsets[k]];
    const Complex c = basis.overlap(b, local) * scale;
    for (std::size_t k = 0; k < lay.sub_dim; ++k) out[base + lay.offsets[k]] = basis.component(b, static_cast<int>(k)) * c;
  }
  return {b, JointState::adopt(state.dims(), std::move(out))};
}

inline JointMeasurement measure_joint(const JointState& state, int subsystem, BasisKind kind, RandomStream& rng) {
  if (subsystem < 0 || subsystem >= state.subsystem_count()) throw Error("measure_joint: subsystem index out of range");
  return measure_joint(state, subsystem, Basis::layered(kind, {state.dims()[static_cast<std::size_t>(subsystem)]}), rng);
}

/// Haar-random unitary of size n (QR of a complex Gaussian matrix with the
/// phase of R's diagonal absorbed).
inline Matrix random_unitary(int n, RandomStream& rng) {
  std::vector<std::vector<Complex>> cols(static_cast<std::size_t>(n), std::vector<Complex>(static_cast<std::size_t>(n)));
  for (auto& col : cols)
    for (auto& z : col) z = Complex(rng.normal(), rng.normal()) / std::sqrt(2.0);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < j; ++i) {
        Complex proj = 0.0;
        for (int k = 0; k < n; ++k) proj += std::conj(cols[i][static_cast<std::size_t>(k)]) * cols[j][static_cast<std::size_t>(k)];
        for (int k = 0; k < n; ++k) cols[j][static_cast<std::size_t>(k)] -= proj * cols[i][static_cast<std::size_t>(k)];
      }
    const double nrm = std::sqrt(detail::squared_norm(cols[j]));
    for (auto& z : cols[j]) z /= nrm;
  }
  Matrix m(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) m(r, c) = cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
  return m;
}

}  // namespace lqkd
