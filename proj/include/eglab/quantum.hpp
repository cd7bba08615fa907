#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

// Bipartite permutation-invariant states, Hermitian operators, measurement
// families and sub-measurements, plus the bilinear form <A,B>_Psi that every
// consistency metric is phrased in.
namespace eglab::quantum {

using Matrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// Returns z.real() after checking |z.imag()| <= tol; the quantities we take
// real parts of are real by symmetry, so a visible imaginary residue means a
// bug upstream rather than roundoff to be discarded silently.
double real_checked(Complex z, double tol = 1e-10);

// Hermitian dim x dim operator.  Construction validates Hermiticity to
// 1e-12 relative to the entry scale and then symmetrizes exactly, so the
// invariant holds bit-for-bit afterwards.
class Operator {
 public:
  explicit Operator(Matrix mat);

  std::size_t dim() const { return static_cast<std::size_t>(mat_.rows()); }
  const Matrix& mat() const { return mat_; }

  static Operator identity(std::size_t dim);
  static Operator zero(std::size_t dim);

  double min_eigenvalue() const;
  double max_eigenvalue() const;
  bool is_psd(double floor = -1e-10) const { return min_eigenvalue() >= floor; }

  bool operator==(const Operator&) const = default;

 private:
  Matrix mat_;
};

// |Psi> = sum_ij M_ij |i>|j> with M symmetric (permutation invariance) and
// unit Frobenius norm, both within 1e-12 at construction.
class BipartiteState {
 public:
  explicit BipartiteState(Matrix coeffs);

  // Scales an un-normalized coefficient matrix to unit norm first (symmetry
  // is still required).  Convenience for tests and state constructions.
  static BipartiteState normalized(Matrix coeffs);

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& coeffs() const { return m_; }

  // rho = M M^dagger, the reduced density matrix on either register.
  Matrix reduced_density() const { return m_ * m_.adjoint(); }

  // Number of eigenvalues of the reduced density above tol.  Diagnostic for
  // the full-support hypothesis the duality results lean on.
  std::size_t support_dim(double tol = 1e-10) const;

 private:
  BipartiteState() = default;
  Matrix m_;
};

BipartiteState maximally_entangled(std::size_t dim);

// <Psi| A (x) B |Psi> = tr(M^dagger A M B^T), contracted against the
// coefficient matrix; the dim^2-dimensional tensor product is never formed.
// Note neither A nor B is conjugated.
Complex pair_expectation(const Matrix& a, const Matrix& b,
                         const BipartiteState& psi);
Complex pair_expectation(const Operator& a, const Operator& b,
                         const BipartiteState& psi);

// Family of sub-measurements {M_x^a} indexed by questions x in {0,..,|X|-1}
// with outcomes a in {0,..,|A|-1} and a question distribution (default
// uniform).  Each operator must be PSD (floor -1e-10) and each per-question
// sum must satisfy sum_a M_x^a <= Id + 1e-10.
class MeasurementFamily {
 public:
  MeasurementFamily(std::vector<std::vector<Operator>> ops,
                    std::vector<double> weights = {});

  std::size_t num_questions() const { return ops_.size(); }
  std::size_t num_outcomes() const { return ops_.front().size(); }
  std::size_t dim() const { return ops_.front().front().dim(); }
  const Operator& op(std::size_t x, std::size_t a) const { return ops_[x][a]; }
  double weight(std::size_t x) const { return weights_[x]; }
  const std::vector<double>& weights() const { return weights_; }

  // sum_a M_x^a for one question.
  Matrix sum_at(std::size_t x) const;
  // True when every per-question sum equals Id within tol (a measurement
  // rather than a strict sub-measurement).
  bool is_complete(double tol = 1e-10) const;

 private:
  std::vector<std::vector<Operator>> ops_;  // [x][a]
  std::vector<double> weights_;
};

// Sub-measurement {T^g}: PSD operators with sum_g T^g <= Id + 1e-10.  The sum
// operator is cached at construction.
class SubMeasurement {
 public:
  explicit SubMeasurement(std::vector<Operator> ops);

  std::size_t num_outcomes() const { return ops_.size(); }
  std::size_t dim() const { return ops_.front().dim(); }
  const Operator& op(std::size_t g) const { return ops_[g]; }
  const Matrix& sum() const { return sum_; }

 private:
  std::vector<Operator> ops_;
  Matrix sum_;
};

// E_x sum_a <(F_x^a - G_x^a)^2, Id>_Psi, the closeness functional behind the
// approximate-equality notation for operator families.
double closeness(const MeasurementFamily& f, const MeasurementFamily& g,
                 const BipartiteState& psi);

// |Phi~> = (Id - T) (x) (Id - T) |Psi>, returned normalized together with its
// squared norm.  Requires 0 <= T <= Id; throws std::domain_error when the
// residual is numerically zero (T acts as the identity on the support).
std::pair<BipartiteState, double> restricted_state(const BipartiteState& psi,
                                                   const Operator& t);

// Change of basis onto the support of the reduced density: `basis` is the
// dim x k isometry whose columns span the support, and `state` is psi
// re-expressed there (full support by construction).  Operators that
// preserve the support transport via compress_operator without changing any
// pair expectation; for others the off-support blocks are simply dropped.
struct SupportCompression {
  Matrix basis;
  BipartiteState state;
};
SupportCompression compress_to_support(const BipartiteState& psi,
                                       double tol = 1e-10);
Matrix compress_operator(const Matrix& a, const Matrix& basis);

}  // namespace eglab::quantum
