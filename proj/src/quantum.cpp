#include "eglab/quantum.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

namespace eglab::quantum {

double real_checked(Complex z, double tol) {
  if (std::abs(z.imag()) > tol)
    throw std::runtime_error("expected a real quantity, imaginary residue " +
                             std::to_string(z.imag()));
  return z.real();
}

Operator::Operator(Matrix mat) : mat_(std::move(mat)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() == 0)
    throw std::invalid_argument("operator matrix must be square and nonempty");
  double scale = std::max(1.0, mat_.cwiseAbs().maxCoeff());
  double defect = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
  if (defect > 1e-12 * scale)
    throw std::invalid_argument("operator is not Hermitian (defect " +
                                std::to_string(defect) + ")");
  mat_ = ((mat_ + mat_.adjoint()) / 2.0).eval();
}

Operator Operator::identity(std::size_t dim) {
  return Operator(Matrix::Identity(dim, dim));
}

Operator Operator::zero(std::size_t dim) {
  return Operator(Matrix::Zero(dim, dim));
}

double Operator::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(mat_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double Operator::max_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(mat_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

BipartiteState::BipartiteState(Matrix coeffs) : m_(std::move(coeffs)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0)
    throw std::invalid_argument("state coefficient matrix must be square");
  double sym = (m_ - m_.transpose()).cwiseAbs().maxCoeff();
  if (sym > 1e-12)
    throw std::invalid_argument(
        "state is not permutation-invariant (M != M^T, defect " +
        std::to_string(sym) + ")");
  double norm2 = m_.squaredNorm();
  if (std::abs(norm2 - 1.0) > 1e-12)
    throw std::invalid_argument("state is not normalized (|M|^2 = " +
                                std::to_string(norm2) + ")");
  m_ = ((m_ + m_.transpose()) / 2.0).eval();
}

BipartiteState BipartiteState::normalized(Matrix coeffs) {
  double n = coeffs.norm();
  if (n < 1e-12)
    throw std::invalid_argument("cannot normalize a zero coefficient matrix");
  BipartiteState psi;
  psi.m_ = coeffs / n;
  double sym = (psi.m_ - psi.m_.transpose()).cwiseAbs().maxCoeff();
  if (sym > 1e-12)
    throw std::invalid_argument("state is not permutation-invariant");
  psi.m_ = ((psi.m_ + psi.m_.transpose()) / 2.0).eval();
  psi.m_ /= psi.m_.norm();
  return psi;
}

std::size_t BipartiteState::support_dim(double tol) const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(reduced_density(),
                                           Eigen::EigenvaluesOnly);
  return static_cast<std::size_t>((es.eigenvalues().array() > tol).count());
}

BipartiteState maximally_entangled(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("dimension must be >= 1");
  Matrix m = Matrix::Identity(dim, dim) / std::sqrt(static_cast<double>(dim));
  return BipartiteState(std::move(m));
}

Complex pair_expectation(const Matrix& a, const Matrix& b,
                         const BipartiteState& psi) {
  const auto d = static_cast<Eigen::Index>(psi.dim());
  if (a.rows() != d || a.cols() != d || b.rows() != d || b.cols() != d)
    throw std::invalid_argument("operator/state dimension mismatch");
  const Matrix& m = psi.coeffs();
  return ((m.adjoint() * a * m) * b.transpose()).trace();
}

Complex pair_expectation(const Operator& a, const Operator& b,
                         const BipartiteState& psi) {
  return pair_expectation(a.mat(), b.mat(), psi);
}

MeasurementFamily::MeasurementFamily(std::vector<std::vector<Operator>> ops,
                                     std::vector<double> weights)
    : ops_(std::move(ops)), weights_(std::move(weights)) {
  if (ops_.empty() || ops_.front().empty())
    throw std::invalid_argument("measurement family needs >= 1 question and outcome");
  const std::size_t n_out = ops_.front().size(), d = ops_.front().front().dim();
  for (const auto& per_x : ops_) {
    if (per_x.size() != n_out)
      throw std::invalid_argument("ragged outcome sets across questions");
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& op : per_x) {
      if (op.dim() != d)
        throw std::invalid_argument("mixed operator dimensions in family");
      if (!op.is_psd())
        throw std::invalid_argument("measurement operator is not PSD");
      sum += op.mat();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sum, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().maxCoeff() > 1.0 + 1e-10)
      throw std::invalid_argument("per-question operator sum exceeds Id");
  }
  if (weights_.empty()) {
    weights_.assign(ops_.size(), 1.0 / static_cast<double>(ops_.size()));
  } else {
    if (weights_.size() != ops_.size())
      throw std::invalid_argument("weight vector length mismatch");
    double total = 0;
    for (double w : weights_) {
      if (w < 0) throw std::invalid_argument("negative question weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-10)
      throw std::invalid_argument("question weights must sum to 1");
  }
}

Matrix MeasurementFamily::sum_at(std::size_t x) const {
  Matrix sum = Matrix::Zero(dim(), dim());
  for (const auto& op : ops_[x]) sum += op.mat();
  return sum;
}

bool MeasurementFamily::is_complete(double tol) const {
  const auto d = static_cast<Eigen::Index>(dim());
  for (std::size_t x = 0; x < num_questions(); ++x)
    if ((sum_at(x) - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol)
      return false;
  return true;
}

SubMeasurement::SubMeasurement(std::vector<Operator> ops) : ops_(std::move(ops)) {
  if (ops_.empty())
    throw std::invalid_argument("sub-measurement needs >= 1 outcome");
  const std::size_t d = ops_.front().dim();
  sum_ = Matrix::Zero(d, d);
  for (const auto& op : ops_) {
    if (op.dim() != d)
      throw std::invalid_argument("mixed operator dimensions in sub-measurement");
    if (!op.is_psd())
      throw std::invalid_argument("sub-measurement operator is not PSD");
    sum_ += op.mat();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(sum_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().maxCoeff() > 1.0 + 1e-10)
    throw std::invalid_argument("sub-measurement sum exceeds Id");
}

double closeness(const MeasurementFamily& f, const MeasurementFamily& g,
                 const BipartiteState& psi) {
  if (f.num_questions() != g.num_questions() ||
      f.num_outcomes() != g.num_outcomes() || f.dim() != g.dim() ||
      f.dim() != psi.dim())
    throw std::invalid_argument("closeness: family/state shape mismatch");
  const auto d = static_cast<Eigen::Index>(f.dim());
  const Matrix id = Matrix::Identity(d, d);
  double total = 0;
  for (std::size_t x = 0; x < f.num_questions(); ++x) {
    double per_x = 0;
    for (std::size_t a = 0; a < f.num_outcomes(); ++a) {
      Matrix diff = f.op(x, a).mat() - g.op(x, a).mat();
      per_x += real_checked(pair_expectation(diff * diff, id, psi));
    }
    total += f.weight(x) * per_x;
  }
  return total;
}

std::pair<BipartiteState, double> restricted_state(const BipartiteState& psi,
                                                   const Operator& t) {
  if (t.dim() != psi.dim())
    throw std::invalid_argument("restriction operator dimension mismatch");
  if (t.min_eigenvalue() < -1e-10 || t.max_eigenvalue() > 1.0 + 1e-10)
    throw std::invalid_argument("restriction requires 0 <= T <= Id");
  const auto d = static_cast<Eigen::Index>(psi.dim());
  Matrix c = Matrix::Identity(d, d) - t.mat();
  Matrix residual = c * psi.coeffs() * c.transpose();
  residual = ((residual + residual.transpose()) / 2.0).eval();
  double norm2 = residual.squaredNorm();
  if (norm2 < 1e-14)
    throw std::domain_error(
        "restricted state has numerically zero norm (T = Id on the support)");
  return {BipartiteState::normalized(std::move(residual)), norm2};
}

SupportCompression compress_to_support(const BipartiteState& psi, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(psi.reduced_density());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > tol) keep.push_back(i);
  if (keep.empty())
    throw std::domain_error("state has empty support at the given tolerance");
  Matrix u(psi.dim(), keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c)
    u.col(c) = es.eigenvectors().col(keep[c]);
  // M' = U^dagger M conj(U) keeps the coefficient matrix symmetric and turns
  // the reduced density into the diagonal of kept eigenvalues.
  Matrix compressed = u.adjoint() * psi.coeffs() * u.conjugate();
  return {std::move(u), BipartiteState::normalized(std::move(compressed))};
}

Matrix compress_operator(const Matrix& a, const Matrix& basis) {
  if (a.rows() != basis.rows() || a.cols() != basis.rows())
    throw std::invalid_argument("operator/basis dimension mismatch");
  return basis.adjoint() * a * basis;
}

}  // namespace eglab::quantum
