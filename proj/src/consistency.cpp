#include "eglab/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace eglab::consistency {

using quantum::BipartiteState;
using quantum::Matrix;
using quantum::MeasurementFamily;
using quantum::Operator;
using quantum::pair_expectation;
using quantum::real_checked;
using quantum::SubMeasurement;

StructuredFamily::StructuredFamily(std::size_t num_questions,
                                   std::size_t num_answers,
                                   std::vector<FunctionTable> functions)
    : num_questions_(num_questions),
      num_answers_(num_answers),
      functions_(std::move(functions)),
      kappa_(0) {
  if (num_questions_ == 0 || num_answers_ == 0 || functions_.empty())
    throw std::invalid_argument("structured family needs questions, answers, functions");
  for (const auto& f : functions_) {
    if (f.size() != num_questions_)
      throw std::invalid_argument("function table length != |X|");
    for (auto v : f)
      if (v >= num_answers_)
        throw std::invalid_argument("function value outside the answer set");
  }
  std::set<FunctionTable> distinct(functions_.begin(), functions_.end());
  if (distinct.size() != functions_.size())
    throw std::invalid_argument("duplicate function in structured family");
  // kappa is an exhaustive pairwise scan; keep it within a sane budget.
  double cost = static_cast<double>(num_questions_) *
                static_cast<double>(functions_.size()) *
                static_cast<double>(functions_.size());
  if (cost > 1e8)
    throw std::domain_error("structure-constant scan |X|*|G|^2 exceeds 1e8");
  for (std::size_t g = 0; g < functions_.size(); ++g)
    for (std::size_t h = g + 1; h < functions_.size(); ++h)
      kappa_ = std::max(kappa_, agreement(g, h));
}

Rational StructuredFamily::agreement(std::size_t g, std::size_t h) const {
  if (g >= functions_.size() || h >= functions_.size())
    throw std::invalid_argument("function index out of range");
  std::int64_t same = 0;
  for (std::size_t x = 0; x < num_questions_; ++x)
    if (functions_[g][x] == functions_[h][x]) ++same;
  return Rational(same, static_cast<std::int64_t>(num_questions_));
}

void ConsistencyReport::validate() {
  for (double* v : {&self_consistency, &projectivity, &consistency,
                    &completeness_error, &structure}) {
    if (*v < -1e-9 || *v > 1.0 + 1e-9)
      throw std::runtime_error("consistency metric out of range: " +
                               std::to_string(*v));
    *v = std::max(*v, 0.0);
  }
}

double self_consistency(const MeasurementFamily& m, const BipartiteState& psi) {
  if (m.dim() != psi.dim())
    throw std::invalid_argument("family/state dimension mismatch");
  double total = 0;
  for (std::size_t x = 0; x < m.num_questions(); ++x) {
    double per_x = 0;
    for (std::size_t a = 0; a < m.num_outcomes(); ++a)
      for (std::size_t b = 0; b < m.num_outcomes(); ++b) {
        if (a == b) continue;
        per_x += real_checked(pair_expectation(m.op(x, a), m.op(x, b), psi));
      }
    total += m.weight(x) * per_x;
  }
  return total;
}

double self_consistency(const SubMeasurement& t, const BipartiteState& psi) {
  if (t.dim() != psi.dim())
    throw std::invalid_argument("sub-measurement/state dimension mismatch");
  double total = 0;
  for (std::size_t g = 0; g < t.num_outcomes(); ++g)
    for (std::size_t h = 0; h < t.num_outcomes(); ++h) {
      if (g == h) continue;
      total += real_checked(pair_expectation(t.op(g), t.op(h), psi));
    }
  return total;
}

double projectivity_defect(const MeasurementFamily& m,
                           const BipartiteState& psi) {
  if (m.dim() != psi.dim())
    throw std::invalid_argument("family/state dimension mismatch");
  const auto d = static_cast<Eigen::Index>(m.dim());
  const Matrix id = Matrix::Identity(d, d);
  double total = 0;
  for (std::size_t x = 0; x < m.num_questions(); ++x) {
    Matrix mx = m.sum_at(x);
    total += m.weight(x) * real_checked(pair_expectation(mx, id - mx, psi));
  }
  return total;
}

double projectivity_defect(const SubMeasurement& t, const BipartiteState& psi) {
  if (t.dim() != psi.dim())
    throw std::invalid_argument("sub-measurement/state dimension mismatch");
  const auto d = static_cast<Eigen::Index>(t.dim());
  const Matrix id = Matrix::Identity(d, d);
  return real_checked(pair_expectation(t.sum(), id - t.sum(), psi));
}

double cross_consistency(const SubMeasurement& t, const StructuredFamily& g,
                         const MeasurementFamily& m, const BipartiteState& psi) {
  if (t.num_outcomes() != g.size())
    throw std::invalid_argument("sub-measurement outcomes != |G|");
  if (g.num_questions() != m.num_questions() ||
      g.num_answers() != m.num_outcomes())
    throw std::invalid_argument("structured family does not match the measurement family");
  if (t.dim() != psi.dim() || m.dim() != psi.dim())
    throw std::invalid_argument("dimension mismatch");
  double total = 0;
  for (std::size_t x = 0; x < m.num_questions(); ++x) {
    double per_x = 0;
    for (std::size_t gi = 0; gi < g.size(); ++gi)
      for (std::size_t a = 0; a < m.num_outcomes(); ++a) {
        if (a == g.function(gi)[x]) continue;
        per_x += real_checked(pair_expectation(t.op(gi), m.op(x, a), psi));
      }
    total += m.weight(x) * per_x;
  }
  return total;
}

double completeness_error(const SubMeasurement& t, const BipartiteState& psi) {
  if (t.dim() != psi.dim())
    throw std::invalid_argument("sub-measurement/state dimension mismatch");
  const auto d = static_cast<Eigen::Index>(t.dim());
  return 1.0 - real_checked(
                   pair_expectation(t.sum(), Matrix::Identity(d, d), psi));
}

Operator aggregate(const MeasurementFamily& m, const FunctionTable& g) {
  if (g.size() != m.num_questions())
    throw std::invalid_argument("function table length != |X|");
  const auto d = static_cast<Eigen::Index>(m.dim());
  Matrix acc = Matrix::Zero(d, d);
  for (std::size_t x = 0; x < m.num_questions(); ++x) {
    if (g[x] >= m.num_outcomes())
      throw std::invalid_argument("function value outside the outcome set");
    acc += m.weight(x) * m.op(x, g[x]).mat();
  }
  return Operator(std::move(acc));
}

double commutation_defect(const SubMeasurement& t, const MeasurementFamily& m,
                          const BipartiteState& psi) {
  if (t.dim() != m.dim() || m.dim() != psi.dim())
    throw std::invalid_argument("dimension mismatch");
  const auto d = static_cast<Eigen::Index>(m.dim());
  const Matrix id = Matrix::Identity(d, d);
  const Matrix& ts = t.sum();
  double total = 0;
  for (std::size_t x = 0; x < m.num_questions(); ++x) {
    double per_x = 0;
    for (std::size_t a = 0; a < m.num_outcomes(); ++a) {
      Matrix c = ts * m.op(x, a).mat() - m.op(x, a).mat() * ts;
      per_x += real_checked(pair_expectation(c.adjoint() * c, id, psi));
    }
    total += m.weight(x) * per_x;
  }
  return total;
}

double aggregate_swap_gap(const MeasurementFamily& m, const StructuredFamily& g,
                          const SubMeasurement& r, const BipartiteState& psi) {
  if (r.num_outcomes() != g.size())
    throw std::invalid_argument("sub-measurement outcomes != |G|");
  if (g.num_questions() != m.num_questions() ||
      g.num_answers() != m.num_outcomes())
    throw std::invalid_argument("structured family does not match the measurement family");
  if (r.dim() != psi.dim() || m.dim() != psi.dim())
    throw std::invalid_argument("dimension mismatch");
  const auto d = static_cast<Eigen::Index>(m.dim());
  const Matrix id = Matrix::Identity(d, d);
  quantum::Complex paired = 0, swapped = 0;
  for (std::size_t gi = 0; gi < g.size(); ++gi) {
    Matrix ag = aggregate(m, g.function(gi)).mat();
    paired += pair_expectation(ag, r.op(gi).mat(), psi);
    swapped += pair_expectation(id, r.op(gi).mat() * ag, psi);
  }
  return std::abs(paired - swapped);
}

}  // namespace eglab::consistency
