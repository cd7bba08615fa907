#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "eglab/consistency.hpp"
#include "eglab/rng.hpp"

using eglab::CounterRng;
using eglab::Rational;
using eglab::consistency::aggregate;
using eglab::consistency::aggregate_swap_gap;
using eglab::consistency::commutation_defect;
using eglab::consistency::completeness_error;
using eglab::consistency::ConsistencyReport;
using eglab::consistency::cross_consistency;
using eglab::consistency::FunctionTable;
using eglab::consistency::projectivity_defect;
using eglab::consistency::self_consistency;
using eglab::consistency::StructuredFamily;
using eglab::quantum::BipartiteState;
using eglab::quantum::Complex;
using eglab::quantum::Matrix;
using eglab::quantum::maximally_entangled;
using eglab::quantum::MeasurementFamily;
using eglab::quantum::Operator;
using eglab::quantum::SubMeasurement;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Deterministic measurement family from tabulated answers: M_x^a = Id when
// a = table[x], else 0.
MeasurementFamily deterministic_family(const FunctionTable& table,
                                       std::size_t num_outcomes,
                                       std::size_t dim) {
  std::vector<std::vector<Operator>> ops;
  for (auto ax : table) {
    std::vector<Operator> per_x;
    for (std::size_t a = 0; a < num_outcomes; ++a)
      per_x.push_back(a == ax ? Operator::identity(dim) : Operator::zero(dim));
    ops.push_back(std::move(per_x));
  }
  return MeasurementFamily(std::move(ops));
}

Matrix random_hermitian(Eigen::Index d, CounterRng& rng) {
  Matrix r(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      r(i, j) = Complex(2 * rng.next_double() - 1, 2 * rng.next_double() - 1);
  return (r + r.adjoint()) / 2.0;
}

// Random measurement family (complete: per-question ops sum to Id exactly)
// obtained by shifting and scaling random Hermitians.
MeasurementFamily random_family(std::size_t nx, std::size_t na, Eigen::Index d,
                                CounterRng& rng) {
  std::vector<std::vector<Operator>> ops;
  for (std::size_t x = 0; x < nx; ++x) {
    std::vector<Matrix> raw;
    Matrix sum = Matrix::Zero(d, d);
    for (std::size_t a = 0; a < na; ++a) {
      Matrix h = random_hermitian(d, rng);
      Eigen::SelfAdjointEigenSolver<Matrix> es(h);
      h -= (es.eigenvalues().minCoeff() - 0.1) * Matrix::Identity(d, d);
      raw.push_back(h);
      sum += h;
    }
    // Normalize by sum^{-1/2} on both sides so the outcomes add up to Id.
    Eigen::SelfAdjointEigenSolver<Matrix> es(sum);
    Matrix inv_sqrt = es.operatorInverseSqrt();
    std::vector<Operator> per_x;
    for (auto& h : raw) {
      Matrix op = inv_sqrt * h * inv_sqrt;
      per_x.push_back(Operator((op + op.adjoint()) / 2.0));
    }
    ops.push_back(std::move(per_x));
  }
  return MeasurementFamily(std::move(ops));
}

BipartiteState random_state(Eigen::Index d, CounterRng& rng) {
  Matrix r(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      r(i, j) = Complex(2 * rng.next_double() - 1, 2 * rng.next_double() - 1);
  return BipartiteState::normalized((r + r.transpose()) / 2.0);
}

// Independent dense oracle for <A, B>_Psi through the dim^2 vector.
double dense_pe(const Matrix& a, const Matrix& b, const BipartiteState& psi) {
  const Eigen::Index d = static_cast<Eigen::Index>(psi.dim());
  Eigen::VectorXcd v(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) v(i * d + j) = psi.coeffs()(i, j);
  Matrix k(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      k.block(i * d, j * d, d, d) = a(i, j) * b;
  return ((v.adjoint() * k * v)(0, 0)).real();
}

}  // namespace

TEST_CASE("structured family: kappa recomputed from the tables") {
  StructuredFamily s(3, 2, {{0, 0, 0}, {0, 0, 1}, {1, 1, 0}});
  CHECK(s.kappa() == Rational(2, 3));  // first two tables agree on {0,1}
  CHECK(s.agreement(0, 2) == Rational(1, 3));
  CHECK(s.agreement(1, 1) == Rational(1));
  CHECK(s.size() == 3);

  StructuredFamily lone(4, 3, {{0, 1, 2, 0}});
  CHECK(lone.kappa() == Rational(0));  // no distinct pair

  StructuredFamily disjoint(2, 2, {{0, 0}, {1, 1}});
  CHECK(disjoint.kappa() == Rational(0));
}

TEST_CASE("structured family: validation and the pairwise-scan guard") {
  CHECK_THROWS_AS(StructuredFamily(3, 2, {{0, 0, 0}, {0, 0, 0}}),
                  std::invalid_argument);  // duplicate
  CHECK_THROWS_AS(StructuredFamily(3, 2, {{0, 0}}),
                  std::invalid_argument);  // wrong length
  CHECK_THROWS_AS(StructuredFamily(3, 2, {{0, 0, 2}}),
                  std::invalid_argument);  // value out of range
  CHECK_THROWS_AS(StructuredFamily(3, 2, {}), std::invalid_argument);

  // |X| * |G|^2 = 10^4 * 101^2 > 1e8 trips the guard.
  std::vector<FunctionTable> many;
  for (std::uint32_t k = 0; k < 101; ++k) {
    FunctionTable f(10000);
    for (std::size_t x = 0; x < f.size(); ++x)
      f[x] = static_cast<std::uint32_t>((x + k) % 101);
    many.push_back(std::move(f));
  }
  CHECK_THROWS_AS(StructuredFamily(10000, 101, std::move(many)),
                  std::domain_error);
}

TEST_CASE("consistency report: range validation clamps fuzz, rejects junk") {
  ConsistencyReport r{1e-12, -5e-10, 0.5, 1.0, 0.25};
  r.validate();
  CHECK(r.projectivity == 0.0);
  CHECK(r.consistency == 0.5);

  ConsistencyReport bad{0, 0, 1.5, 0, 0};
  CHECK_THROWS_AS(bad.validate(), std::runtime_error);
  ConsistencyReport negative{0, 0, 0, -0.2, 0};
  CHECK_THROWS_AS(negative.validate(), std::runtime_error);
}

TEST_CASE("self-consistency: projective diagonal family is exactly zero") {
  Operator p0(diag2(1, 0)), p1(diag2(0, 1));
  MeasurementFamily fam({{p0, p1}, {p1, p0}});
  CHECK(self_consistency(fam, maximally_entangled(2)) == 0.0);
}

TEST_CASE("self-consistency: the half-identity hand value") {
  Operator half(diag2(0.5, 0.5));
  MeasurementFamily fam({{half, half}});
  CHECK(self_consistency(fam, maximally_entangled(2)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // Sub-measurement flavour of the same computation.
  SubMeasurement t({half, half});
  CHECK(self_consistency(t, maximally_entangled(2)) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("self-consistency: matches a dense brute-force oracle") {
  CounterRng rng(21, 0);
  for (int trial = 0; trial < 4; ++trial) {
    MeasurementFamily fam = random_family(3, 2, 3, rng);
    BipartiteState psi = random_state(3, rng);
    double want = 0;
    for (std::size_t x = 0; x < 3; ++x)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b)
          if (a != b)
            want += dense_pe(fam.op(x, a).mat(), fam.op(x, b).mat(), psi) / 3.0;
    CHECK(self_consistency(fam, psi) == doctest::Approx(want).epsilon(1e-11));
    CHECK(self_consistency(fam, psi) >= -1e-12);
  }
}

TEST_CASE("projectivity defect: zero for projective families, 1/4 for Id/2") {
  Operator p0(diag2(1, 0)), p1(diag2(0, 1));
  BipartiteState psi = maximally_entangled(2);
  CHECK(projectivity_defect(MeasurementFamily({{p0, p1}}), psi) == 0.0);

  MeasurementFamily half({{Operator(diag2(0.5, 0.5))}});
  CHECK(projectivity_defect(half, psi) == doctest::Approx(0.25).epsilon(1e-12));

  SubMeasurement t({Operator(diag2(0.5, 0.5))});
  CHECK(projectivity_defect(t, psi) == doctest::Approx(0.25).epsilon(1e-12));
  SubMeasurement proj({p0});
  CHECK(projectivity_defect(proj, psi) == doctest::Approx(0.0));
}

TEST_CASE("cross-consistency: zero against the generating table, f when differing") {
  const std::size_t dim = 2;
  BipartiteState psi = maximally_entangled(dim);
  FunctionTable g = {0, 1, 0};
  MeasurementFamily fam = deterministic_family(g, 2, dim);
  StructuredFamily fams(3, 2, {g});
  SubMeasurement t({Operator::identity(dim)});
  CHECK(cross_consistency(t, fams, fam, psi) == 0.0);

  // A table differing on one question out of three scores exactly 1/3.
  FunctionTable g2 = {0, 1, 1};
  StructuredFamily other(3, 2, {g2});
  CHECK(cross_consistency(t, other, fam, psi) ==
        doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("cross-consistency: dense oracle and shape errors") {
  CounterRng rng(22, 0);
  const Eigen::Index d = 3;
  MeasurementFamily fam = random_family(3, 2, d, rng);
  BipartiteState psi = random_state(d, rng);
  StructuredFamily fams(3, 2, {{0, 1, 0}, {1, 1, 1}});
  // A small sub-measurement: scaled projectors summing below Id.
  Matrix q0 = Matrix::Zero(d, d), q1 = Matrix::Zero(d, d);
  q0(0, 0) = 0.5;
  q1(1, 1) = 0.75;
  SubMeasurement t({Operator(q0), Operator(q1)});

  double want = 0;
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t gi = 0; gi < 2; ++gi)
      for (std::size_t a = 0; a < 2; ++a)
        if (a != fams.function(gi)[x])
          want += dense_pe(t.op(gi).mat(), fam.op(x, a).mat(), psi) / 3.0;
  CHECK(cross_consistency(t, fams, fam, psi) ==
        doctest::Approx(want).epsilon(1e-11));

  SubMeasurement wrong_count({Operator(q0)});
  CHECK_THROWS_AS(cross_consistency(wrong_count, fams, fam, psi),
                  std::invalid_argument);
  StructuredFamily wrong_x(2, 2, {{0, 1}});
  SubMeasurement one({Operator(q0)});
  CHECK_THROWS_AS(cross_consistency(one, wrong_x, fam, psi),
                  std::invalid_argument);
}

TEST_CASE("completeness error: 1 - <T, Id>") {
  BipartiteState psi = maximally_entangled(2);
  SubMeasurement full({Operator(diag2(1, 0)), Operator(diag2(0, 1))});
  CHECK(completeness_error(full, psi) == doctest::Approx(0.0));
  SubMeasurement half({Operator(diag2(1, 0))});
  CHECK(completeness_error(half, psi) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("aggregate: constant function on an x-independent family") {
  Operator p0(diag2(1, 0)), p1(diag2(0, 1));
  MeasurementFamily fam({{p0, p1}, {p0, p1}, {p0, p1}});
  CHECK((aggregate(fam, {1, 1, 1}).mat() - diag2(0, 1)).cwiseAbs().maxCoeff() <
        1e-15);
  // Indicator frequencies: answer 0 on two of three questions.
  Matrix avg = aggregate(fam, {0, 1, 0}).mat();
  CHECK(std::abs(avg(0, 0) - Complex(2.0 / 3, 0)) < 1e-12);
  CHECK(std::abs(avg(1, 1) - Complex(1.0 / 3, 0)) < 1e-12);

  // Weighted spot check against direct summation.
  MeasurementFamily weighted({{p0, p1}, {p1, p0}}, {0.25, 0.75});
  Matrix want = 0.25 * diag2(1, 0) + 0.75 * diag2(1, 0);
  CHECK((aggregate(weighted, {0, 1}).mat() - want).cwiseAbs().maxCoeff() <
        1e-15);

  CHECK_THROWS_AS(aggregate(fam, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(aggregate(fam, {0, 1, 2}), std::invalid_argument);
}

TEST_CASE("commutation defect: zero for commuting operators, decays with angle") {
  BipartiteState psi = maximally_entangled(2);
  Operator p0(diag2(1, 0)), p1(diag2(0, 1));
  // Incomplete on purpose: a complete sub-measurement sums to Id, which
  // commutes with everything and would make the test vacuous.
  SubMeasurement t({Operator(diag2(0.6, 0)), Operator(diag2(0, 0.3))});
  MeasurementFamily diag_fam({{p0, p1}});
  CHECK(commutation_defect(t, diag_fam, psi) == 0.0);

  auto rotated_family = [](double eta) {
    Matrix r(2, 2);
    r << std::cos(eta), -std::sin(eta), std::sin(eta), std::cos(eta);
    return MeasurementFamily({{Operator(r * diag2(1, 0) * r.transpose()),
                               Operator(r * diag2(0, 1) * r.transpose())}});
  };
  double prev = commutation_defect(t, rotated_family(0.4), psi);
  CHECK(prev > 1e-4);
  for (double eta : {0.2, 0.1, 0.05, 0.025}) {
    double cur = commutation_defect(t, rotated_family(eta), psi);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("aggregate swap gap: exact instances and the zero sub-measurement") {
  const std::size_t dim = 2;
  // Non-maximally-entangled state: on the uniform state the two sides agree
  // for any real symmetric operators, which would make this test vacuous.
  BipartiteState psi = BipartiteState::normalized(diag2(0.8, 0.6));
  FunctionTable g0 = {0, 1}, g1 = {1, 0};
  StructuredFamily fams(2, 2, {g0, g1});
  // Deterministic families aggregate to multiples of Id, so the swap is
  // exact on any state.
  MeasurementFamily fam = deterministic_family(g0, 2, dim);

  SubMeasurement r({Operator(diag2(0.5, 0)), Operator(diag2(0, 0.5))});
  CHECK(aggregate_swap_gap(fam, fams, r, psi) < 1e-10);

  SubMeasurement zero({Operator::zero(dim), Operator::zero(dim)});
  CHECK(aggregate_swap_gap(fam, fams, zero, psi) == 0.0);
}

TEST_CASE("aggregate swap gap: shrinks as self-consistency is dialed down") {
  // Rotate projective measurements on a skewed state; self-consistency and
  // the swap gap are both positive and must trend to zero together.  The
  // reference sub-measurement is deliberately non-diagonal: with the state
  // diagonal, a diagonal R would only probe diagonals where the two sides of
  // the swap agree for trivial reasons.
  BipartiteState psi = BipartiteState::normalized(diag2(0.8, 0.6));
  FunctionTable g0 = {0, 1}, g1 = {1, 1};
  StructuredFamily fams(2, 2, {g0, g1});
  Matrix skew(2, 2);
  skew << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
  SubMeasurement r({Operator(0.5 * skew * diag2(1, 0) * skew.transpose()),
                    Operator(0.5 * skew * diag2(0, 1) * skew.transpose())});

  auto perturbed = [&](double eta) {
    Matrix rot(2, 2);
    rot << std::cos(eta), -std::sin(eta), std::sin(eta), std::cos(eta);
    std::vector<std::vector<Operator>> ops;
    for (std::size_t x = 0; x < 2; ++x) {
      Matrix a0 = x == 0 ? diag2(1, 0) : diag2(0, 1);  // follows g0
      Matrix a1 = Matrix::Identity(2, 2) - a0;
      ops.push_back({Operator(rot * a0 * rot.transpose()),
                     Operator(rot * a1 * rot.transpose())});
    }
    return MeasurementFamily(std::move(ops));
  };
  double prev = aggregate_swap_gap(perturbed(0.4), fams, r, psi);
  CHECK(prev > 1e-4);  // the perturbed instance really is off
  CHECK(self_consistency(perturbed(0.4), psi) > 1e-4);
  for (double eta : {0.2, 0.1, 0.05}) {
    double cur = aggregate_swap_gap(perturbed(eta), fams, r, psi);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("metrics reject mismatched state dimensions") {
  Operator p0(diag2(1, 0)), p1(diag2(0, 1));
  MeasurementFamily fam({{p0, p1}});
  SubMeasurement t({p0});
  BipartiteState psi3 = maximally_entangled(3);
  CHECK_THROWS_AS(self_consistency(fam, psi3), std::invalid_argument);
  CHECK_THROWS_AS(self_consistency(t, psi3), std::invalid_argument);
  CHECK_THROWS_AS(projectivity_defect(fam, psi3), std::invalid_argument);
  CHECK_THROWS_AS(completeness_error(t, psi3), std::invalid_argument);
  CHECK_THROWS_AS(commutation_defect(t, fam, psi3), std::invalid_argument);
}
