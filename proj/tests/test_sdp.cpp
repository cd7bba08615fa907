#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "eglab/consistency.hpp"
#include "eglab/quantum.hpp"
#include "eglab/rng.hpp"
#include "eglab/sdp.hpp"

using eglab::CounterRng;
using eglab::consistency::StructuredFamily;
using eglab::quantum::BipartiteState;
using eglab::quantum::Matrix;
using eglab::quantum::maximally_entangled;
using eglab::quantum::MeasurementFamily;
using eglab::quantum::Operator;
using eglab::quantum::SubMeasurement;
using namespace eglab::sdp;

namespace {

double lambda_min(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double lambda_max(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// Random real symmetric operator with spectrum in [0, roof].
Matrix random_real_psd(CounterRng& rng, int d, double roof) {
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = 2.0 * rng.next_double() - 1.0;
  Eigen::MatrixXd s = g * g.transpose();
  s *= roof / (s.eigenvalues().real().maxCoeff() + 1e-12);
  return s.cast<std::complex<double>>();
}

// Random complex Hermitian operator with spectrum in [0, roof].
Matrix random_hermitian_psd(CounterRng& rng, int d, double roof) {
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      g(i, j) = std::complex<double>(2.0 * rng.next_double() - 1.0,
                                     2.0 * rng.next_double() - 1.0);
  Matrix s = g * g.adjoint();
  s *= roof / lambda_max(s);
  return s;
}

// Random full-support state: a bounded symmetric perturbation of the
// maximally entangled coefficient matrix keeps every singular value positive.
BipartiteState random_full_support_state(CounterRng& rng, int d) {
  Matrix b(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      b(i, j) = std::complex<double>(2.0 * rng.next_double() - 1.0,
                                     2.0 * rng.next_double() - 1.0);
  Matrix m = Matrix::Identity(d, d) + 0.3 * (b + b.transpose()) / 2.0;
  return BipartiteState::normalized(m);
}

Matrix diag4(double a, double b, double c, double d) {
  Eigen::Vector4cd v(a, b, c, d);
  return v.asDiagonal();
}

// The worked instance used throughout: three questions, all answered by the
// same pair of complementary rank-two projectors on C^4, and the two constant
// function tables (which never agree, so kappa = 0).
const Matrix kP0 = diag4(1, 1, 0, 0);
const Matrix kP1 = diag4(0, 0, 1, 1);

MeasurementFamily projector_family() {
  std::vector<std::vector<Operator>> ops(
      3, {Operator(kP0), Operator(kP1)});
  return MeasurementFamily(ops);
}

StructuredFamily constant_tables() {
  return StructuredFamily(3, 2, {{0, 0, 0}, {1, 1, 1}});
}

// x-dependent rotation in the (0,2) coordinate plane; real orthogonal, so
// self-consistency on the maximally entangled state stays exactly zero.
Matrix rotation4(double angle) {
  Matrix r = Matrix::Identity(4, 4);
  r(0, 0) = std::cos(angle);
  r(2, 2) = std::cos(angle);
  r(0, 2) = -std::sin(angle);
  r(2, 0) = std::sin(angle);
  return r;
}

MeasurementFamily rotated_family(double eta) {
  const double speeds[3] = {1.0, 0.7, -0.5};
  std::vector<std::vector<Operator>> ops;
  for (int x = 0; x < 3; ++x) {
    Matrix r = rotation4(eta * speeds[x]);
    ops.push_back({Operator(r * kP0 * r.transpose()),
                   Operator(r * kP1 * r.transpose())});
  }
  return MeasurementFamily(ops);
}

SubMeasurement random_sub_measurement(CounterRng& rng, int d, int k) {
  std::vector<Matrix> raw;
  Matrix total = Matrix::Zero(d, d);
  for (int i = 0; i < k; ++i) {
    raw.push_back(random_hermitian_psd(rng, d, 1.0));
    total += raw.back();
  }
  double scale = 1.0 / (lambda_max(total) * 1.25);
  std::vector<Operator> ops;
  for (auto& m : raw) ops.emplace_back(Matrix(scale * m));
  return SubMeasurement(std::move(ops));
}

}  // namespace

TEST_CASE("instance validation") {
  auto psi = maximally_entangled(2);
  Matrix id = Matrix::Identity(2, 2);

  CHECK_THROWS_AS(SdpInstance(psi, {}), std::invalid_argument);
  CHECK_THROWS_AS(SdpInstance(psi, {Operator::identity(3)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(SdpInstance(psi, {Operator(Matrix(-0.5 * id))}),
                  std::invalid_argument);
  CHECK_THROWS_AS(SdpInstance(psi, {Operator(Matrix(1.5 * id))}),
                  std::invalid_argument);

  // Product state: reduced density diag(1, 0) has no full support.
  Matrix prod = Matrix::Zero(2, 2);
  prod(0, 0) = 1.0;
  CHECK_THROWS_AS(SdpInstance(BipartiteState{prod}, {Operator::identity(2)}),
                  std::invalid_argument);

  SdpInstance ok(psi, {Operator::identity(2)});
  CHECK(ok.dim() == 2);
  CHECK(ok.size() == 1);
}

TEST_CASE("solve: single identity constraint") {
  SdpInstance inst(maximally_entangled(2), {Operator::identity(2)});
  SdpResult res = solve(inst);

  // Z >= Id forces tr(rho Z) >= 1, attained at Z = Id with T = Id.
  CHECK(res.dual_value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(res.primal_value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(res.gap >= -1e-8);
  CHECK(res.gap <= 1e-6);
  CHECK((res.primal.op(0).mat() - Matrix::Identity(2, 2)).norm() < 1e-3);
  CHECK((res.primal.sum() - Matrix::Identity(2, 2)).norm() < 1e-8);
  CHECK(res.slackness_residual < 1e-4);
  CHECK(!res.trace.empty());
  CHECK(res.trace.back().gap_estimate == doctest::Approx(res.gap));
}

TEST_CASE("solve: single zero constraint exercises the completion step") {
  SdpInstance inst(maximally_entangled(2), {Operator::zero(2)});
  SdpResult res = solve(inst);

  // Optimum value is 0; the recovered mass is pure completion residual.
  CHECK(std::abs(res.primal_value) <= 1e-8);
  CHECK(std::abs(res.dual_value) <= 1e-6);
  CHECK(res.gap >= -1e-8);
  CHECK((res.primal.sum() - Matrix::Identity(2, 2)).norm() < 1e-8);
}

TEST_CASE("solve: complementary diagonal projectors") {
  SdpInstance inst(maximally_entangled(2),
                   {Operator(Matrix(Eigen::Vector2cd(1, 0).asDiagonal())),
                    Operator(Matrix(Eigen::Vector2cd(0, 1).asDiagonal()))});
  SdpResult res = solve(inst);

  // Z must dominate both projectors, so its diagonal is at least (1, 1) and
  // the optimum is Z = Id with value 1; the primal optimizers are the
  // projectors themselves.
  CHECK(res.dual_value == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(res.primal_value == doctest::Approx(1.0).epsilon(1e-8));
  Matrix e00 = Matrix::Zero(2, 2), e11 = Matrix::Zero(2, 2);
  e00(0, 0) = 1.0;
  e11(1, 1) = 1.0;
  CHECK((res.primal.op(0).mat() - e00).norm() < 1e-3);
  CHECK((res.primal.op(1).mat() - e11).norm() < 1e-3);
  CHECK(res.slackness_residual < 1e-4);
}

TEST_CASE("solve: seeded battery keeps duality gap and feasibility") {
  CounterRng rng(0x5d9a01);
  const int dims[4] = {2, 3, 4, 8};
  for (int trial = 0; trial < 20; ++trial) {
    int d = dims[trial % 4];
    int nc = 1 + static_cast<int>(rng.next_below(10));
    std::vector<Operator> constraints;
    for (int i = 0; i < nc; ++i)
      constraints.emplace_back(
          random_real_psd(rng, d, 0.2 + 0.8 * rng.next_double()));
    SdpInstance inst(maximally_entangled(d), constraints);
    SdpResult res = solve(inst);

    CAPTURE(trial);
    CHECK(res.gap >= -1e-8);
    CHECK(res.gap <= 1e-6 * std::max(1.0, std::abs(res.dual_value)));
    CHECK(lambda_min(res.dual_z.mat()) >= -1e-8);
    for (int i = 0; i < nc; ++i)
      CHECK(lambda_min(res.dual_z.mat() - constraints[i].mat()) >= -1e-8);
    CHECK((res.primal.sum() - Matrix::Identity(d, d)).norm() <= 1e-8);
    // Real data against the maximally entangled state: complementary
    // slackness survives the transfer to the T-side.
    CHECK(res.slackness_residual <= 1e-4);
    // Trace rows carry a valid lower-bound estimate throughout.
    for (const auto& row : res.trace)
      CHECK(row.primal_estimate <= row.dual_value + 1e-12);
  }
}

TEST_CASE("solve: values transfer to arbitrary full-support states") {
  CounterRng rng(0xfeed02);
  for (int trial = 0; trial < 6; ++trial) {
    int d = 2 + trial % 3;
    auto psi = random_full_support_state(rng, d);
    std::vector<Operator> constraints;
    int nc = 1 + static_cast<int>(rng.next_below(4));
    for (int i = 0; i < nc; ++i)
      constraints.emplace_back(random_hermitian_psd(rng, d, 0.9));
    SdpResult res = solve(SdpInstance(psi, constraints));

    CAPTURE(trial);
    CHECK(res.gap >= -1e-8);
    CHECK(res.gap <= 1e-6 * std::max(1.0, std::abs(res.dual_value)));
    CHECK(lambda_min(res.dual_z.mat()) >= -1e-8);
    for (int i = 0; i < nc; ++i)
      CHECK(lambda_min(res.dual_z.mat() - constraints[i].mat()) >= -1e-8);
    CHECK((res.primal.sum() - Matrix::Identity(d, d)).norm() <= 1e-8);
    // No slackness assertion here: away from the maximally entangled state
    // (or with complex data) the residual need not vanish.  It must still be
    // a finite diagnostic.
    CHECK(std::isfinite(res.slackness_residual));
  }
}

TEST_CASE("coarse dual estimate brackets the solver's dual value") {
  CounterRng rng(0xc0a3);
  for (int trial = 0; trial < 3; ++trial) {
    int d = 2 + trial;
    std::vector<Operator> constraints;
    for (int i = 0; i < 2 + trial; ++i)
      constraints.emplace_back(random_real_psd(rng, d, 0.8));
    SdpInstance inst(maximally_entangled(d), constraints);
    double exact = solve(inst).dual_value;
    double coarse = coarse_dual_estimate(inst, 4000);

    CAPTURE(trial);
    // Subgradient iterates are projected back into the feasible cone before
    // their value is recorded, so the estimate is a genuine upper bound.
    CHECK(coarse >= exact - 1e-9);
    CHECK(coarse <= exact + 2e-2);
  }
}

TEST_CASE("certify: projective structured family has zero defect") {
  auto cert = eglab::consistency::certify_global_consistency(
      projector_family(), constant_tables(), maximally_entangled(4));
  CHECK(cert.epsilon <= 1e-12);
  CHECK(cert.delta <= 1e-8);
  CHECK(cert.aggregated.size() == 2);
  CHECK((cert.aggregated[0].mat() - kP0).norm() < 1e-12);
}

TEST_CASE("certify: maximally mixed answers are maximally non-projective") {
  // Every operator Id/2 gives aggregates Id/2, defect Id/4, and an optimal
  // dual Z = Id/4, so the certificate value is exactly 1/4.
  Matrix half = 0.5 * Matrix::Identity(2, 2);
  std::vector<std::vector<Operator>> ops(2,
                                         {Operator(half), Operator(half)});
  MeasurementFamily fam(ops);
  StructuredFamily tables(2, 2, {{0, 1}, {1, 0}});
  auto cert = eglab::consistency::certify_global_consistency(
      fam, tables, maximally_entangled(2));
  CHECK(cert.epsilon == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(cert.delta == doctest::Approx(0.25).epsilon(1e-6));
  CHECK((cert.z.mat() - 0.25 * Matrix::Identity(2, 2)).norm() < 1e-4);
}

TEST_CASE("certify: support-deficient states are rejected") {
  Matrix prod = Matrix::Zero(4, 4);
  prod(0, 0) = 1.0;
  CHECK_THROWS_AS(eglab::consistency::certify_global_consistency(
                      projector_family(), constant_tables(),
                      BipartiteState{prod}),
                  std::domain_error);
}

TEST_CASE("improve: exact instance reproduces the projectors") {
  auto a = projector_family();
  auto g = constant_tables();
  auto psi = maximally_entangled(4);
  SubMeasurement q({Operator(kP0), Operator(kP1)});

  auto [s, report] = improve(a, g, psi, q, 0.0);
  CHECK((s.op(0).mat() - kP0).norm() <= 1e-9);
  CHECK((s.op(1).mat() - kP1).norm() <= 1e-9);
  CHECK(report.self_consistency <= 1e-12);
  CHECK(report.consistency <= 1e-9);
  CHECK(report.projectivity <= 1e-9);
  CHECK(report.completeness_error <= 1e-9);
  CHECK(report.structure == doctest::Approx(0.0));
}

TEST_CASE("improve: rejects a Q that is not eta-consistent") {
  auto a = projector_family();
  auto g = constant_tables();
  auto psi = maximally_entangled(4);
  // Swapped projectors disagree with every table entry: measured defect 1.
  SubMeasurement swapped({Operator(kP1), Operator(kP0)});
  CHECK_THROWS_AS(improve(a, g, psi, swapped, 0.0), std::invalid_argument);
  // With an honest eta it is accepted again.
  CHECK_NOTHROW(improve(a, g, psi, swapped, 1.0));
}

TEST_CASE("improve: zero sub-measurement satisfies the vacuous bound") {
  auto a = projector_family();
  auto g = constant_tables();
  auto psi = maximally_entangled(4);
  SubMeasurement zero({Operator::zero(4), Operator::zero(4)});
  auto [s, report] = improve(a, g, psi, zero, 0.0);
  CHECK(report.consistency <= 1e-9);
  CHECK((s.sum() - Matrix::Identity(4, 4)).norm() <= 1e-6);
}

TEST_CASE("improve: perturbation sweep shrinks the output defect") {
  auto g = constant_tables();
  auto psi = maximally_entangled(4);
  SubMeasurement q({Operator(kP0), Operator(kP1)});

  double last_out = 1e9;
  for (double eta : {0.3, 0.1, 0.03}) {
    auto a = rotated_family(eta);
    // Real orthogonal rotations leave the family projective and complete, so
    // self-consistency on the maximally entangled state is exactly zero; all
    // the inconsistency sits in the cross term against the fixed tables.
    // Zero at machine precision: each pair term is a trace of products of
    // rounded rotation matrices, so the sum lands within a few ulp of 0.
    double eps = eglab::consistency::self_consistency(a, psi);
    CHECK(std::abs(eps) <= 1e-15);
    double delta_in = eglab::consistency::cross_consistency(q, g, a, psi);
    CHECK(delta_in > 0.0);

    auto [s, report] = improve(a, g, psi, q, delta_in);
    CAPTURE(eta);
    CHECK(report.consistency <= 10.0 * std::sqrt(eps + delta_in));
    CHECK(report.consistency <= last_out + 1e-12);
    last_out = report.consistency;
  }
}

TEST_CASE("combine: zero first argument passes Q through") {
  CounterRng rng(0x7b1);
  SubMeasurement q = random_sub_measurement(rng, 3, 2);
  SubMeasurement zero({Operator::zero(3), Operator::zero(3)});
  SubMeasurement r = combine_R(zero, q);
  for (int gi = 0; gi < 2; ++gi)
    CHECK((r.op(gi).mat() - q.op(gi).mat()).norm() <= 1e-12);
}

TEST_CASE("combine: projective complete T absorbs Q entirely") {
  SubMeasurement t({Operator(kP0), Operator(kP1)});
  SubMeasurement zero({Operator::zero(4), Operator::zero(4)});
  SubMeasurement r = combine_R(t, zero);
  CHECK((r.op(0).mat() - kP0).norm() <= 1e-12);
  CHECK((r.op(1).mat() - kP1).norm() <= 1e-12);
}

TEST_CASE("combine: random pairs stay below the identity") {
  CounterRng rng(0x9c2);
  for (int trial = 0; trial < 8; ++trial) {
    int d = 2 + trial % 3;
    int k = 2 + trial % 2;
    SubMeasurement t = random_sub_measurement(rng, d, k);
    SubMeasurement q = random_sub_measurement(rng, d, k);
    SubMeasurement r = combine_R(t, q);  // the constructor re-validates
    CHECK(lambda_max(r.sum()) <= 1.0 + 1e-9);
  }
  CHECK_THROWS_AS(
      combine_R(SubMeasurement({Operator::zero(2)}),
                SubMeasurement({Operator::zero(2), Operator::zero(2)})),
      std::invalid_argument);
}

TEST_CASE("completion: already complete families pass through") {
  SubMeasurement t({Operator(kP0), Operator(kP1)});
  SubMeasurement c = complete_to_measurement(t);
  CHECK((c.op(0).mat() - kP0).norm() <= 1e-12);
  CHECK((c.op(1).mat() - kP1).norm() <= 1e-12);
}

TEST_CASE("completion: residual mass lands on the first outcome") {
  SubMeasurement zero(
      {Operator::zero(3), Operator::zero(3), Operator::zero(3)});
  SubMeasurement c = complete_to_measurement(zero);
  CHECK((c.op(0).mat() - Matrix::Identity(3, 3)).norm() <= 1e-12);
  CHECK(c.op(1).mat().norm() <= 1e-12);
  CHECK((c.sum() - Matrix::Identity(3, 3)).norm() <= 1e-12);
}

TEST_CASE("completion: random sub-measurements complete exactly") {
  CounterRng rng(0x3f7);
  for (int trial = 0; trial < 6; ++trial) {
    int d = 2 + trial % 3;
    SubMeasurement r = random_sub_measurement(rng, d, 3);
    SubMeasurement c = complete_to_measurement(r);
    CHECK((c.sum() - Matrix::Identity(d, d)).norm() <= 1e-12);
    CHECK((c.op(1).mat() - r.op(1).mat()).norm() <= 1e-12);
  }
}

TEST_CASE("loop: exact instance is a fixed point of the first round") {
  auto a = projector_family();
  auto g = constant_tables();
  auto psi = maximally_entangled(4);

  auto baseline = [](const BipartiteState&) {
    return SubMeasurement({Operator(kP0), Operator(kP1)});
  };
  LoopResult out = self_improvement_loop(a, g, psi, {}, baseline);
  CHECK(out.outer_iterations == 0);
  CHECK(out.consistency_trace.size() == 2);
  CHECK(out.report.consistency <= 1e-12);
  CHECK((out.result.op(0).mat() - kP0).norm() == 0.0);
  CHECK((out.result.op(1).mat() - kP1).norm() == 0.0);
}

TEST_CASE("loop: a complete improved family surfaces the restriction error") {
  auto a = projector_family();
  auto g = constant_tables();
  auto psi = maximally_entangled(4);

  // The baseline leaks a little mass onto the wrong outcome, so the first
  // improvement is strict and lands on the exact projectors, whose sum is
  // the identity; restricting the state past them has nothing left.
  auto baseline = [](const BipartiteState&) {
    return SubMeasurement({Operator(Matrix(0.8 * kP0 + 0.1 * kP1)),
                           Operator(Matrix(0.9 * kP1))});
  };
  CHECK_THROWS_AS(self_improvement_loop(a, g, psi, {}, baseline),
                  std::domain_error);
}

TEST_CASE("loop: perturbed instance never ends worse than its baseline") {
  auto a = rotated_family(0.2);
  auto g = constant_tables();
  auto psi = maximally_entangled(4);
  auto baseline = [](const BipartiteState&) {
    return SubMeasurement({Operator(kP0), Operator(kP1)});
  };
  LoopResult out = self_improvement_loop(a, g, psi, {}, baseline);
  CHECK(out.consistency_trace.size() >= 2);
  CHECK(out.report.consistency <= out.consistency_trace.front() + 1e-12);
  CHECK(out.outer_iterations <= SelfImprovementConfig{}.max_outer_iterations);
  out.report.validate();
}

TEST_CASE("loop: configuration and baseline validation") {
  auto a = projector_family();
  auto g = constant_tables();
  auto psi = maximally_entangled(4);
  auto baseline = [](const BipartiteState&) {
    return SubMeasurement({Operator(kP0), Operator(kP1)});
  };
  SelfImprovementConfig bad;
  bad.eps0 = 0.0;
  CHECK_THROWS_AS(self_improvement_loop(a, g, psi, bad, baseline),
                  std::invalid_argument);
  CHECK_THROWS_AS(self_improvement_loop(a, g, psi, {}, nullptr),
                  std::invalid_argument);
}
