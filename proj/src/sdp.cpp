#include "eglab/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <array>
#include <string>

namespace eglab::sdp {

using consistency::ConsistencyReport;
using consistency::StructuredFamily;
using quantum::BipartiteState;
using quantum::Matrix;
using quantum::maximally_entangled;
using quantum::MeasurementFamily;
using quantum::Operator;
using quantum::pair_expectation;
using quantum::real_checked;
using quantum::SubMeasurement;

namespace {

Matrix hermitize(const Matrix& m) { return (m + m.adjoint()) / 2.0; }

double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// log det of a Hermitian positive definite matrix via its Cholesky factor;
// NaN signals loss of positive definiteness to the line search.
double log_det(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    return std::numeric_limits<double>::quiet_NaN();
  double s = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    s += std::log(llt.matrixLLT()(i, i).real());
  return 2.0 * s;
}

}  // namespace

SdpInstance::SdpInstance(BipartiteState psi, std::vector<Operator> constraints)
    : psi_(std::move(psi)), constraints_(std::move(constraints)) {
  if (constraints_.empty())
    throw std::invalid_argument("instance needs at least one constraint");
  for (const auto& a : constraints_) {
    if (a.dim() != psi_.dim())
      throw std::invalid_argument("constraint/state dimension mismatch");
    if (a.min_eigenvalue() < -1e-10)
      throw std::invalid_argument("constraint operator is not PSD");
    if (a.max_eigenvalue() > 1.0 + 1e-9)
      throw std::invalid_argument("constraint operator exceeds Id");
  }
  if (min_eig(psi_.reduced_density()) <= 1e-10)
    throw std::invalid_argument(
        "state is support-deficient; compress to its support first");
}

SdpResult solve(const SdpInstance& instance) {
  const auto d = static_cast<Eigen::Index>(instance.dim());
  const std::size_t n = instance.size();
  if (instance.dim() > 64) throw std::invalid_argument("dimension above 64");
  if (n > 256) throw std::invalid_argument("more than 256 constraints");

  const Matrix id = Matrix::Identity(d, d);
  const Matrix rho = hermitize(instance.psi().reduced_density());
  const double nd = static_cast<double>(d) * static_cast<double>(n + 1);

  // Strictly feasible start: Z0 dominates every constraint by at least 1.
  double shift = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    shift = std::max(shift, 1.0 + instance.constraint(i).max_eigenvalue());
  Matrix z = shift * id;

  double mu = 1.0;
  const double mu_anchor = 4e-6;

  std::vector<SdpTraceRow> trace;
  std::size_t step = 0;
  const std::size_t step_cap = 20000;

  // Barrier objective tr(rho Z) - mu [sum_i log det(Z - A_i) + log det Z].
  auto barrier = [&](const Matrix& zz, double m) {
    double val = (rho * zz).trace().real();
    for (std::size_t i = 0; i < n; ++i) {
      double ld = log_det(zz - instance.constraint(i).mat());
      if (std::isnan(ld)) return std::numeric_limits<double>::quiet_NaN();
      val -= m * ld;
    }
    double ld = log_det(zz);
    if (std::isnan(ld)) return std::numeric_limits<double>::quiet_NaN();
    return val - m * ld;
  };

  // Slack inverses and barrier gradient at the current iterate.
  struct Parts {
    std::vector<Matrix> slacks_inv;  // (Z - A_i)^-1 for each i, then Z^-1
    Matrix grad;
  };
  auto analyze = [&](const Matrix& zz, double m) {
    Parts p;
    p.slacks_inv.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      Matrix s = (i < n) ? Matrix(zz - instance.constraint(i).mat()) : zz;
      Eigen::LLT<Matrix> llt(s);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("iterate left the feasible cone");
      p.slacks_inv.push_back(llt.solve(id));
    }
    p.grad = rho;
    for (const auto& s : p.slacks_inv) p.grad -= m * s;
    p.grad = hermitize(p.grad);
    return p;
  };

  // Newton direction: the Hessian acts as X -> mu sum_S S^-1 X S^-1, a
  // d^2 x d^2 Kronecker sum solved densely.
  auto newton_direction = [&](const Parts& p, double m) {
    Matrix hess = Matrix::Zero(d * d, d * d);
    for (const auto& s : p.slacks_inv)
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          hess.block(i * d, j * d, d, d) += s(j, i) * s;
    hess *= m;
    Eigen::Map<const Eigen::VectorXcd> g_vec(p.grad.data(), d * d);
    Eigen::VectorXcd dz_vec = Eigen::LDLT<Matrix>(hess).solve(-g_vec);
    return Matrix(hermitize(Eigen::Map<const Matrix>(dz_vec.data(), d, d)));
  };

  // Damped, backtracked step; returns false when the search direction cannot
  // make progress (the noise floor of double precision).
  auto try_step = [&](const Matrix& dz, double lambda2, double m) {
    double t = std::min(1.0, 1.0 / (1.0 + std::sqrt(std::max(lambda2, 0.0))));
    double f0 = barrier(z, m);
    for (int bt = 0; bt < 60; ++bt) {
      Matrix cand = hermitize(z + t * dz);
      double f1 = barrier(cand, m);
      if (!std::isnan(f1) && f1 <= f0 - 0.25 * t * lambda2) {
        z = std::move(cand);
        return true;
      }
      t *= 0.5;
    }
    return false;
  };

  // Newton-center at the given mu until the decrement falls below tol2.
  auto center = [&](double m, double tol2) {
    for (int inner = 0; inner < 100; ++inner) {
      if (++step > step_cap)
        throw std::runtime_error("solver exceeded the maximum iteration count");
      Parts p = analyze(z, m);
      Matrix dz = newton_direction(p, m);
      double lambda2 = -(p.grad.conjugate().cwiseProduct(dz)).sum().real();
      double dual_now = (rho * z).trace().real();
      trace.push_back({step, m, dual_now, dual_now - m * nd, m * nd});
      if (lambda2 <= tol2) return;
      if (!try_step(dz, lambda2, m))
        throw std::runtime_error(
            "ill-conditioned instance: barrier line search stalled");
    }
    throw std::runtime_error("solver exceeded the maximum iteration count");
  };

  // The Newton decrement lives in the barrier metric, which is very stiff
  // near active constraints, so it can certify convergence while the raw
  // gradient -- and with it the recovered primal -- is still loose.  Polish
  // by descending on the raw gradient norm directly (the increments the
  // barrier value would show here are below double resolution) until it
  // stalls at the precision floor of the instance.
  auto refine = [&](double m) {
    Parts p = analyze(z, m);
    double gn = p.grad.norm();
    for (int it = 0; it < 30 && step < step_cap && gn > 1e-13; ++it) {
      ++step;
      Matrix dz = newton_direction(p, m);
      bool moved = false;
      double t = 1.0;
      for (int bt = 0; bt < 25; ++bt, t *= 0.5) {
        Matrix cand = hermitize(z + t * dz);
        if (std::isnan(barrier(cand, m))) continue;  // left the cone
        Parts pc = analyze(cand, m);
        double gc = pc.grad.norm();
        if (gc < gn * (1.0 - 1e-3 * t)) {
          z = std::move(cand);
          p = std::move(pc);
          gn = gc;
          moved = true;
          break;
        }
      }
      if (!moved) break;
      double dual_now = (rho * z).trace().real();
      trace.push_back({step, m, dual_now, dual_now - m * nd, m * nd});
    }
  };

  while (true) {
    center(mu, 1e-2 * mu);
    if (mu <= mu_anchor) break;
    mu = std::max(mu * 0.5, mu_anchor);
  }

  // The primal recovered at any single mu carries an O(mu) central-path bias,
  // while evaluating the path much below ~1e-6 runs into the double grid:
  // the slack Z - A_i of an active constraint shrinks like mu, so its
  // representable granularity grows like eps/mu relative.  Both limits are
  // escaped at once by sampling the (analytic) path at three moderate,
  // well-conditioned anchors and extrapolating to mu -> 0.
  const Matrix m_inv = instance.psi().coeffs().partialPivLu().inverse();
  std::array<std::vector<Matrix>, 4> t_at;
  std::array<Matrix, 4> z_at;
  for (int k = 0; k < 4; ++k) {
    double m = mu_anchor / (1 << k);
    center(m, std::max(1e-16, 1e-10 * m));
    refine(m);
    z_at[k] = z;
    Parts p = analyze(z, m);
    t_at[k].reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      t_at[k].push_back(hermitize(m_inv.adjoint() *
                                  (m * p.slacks_inv[i]).conjugate() * m_inv));
  }

  // Richardson extrapolation with ratio 2 cancels the linear, quadratic and
  // cubic terms of the expansion in mu.
  auto extrapolate = [](const Matrix& f1, const Matrix& f2, const Matrix& f3,
                        const Matrix& f4) {
    return Matrix((-f1 + 14.0 * f2 - 56.0 * f3 + 64.0 * f4) / 21.0);
  };
  Matrix z_star = hermitize(extrapolate(z_at[0], z_at[1], z_at[2], z_at[3]));
  // The extrapolated certificate can undershoot feasibility by the
  // extrapolation error, which would surface as a (spurious) negative gap;
  // lift it back onto the feasible side.
  double viol = std::max(0.0, -min_eig(z_star));
  for (std::size_t i = 0; i < n; ++i)
    viol = std::max(
        viol, -min_eig(Matrix(z_star - instance.constraint(i).mat())));
  if (viol > 1e-6)
    throw std::runtime_error(
        "ill-conditioned instance: extrapolated certificate infeasible by " +
        std::to_string(viol));
  if (viol > 0.0) z_star += viol * id;

  std::vector<Matrix> t_ops(n);
  Matrix t_sum = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    t_ops[i] = hermitize(
        extrapolate(t_at[0][i], t_at[1][i], t_at[2][i], t_at[3][i]));
    // The combination can dent positivity by the extrapolation error; repair
    // eigenvalues at that scale, treat anything larger as a failed solve.
    Eigen::SelfAdjointEigenSolver<Matrix> es(t_ops[i]);
    double lo = es.eigenvalues().minCoeff();
    if (lo < -1e-6)
      throw std::runtime_error(
          "ill-conditioned instance: extrapolated primal has eigenvalue " +
          std::to_string(lo));
    if (lo < 0.0)
      t_ops[i] = hermitize(es.eigenvectors() *
                           es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                           es.eigenvectors().adjoint());
    t_sum += t_ops[i];
  }

  // Completion: the optimum may be taken with sum T_i = Id, so distribute
  // the residual onto the constraint it perturbs least.
  Matrix residual = hermitize(id - t_sum);
  Eigen::SelfAdjointEigenSolver<Matrix> res_es(residual);
  if (res_es.eigenvalues().minCoeff() < -1e-4)
    throw std::runtime_error(
        "ill-conditioned instance: completion residual has eigenvalue " +
        std::to_string(res_es.eigenvalues().minCoeff()));
  residual = res_es.eigenvectors() *
             res_es.eigenvalues().cwiseMax(0.0).asDiagonal() *
             res_es.eigenvectors().adjoint();
  std::size_t best_j = 0;
  double best_perturb = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    double p = (residual * (z_star - instance.constraint(j).mat())).norm();
    if (p < best_perturb - 1e-15) {
      best_perturb = p;
      best_j = j;
    }
  }
  t_ops[best_j] = hermitize(t_ops[best_j] + residual);

  // The sum now equals Id up to the recovery error; a congruence by its
  // inverse square root makes the identity exact at machine precision
  // without disturbing positivity.
  t_sum = Matrix::Zero(d, d);
  for (const auto& t : t_ops) t_sum += t;
  Eigen::SelfAdjointEigenSolver<Matrix> sum_es(hermitize(t_sum));
  if (sum_es.eigenvalues().minCoeff() <= 0.5)
    throw std::runtime_error("ill-conditioned instance: completed sum lost mass");
  Matrix w = sum_es.eigenvectors() *
             sum_es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
             sum_es.eigenvectors().adjoint();
  for (auto& t : t_ops) t = hermitize(w * t * w);

  std::vector<Operator> primal_ops;
  primal_ops.reserve(n);
  for (auto& t : t_ops) {
    double lo = min_eig(t);
    if (lo < -1e-10)
      throw std::runtime_error(
          "ill-conditioned instance: recovered primal has eigenvalue " +
          std::to_string(lo));
    primal_ops.emplace_back(std::move(t));
  }
  SubMeasurement primal(std::move(primal_ops));

  double primal_value = 0;
  for (std::size_t i = 0; i < n; ++i)
    primal_value += real_checked(
        pair_expectation(primal.op(i), instance.constraint(i), instance.psi()),
        1e-8);
  double dual_value = (rho * z_star).trace().real();
  double gap = dual_value - primal_value;
  if (gap < -1e-8)
    throw std::runtime_error("weak duality violated (gap " +
                             std::to_string(gap) + ")");

  double slackness = 0;
  for (std::size_t i = 0; i < n; ++i)
    slackness = std::max(
        slackness,
        (primal.op(i).mat() * (z_star - instance.constraint(i).mat())).norm());

  trace.push_back({step, mu_anchor / 4, dual_value, primal_value, gap});
  return SdpResult{std::move(primal), Operator(z_star),
                   primal_value,      dual_value,
                   gap,               slackness,
                   std::move(trace)};
}

double coarse_dual_estimate(const SdpInstance& instance, std::size_t iters) {
  const auto d = static_cast<Eigen::Index>(instance.dim());
  const std::size_t n = instance.size();
  const Matrix id = Matrix::Identity(d, d);
  const Matrix rho = hermitize(instance.psi().reduced_density());
  const double penalty = 2.0;

  double shift = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    shift = std::max(shift, 1.0 + instance.constraint(i).max_eigenvalue());
  Matrix z = shift * id;
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t k = 1; k <= iters; ++k) {
    // Feasibility violation and its subgradient contributions.
    Matrix grad = rho;
    double worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(
          hermitize(instance.constraint(i).mat() - z));
      double top = es.eigenvalues().maxCoeff();
      worst = std::max(worst, top);
      if (top > 0) {
        Eigen::VectorXcd v =
            es.eigenvectors().col(es.eigenvalues().size() - 1);
        grad -= penalty * (v * v.adjoint());
      }
    }
    {
      Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(-z));
      double top = es.eigenvalues().maxCoeff();
      worst = std::max(worst, top);
      if (top > 0) {
        Eigen::VectorXcd v =
            es.eigenvectors().col(es.eigenvalues().size() - 1);
        grad -= penalty * (v * v.adjoint());
      }
    }
    // Push the current iterate back into the feasible cone and record the
    // (upper-bound) value it certifies.
    Matrix feas = z + std::max(worst, 0.0) * id;
    best = std::min(best, (rho * feas).trace().real());

    double alpha = 0.5 * shift / std::sqrt(static_cast<double>(k));
    z = hermitize(z - alpha * grad);
  }
  return best;
}

std::pair<SubMeasurement, ConsistencyReport> improve(
    const MeasurementFamily& a, const StructuredFamily& g,
    const BipartiteState& psi, const SubMeasurement& q, double eta) {
  if (q.num_outcomes() != g.size())
    throw std::invalid_argument("Q outcomes != |G|");
  if (g.num_questions() != a.num_questions() ||
      g.num_answers() != a.num_outcomes())
    throw std::invalid_argument("structured family does not match the measurement family");
  if (a.dim() != psi.dim() || q.dim() != psi.dim())
    throw std::invalid_argument("dimension mismatch");
  if (eta < 0) throw std::invalid_argument("eta must be nonnegative");

  double measured_eta = consistency::cross_consistency(q, g, a, psi);
  if (measured_eta > eta + 1e-9)
    throw std::invalid_argument("Q is not eta-consistent: measured " +
                                std::to_string(measured_eta) + " > " +
                                std::to_string(eta));

  const auto d = static_cast<Eigen::Index>(a.dim());
  std::vector<Operator> aggregated;
  aggregated.reserve(g.size());
  for (std::size_t gi = 0; gi < g.size(); ++gi)
    aggregated.push_back(consistency::aggregate(a, g.function(gi)));

  // The dual program for the aggregated family is solved against the
  // maximally entangled state: that is the pairing in which the optimal T^g
  // exist and transfer, independent of the instance state psi.
  SdpInstance inst(maximally_entangled(a.dim()), std::move(aggregated));
  SdpResult sol = solve(inst);

  std::vector<Operator> s_ops;
  s_ops.reserve(g.size());
  for (std::size_t gi = 0; gi < g.size(); ++gi) {
    Matrix acc = Matrix::Zero(d, d);
    for (std::size_t x = 0; x < a.num_questions(); ++x) {
      const Matrix& ax = a.op(x, g.function(gi)[x]).mat();
      acc += a.weight(x) * (ax * sol.primal.op(gi).mat() * ax);
    }
    s_ops.emplace_back(hermitize(acc));
  }
  SubMeasurement s(std::move(s_ops));

  ConsistencyReport report;
  report.self_consistency = consistency::self_consistency(a, psi);
  report.consistency = consistency::cross_consistency(s, g, a, psi);
  report.projectivity = consistency::projectivity_defect(s, psi);
  report.completeness_error = consistency::completeness_error(s, psi);
  report.structure = g.kappa().to_double();
  report.validate();

  // Completeness chain, asserted only at the exact point where the paper's
  // unspecified O(.) constants drop out.
  if (report.self_consistency <= 1e-12 && measured_eta <= 1e-12) {
    double s_complete = 1.0 - report.completeness_error;
    double q_complete = 1.0 - consistency::completeness_error(q, psi);
    if (s_complete < q_complete - eta - 1e-8)
      throw std::runtime_error("completeness chain violated at the exact point");
  }
  return {std::move(s), report};
}

SubMeasurement combine_R(const SubMeasurement& t, const SubMeasurement& q) {
  if (t.num_outcomes() != q.num_outcomes())
    throw std::invalid_argument("outcome-set mismatch");
  if (t.dim() != q.dim()) throw std::invalid_argument("dimension mismatch");
  const auto d = static_cast<Eigen::Index>(t.dim());
  const Matrix& ts = t.sum();
  Matrix c = Matrix::Identity(d, d) - ts;
  std::vector<Operator> ops;
  ops.reserve(t.num_outcomes());
  for (std::size_t gi = 0; gi < t.num_outcomes(); ++gi)
    ops.emplace_back(
        hermitize(ts * t.op(gi).mat() * ts + c * q.op(gi).mat() * c));
  return SubMeasurement(std::move(ops));
}

SubMeasurement complete_to_measurement(const SubMeasurement& r) {
  const auto d = static_cast<Eigen::Index>(r.dim());
  Matrix residual = hermitize(Matrix::Identity(d, d) - r.sum());
  std::vector<Operator> ops;
  ops.reserve(r.num_outcomes());
  ops.emplace_back(hermitize(r.op(0).mat() + residual));
  for (std::size_t gi = 1; gi < r.num_outcomes(); ++gi)
    ops.push_back(r.op(gi));
  return SubMeasurement(std::move(ops));
}

LoopResult self_improvement_loop(const MeasurementFamily& a,
                                 const StructuredFamily& g,
                                 const BipartiteState& psi,
                                 const SelfImprovementConfig& config,
                                 const BaselineProvider& baseline) {
  for (double threshold : {config.eps0, config.delta0, config.t0})
    if (!(threshold > 0.0) || threshold > 1.0)
      throw std::invalid_argument("thresholds must lie in (0, 1]");
  if (!baseline) throw std::invalid_argument("baseline provider is empty");

  SubMeasurement best = baseline(psi);
  if (best.num_outcomes() != g.size() || best.dim() != psi.dim())
    throw std::invalid_argument("baseline shape mismatch");
  double best_delta = consistency::cross_consistency(best, g, a, psi);
  std::vector<double> deltas{best_delta};

  std::size_t outer = 0;
  for (; outer < config.max_outer_iterations; ++outer) {
    auto [improved, rep] = improve(a, g, psi, best, best_delta + 1e-9);
    deltas.push_back(rep.consistency);
    if (rep.consistency >= best_delta - 1e-12) break;  // fixed point
    best = std::move(improved);
    best_delta = rep.consistency;

    // Patch the part of the space the improved sub-measurement misses with a
    // fresh baseline on the restricted state; a zero-norm restriction (the
    // sub-measurement already covers the support) propagates to the caller.
    auto [phi, norm2] = quantum::restricted_state(psi, Operator(best.sum()));
    SubMeasurement patch = baseline(phi);
    if (patch.num_outcomes() != g.size())
      throw std::invalid_argument("baseline shape mismatch on restricted state");
    SubMeasurement candidate = complete_to_measurement(combine_R(best, patch));
    double cand_delta = consistency::cross_consistency(candidate, g, a, psi);
    deltas.push_back(cand_delta);
    if (cand_delta < best_delta - 1e-12) {
      best = std::move(candidate);
      best_delta = cand_delta;
    } else {
      break;
    }
  }

  ConsistencyReport report;
  report.self_consistency = consistency::self_consistency(a, psi);
  report.consistency = best_delta;
  report.projectivity = consistency::projectivity_defect(best, psi);
  report.completeness_error = consistency::completeness_error(best, psi);
  report.structure = g.kappa().to_double();
  report.validate();
  return LoopResult{std::move(best), report, outer, std::move(deltas)};
}

}  // namespace eglab::sdp

// Implemented here rather than in consistency.cpp so the metric layer stays
// independent of the solver.
namespace eglab::consistency {

GlobalConsistencyCertificate certify_global_consistency(
    const quantum::MeasurementFamily& m, const StructuredFamily& g,
    const quantum::BipartiteState& psi) {
  if (g.num_questions() != m.num_questions() ||
      g.num_answers() != m.num_outcomes())
    throw std::invalid_argument("structured family does not match the measurement family");
  if (m.dim() != psi.dim()) throw std::invalid_argument("dimension mismatch");
  if (psi.support_dim(1e-10) < psi.dim())
    throw std::domain_error(
        "support-deficient state: compress to its support before certifying");

  double eps = self_consistency(m, psi);
  std::vector<quantum::Operator> aggregated, defects;
  aggregated.reserve(g.size());
  defects.reserve(g.size());
  for (std::size_t gi = 0; gi < g.size(); ++gi) {
    aggregated.push_back(aggregate(m, g.function(gi)));
    const quantum::Matrix& ag = aggregated.back().mat();
    defects.emplace_back(
        quantum::Matrix(((ag - ag * ag) + (ag - ag * ag).adjoint()) / 2.0));
  }
  sdp::SdpResult sol = sdp::solve(sdp::SdpInstance(psi, std::move(defects)));
  return GlobalConsistencyCertificate{eps, sol.dual_value, sol.dual_z,
                                      std::move(aggregated)};
}

}  // namespace eglab::consistency
