#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "eglab/consistency.hpp"
#include "eglab/quantum.hpp"

// Dual semidefinite solver for operator-domination programs
//
//   minimize <Z, Id>_Psi   subject to   Z >= A_i for all i,  Z >= 0,
//
// whose primal is the best sub-measurement value sup sum_i <T_i, A_i>_Psi,
// plus the self-improvement constructions built on top of it.
namespace eglab::sdp {

// Constraint family {A_i}: PSD Hermitian operators below Id, paired with a
// full-support state.  Callers holding a support-deficient state must move
// to the support basis (quantum::compress_to_support) before building one.
class SdpInstance {
 public:
  SdpInstance(quantum::BipartiteState psi,
              std::vector<quantum::Operator> constraints);

  std::size_t dim() const { return psi_.dim(); }
  std::size_t size() const { return constraints_.size(); }
  const quantum::BipartiteState& psi() const { return psi_; }
  const quantum::Operator& constraint(std::size_t i) const {
    return constraints_[i];
  }
  const std::vector<quantum::Operator>& constraints() const {
    return constraints_;
  }

 private:
  quantum::BipartiteState psi_;
  std::vector<quantum::Operator> constraints_;
};

struct SdpTraceRow {
  std::size_t step;
  double mu;
  double dual_value;
  double primal_estimate;  // central-path estimate dual - mu*d*(n+1)
  double gap_estimate;
};

struct SdpResult {
  quantum::SubMeasurement primal;  // {T_i}, completed so the sum is Id
  quantum::Operator dual_z;
  double primal_value;
  double dual_value;
  double gap;                 // dual - primal, >= -1e-8 by weak duality
  double slackness_residual;  // max_i |T_i Z - T_i A_i|_F
  std::vector<SdpTraceRow> trace;
};

// Log-det barrier path-following on the dual; primal recovered from the
// barrier gradient and completed to a full measurement (the optimum may be
// taken with sum_i T_i = Id).  The slackness residual is reported, not
// asserted: it provably vanishes on maximally entangled instances with real
// data, and is state-dependent otherwise.
SdpResult solve(const SdpInstance& instance);

// Coarse dual upper bound by projected subgradient on the exact-penalty
// objective; deliberately primitive, used to cross-check solve() on small
// instances rather than as a solver.
double coarse_dual_estimate(const SdpInstance& instance, std::size_t iters);

// One self-improvement round: requires Q eta-consistent with A (checked),
// solves the dual program over the aggregated {A^g} against the maximally
// entangled state, and returns S^g = E_x A_x^{g(x)} T^g A_x^{g(x)} together
// with its measured consistency report.
std::pair<quantum::SubMeasurement, consistency::ConsistencyReport> improve(
    const quantum::MeasurementFamily& a, const consistency::StructuredFamily& g,
    const quantum::BipartiteState& psi, const quantum::SubMeasurement& q,
    double eta);

// R^g = T T^g T + (Id - T) Q^g (Id - T) with T the combined operator of the
// first argument; sums to T^3 + (Id-T) Q (Id-T) <= Id.
quantum::SubMeasurement combine_R(const quantum::SubMeasurement& t,
                                  const quantum::SubMeasurement& q);

// Adds the (symmetrized) residual Id - sum R^g to the lexicographically
// smallest outcome so the result is a measurement.
quantum::SubMeasurement complete_to_measurement(const quantum::SubMeasurement& r);

struct SelfImprovementConfig {
  double eps0 = 1e-2;   // abstract thresholds; must lie in (0, 1]
  double delta0 = 1e-2;
  double t0 = 1e-2;
  std::size_t max_outer_iterations = 8;
};

struct LoopResult {
  quantum::SubMeasurement result;
  consistency::ConsistencyReport report;
  std::size_t outer_iterations;
  std::vector<double> consistency_trace;  // measured delta after each stage
};

using BaselineProvider =
    std::function<quantum::SubMeasurement(const quantum::BipartiteState&)>;

// Full pipeline: baseline on psi -> improve -> restrict below the improved
// sub-measurement -> fresh baseline on the restricted state -> combine and
// complete -> repeat while the measured consistency strictly improves.  The
// candidate is only ever replaced on strict improvement, so the final
// consistency never exceeds the baseline's.  Zero-norm restricted states
// (the improved operator already acts as Id on the support) propagate as
// std::domain_error.
LoopResult self_improvement_loop(const quantum::MeasurementFamily& a,
                                 const consistency::StructuredFamily& g,
                                 const quantum::BipartiteState& psi,
                                 const SelfImprovementConfig& config,
                                 const BaselineProvider& baseline);

}  // namespace eglab::sdp
