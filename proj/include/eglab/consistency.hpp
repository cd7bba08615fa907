#pragma once

#include <cstdint>
#include <vector>

#include "eglab/quantum.hpp"
#include "eglab/rational.hpp"

// Consistency metrics for measurement families against structured
// sub-measurements, and the certificate type for global consistency.
namespace eglab::consistency {

// Function X -> A tabulated over questions 0..|X|-1, values in 0..|A|-1.
using FunctionTable = std::vector<std::uint32_t>;

// A finite set G of tabulated functions X -> A together with its structure
// constant kappa = max over distinct pairs of their pointwise agreement
// fraction.  kappa is recomputed here rather than trusted from the caller.
class StructuredFamily {
 public:
  StructuredFamily(std::size_t num_questions, std::size_t num_answers,
                   std::vector<FunctionTable> functions);

  std::size_t num_questions() const { return num_questions_; }
  std::size_t num_answers() const { return num_answers_; }
  std::size_t size() const { return functions_.size(); }
  const FunctionTable& function(std::size_t g) const { return functions_[g]; }
  const Rational& kappa() const { return kappa_; }

  // Exact agreement fraction between two member functions.
  Rational agreement(std::size_t g, std::size_t h) const;

 private:
  std::size_t num_questions_, num_answers_;
  std::vector<FunctionTable> functions_;
  Rational kappa_;
};

// The measured error vector: epsilon (self-consistency), gamma
// (projectivity), delta (consistency with the reference family), eta
// (completeness error), kappa (structure constant).
struct ConsistencyReport {
  double self_consistency = 0;
  double projectivity = 0;
  double consistency = 0;
  double completeness_error = 0;
  double structure = 0;

  // All entries must land in [0, 1 + 1e-9]; fuzz below zero is clamped,
  // anything worse is a computation bug and throws.
  void validate();
};

struct GlobalConsistencyCertificate {
  double epsilon;
  double delta;                               // achieved dual value <Z, Id>_Psi
  quantum::Operator z;                        // dominates every A^g - (A^g)^2
  std::vector<quantum::Operator> aggregated;  // A^g in G order
};

// E_x sum_{a != a'} <M_x^a, M_x^{a'}>_Psi over ordered pairs.
double self_consistency(const quantum::MeasurementFamily& m,
                        const quantum::BipartiteState& psi);
// sum_{g != g'} <T^g, T^{g'}>_Psi, the sub-measurement analogue.
double self_consistency(const quantum::SubMeasurement& t,
                        const quantum::BipartiteState& psi);

// E_x <M_x, Id - M_x>_Psi with M_x the per-question sum.
double projectivity_defect(const quantum::MeasurementFamily& m,
                           const quantum::BipartiteState& psi);
// <T, Id - T>_Psi for the sub-measurement's combined operator.
double projectivity_defect(const quantum::SubMeasurement& t,
                           const quantum::BipartiteState& psi);

// E_x sum_g sum_{a != g(x)} <T^g, M_x^a>_Psi: how often the sub-measurement's
// function outcome disagrees with the family's pointwise answer.
double cross_consistency(const quantum::SubMeasurement& t,
                         const StructuredFamily& g,
                         const quantum::MeasurementFamily& m,
                         const quantum::BipartiteState& psi);

// 1 - <T, Id>_Psi.
double completeness_error(const quantum::SubMeasurement& t,
                          const quantum::BipartiteState& psi);

// A^g = E_x M_x^{g(x)} under the family's question distribution.
quantum::Operator aggregate(const quantum::MeasurementFamily& m,
                            const FunctionTable& g);

// E_x sum_a <C^dagger C, Id>_Psi with C = T M_x^a - M_x^a T and T the
// sub-measurement's combined operator.  The commutator is anti-Hermitian, so
// the modulus-square form is the nonnegative reading of its squared size.
double commutation_defect(const quantum::SubMeasurement& t,
                          const quantum::MeasurementFamily& m,
                          const quantum::BipartiteState& psi);

// | sum_g <A^g, R^g>_Psi  -  sum_g <Id, R^g A^g>_Psi |, the swap-to-one-side
// gap that is O(sqrt(eps)) for eps-self-consistent families.
double aggregate_swap_gap(const quantum::MeasurementFamily& m,
                          const StructuredFamily& g,
                          const quantum::SubMeasurement& r,
                          const quantum::BipartiteState& psi);

// epsilon via self_consistency, delta and Z via the dual semidefinite
// program over the constraints A^g - (A^g)^2.  Requires full support
// (implemented alongside the solver).
GlobalConsistencyCertificate certify_global_consistency(
    const quantum::MeasurementFamily& m, const StructuredFamily& g,
    const quantum::BipartiteState& psi);

}  // namespace eglab::consistency
