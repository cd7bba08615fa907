#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "eglab/game.hpp"
#include "eglab/gf.hpp"
#include "eglab/poly.hpp"
#include "eglab/rational.hpp"
#include "eglab/rng.hpp"

// The concrete two-prover tests: the plane-vs-point low-degree test, the
// oracularized linearity test, and the QUADEQ satisfiability test, together
// with honest and adversarial strategies for each.
namespace eglab::protocols {

// ---------------------------------------------------------------------------
// Plane-vs-point low-degree test

struct LdtParams {
  std::uint32_t d = 1;  // degree bound
  std::uint32_t m = 2;  // number of variables
  std::uint64_t q = 5;  // field size

  // q prime, q > d, m >= 2; throws std::invalid_argument.
  void validate() const;
};

// Full deterministic prover: answers both question kinds, since the referee
// decides per round who receives the plane and who receives the point.
// Answer functions must be pure (same query, same answer).
struct ProverOracle {
  std::function<poly::BivariatePoly(const poly::AffinePlane&)> plane;
  std::function<gf::FieldElement(const gf::FieldVector&)> point;
};

struct LdtRound {
  gf::FieldVector x, y1, y2;
  bool dependent = false;  // directions linearly dependent: auto-accept
  // Set iff the directions were independent.
  std::optional<poly::AffinePlane> plane;
  std::optional<std::pair<gf::FieldElement, gf::FieldElement>> coords;
};

// Draws x, y1, y2 uniformly (in that order); when the directions span a
// plane, attaches its canonical form and x's coordinates on it.
LdtRound ldt_sample_round(const LdtParams& params, CounterRng& rng);

struct LdtStats {
  double acceptance = 0.0;
  double std_error = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t accepted = 0;
  std::uint64_t dependent_rounds = 0;
};

// Monte-Carlo run: per trial, a fair coin decides which prover answers the
// plane question, then the round is sampled and checked.  Deterministic in
// (seed, trials) regardless of the thread count.
LdtStats ldt_run(const LdtParams& params, const ProverOracle& first,
                 const ProverOracle& second, std::uint64_t trials,
                 std::uint64_t seed, unsigned threads = 1);

struct LdtExact {
  Rational acceptance;
  Rational dependent_fraction;
};

// Exact acceptance probability: enumerates every (x, y1, y2) draw and both
// role assignments.  Guarded to q^(3m) <= 2*10^7 draws (std::runtime_error).
LdtExact ldt_exhaustive(const LdtParams& params, const ProverOracle& first,
                        const ProverOracle& second);

// Plane answers by symbolic restriction, point answers by evaluation.
// Throws std::invalid_argument if g's shape or degree violates the params.
ProverOracle honest_ldt_strategy(const poly::MultiPoly& g,
                                 const LdtParams& params);

// Adversary presets: a prover answering the constant c everywhere, and a
// prover answering by a pseudo-random function of the query (deterministic
// in the seed, so exhaustive and sampled runs agree).
ProverOracle constant_oracle(const LdtParams& params, std::uint64_t value);
ProverOracle random_oracle(const LdtParams& params, std::uint64_t seed);

// Structural question/answer sizes, reported rather than asserted.
struct LdtSizes {
  std::uint64_t point_question_elems = 0;  // m field elements
  std::uint64_t plane_question_elems = 0;  // base + two basis vectors: 3m
  std::uint64_t plane_answer_elems = 0;    // (d+1)(d+2)/2 coefficients
  std::uint64_t point_answer_elems = 1;
  std::uint64_t bits_per_element = 0;  // ceil(log2 q)
  std::uint64_t max_question_bits = 0;
  std::uint64_t max_answer_bits = 0;
};
LdtSizes ldt_sizes(const LdtParams& params);

// Diagnostic ratio q / (d*m / epsilon)^exponent.  The soundness analysis
// assumes this is >= 1; desk-scale parameters deliberately violate it, so the
// ratio is reported and never enforced.
double ldt_soundness_ratio(const LdtParams& params, double epsilon,
                           double exponent);

// ---------------------------------------------------------------------------
// Oracularized linearity test
//
// Base test: pick u, v in F_2^n, query (u, v, u+v), accept iff the answer
// bits xor to zero.  Oracularization sends the whole triple to one player
// and a uniformly chosen coordinate to the other.  The third element of the
// triple is redundant, so by default answers are trimmed to the first two
// bits (the untrimmed variant stays available for comparison).

// The base three-query test with all 4^n triples materialized (n <= 8).
game::ThreeQueryTest linearity_test(std::size_t n);

struct LinearityGame {
  game::GameSpec game;
  std::size_t n = 0;
  bool trimmed = true;
  bool explicit_mode = true;

  // Strategy induced by an arbitrary truth table (2^n entries of 0/1): the
  // pair player answers (f(u), f(v)) -- plus f(u+v) untrimmed -- and the
  // other player answers f on their single query.  Explicit mode only.
  game::ClassicalStrategy table_strategy(
      const std::vector<std::uint8_t>& truth_table) const;

  // Same induced strategy from a callable, for the sampler-mode game.
  game::FunctionStrategy function_strategy(
      std::function<std::uint8_t(std::uint64_t)> f) const;
};

// Explicit GameSpec for n <= 8, sampler-mode up to n = 20, guard beyond.
LinearityGame linearity_game(std::size_t n, bool trimmed = true);

// ---------------------------------------------------------------------------
// QUADEQ
//
// A system of K quadratic equations x^T a^(k) x = c^(k) over F_2^n.  The test
// mixes linearity tests on the provers' four tables (two half-assignment
// tables, the full-assignment table and the tensor table), a consistency
// test tying the halves to the full table, a tensor-consistency test, and a
// random-constraint check.

struct QuadeqInstance {
  std::size_t n = 0;                              // even, 2..32
  std::vector<std::vector<std::uint64_t>> forms;  // K matrices, n row words
  std::vector<std::uint8_t> constants;            // K bits
  std::optional<std::uint64_t> witness;           // assignment bits

  // Shape checks plus witness verification when one is present.
  void validate() const;
  // Does the assignment satisfy every equation?
  bool check(std::uint64_t assignment) const;
};

// A strategy whose four tables are linear forms; the linearity sub-tests
// accept such tables with probability exactly 1, which makes the remaining
// sub-tests exactly enumerable.
struct LinearFormStrategy {
  std::uint64_t half1 = 0;            // n/2 bits
  std::uint64_t half2 = 0;            // n/2 bits
  std::uint64_t full = 0;             // n bits
  std::vector<std::uint64_t> tensor;  // n^2 bits, row-major
};

// half1/half2/full from the assignment, tensor = assignment (x) assignment.
LinearFormStrategy forms_from_assignment(const QuadeqInstance& inst,
                                         std::uint64_t assignment);

// Sub-test indices (sampler subtest labels and breakdown positions).
enum QuadeqSubtest : std::uint32_t {
  kLinHalf1 = 0,
  kLinHalf2 = 1,
  kLinFull = 2,
  kLinTensor = 3,
  kConsistency = 4,
  kTensorConsistency = 5,
  kConstraint = 6,
};
inline constexpr std::size_t kNumQuadeqSubtests = 7;

// How often each sub-test runs.  The reference description fixes the split
// inside the linearity block but leaves the outer mixture open; the default
// is uniform over the four blocks, then uniform inside the linearity block.
struct QuadeqMixture {
  std::array<Rational, kNumQuadeqSubtests> weights;

  static QuadeqMixture standard();
  void validate() const;  // nonnegative, sums to exactly 1
};

struct QuadeqGame {
  game::GameSpec game;
  QuadeqInstance instance;
  QuadeqMixture mixture;
  bool trimmed = true;

  // Honest strategy from the instance witness (throws without one).
  game::FunctionStrategy honest_strategy() const;
  // Strategy whose four tables are the given linear forms.
  game::FunctionStrategy strategy(const LinearFormStrategy& forms) const;
};

QuadeqGame quadeq_game(const QuadeqInstance& inst,
                       const QuadeqMixture& mixture = QuadeqMixture::standard(),
                       bool trimmed = true);

struct QuadeqBreakdown {
  std::array<Rational, kNumQuadeqSubtests> subtest_acceptance;
  Rational overall;
};

// Exact per-sub-test acceptance for a symmetric linear-form strategy (both
// provers answer from the same tables).  Guarded to n <= 12 and K <= 20.
QuadeqBreakdown quadeq_exhaustive(
    const QuadeqInstance& inst, const LinearFormStrategy& strat,
    const QuadeqMixture& mixture = QuadeqMixture::standard());

// Drops the redundant third answer bit of an untrimmed game (pair answers
// 8 -> 4 outcomes, lifting back via a3 = a1 xor a2).  Value-preserving on
// the games produced by linearity_game and quadeq_game.
game::GameSpec answer_trim(const game::GameSpec& g);

// ---------------------------------------------------------------------------
// Question encoding shared by the linearity and QUADEQ samplers: word 0 is a
// kind tag, the remaining words carry bit vectors packed little-endian.

enum QuestionKind : std::uint64_t {
  kSingleHalf1 = 0,
  kSingleHalf2 = 1,
  kSingleFull = 2,
  kSingleTensor = 3,
  kPairHalf1 = 4,
  kPairHalf2 = 5,
  kPairFull = 6,
  kPairTensor = 7,
  kPairMixed = 8,  // (l1, u) with (l2, v)
};

}  // namespace eglab::protocols
