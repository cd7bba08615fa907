#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "eglab/quantum.hpp"
#include "eglab/rational.hpp"
#include "eglab/rng.hpp"

// Two-player one-round games.  Explicit mode lists the question distribution
// as exact rational weights and supports exact value computation; sampler
// mode backs games whose question sets are too large to enumerate (the
// structured tests hand out questions like "label + packed bit vector")
// and supports Monte-Carlo evaluation only.
namespace eglab::game {

// Structured question used by sampler-mode games.  The first word is a
// generator-defined kind tag, the rest is payload (packed bits, field
// elements, ...); the game layer passes it through without interpreting it.
using Question = std::vector<std::uint64_t>;

// One sampled verifier round.  `aux` is verifier-private randomness the
// predicate may depend on (e.g. which triple coordinate Bob was sent);
// `subtest` is a reporting label for per-subtest breakdowns; `swap_roles`
// hands the first question to the second prover and vice versa, sampling
// the "chose one at random to be Alice" coin.
struct SampledRound {
  Question qa, qb;
  std::uint32_t aux = 0;
  std::uint32_t subtest = 0;
  bool swap_roles = false;
};

class GameSpec {
 public:
  struct Entry {
    std::size_t qa = 0, qb = 0;
    std::uint32_t aux = 0;  // verifier-private coordinate, 0 when unused
    Rational weight;
  };
  using Predicate = std::function<bool(std::size_t qa, std::size_t qb,
                                       std::uint32_t aux, std::size_t a,
                                       std::size_t b)>;
  using Sampler = std::function<SampledRound(CounterRng&)>;
  using SampledPredicate =
      std::function<bool(const Question& qa, const Question& qb,
                         std::uint32_t aux, std::size_t a, std::size_t b)>;

  // Explicit finite game.  answers_a[x] is the number of answers available
  // to Alice on question x (likewise answers_b); weights must be positive
  // rationals summing to exactly 1.  With verify_projection the factory
  // checks by enumeration that each (qa, qb, aux, a) accepts at most one b
  // and throws std::invalid_argument if the game is not a projection game.
  static GameSpec make_explicit(std::vector<std::size_t> answers_a,
                                std::vector<std::size_t> answers_b,
                                std::vector<Entry> entries, Predicate pred,
                                bool verify_projection = false);

  // Sampler-backed game with uniform answer counts per side.  num_subtests
  // sizes the per-subtest breakdown (every sampled round must label itself
  // with subtest < num_subtests).
  static GameSpec make_sampled(std::size_t answers_a, std::size_t answers_b,
                               Sampler sampler, SampledPredicate pred,
                               std::uint32_t num_subtests = 1);

  bool is_explicit() const { return explicit_mode_; }
  bool projection_verified() const { return projection_verified_; }

  // Explicit-mode accessors; throw std::logic_error on sampler games.
  std::size_t num_questions_a() const;
  std::size_t num_questions_b() const;
  std::size_t answers_a(std::size_t x) const;
  std::size_t answers_b(std::size_t y) const;
  std::size_t max_answers_a() const;
  std::size_t max_answers_b() const;
  const std::vector<Entry>& entries() const;
  bool accepts(std::size_t qa, std::size_t qb, std::uint32_t aux,
               std::size_t a, std::size_t b) const;

  // Sampler-mode accessors; throw std::logic_error on explicit games.
  std::size_t sampled_answers_a() const;
  std::size_t sampled_answers_b() const;
  std::uint32_t num_subtests() const;
  SampledRound sample(CounterRng& rng) const;
  bool accepts(const Question& qa, const Question& qb, std::uint32_t aux,
               std::size_t a, std::size_t b) const;

 private:
  GameSpec() = default;

  // Repetition inherits verified projection structure without re-enumerating
  // (conjunctions of projection games are projection games).
  friend GameSpec parallel_repeat(const GameSpec& g, std::size_t k);

  bool explicit_mode_ = true;
  bool projection_verified_ = false;
  // explicit mode
  std::vector<std::size_t> answers_a_, answers_b_;
  std::vector<Entry> entries_;
  Predicate pred_;
  // sampler mode
  std::size_t s_answers_a_ = 0, s_answers_b_ = 0;
  std::uint32_t num_subtests_ = 1;
  Sampler sampler_;
  SampledPredicate s_pred_;
};

// Deterministic answer tables, one entry per question index.
struct ClassicalStrategy {
  std::vector<std::size_t> alice;
  std::vector<std::size_t> bob;
};

// Deterministic prover pair for sampler-mode games: each function maps a
// structured question to an answer index.  Role swaps may hand either prover
// either side's questions, so both functions must be total over the union.
struct FunctionStrategy {
  std::function<std::size_t(const Question&)> alice;
  std::function<std::size_t(const Question&)> bob;
};

// Shared entangled state plus one measurement family per side, indexed by
// question.  Construction requires matching dimensions and per-question
// completeness (sum of outcome operators = Id within 1e-10): games are
// played with complete measurements; sub-measurements belong to the
// consistency layer.
class QuantumStrategy {
 public:
  QuantumStrategy(quantum::BipartiteState psi, quantum::MeasurementFamily alice,
                  quantum::MeasurementFamily bob);

  const quantum::BipartiteState& psi() const { return psi_; }
  const quantum::MeasurementFamily& alice() const { return alice_; }
  const quantum::MeasurementFamily& bob() const { return bob_; }

 private:
  quantum::BipartiteState psi_;
  quantum::MeasurementFamily alice_, bob_;
};

// Monte-Carlo acceptance estimate.  std_error is the exact binomial standard
// error sqrt(p(1-p)/n) of the observed fraction.
struct ValueEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t trials = 0;
};

// Sampled-run summary with a per-subtest breakdown.
struct SampledStats {
  ValueEstimate overall;
  std::vector<std::uint64_t> subtest_trials;
  std::vector<std::uint64_t> subtest_accepts;
};

// Exact classical value: maximum acceptance probability over deterministic
// strategies (mixed strategies cannot do better by convexity).  Enumerates
// the cheaper side's full table space and best-responds per question on the
// other side; throws std::runtime_error when both sides' table spaces exceed
// 10^7.  When argmax is non-null it receives an optimal strategy.
Rational classical_value_exact(const GameSpec& g,
                               ClassicalStrategy* argmax = nullptr);

// Exact acceptance probability of a fixed strategy (explicit games only).
Rational strategy_value_exact(const GameSpec& g, const ClassicalStrategy& s);

// sum_entries w * sum_{accepted (a,b)} <A_qa^a, B_qb^b>_Psi, evaluated
// exactly over the explicit distribution.  Throws when the imaginary residue
// of the total exceeds 1e-10 (symmetrized strategies give real values).
double strategy_value_exact(const GameSpec& g, const QuantumStrategy& s);

// Monte-Carlo estimate of a classical strategy's value by sampling question
// pairs from the explicit distribution; deterministic given (seed, trials)
// and independent of the thread count (fixed trial chunking, per-trial
// counter streams, integer reduction).
ValueEstimate strategy_value_sampled(const GameSpec& g,
                                     const ClassicalStrategy& s,
                                     std::uint64_t seed, std::uint64_t trials,
                                     unsigned threads = 1);

// Monte-Carlo run of a sampler-mode game against a prover pair, with
// per-subtest breakdown.  Determinism contract as above.
SampledStats run_sampled(const GameSpec& g, const FunctionStrategy& s,
                         std::uint64_t seed, std::uint64_t trials,
                         unsigned threads = 1);

// Diagonal embedding of a classical strategy: dim-dimensional maximally
// entangled state with projectors Id (on the chosen answer) / 0 (elsewhere).
// Achieves exactly the classical value; witnesses omega <= omega*.
QuantumStrategy embed_classical(const GameSpec& g, const ClassicalStrategy& s,
                                std::size_t dim = 1);

// Alternating optimization for a lower bound on the entangled value.  The
// shared state is fixed to the maximally entangled state of the given
// dimension; each half-step replaces one side's measurement for every
// question by an exact best response (positive-eigenspace projector for
// binary answers, a small SDP round otherwise), so the value trace is
// non-decreasing up to floating-point noise; a half-step that fails to
// improve is rolled back.  Returns the best value found - a lower bound on
// the entangled value only, never an upper bound.
struct SeesawResult {
  double value = 0.0;
  QuantumStrategy strategy;
  std::vector<double> trace;  // initial value, then each accepted half-step
  bool stagnated = false;     // stopped before iters full sweeps
};
SeesawResult seesaw_lower_bound(const GameSpec& g, std::size_t dim,
                                std::uint64_t seed, std::size_t iters);

// Three-query test: a distribution over ordered query triples plus a
// predicate on the answer triple.  The input format of oracularization.
struct ThreeQueryTest {
  struct Triple {
    std::array<std::size_t, 3> q{};
    Rational weight;
  };
  std::size_t num_queries = 0;             // queries are 0..num_queries-1
  std::vector<std::size_t> answer_counts;  // per query
  std::vector<Triple> triples;             // weights sum to exactly 1
  std::function<bool(const std::array<std::size_t, 3>& queries,
                     const std::array<std::size_t, 3>& answers)>
      predicate;
};

// Sends the whole triple to Alice and a uniformly random coordinate of it to
// Bob (aux records which one); accepts iff Alice's answer triple passes the
// test predicate and Bob's answer matches Alice's at that coordinate.  Alice
// answers the mixed-radix packing of her triple (pack_digits order); the
// result is always a projection game and is verified as such.
GameSpec oracularize(const ThreeQueryTest& t);

// k independent copies played simultaneously: product distribution,
// conjunction predicate, mixed-radix question/answer tuples (pack_digits
// over per-copy indices).  Guards the entry and answer blow-up; preserves
// verified projection structure.  k = 1 returns the game unchanged.
GameSpec parallel_repeat(const GameSpec& g, std::size_t k);

// The product strategy s^(x)k on parallel_repeat(g, k): plays s in every
// copy.  Its value is exactly value(s)^k.
ClassicalStrategy repeat_strategy(const GameSpec& g, const ClassicalStrategy& s,
                                  std::size_t k);

// The CHSH game: uniform question bits, accept iff a xor b = qa and qb.
// Classical value 3/4; entangled value cos^2(pi/8).
GameSpec chsh_game();

// The standard optimal entangled strategy for CHSH: maximally entangled
// qubit pair, Alice measures Z / X, Bob measures (Z+X)/sqrt2 / (Z-X)/sqrt2.
QuantumStrategy chsh_optimal_strategy();

// Little-endian mixed-radix packing: digits[0] is the fastest-varying
// coordinate.  Both throw on radix/digit range violations.
std::size_t pack_digits(const std::vector<std::size_t>& digits,
                        const std::vector<std::size_t>& radices);
std::vector<std::size_t> unpack_digits(std::size_t value,
                                       const std::vector<std::size_t>& radices);

}  // namespace eglab::game
