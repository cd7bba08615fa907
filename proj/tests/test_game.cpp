#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "eglab/game.hpp"

using namespace eglab;
using namespace eglab::game;
using quantum::Matrix;
using quantum::Operator;

namespace {

GameSpec all_accepting_game() {
  auto yes = [](std::size_t, std::size_t, std::uint32_t, std::size_t,
                std::size_t) { return true; };
  std::vector<GameSpec::Entry> entries{{0, 0, 0, Rational(1, 2)},
                                       {0, 1, 0, Rational(1, 2)}};
  return GameSpec::make_explicit({3}, {2, 2}, std::move(entries), yes);
}

// Uniform question pairs, accept iff the answers match.  Classical value 1.
GameSpec equality_game(std::size_t questions, std::size_t answers) {
  std::vector<GameSpec::Entry> entries;
  const auto total = static_cast<std::int64_t>(questions * questions);
  for (std::size_t x = 0; x < questions; ++x)
    for (std::size_t y = 0; y < questions; ++y)
      entries.push_back({x, y, 0, Rational(1, total)});
  auto eq = [](std::size_t, std::size_t, std::uint32_t, std::size_t a,
               std::size_t b) { return a == b; };
  return GameSpec::make_explicit(std::vector<std::size_t>(questions, answers),
                                 std::vector<std::size_t>(questions, answers),
                                 std::move(entries), eq);
}

// Parity test on a single triple of distinct queries: answers must xor to t.
ThreeQueryTest parity_test(std::size_t target) {
  ThreeQueryTest t;
  t.num_queries = 3;
  t.answer_counts = {2, 2, 2};
  t.triples = {{{0, 1, 2}, Rational(1)}};
  t.predicate = [target](const std::array<std::size_t, 3>&,
                         const std::array<std::size_t, 3>& a) {
    return (a[0] ^ a[1] ^ a[2]) == target;
  };
  return t;
}

}  // namespace

TEST_CASE("mixed-radix packing round-trips") {
  const std::vector<std::size_t> radices{3, 1, 4, 2};
  for (std::size_t v = 0; v < 24; ++v)
    CHECK(pack_digits(unpack_digits(v, radices), radices) == v);
  CHECK(pack_digits({2, 0, 3, 1}, radices) == 23);
  CHECK_THROWS_AS(pack_digits({3, 0, 0, 0}, radices), std::invalid_argument);
  CHECK_THROWS_AS(pack_digits({0, 0}, radices), std::invalid_argument);
  CHECK_THROWS_AS(unpack_digits(24, radices), std::invalid_argument);
}

TEST_CASE("explicit construction validation") {
  auto yes = [](std::size_t, std::size_t, std::uint32_t, std::size_t,
                std::size_t) { return true; };

  // Weights must sum to exactly 1.
  CHECK_THROWS_AS(GameSpec::make_explicit(
                      {2}, {2}, {{0, 0, 0, Rational(1, 3)}}, yes),
                  std::invalid_argument);
  // Positive weights only.
  CHECK_THROWS_AS(
      GameSpec::make_explicit(
          {2}, {2}, {{0, 0, 0, Rational(0)}, {0, 0, 0, Rational(1)}}, yes),
      std::invalid_argument);
  // Question indices must exist.
  CHECK_THROWS_AS(
      GameSpec::make_explicit({2}, {2}, {{1, 0, 0, Rational(1)}}, yes),
      std::invalid_argument);
  CHECK_THROWS_AS(GameSpec::make_explicit({2}, {0}, {{0, 0, 0, Rational(1)}},
                                          yes),
                  std::invalid_argument);
  CHECK_THROWS_AS(GameSpec::make_explicit({2}, {2}, {}, yes),
                  std::invalid_argument);

  // The all-accepting game is not a projection game and verification says so.
  CHECK_THROWS_AS(GameSpec::make_explicit({2}, {2}, {{0, 0, 0, Rational(1)}},
                                          yes, /*verify_projection=*/true),
                  std::invalid_argument);
  CHECK(chsh_game().projection_verified());

  // Sampler-mode accessors are rejected on explicit games and vice versa.
  const GameSpec g = chsh_game();
  CHECK_THROWS_AS(g.sampled_answers_a(), std::logic_error);
  CounterRng rng(1);
  CHECK_THROWS_AS(g.sample(rng), std::logic_error);
}

TEST_CASE("classical value: trivial and hand-checked games") {
  CHECK(classical_value_exact(all_accepting_game()) == Rational(1));
  CHECK(classical_value_exact(equality_game(3, 2)) == Rational(1));

  // Never-accepting game.
  auto no = [](std::size_t, std::size_t, std::uint32_t, std::size_t,
               std::size_t) { return false; };
  GameSpec zero =
      GameSpec::make_explicit({2}, {2}, {{0, 0, 0, Rational(1)}}, no);
  CHECK(classical_value_exact(zero) == Rational(0));
}

TEST_CASE("CHSH classical value is exactly 3/4") {
  const GameSpec g = chsh_game();

  // Independent oracle: walk all 16 deterministic strategies explicitly.
  Rational best(0);
  for (std::size_t a0 = 0; a0 < 2; ++a0)
    for (std::size_t a1 = 0; a1 < 2; ++a1)
      for (std::size_t b0 = 0; b0 < 2; ++b0)
        for (std::size_t b1 = 0; b1 < 2; ++b1) {
          const ClassicalStrategy s{{a0, a1}, {b0, b1}};
          const Rational v = strategy_value_exact(g, s);
          if (best < v) best = v;
        }
  CHECK(best == Rational(3, 4));

  ClassicalStrategy argmax;
  CHECK(classical_value_exact(g, &argmax) == Rational(3, 4));
  CHECK(strategy_value_exact(g, argmax) == Rational(3, 4));

  // The all-zeros strategy wins exactly on the three pairs with qa*qb = 0.
  CHECK(strategy_value_exact(g, ClassicalStrategy{{0, 0}, {0, 0}}) ==
        Rational(3, 4));
}

TEST_CASE("strategy validation catches coverage gaps") {
  const GameSpec g = chsh_game();
  CHECK_THROWS_AS(strategy_value_exact(g, ClassicalStrategy{{0}, {0, 0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(strategy_value_exact(g, ClassicalStrategy{{0, 2}, {0, 0}}),
                  std::invalid_argument);
}

TEST_CASE("classical embedding reproduces the classical value") {
  const GameSpec g = chsh_game();
  ClassicalStrategy argmax;
  const Rational exact = classical_value_exact(g, &argmax);
  for (std::size_t dim : {std::size_t{1}, std::size_t{3}}) {
    const QuantumStrategy q = embed_classical(g, argmax, dim);
    CHECK(std::abs(strategy_value_exact(g, q) - exact.to_double()) <= 1e-12);
  }

  // Embedding also covers ragged answer sets.
  const GameSpec acc = all_accepting_game();
  const QuantumStrategy q = embed_classical(acc, ClassicalStrategy{{2}, {1, 0}});
  CHECK(std::abs(strategy_value_exact(acc, q) - 1.0) <= 1e-12);
}

TEST_CASE("optimal CHSH strategy evaluates to cos^2(pi/8)") {
  const double v = strategy_value_exact(chsh_game(), chsh_optimal_strategy());
  const double tsirelson = std::cos(std::acos(-1.0) / 8.0);
  CHECK(std::abs(v - tsirelson * tsirelson) <= 1e-6);
  CHECK(v > 0.75);  // beats every classical strategy
}

TEST_CASE("sampled strategy value tracks the exact value") {
  const GameSpec g = chsh_game();
  const ClassicalStrategy s{{0, 0}, {0, 0}};
  const std::uint64_t trials = 20000;
  const ValueEstimate est = strategy_value_sampled(g, s, 0x5eed, trials);
  CHECK(est.trials == trials);
  CHECK(est.std_error > 0.0);
  CHECK(std::abs(est.value - 0.75) <= 3.0 * est.std_error);

  // Deterministic in the seed and independent of the thread count.
  const ValueEstimate rep = strategy_value_sampled(g, s, 0x5eed, trials);
  CHECK(rep.value == est.value);
  const ValueEstimate par = strategy_value_sampled(g, s, 0x5eed, trials, 4);
  CHECK(par.value == est.value);
  CHECK(strategy_value_sampled(g, s, 0x5eee, trials).value != est.value);
}

TEST_CASE("sampler-mode games: per-subtest tallies and role swaps") {
  // Two subtests: 0 compares answers on equal questions, 1 sends swapped
  // roles and accepts only the second prover's fixed answer.
  auto sampler = [](CounterRng& rng) {
    SampledRound r;
    const std::uint64_t bit = rng.next_below(2);
    r.subtest = static_cast<std::uint32_t>(bit);
    r.qa = {bit, rng.next_below(4)};
    r.qb = r.qa;
    r.swap_roles = bit == 1;
    return r;
  };
  auto pred = [](const Question& qa, const Question&, std::uint32_t,
                 std::size_t a, std::size_t b) {
    return qa[0] == 0 ? a == b : a == 1 && b == 0;
  };
  const GameSpec g = GameSpec::make_sampled(2, 2, sampler, pred, 2);

  // Prover 1 echoes question parity, prover 2 answers 0; under swapped roles
  // subtest 1 sees a = prover2 = 0... so it rejects, while subtest 0 accepts
  // iff both provers agree, i.e. iff the payload is even.
  FunctionStrategy s;
  s.alice = [](const Question& q) { return q[1] % 2; };
  s.bob = [](const Question&) { return std::size_t{0}; };

  const SampledStats stats = run_sampled(g, s, 99, 40000);
  CHECK(stats.subtest_trials[0] + stats.subtest_trials[1] == 40000);
  const double p0 = static_cast<double>(stats.subtest_accepts[0]) /
                    static_cast<double>(stats.subtest_trials[0]);
  CHECK(std::abs(p0 - 0.5) < 0.02);
  CHECK(stats.subtest_accepts[1] == 0);

  const SampledStats par = run_sampled(g, s, 99, 40000, 3);
  CHECK(par.overall.value == stats.overall.value);
  CHECK(par.subtest_accepts == stats.subtest_accepts);
}

TEST_CASE("quantum values stay real and inside [0, 1]") {
  // Complex random measurements through one see-saw sweep; real_checked
  // inside the evaluator throws if a visible imaginary residue appears.
  const SeesawResult r = seesaw_lower_bound(chsh_game(), 2, 7, 1);
  for (double v : r.trace) {
    CHECK(v >= -1e-9);
    CHECK(v <= 1.0 + 1e-9);
  }
}

TEST_CASE("see-saw on CHSH reaches the Tsirelson value") {
  double best = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SeesawResult r = seesaw_lower_bound(chsh_game(), 2, seed, 50);
    best = std::max(best, r.value);
    // Monotone trace: never decreases by more than 1e-10.
    for (std::size_t i = 1; i < r.trace.size(); ++i)
      CHECK(r.trace[i] >= r.trace[i - 1] - 1e-10);
    // Lower bound only: cannot exceed the entangled optimum.
    CHECK(r.value <= 0.85355339059327384 + 1e-9);
  }
  CHECK(best >= 0.853);
}

TEST_CASE("see-saw reaches the classical value of equality games") {
  // Binary path (positive-eigenspace splits).
  double best = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed)
    best = std::max(best,
                    seesaw_lower_bound(equality_game(2, 2), 2, seed, 20).value);
  CHECK(best >= 1.0 - 1e-9);

  // Three answers per question exercise the SDP best response.
  best = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed)
    best = std::max(best,
                    seesaw_lower_bound(equality_game(2, 3), 3, seed, 10).value);
  CHECK(best >= 1.0 - 1e-5);
}

TEST_CASE("see-saw input validation") {
  CHECK_THROWS_AS(seesaw_lower_bound(chsh_game(), 0, 1, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(seesaw_lower_bound(chsh_game(), 17, 1, 5),
                  std::invalid_argument);
}

TEST_CASE("oracularize: perfect test strategies stay perfect") {
  const GameSpec g = oracularize(parity_test(0));
  CHECK(g.projection_verified());
  CHECK(g.num_questions_a() == 1);
  CHECK(g.num_questions_b() == 3);
  CHECK(g.answers_a(0) == 8);

  // Honest strategy induced by f = (1, 1, 0): parity 0, Bob echoes f.
  const ClassicalStrategy honest{{pack_digits({1, 1, 0}, {2, 2, 2})},
                                 {1, 1, 0}};
  CHECK(strategy_value_exact(g, honest) == Rational(1));
  CHECK(classical_value_exact(g) == Rational(1));
}

TEST_CASE("oracularize: trivially-rejecting test has value zero") {
  ThreeQueryTest t = parity_test(0);
  t.predicate = [](const std::array<std::size_t, 3>&,
                   const std::array<std::size_t, 3>&) { return false; };
  CHECK(classical_value_exact(oracularize(t)) == Rational(0));
}

TEST_CASE("oracularize: game value is bounded by the unchecked relaxation") {
  // Two triples, the second of which cannot satisfy the predicate (it asks
  // for odd parity on a repeated-query triple whose forced structure is
  // even).  Dropping Bob's cross-check relaxes the game, so the game value
  // is at most the relaxation value sum_T w(T) * [predicate satisfiable].
  ThreeQueryTest t;
  t.num_queries = 4;
  t.answer_counts = {2, 2, 2, 2};
  t.triples = {{{0, 1, 2}, Rational(1, 2)}, {{3, 3, 3}, Rational(1, 2)}};
  t.predicate = [](const std::array<std::size_t, 3>& q,
                   const std::array<std::size_t, 3>& a) {
    if (q[0] == 3) return a[0] == a[1] && a[1] == a[2] && a[0] == 1 && a[2] == 0;
    return (a[0] ^ a[1] ^ a[2]) == 0;
  };
  Rational relaxation(0);
  for (const auto& tr : t.triples) {
    bool satisfiable = false;
    for (std::size_t a = 0; a < 8; ++a) {
      const auto d = unpack_digits(a, {2, 2, 2});
      if (t.predicate(tr.q, {d[0], d[1], d[2]})) satisfiable = true;
    }
    if (satisfiable) relaxation += tr.weight;
  }
  CHECK(relaxation == Rational(1, 2));
  CHECK(classical_value_exact(oracularize(t)) <= relaxation);
}

TEST_CASE("oracularize: repeated queries are matched per coordinate") {
  // Triple (0, 0, 1) with predicate a0 != a1: Alice must answer the repeated
  // query inconsistently, so Bob (who sees which coordinate he plays via
  // neither question nor answer) is caught on one of the two coordinates.
  ThreeQueryTest t;
  t.num_queries = 2;
  t.answer_counts = {2, 2};
  t.triples = {{{0, 0, 1}, Rational(1)}};
  t.predicate = [](const std::array<std::size_t, 3>&,
                   const std::array<std::size_t, 3>& a) { return a[0] != a[1]; };
  // Best play: pass the predicate, agree with Bob on coordinates {0 or 1}
  // plus coordinate 2: value 2/3.
  CHECK(classical_value_exact(oracularize(t)) == Rational(2, 3));
}

TEST_CASE("oracularize rejects malformed test specs") {
  ThreeQueryTest t = parity_test(0);
  t.answer_counts = {2, 2};
  CHECK_THROWS_AS(oracularize(t), std::invalid_argument);
  t = parity_test(0);
  t.triples[0].q = {0, 1, 3};
  CHECK_THROWS_AS(oracularize(t), std::invalid_argument);
  t = parity_test(0);
  t.predicate = nullptr;
  CHECK_THROWS_AS(oracularize(t), std::invalid_argument);
  t = parity_test(0);
  t.triples[0].weight = Rational(1, 2);
  CHECK_THROWS_AS(oracularize(t), std::invalid_argument);
}

TEST_CASE("parallel repetition: k = 1 is the identity") {
  const GameSpec g = chsh_game();
  const GameSpec r = parallel_repeat(g, 1);
  CHECK(r.entries().size() == g.entries().size());
  CHECK(classical_value_exact(r) == classical_value_exact(g));
}

TEST_CASE("parallel repetition of CHSH: exact brute force") {
  const GameSpec g = chsh_game();
  const GameSpec g2 = parallel_repeat(g, 2);
  CHECK(g2.num_questions_a() == 4);
  CHECK(g2.answers_a(0) == 4);
  CHECK(g2.entries().size() == 16);
  CHECK(g2.projection_verified());

  const Rational v2 = classical_value_exact(g2);

  // Independent oracle: enumerate every strategy pair of the repeated game
  // directly (4 answers on 4 questions per side = 256 tables per side).
  Rational best(0);
  std::vector<std::size_t> ta(4, 0), tb(4, 0);
  const std::vector<std::size_t> radices(4, 4);
  do {
    std::fill(tb.begin(), tb.end(), 0);
    do {
      Rational v(0);
      for (const auto& e : g2.entries())
        if (g2.accepts(e.qa, e.qb, e.aux, ta[e.qa], tb[e.qb])) v += e.weight;
      if (best < v) best = v;
    } while ([&] {
      for (std::size_t i = 0; i < 4; ++i) {
        if (++tb[i] < 4) return true;
        tb[i] = 0;
      }
      return false;
    }());
  } while ([&] {
    for (std::size_t i = 0; i < 4; ++i) {
      if (++ta[i] < 4) return true;
      ta[i] = 0;
    }
    return false;
  }());
  CHECK(v2 == best);

  // The headline inequality and the product-strategy witness.
  ClassicalStrategy argmax;
  const Rational v1 = classical_value_exact(g, &argmax);
  CHECK(v1 * v1 <= v2);
  const ClassicalStrategy prod = repeat_strategy(g, argmax, 2);
  CHECK(strategy_value_exact(g2, prod) == v1 * v1);
}

TEST_CASE("parallel repetition: product of honest strategies stays perfect") {
  const GameSpec g = equality_game(2, 2);
  const ClassicalStrategy honest{{1, 1}, {1, 1}};
  CHECK(strategy_value_exact(g, honest) == Rational(1));
  const GameSpec g3 = parallel_repeat(g, 3);
  CHECK(strategy_value_exact(g3, repeat_strategy(g, honest, 3)) == Rational(1));
}

TEST_CASE("parallel repetition guards the blow-up") {
  CHECK_THROWS_AS(parallel_repeat(chsh_game(), 20), std::runtime_error);
}

TEST_CASE("quantum strategy construction validates completeness") {
  const auto id = Operator::identity(2);
  const auto zero = Operator::zero(2);
  // Sub-measurement families (sum != Id) are rejected for game play.
  CHECK_THROWS_AS(
      QuantumStrategy(quantum::maximally_entangled(2),
                      quantum::MeasurementFamily({{zero, zero}, {zero, zero}}),
                      quantum::MeasurementFamily({{id, zero}, {id, zero}})),
      std::invalid_argument);
  // Dimension mismatches are rejected.
  CHECK_THROWS_AS(
      QuantumStrategy(quantum::maximally_entangled(3),
                      quantum::MeasurementFamily({{id, zero}}),
                      quantum::MeasurementFamily({{id, zero}})),
      std::invalid_argument);
}
