#include "eglab/game.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "eglab/detail/trials.hpp"
#include "eglab/sdp.hpp"

namespace eglab::game {

namespace {

using quantum::Matrix;
using quantum::Operator;

Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

// Product of per-question table sizes, saturating at `cap` so callers can
// compare against enumeration guards without overflow.
std::size_t table_space(const std::vector<std::size_t>& counts,
                        std::size_t cap) {
  std::size_t prod = 1;
  for (std::size_t c : counts) {
    if (c == 0) return 0;
    if (prod > cap / c) return cap + 1;
    prod *= c;
  }
  return prod;
}

void check_strategy_shape(const GameSpec& g, const ClassicalStrategy& s) {
  if (s.alice.size() != g.num_questions_a() ||
      s.bob.size() != g.num_questions_b())
    throw std::invalid_argument("strategy does not cover the question sets");
  for (std::size_t x = 0; x < s.alice.size(); ++x)
    if (s.alice[x] >= g.answers_a(x))
      throw std::invalid_argument("strategy answer out of range");
  for (std::size_t y = 0; y < s.bob.size(); ++y)
    if (s.bob[y] >= g.answers_b(y))
      throw std::invalid_argument("strategy answer out of range");
}

// Odometer increment over mixed radices; returns false after the last tuple.
bool advance(std::vector<std::size_t>& digits,
             const std::vector<std::size_t>& radices) {
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (++digits[i] < radices[i]) return true;
    digits[i] = 0;
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// GameSpec

GameSpec GameSpec::make_explicit(std::vector<std::size_t> answers_a,
                                 std::vector<std::size_t> answers_b,
                                 std::vector<Entry> entries, Predicate pred,
                                 bool verify_projection) {
  if (answers_a.empty() || answers_b.empty())
    throw std::invalid_argument("game needs at least one question per side");
  for (std::size_t c : answers_a)
    if (c == 0) throw std::invalid_argument("empty answer set");
  for (std::size_t c : answers_b)
    if (c == 0) throw std::invalid_argument("empty answer set");
  if (entries.empty())
    throw std::invalid_argument("explicit game needs at least one entry");
  if (!pred) throw std::invalid_argument("predicate must be callable");

  Rational total(0);
  for (const Entry& e : entries) {
    if (e.qa >= answers_a.size() || e.qb >= answers_b.size())
      throw std::invalid_argument("entry question index out of range");
    if (!(Rational(0) < e.weight))
      throw std::invalid_argument("distribution weight must be positive");
    total += e.weight;
  }
  if (total != Rational(1))
    throw std::invalid_argument("distribution weights must sum to exactly 1, got " +
                                total.to_string());

  GameSpec g;
  g.explicit_mode_ = true;
  g.answers_a_ = std::move(answers_a);
  g.answers_b_ = std::move(answers_b);
  g.entries_ = std::move(entries);
  g.pred_ = std::move(pred);

  if (verify_projection) {
    std::size_t work = 0;
    for (const Entry& e : g.entries_)
      work += g.answers_a_[e.qa] * g.answers_b_[e.qb];
    if (work > 100'000'000)
      throw std::invalid_argument("projection check exceeds the enumeration guard");
    for (const Entry& e : g.entries_)
      for (std::size_t a = 0; a < g.answers_a_[e.qa]; ++a) {
        std::size_t accepted = 0;
        for (std::size_t b = 0; b < g.answers_b_[e.qb]; ++b)
          accepted += g.pred_(e.qa, e.qb, e.aux, a, b) ? 1 : 0;
        if (accepted > 1)
          throw std::invalid_argument("not a projection game: question pair (" +
                                      std::to_string(e.qa) + ", " +
                                      std::to_string(e.qb) + ") accepts " +
                                      std::to_string(accepted) + " Bob answers");
      }
    g.projection_verified_ = true;
  }
  return g;
}

GameSpec GameSpec::make_sampled(std::size_t answers_a, std::size_t answers_b,
                                Sampler sampler, SampledPredicate pred,
                                std::uint32_t num_subtests) {
  if (answers_a == 0 || answers_b == 0)
    throw std::invalid_argument("empty answer set");
  if (!sampler || !pred)
    throw std::invalid_argument("sampler and predicate must be callable");
  if (num_subtests == 0)
    throw std::invalid_argument("need at least one subtest label");
  GameSpec g;
  g.explicit_mode_ = false;
  g.s_answers_a_ = answers_a;
  g.s_answers_b_ = answers_b;
  g.sampler_ = std::move(sampler);
  g.s_pred_ = std::move(pred);
  g.num_subtests_ = num_subtests;
  return g;
}

namespace {
void require_explicit(const GameSpec& g) {
  if (!g.is_explicit())
    throw std::logic_error("operation requires an explicit-mode game");
}
void require_sampled(const GameSpec& g) {
  if (g.is_explicit())
    throw std::logic_error("operation requires a sampler-mode game");
}
}  // namespace

std::size_t GameSpec::num_questions_a() const {
  require_explicit(*this);
  return answers_a_.size();
}
std::size_t GameSpec::num_questions_b() const {
  require_explicit(*this);
  return answers_b_.size();
}
std::size_t GameSpec::answers_a(std::size_t x) const {
  require_explicit(*this);
  return answers_a_.at(x);
}
std::size_t GameSpec::answers_b(std::size_t y) const {
  require_explicit(*this);
  return answers_b_.at(y);
}
std::size_t GameSpec::max_answers_a() const {
  require_explicit(*this);
  return *std::max_element(answers_a_.begin(), answers_a_.end());
}
std::size_t GameSpec::max_answers_b() const {
  require_explicit(*this);
  return *std::max_element(answers_b_.begin(), answers_b_.end());
}
const std::vector<GameSpec::Entry>& GameSpec::entries() const {
  require_explicit(*this);
  return entries_;
}

bool GameSpec::accepts(std::size_t qa, std::size_t qb, std::uint32_t aux,
                       std::size_t a, std::size_t b) const {
  require_explicit(*this);
  if (qa >= answers_a_.size() || qb >= answers_b_.size())
    throw std::invalid_argument("question index out of range");
  // Out-of-range answers reject rather than throw: a strategy may carry more
  // measurement outcomes than a question has answers (padded families).
  if (a >= answers_a_[qa] || b >= answers_b_[qb]) return false;
  return pred_(qa, qb, aux, a, b);
}

std::size_t GameSpec::sampled_answers_a() const {
  require_sampled(*this);
  return s_answers_a_;
}
std::size_t GameSpec::sampled_answers_b() const {
  require_sampled(*this);
  return s_answers_b_;
}
std::uint32_t GameSpec::num_subtests() const {
  require_sampled(*this);
  return num_subtests_;
}

SampledRound GameSpec::sample(CounterRng& rng) const {
  require_sampled(*this);
  SampledRound r = sampler_(rng);
  if (r.subtest >= num_subtests_)
    throw std::runtime_error("sampler produced an out-of-range subtest label");
  return r;
}

bool GameSpec::accepts(const Question& qa, const Question& qb,
                       std::uint32_t aux, std::size_t a, std::size_t b) const {
  require_sampled(*this);
  if (a >= s_answers_a_ || b >= s_answers_b_) return false;
  return s_pred_(qa, qb, aux, a, b);
}

// ---------------------------------------------------------------------------
// Mixed-radix packing

std::size_t pack_digits(const std::vector<std::size_t>& digits,
                        const std::vector<std::size_t>& radices) {
  if (digits.size() != radices.size())
    throw std::invalid_argument("digit/radix arity mismatch");
  std::size_t value = 0, scale = 1;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (radices[i] == 0 || digits[i] >= radices[i])
      throw std::invalid_argument("digit exceeds its radix");
    value += digits[i] * scale;
    if (i + 1 < digits.size()) {
      if (scale > std::numeric_limits<std::size_t>::max() / radices[i])
        throw std::overflow_error("mixed-radix overflow");
      scale *= radices[i];
    }
  }
  return value;
}

std::vector<std::size_t> unpack_digits(std::size_t value,
                                       const std::vector<std::size_t>& radices) {
  std::vector<std::size_t> digits(radices.size());
  for (std::size_t i = 0; i < radices.size(); ++i) {
    if (radices[i] == 0) throw std::invalid_argument("zero radix");
    digits[i] = value % radices[i];
    value /= radices[i];
  }
  if (value != 0) throw std::invalid_argument("value exceeds the radix range");
  return digits;
}

// ---------------------------------------------------------------------------
// Classical values

Rational classical_value_exact(const GameSpec& g, ClassicalStrategy* argmax) {
  require_explicit(g);
  constexpr std::size_t kGuard = 10'000'000;
  std::vector<std::size_t> counts_a(g.num_questions_a()),
      counts_b(g.num_questions_b());
  for (std::size_t x = 0; x < counts_a.size(); ++x) counts_a[x] = g.answers_a(x);
  for (std::size_t y = 0; y < counts_b.size(); ++y) counts_b[y] = g.answers_b(y);
  const std::size_t space_alice = table_space(counts_a, kGuard);
  const std::size_t space_bob = table_space(counts_b, kGuard);
  if (space_alice > kGuard && space_bob > kGuard)
    throw std::runtime_error(
        "classical value: both strategy table spaces exceed 10^7");

  // Enumerate the cheaper side's tables; the other side best-responds per
  // question (its optimum decomposes because each question is answered once).
  const bool enum_bob = space_bob <= space_alice;
  const std::vector<std::size_t>& enum_counts = enum_bob ? counts_b : counts_a;
  const std::vector<std::size_t>& resp_counts = enum_bob ? counts_a : counts_b;

  // Entries grouped by the responding side's question.
  struct Opposed {
    std::size_t q_enum;
    std::uint32_t aux;
    Rational w;
  };
  std::vector<std::vector<Opposed>> by_resp(resp_counts.size());
  for (const GameSpec::Entry& e : g.entries()) {
    if (enum_bob)
      by_resp[e.qa].push_back({e.qb, e.aux, e.weight});
    else
      by_resp[e.qb].push_back({e.qa, e.aux, e.weight});
  }

  auto accept = [&](std::size_t q_resp, std::size_t q_enum, std::uint32_t aux,
                    std::size_t a_resp, std::size_t a_enum) {
    return enum_bob ? g.accepts(q_resp, q_enum, aux, a_resp, a_enum)
                    : g.accepts(q_enum, q_resp, aux, a_enum, a_resp);
  };

  Rational best(0);
  std::vector<std::size_t> best_table, best_resp;
  std::vector<std::size_t> table(enum_counts.size(), 0);
  std::vector<std::size_t> resp(resp_counts.size(), 0);
  bool first = true;
  do {
    Rational value(0);
    for (std::size_t qr = 0; qr < resp_counts.size(); ++qr) {
      Rational q_best(0);
      std::size_t q_arg = 0;
      for (std::size_t a = 0; a < resp_counts[qr]; ++a) {
        Rational acc(0);
        for (const Opposed& o : by_resp[qr])
          if (accept(qr, o.q_enum, o.aux, a, table[o.q_enum])) acc += o.w;
        if (a == 0 || q_best < acc) {
          q_best = acc;
          q_arg = a;
        }
      }
      value += q_best;
      resp[qr] = q_arg;
    }
    if (first || best < value) {
      best = value;
      best_table = table;
      best_resp = resp;
      first = false;
    }
  } while (advance(table, enum_counts));

  if (argmax) {
    argmax->alice = enum_bob ? best_resp : best_table;
    argmax->bob = enum_bob ? best_table : best_resp;
  }
  return best;
}

Rational strategy_value_exact(const GameSpec& g, const ClassicalStrategy& s) {
  require_explicit(g);
  check_strategy_shape(g, s);
  Rational value(0);
  for (const GameSpec::Entry& e : g.entries())
    if (g.accepts(e.qa, e.qb, e.aux, s.alice[e.qa], s.bob[e.qb]))
      value += e.weight;
  return value;
}

// ---------------------------------------------------------------------------
// Quantum strategies

QuantumStrategy::QuantumStrategy(quantum::BipartiteState psi,
                                 quantum::MeasurementFamily alice,
                                 quantum::MeasurementFamily bob)
    : psi_(std::move(psi)), alice_(std::move(alice)), bob_(std::move(bob)) {
  if (alice_.dim() != psi_.dim() || bob_.dim() != psi_.dim())
    throw std::invalid_argument("measurement/state dimension mismatch");
  if (!alice_.is_complete() || !bob_.is_complete())
    throw std::invalid_argument(
        "game strategies need complete measurements (sum = Id)");
}

double strategy_value_exact(const GameSpec& g, const QuantumStrategy& s) {
  require_explicit(g);
  if (s.alice().num_questions() != g.num_questions_a() ||
      s.bob().num_questions() != g.num_questions_b())
    throw std::invalid_argument("strategy does not cover the question sets");
  quantum::Complex acc(0, 0);
  for (const GameSpec::Entry& e : g.entries()) {
    const std::size_t na = std::min(g.answers_a(e.qa), s.alice().num_outcomes());
    const std::size_t nb = std::min(g.answers_b(e.qb), s.bob().num_outcomes());
    const double w = e.weight.to_double();
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t b = 0; b < nb; ++b)
        if (g.accepts(e.qa, e.qb, e.aux, a, b))
          acc += w * quantum::pair_expectation(s.alice().op(e.qa, a),
                                               s.bob().op(e.qb, b), s.psi());
  }
  return quantum::real_checked(acc, 1e-10);
}

QuantumStrategy embed_classical(const GameSpec& g, const ClassicalStrategy& s,
                                std::size_t dim) {
  require_explicit(g);
  check_strategy_shape(g, s);
  if (dim == 0) throw std::invalid_argument("embedding needs dim >= 1");
  auto family = [&](const std::vector<std::size_t>& answer,
                    std::size_t num_q, auto count_of) {
    std::size_t max_out = 1;
    for (std::size_t q = 0; q < num_q; ++q)
      max_out = std::max(max_out, count_of(q));
    std::vector<std::vector<Operator>> ops(num_q);
    for (std::size_t q = 0; q < num_q; ++q) {
      ops[q].assign(max_out, Operator::zero(dim));
      ops[q][answer[q]] = Operator::identity(dim);
    }
    return quantum::MeasurementFamily(std::move(ops));
  };
  return QuantumStrategy(
      quantum::maximally_entangled(dim),
      family(s.alice, g.num_questions_a(), [&](std::size_t q) { return g.answers_a(q); }),
      family(s.bob, g.num_questions_b(), [&](std::size_t q) { return g.answers_b(q); }));
}

// ---------------------------------------------------------------------------
// Sampled evaluation

ValueEstimate strategy_value_sampled(const GameSpec& g,
                                     const ClassicalStrategy& s,
                                     std::uint64_t seed, std::uint64_t trials,
                                     unsigned threads) {
  require_explicit(g);
  check_strategy_shape(g, s);
  // Cumulative weights in entry order; the final edge is forced to 1 so the
  // uniform draw can never fall off the end.
  std::vector<double> cdf(g.entries().size());
  double acc = 0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    acc += g.entries()[i].weight.to_double();
    cdf[i] = acc;
  }
  cdf.back() = 1.0;

  auto trial = [&](CounterRng& rng) -> std::pair<bool, std::uint32_t> {
    const double u = rng.next_double();
    const std::size_t i = static_cast<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const GameSpec::Entry& e = g.entries()[std::min(i, cdf.size() - 1)];
    return {g.accepts(e.qa, e.qb, e.aux, s.alice[e.qa], s.bob[e.qb]), 0u};
  };
  return detail::run_trials(seed, trials, threads, 1, trial).overall;
}

SampledStats run_sampled(const GameSpec& g, const FunctionStrategy& s,
                         std::uint64_t seed, std::uint64_t trials,
                         unsigned threads) {
  require_sampled(g);
  if (!s.alice || !s.bob)
    throw std::invalid_argument("prover functions must be callable");
  auto trial = [&](CounterRng& rng) -> std::pair<bool, std::uint32_t> {
    const SampledRound r = g.sample(rng);
    const std::size_t a = r.swap_roles ? s.bob(r.qa) : s.alice(r.qa);
    const std::size_t b = r.swap_roles ? s.alice(r.qb) : s.bob(r.qb);
    return {g.accepts(r.qa, r.qb, r.aux, a, b), r.subtest};
  };
  return detail::run_trials(seed, trials, threads, g.num_subtests(), trial);
}

// ---------------------------------------------------------------------------
// See-saw

namespace {

// Random projective measurement: eigenbasis of a random Hermitian matrix,
// eigenvectors dealt round-robin across outcomes.
std::vector<Operator> random_projective(CounterRng& rng, std::size_t dim,
                                        std::size_t outcomes) {
  Matrix r(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      r(i, j) = quantum::Complex(2.0 * rng.next_double() - 1.0,
                                 2.0 * rng.next_double() - 1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(r));
  std::vector<Matrix> mats(outcomes, Matrix::Zero(dim, dim));
  for (std::size_t c = 0; c < dim; ++c) {
    const auto v = es.eigenvectors().col(static_cast<Eigen::Index>(c));
    mats[c % outcomes] += v * v.adjoint();
  }
  std::vector<Operator> ops;
  ops.reserve(outcomes);
  for (Matrix& m : mats) ops.emplace_back(hermitize(m));
  return ops;
}

// Exact best response for one question: maximize sum_a tr(X^a C_a) over
// complete POVMs {X^a}.  Binary case: split on the sign of C_0 - C_1.
// General case: the dual SDP min tr(Y)/d s.t. Y >= conj(C_a) solved by the
// in-house solver, whose recovered primal is exactly such a POVM.
std::vector<Operator> best_response(const std::vector<Matrix>& c) {
  const std::size_t dim = static_cast<std::size_t>(c.front().rows());
  if (c.size() == 2) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(c[0] - c[1]));
    Matrix p = Matrix::Zero(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
      if (es.eigenvalues()(static_cast<Eigen::Index>(i)) > 0) {
        const auto v = es.eigenvectors().col(static_cast<Eigen::Index>(i));
        p += v * v.adjoint();
      }
    return {Operator(hermitize(p)),
            Operator(hermitize(Matrix::Identity(dim, dim) - p))};
  }

  double cmax = 0;
  for (const Matrix& m : c) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m),
                                             Eigen::EigenvaluesOnly);
    cmax = std::max(cmax, es.eigenvalues().maxCoeff());
  }
  const double scale = cmax > 0.999 ? 0.999 / cmax : 1.0;
  std::vector<Operator> constraints;
  constraints.reserve(c.size());
  for (const Matrix& m : c) {
    Matrix k = scale * hermitize(m).conjugate();
    // Clip tiny negative dust so the instance validator's PSD floor holds.
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    Matrix vals = es.eigenvalues().cwiseMax(0.0).asDiagonal();
    constraints.emplace_back(hermitize(es.eigenvectors() * vals *
                                       es.eigenvectors().adjoint()));
  }
  sdp::SdpResult sol = sdp::solve(
      sdp::SdpInstance(quantum::maximally_entangled(dim), constraints));
  std::vector<Operator> ops;
  ops.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) ops.push_back(sol.primal.op(i));
  return ops;
}

}  // namespace

SeesawResult seesaw_lower_bound(const GameSpec& g, std::size_t dim,
                                std::uint64_t seed, std::size_t iters) {
  require_explicit(g);
  if (dim == 0 || dim > 16)
    throw std::invalid_argument("see-saw supports dimensions 1..16");

  const std::size_t out_a = g.max_answers_a(), out_b = g.max_answers_b();
  const quantum::BipartiteState psi = quantum::maximally_entangled(dim);
  const double inv_d = 1.0 / static_cast<double>(dim);

  CounterRng rng(seed);
  auto random_family = [&](std::size_t num_q, std::size_t outcomes) {
    std::vector<std::vector<Operator>> ops;
    ops.reserve(num_q);
    for (std::size_t q = 0; q < num_q; ++q) {
      CounterRng sub = rng.split(q + 1);
      ops.push_back(random_projective(sub, dim, outcomes));
    }
    return ops;
  };
  rng = rng.split(0xA11CE);
  std::vector<std::vector<Operator>> alice =
      random_family(g.num_questions_a(), out_a);
  rng = rng.split(0xB0B);
  std::vector<std::vector<Operator>> bob =
      random_family(g.num_questions_b(), out_b);

  auto value_of = [&](const std::vector<std::vector<Operator>>& a,
                      const std::vector<std::vector<Operator>>& b) {
    return strategy_value_exact(
        g, QuantumStrategy(psi, quantum::MeasurementFamily(a),
                           quantum::MeasurementFamily(b)));
  };

  // One side's per-question payoff operators against the other side fixed:
  // the value is sum_qa sum_a tr(A_qa^a C_{qa,a}) with C built from the
  // entries touching qa (transposes because <A,B>_Psi = tr(A B^T)/d here).
  auto payoffs = [&](bool alice_side,
                     const std::vector<std::vector<Operator>>& fixed) {
    const std::size_t nq =
        alice_side ? g.num_questions_a() : g.num_questions_b();
    const std::size_t mine = alice_side ? out_a : out_b;
    std::vector<std::vector<Matrix>> c(
        nq, std::vector<Matrix>(mine, Matrix::Zero(static_cast<Eigen::Index>(dim),
                                                   static_cast<Eigen::Index>(dim))));
    for (const GameSpec::Entry& e : g.entries()) {
      const std::size_t q_mine = alice_side ? e.qa : e.qb;
      const std::size_t q_theirs = alice_side ? e.qb : e.qa;
      const double w = e.weight.to_double() * inv_d;
      const std::size_t n_mine =
          std::min(mine, alice_side ? g.answers_a(e.qa) : g.answers_b(e.qb));
      const std::size_t n_theirs = std::min(
          fixed[q_theirs].size(),
          alice_side ? g.answers_b(e.qb) : g.answers_a(e.qa));
      for (std::size_t am = 0; am < n_mine; ++am)
        for (std::size_t at = 0; at < n_theirs; ++at) {
          const bool ok = alice_side
                              ? g.accepts(e.qa, e.qb, e.aux, am, at)
                              : g.accepts(e.qa, e.qb, e.aux, at, am);
          if (ok) c[q_mine][am] += w * fixed[q_theirs][at].mat().transpose();
        }
    }
    return c;
  };

  std::vector<double> trace;
  bool stagnated = false;
  double value = value_of(alice, bob);
  trace.push_back(value);

  for (std::size_t it = 0; it < iters; ++it) {
    const double sweep_start = value;
    for (int side = 0; side < 2; ++side) {
      const bool alice_side = side == 0;
      auto& mine = alice_side ? alice : bob;
      const auto c = payoffs(alice_side, alice_side ? bob : alice);
      std::vector<std::vector<Operator>> updated = mine;
      for (std::size_t q = 0; q < mine.size(); ++q) {
        bool has_mass = false;
        for (const Matrix& m : c[q])
          if (m.norm() > 0) has_mass = true;
        if (has_mass) updated[q] = best_response(c[q]);
      }
      const double candidate =
          alice_side ? value_of(updated, bob) : value_of(alice, updated);
      // An exact best response cannot lose value; roll back if numerics
      // disagree so the trace stays monotone.
      if (candidate > value - 1e-12) {
        mine = std::move(updated);
        value = std::max(value, candidate);
        trace.push_back(candidate);
      }
    }
    if (value - sweep_start < 1e-12) {
      stagnated = true;
      break;
    }
  }

  return SeesawResult{value,
                      QuantumStrategy(psi, quantum::MeasurementFamily(alice),
                                      quantum::MeasurementFamily(bob)),
                      std::move(trace), stagnated};
}

// ---------------------------------------------------------------------------
// Oracularization

GameSpec oracularize(const ThreeQueryTest& t) {
  if (t.num_queries == 0 || t.answer_counts.size() != t.num_queries)
    throw std::invalid_argument("malformed test spec: answer counts");
  for (std::size_t c : t.answer_counts)
    if (c == 0) throw std::invalid_argument("malformed test spec: empty answers");
  if (t.triples.empty() || !t.predicate)
    throw std::invalid_argument("malformed test spec: no triples or predicate");

  std::vector<std::size_t> answers_a(t.triples.size());
  std::vector<std::vector<std::size_t>> radices(t.triples.size());
  std::vector<std::array<std::size_t, 3>> queries(t.triples.size());
  std::vector<GameSpec::Entry> entries;
  entries.reserve(3 * t.triples.size());
  const Rational third(1, 3);
  for (std::size_t i = 0; i < t.triples.size(); ++i) {
    const auto& tr = t.triples[i];
    std::size_t prod = 1;
    for (std::size_t k = 0; k < 3; ++k) {
      if (tr.q[k] >= t.num_queries)
        throw std::invalid_argument("malformed test spec: query out of range");
      radices[i].push_back(t.answer_counts[tr.q[k]]);
      prod *= t.answer_counts[tr.q[k]];
    }
    queries[i] = tr.q;
    answers_a[i] = prod;
    for (std::uint32_t k = 0; k < 3; ++k)
      entries.push_back({i, tr.q[k], k, tr.weight * third});
  }

  auto inner = t.predicate;
  auto pred = [inner, radices, queries](std::size_t qa, std::size_t /*qb*/,
                                        std::uint32_t aux, std::size_t a,
                                        std::size_t b) {
    const std::vector<std::size_t> digits = unpack_digits(a, radices[qa]);
    const std::array<std::size_t, 3> answers{digits[0], digits[1], digits[2]};
    return inner(queries[qa], answers) && b == answers[aux];
  };
  return GameSpec::make_explicit(std::move(answers_a),
                                 std::vector<std::size_t>(t.answer_counts),
                                 std::move(entries), pred,
                                 /*verify_projection=*/true);
}

// ---------------------------------------------------------------------------
// Parallel repetition

GameSpec parallel_repeat(const GameSpec& g, std::size_t k) {
  require_explicit(g);
  if (k == 0) throw std::invalid_argument("repetition needs k >= 1");
  if (k == 1) return g;

  constexpr std::size_t kQuestionGuard = 1'000'000;
  constexpr std::size_t kEntryGuard = 1'000'000;
  const auto powed = [](std::size_t base, std::size_t e, std::size_t cap) {
    std::size_t r = 1;
    while (e--) {
      if (base != 0 && r > cap / base) return cap + 1;
      r *= base;
    }
    return r;
  };
  const std::size_t nqa = powed(g.num_questions_a(), k, kQuestionGuard);
  const std::size_t nqb = powed(g.num_questions_b(), k, kQuestionGuard);
  const std::size_t nent = powed(g.entries().size(), k, kEntryGuard);
  if (nqa > kQuestionGuard || nqb > kQuestionGuard || nent > kEntryGuard)
    throw std::runtime_error("parallel repetition blow-up guard exceeded");

  std::uint32_t aux_radix = 1;
  for (const GameSpec::Entry& e : g.entries())
    aux_radix = std::max(aux_radix, e.aux + 1);
  if (k > 1 && std::pow(static_cast<double>(aux_radix),
                        static_cast<double>(k)) > 4.0e9)
    throw std::runtime_error("parallel repetition aux coordinate overflow");

  const std::vector<std::size_t> qa_radices(k, g.num_questions_a());
  const std::vector<std::size_t> qb_radices(k, g.num_questions_b());

  std::vector<std::size_t> answers_a(nqa), answers_b(nqb);
  for (std::size_t q = 0; q < nqa; ++q) {
    std::size_t prod = 1;
    for (std::size_t d : unpack_digits(q, qa_radices)) prod *= g.answers_a(d);
    answers_a[q] = prod;
  }
  for (std::size_t q = 0; q < nqb; ++q) {
    std::size_t prod = 1;
    for (std::size_t d : unpack_digits(q, qb_radices)) prod *= g.answers_b(d);
    answers_b[q] = prod;
  }

  std::vector<GameSpec::Entry> entries;
  entries.reserve(nent);
  std::vector<std::size_t> pick(k, 0);
  const std::vector<std::size_t> entry_radices(k, g.entries().size());
  do {
    GameSpec::Entry combined;
    std::vector<std::size_t> qa_digits(k), qb_digits(k);
    std::uint64_t aux = 0;
    Rational w(1);
    for (std::size_t i = k; i-- > 0;) {
      const GameSpec::Entry& e = g.entries()[pick[i]];
      qa_digits[i] = e.qa;
      qb_digits[i] = e.qb;
      aux = aux * aux_radix + e.aux;
      w *= e.weight;
    }
    combined.qa = pack_digits(qa_digits, qa_radices);
    combined.qb = pack_digits(qb_digits, qb_radices);
    combined.aux = static_cast<std::uint32_t>(aux);
    combined.weight = w;
    entries.push_back(combined);
  } while (advance(pick, entry_radices));

  // The conjunction predicate decodes per-copy coordinates on every call;
  // answer radices depend on the decoded questions.
  const GameSpec inner = g;
  const std::uint32_t aux_r = aux_radix;
  const std::size_t copies = k;
  auto pred = [inner, aux_r, copies, qa_radices, qb_radices](
                  std::size_t qa, std::size_t qb, std::uint32_t aux,
                  std::size_t a, std::size_t b) {
    const auto qa_d = unpack_digits(qa, qa_radices);
    const auto qb_d = unpack_digits(qb, qb_radices);
    std::vector<std::size_t> ra(copies), rb(copies);
    for (std::size_t i = 0; i < copies; ++i) {
      ra[i] = inner.answers_a(qa_d[i]);
      rb[i] = inner.answers_b(qb_d[i]);
    }
    const auto a_d = unpack_digits(a, ra);
    const auto b_d = unpack_digits(b, rb);
    std::uint64_t rest = aux;
    for (std::size_t i = 0; i < copies; ++i) {
      const auto aux_i = static_cast<std::uint32_t>(rest % aux_r);
      rest /= aux_r;
      if (!inner.accepts(qa_d[i], qb_d[i], aux_i, a_d[i], b_d[i]))
        return false;
    }
    return true;
  };

  GameSpec result = GameSpec::make_explicit(std::move(answers_a),
                                            std::move(answers_b),
                                            std::move(entries), pred,
                                            /*verify_projection=*/false);
  // Conjunctions of projection games are projection games: each copy admits
  // at most one accepted per-copy answer, so the packed answer is unique.
  result.projection_verified_ = g.projection_verified();
  return result;
}

ClassicalStrategy repeat_strategy(const GameSpec& g, const ClassicalStrategy& s,
                                  std::size_t k) {
  require_explicit(g);
  check_strategy_shape(g, s);
  if (k == 0) throw std::invalid_argument("repetition needs k >= 1");
  if (k == 1) return s;
  const std::vector<std::size_t> qa_radices(k, g.num_questions_a());
  const std::vector<std::size_t> qb_radices(k, g.num_questions_b());
  const auto tuple_table = [&](const std::vector<std::size_t>& base,
                               const std::vector<std::size_t>& q_radices,
                               auto count_of) {
    const std::size_t total = table_space(q_radices, 1'000'000);
    if (total > 1'000'000)
      throw std::runtime_error("parallel repetition blow-up guard exceeded");
    std::vector<std::size_t> table(total);
    for (std::size_t q = 0; q < total; ++q) {
      const auto digits = unpack_digits(q, q_radices);
      std::vector<std::size_t> ans(k), radix(k);
      for (std::size_t i = 0; i < k; ++i) {
        ans[i] = base[digits[i]];
        radix[i] = count_of(digits[i]);
      }
      table[q] = pack_digits(ans, radix);
    }
    return table;
  };
  ClassicalStrategy rep;
  rep.alice = tuple_table(s.alice, qa_radices,
                          [&](std::size_t q) { return g.answers_a(q); });
  rep.bob = tuple_table(s.bob, qb_radices,
                        [&](std::size_t q) { return g.answers_b(q); });
  return rep;
}

// ---------------------------------------------------------------------------
// CHSH

GameSpec chsh_game() {
  std::vector<GameSpec::Entry> entries;
  const Rational quarter(1, 4);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) entries.push_back({x, y, 0, quarter});
  auto pred = [](std::size_t qa, std::size_t qb, std::uint32_t, std::size_t a,
                 std::size_t b) { return (a ^ b) == (qa & qb); };
  return GameSpec::make_explicit({2, 2}, {2, 2}, std::move(entries), pred,
                                 /*verify_projection=*/true);
}

QuantumStrategy chsh_optimal_strategy() {
  const double s = 1.0 / std::sqrt(2.0);
  Matrix z(2, 2), x(2, 2), id = Matrix::Identity(2, 2);
  z << 1, 0, 0, -1;
  x << 0, 1, 1, 0;
  auto basis = [&](const Matrix& obs) {
    return std::vector<Operator>{Operator(hermitize(0.5 * (id + obs))),
                                 Operator(hermitize(0.5 * (id - obs)))};
  };
  std::vector<std::vector<Operator>> alice{basis(z), basis(x)};
  std::vector<std::vector<Operator>> bob{basis(s * (z + x)), basis(s * (z - x))};
  return QuantumStrategy(quantum::maximally_entangled(2),
                         quantum::MeasurementFamily(std::move(alice)),
                         quantum::MeasurementFamily(std::move(bob)));
}

}  // namespace eglab::game
