#include "eglab/protocols.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "eglab/detail/trials.hpp"

namespace eglab::protocols {

using game::ClassicalStrategy;
using game::FunctionStrategy;
using game::GameSpec;
using game::Question;
using game::SampledRound;
using game::ThreeQueryTest;

namespace {

// Enumeration cap for ldt_exhaustive: q^(3m) draws.
constexpr std::uint64_t kLdtDrawGuard = 20'000'000;

std::uint32_t parity(std::uint64_t x) {
  return static_cast<std::uint32_t>(std::popcount(x) & 1);
}

std::uint64_t ipow(std::uint64_t base, std::uint32_t exp) {
  std::uint64_t r = 1;
  while (exp--) r *= base;
  return r;
}

void check_oracle(const ProverOracle& o) {
  if (!o.plane || !o.point)
    throw std::invalid_argument(
        "prover oracles must answer both question kinds");
}

// x, then y1, then y2; validation is the caller's job (hot path).
LdtRound sample_round_unchecked(const LdtParams& p, CounterRng& rng) {
  auto draw = [&] {
    std::vector<std::uint32_t> v(p.m);
    for (auto& c : v) c = static_cast<std::uint32_t>(rng.next_below(p.q));
    return gf::FieldVector(std::move(v), p.q);
  };
  gf::FieldVector x = draw();
  gf::FieldVector y1 = draw();
  gf::FieldVector y2 = draw();
  LdtRound r{std::move(x), std::move(y1), std::move(y2),
             false,        std::nullopt,  std::nullopt};
  if (gf::linearly_independent(r.y1, r.y2)) {
    r.plane = poly::canonical_plane(r.x, r.y1, r.y2);
    r.coords = r.plane->coordinates_of(r.x);
  } else {
    r.dependent = true;
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Low-degree test

void LdtParams::validate() const {
  gf::validate_modulus(q);
  if (m < 2) throw std::invalid_argument("test needs at least two variables");
  if (q <= d)
    throw std::invalid_argument("field must outgrow the degree bound (q > d)");
}

LdtRound ldt_sample_round(const LdtParams& params, CounterRng& rng) {
  params.validate();
  return sample_round_unchecked(params, rng);
}

LdtStats ldt_run(const LdtParams& params, const ProverOracle& first,
                 const ProverOracle& second, std::uint64_t trials,
                 std::uint64_t seed, unsigned threads) {
  params.validate();
  check_oracle(first);
  check_oracle(second);

  // Subtest 0: proper rounds, subtest 1: dependent-direction auto-accepts.
  auto trial = [&](CounterRng& rng) -> std::pair<bool, std::uint32_t> {
    const bool swapped = rng.next_below(2) == 1;
    const LdtRound r = sample_round_unchecked(params, rng);
    if (r.dependent) return {true, 1};
    const ProverOracle& planer = swapped ? second : first;
    const ProverOracle& pointer = swapped ? first : second;
    const poly::BivariatePoly g = planer.plane(*r.plane);
    if (g.modulus() != params.q)
      throw std::invalid_argument("plane answer modulus mismatch");
    // A specification that is not a degree-d polynomial is rejected outright.
    if (g.total_degree() > params.d) return {false, 0};
    const gf::FieldElement a = pointer.point(r.x);
    if (a.modulus() != params.q)
      throw std::invalid_argument("point answer modulus mismatch");
    return {g.evaluate(r.coords->first, r.coords->second) == a, 0};
  };
  const game::SampledStats s =
      detail::run_trials(seed, trials, threads, 2, trial);

  LdtStats out;
  out.acceptance = s.overall.value;
  out.std_error = s.overall.std_error;
  out.trials = trials;
  out.accepted = s.subtest_accepts[0] + s.subtest_accepts[1];
  out.dependent_rounds = s.subtest_trials[1];
  return out;
}

LdtExact ldt_exhaustive(const LdtParams& params, const ProverOracle& first,
                        const ProverOracle& second) {
  params.validate();
  check_oracle(first);
  check_oracle(second);
  if (std::pow(static_cast<double>(params.q), 3.0 * params.m) >
      static_cast<double>(kLdtDrawGuard))
    throw std::runtime_error(
        "exhaustive low-degree run needs q^(3m) <= 2*10^7 draws");

  const auto q = static_cast<std::uint32_t>(params.q);
  const std::uint64_t qm = ipow(params.q, params.m);
  const std::uint64_t q3m = qm * qm * qm;

  // Oracles are deterministic by contract, so answers are memoized: points
  // by index, planes by canonical form.
  struct PlaneAnswer {
    poly::BivariatePoly g;
    bool degree_ok;
  };
  struct OracleCache {
    const ProverOracle* o;
    const LdtParams* p;
    std::map<poly::AffinePlane, PlaneAnswer> planes;
    std::vector<std::uint32_t> points;

    const PlaneAnswer& plane(const poly::AffinePlane& s) {
      auto it = planes.find(s);
      if (it == planes.end()) {
        poly::BivariatePoly g = o->plane(s);
        if (g.modulus() != p->q)
          throw std::invalid_argument("plane answer modulus mismatch");
        const bool ok = g.total_degree() <= p->d;
        it = planes.emplace(s, PlaneAnswer{std::move(g), ok}).first;
      }
      return it->second;
    }
    std::uint32_t point(const gf::FieldVector& x, std::uint64_t idx) {
      if (points[idx] == UINT32_MAX) {
        const gf::FieldElement a = o->point(x);
        if (a.modulus() != p->q)
          throw std::invalid_argument("point answer modulus mismatch");
        points[idx] = a.value();
      }
      return points[idx];
    }
  };
  OracleCache c1{&first, &params, {}, std::vector<std::uint32_t>(qm, UINT32_MAX)};
  OracleCache c2{&second, &params, {}, std::vector<std::uint32_t>(qm, UINT32_MAX)};

  std::uint64_t accepted = 0;
  std::uint64_t dep_pairs = 0;
  poly::for_each_point(2 * params.m, q, [&](const std::vector<std::uint32_t>& dir) {
    std::vector<std::vector<std::uint32_t>> rows = {
        {dir.begin(), dir.begin() + params.m},
        {dir.begin() + params.m, dir.end()}};
    const auto pivots = gf::rref(rows, q);
    if (pivots.size() != 2) {
      ++dep_pairs;
      return;
    }
    // The canonical basis is shared by every x; only the base point moves.
    const gf::FieldVector b1(rows[0], q), b2(rows[1], q);
    std::uint64_t idx = 0;
    poly::for_each_point(params.m, q, [&](const std::vector<std::uint32_t>& xr) {
      const std::uint32_t t1 = xr[pivots[0]], t2 = xr[pivots[1]];
      std::vector<std::uint32_t> base(params.m);
      for (std::size_t j = 0; j < params.m; ++j)
        base[j] = gf::sub_mod(
            xr[j],
            gf::add_mod(gf::mul_mod(t1, rows[0][j], q),
                        gf::mul_mod(t2, rows[1][j], q), q),
            q);
      const poly::AffinePlane s(gf::FieldVector(std::move(base), q), b1, b2,
                                pivots[0], pivots[1]);
      const gf::FieldVector x(xr, q);
      const gf::FieldElement e1(t1, q), e2(t2, q);
      const PlaneAnswer& g1 = c1.plane(s);
      const PlaneAnswer& g2 = c2.plane(s);
      const std::uint32_t a1 = c1.point(x, idx);
      const std::uint32_t a2 = c2.point(x, idx);
      if (g1.degree_ok && g1.g.evaluate(e1, e2).value() == a2) ++accepted;
      if (g2.degree_ok && g2.g.evaluate(e1, e2).value() == a1) ++accepted;
      ++idx;
    });
  });
  accepted += 2 * dep_pairs * qm;

  return {Rational(static_cast<std::int64_t>(accepted),
                   static_cast<std::int64_t>(2 * q3m)),
          Rational(static_cast<std::int64_t>(dep_pairs * qm),
                   static_cast<std::int64_t>(q3m))};
}

ProverOracle honest_ldt_strategy(const poly::MultiPoly& g,
                                 const LdtParams& params) {
  params.validate();
  if (g.num_vars() != params.m || g.modulus() != params.q)
    throw std::invalid_argument(
        "polynomial shape does not match the test parameters");
  if (g.total_degree() > params.d)
    throw std::invalid_argument("honest strategy needs total degree <= d");
  return {[g](const poly::AffinePlane& s) { return poly::restrict_to_plane(g, s); },
          [g](const gf::FieldVector& x) { return g.evaluate(x); }};
}

ProverOracle constant_oracle(const LdtParams& params, std::uint64_t value) {
  params.validate();
  if (value >= params.q)
    throw std::invalid_argument("constant must be a field element");
  const std::uint64_t q = params.q;
  const std::uint32_t d = params.d;
  return {[q, d, value](const poly::AffinePlane&) {
            poly::BivariatePoly b(q, d);
            b.set_coeff(0, 0, value);
            return b;
          },
          [q, value](const gf::FieldVector&) {
            return gf::FieldElement(value, q);
          }};
}

ProverOracle random_oracle(const LdtParams& params, std::uint64_t seed) {
  params.validate();
  // FNV-style fold of the query into a stream id; the same query always
  // lands on the same stream, so answers are consistent across calls.
  auto fold = [](std::uint64_t h, std::uint64_t v) {
    return (h ^ v) * 0x100000001b3ull;
  };
  const std::uint64_t q = params.q;
  const std::uint32_t d = params.d;
  auto plane_fn = [q, d, seed, fold](const poly::AffinePlane& s) {
    std::uint64_t h = fold(0xcbf29ce484222325ull, 1);
    for (std::uint32_t c : s.base().raw()) h = fold(h, c);
    for (std::uint32_t c : s.basis1().raw()) h = fold(h, c);
    for (std::uint32_t c : s.basis2().raw()) h = fold(h, c);
    h = fold(fold(h, s.pivot1()), s.pivot2());
    CounterRng rng(seed, h);
    poly::BivariatePoly b(q, d);
    for (std::uint32_t i = 0; i <= d; ++i)
      for (std::uint32_t j = 0; i + j <= d; ++j)
        b.set_coeff(i, j, rng.next_below(q));
    return b;
  };
  auto point_fn = [q, seed, fold](const gf::FieldVector& x) {
    std::uint64_t h = fold(0xcbf29ce484222325ull, 2);
    for (std::uint32_t c : x.raw()) h = fold(h, c);
    CounterRng rng(seed, h);
    return gf::FieldElement(rng.next_below(q), q);
  };
  return {std::move(plane_fn), std::move(point_fn)};
}

LdtSizes ldt_sizes(const LdtParams& params) {
  params.validate();
  LdtSizes s;
  s.point_question_elems = params.m;
  s.plane_question_elems = 3ull * params.m;
  s.plane_answer_elems =
      static_cast<std::uint64_t>(params.d + 1) * (params.d + 2) / 2;
  s.point_answer_elems = 1;
  s.bits_per_element = std::bit_width(params.q - 1);
  s.max_question_bits = s.plane_question_elems * s.bits_per_element;
  s.max_answer_bits = s.plane_answer_elems * s.bits_per_element;
  return s;
}

double ldt_soundness_ratio(const LdtParams& params, double epsilon,
                           double exponent) {
  params.validate();
  if (!(epsilon > 0) || !(exponent > 0))
    throw std::invalid_argument("need positive epsilon and exponent");
  const double need =
      std::pow(static_cast<double>(params.d) * params.m / epsilon, exponent);
  return static_cast<double>(params.q) / need;
}

// ---------------------------------------------------------------------------
// Linearity

game::ThreeQueryTest linearity_test(std::size_t n) {
  if (n == 0 || n > 8)
    throw std::invalid_argument("explicit triple table needs 1 <= n <= 8");
  const std::size_t qn = std::size_t{1} << n;
  ThreeQueryTest t;
  t.num_queries = qn;
  t.answer_counts.assign(qn, 2);
  t.triples.reserve(qn * qn);
  const auto denom = static_cast<std::int64_t>(qn * qn);
  for (std::size_t u = 0; u < qn; ++u)
    for (std::size_t v = 0; v < qn; ++v)
      t.triples.push_back({{u, v, u ^ v}, Rational(1, denom)});
  t.predicate = [](const std::array<std::size_t, 3>&,
                   const std::array<std::size_t, 3>& a) {
    return ((a[0] ^ a[1] ^ a[2]) & 1) == 0;
  };
  return t;
}

LinearityGame linearity_game(std::size_t n, bool trimmed) {
  if (n == 0 || n > 20)
    throw std::invalid_argument("linearity game supports 1 <= n <= 20");
  if (n <= 8) {
    GameSpec g = game::oracularize(linearity_test(n));
    if (trimmed) g = answer_trim(g);
    return LinearityGame{std::move(g), n, trimmed, true};
  }

  const std::uint64_t span = std::uint64_t{1} << n;
  auto sampler = [span](CounterRng& rng) {
    const std::uint64_t u = rng.next_below(span);
    const std::uint64_t v = rng.next_below(span);
    const auto i = static_cast<std::uint32_t>(rng.next_below(3));
    SampledRound r;
    r.qa = {kPairFull, u, v};
    r.qb = {kSingleFull, i == 0 ? u : i == 1 ? v : (u ^ v)};
    r.aux = i;
    r.subtest = 0;
    r.swap_roles = rng.next_below(2) == 1;
    return r;
  };
  auto pred = [trimmed](const Question&, const Question&, std::uint32_t aux,
                        std::size_t a, std::size_t b) {
    const auto a1 = static_cast<std::uint32_t>(a & 1);
    const auto a2 = static_cast<std::uint32_t>((a >> 1) & 1);
    const std::uint32_t a3 =
        trimmed ? (a1 ^ a2) : static_cast<std::uint32_t>((a >> 2) & 1);
    if (!trimmed && (a1 ^ a2 ^ a3) != 0) return false;
    const std::uint32_t pick = aux == 0 ? a1 : aux == 1 ? a2 : a3;
    return static_cast<std::uint32_t>(b & 1) == pick;
  };
  GameSpec g = GameSpec::make_sampled(trimmed ? 4 : 8, 2, std::move(sampler),
                                      std::move(pred), 1);
  return LinearityGame{std::move(g), n, trimmed, false};
}

ClassicalStrategy LinearityGame::table_strategy(
    const std::vector<std::uint8_t>& truth_table) const {
  if (!explicit_mode)
    throw std::logic_error("table strategies go with the explicit game");
  const std::size_t qn = std::size_t{1} << n;
  if (truth_table.size() != qn)
    throw std::invalid_argument("truth table needs 2^n entries");
  for (std::uint8_t bit : truth_table)
    if (bit > 1) throw std::invalid_argument("truth table entries must be bits");

  ClassicalStrategy s;
  s.alice.resize(qn * qn);
  for (std::size_t u = 0; u < qn; ++u)
    for (std::size_t v = 0; v < qn; ++v) {
      const std::size_t a1 = truth_table[u], a2 = truth_table[v];
      std::size_t a = a1 | (a2 << 1);
      if (!trimmed) a |= static_cast<std::size_t>(truth_table[u ^ v]) << 2;
      s.alice[u * qn + v] = a;
    }
  s.bob.assign(truth_table.begin(), truth_table.end());
  return s;
}

FunctionStrategy LinearityGame::function_strategy(
    std::function<std::uint8_t(std::uint64_t)> f) const {
  if (explicit_mode)
    throw std::logic_error("function strategies go with the sampler-mode game");
  if (!f) throw std::invalid_argument("need a callable truth function");
  const bool trim = trimmed;
  auto prover = [f = std::move(f), trim](const Question& q) -> std::size_t {
    if (q.size() == 3 && q[0] == kPairFull) {
      const std::size_t a1 = f(q[1]) & 1, a2 = f(q[2]) & 1;
      std::size_t a = a1 | (a2 << 1);
      if (!trim) a |= static_cast<std::size_t>(f(q[1] ^ q[2]) & 1) << 2;
      return a;
    }
    if (q.size() == 2 && q[0] == kSingleFull) return f(q[1]) & 1;
    throw std::invalid_argument("unexpected question shape");
  };
  return FunctionStrategy{prover, prover};
}

// ---------------------------------------------------------------------------
// QUADEQ

namespace {

std::size_t tensor_words(std::size_t n) { return (n * n + 63) / 64; }

// Writes `width` bits of value at the given bit offset (width <= 32, so a
// write touches at most two words).
void or_bits(std::vector<std::uint64_t>& w, std::size_t offset,
             std::uint64_t value, std::size_t width) {
  const std::size_t word = offset / 64, shift = offset % 64;
  w[word] |= value << shift;
  if (shift + width > 64) w[word + 1] |= value >> (64 - shift);
}

std::uint64_t get_bits(const std::vector<std::uint64_t>& w, std::size_t offset,
                       std::size_t width) {
  const std::size_t word = offset / 64, shift = offset % 64;
  std::uint64_t v = w[word] >> shift;
  if (shift + width > 64) v |= w[word + 1] << (64 - shift);
  return v & ((std::uint64_t{1} << width) - 1);
}

// The matrix as a flat n^2-bit vector, row-major.
std::vector<std::uint64_t> flat_form(const std::vector<std::uint64_t>& rows,
                                     std::size_t n) {
  std::vector<std::uint64_t> w(tensor_words(n), 0);
  for (std::size_t i = 0; i < n; ++i) or_bits(w, i * n, rows[i], n);
  return w;
}

std::vector<std::uint64_t> tensor_of(std::uint64_t x, std::uint64_t y,
                                     std::size_t n) {
  std::vector<std::uint64_t> w(tensor_words(n), 0);
  for (std::size_t i = 0; i < n; ++i)
    if ((x >> i) & 1) or_bits(w, i * n, y, n);
  return w;
}

std::uint32_t dot_words(const std::vector<std::uint64_t>& a,
                        const std::vector<std::uint64_t>& b) {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc ^= a[i] & b[i];
  return parity(acc);
}

std::vector<std::uint64_t> xor_words(std::vector<std::uint64_t> a,
                                     const std::vector<std::uint64_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] ^= b[i];
  return a;
}

Question with_kind(std::uint64_t kind, const std::vector<std::uint64_t>& words) {
  Question q;
  q.reserve(words.size() + 1);
  q.push_back(kind);
  q.insert(q.end(), words.begin(), words.end());
  return q;
}

std::size_t pack_pair(std::uint32_t a1, std::uint32_t a2, bool trimmed) {
  std::size_t a = a1 | (a2 << 1);
  if (!trimmed) a |= static_cast<std::size_t>(a1 ^ a2) << 2;
  return a;
}

void check_forms(const QuadeqInstance& inst, const LinearFormStrategy& fs) {
  const std::size_t h = inst.n / 2;
  const std::uint64_t hmask = (std::uint64_t{1} << h) - 1;
  const std::uint64_t mask = (std::uint64_t{1} << inst.n) - 1;
  if ((fs.half1 & ~hmask) != 0 || (fs.half2 & ~hmask) != 0 ||
      (fs.full & ~mask) != 0)
    throw std::invalid_argument("linear forms must fit their bit widths");
  if (fs.tensor.size() != tensor_words(inst.n))
    throw std::invalid_argument("tensor form has the wrong word count");
  const std::size_t tail = (inst.n * inst.n) % 64;
  if (tail != 0 && (fs.tensor.back() >> tail) != 0)
    throw std::invalid_argument("tensor form has stray high bits");
}

}  // namespace

void QuadeqInstance::validate() const {
  if (n < 2 || n > 32 || n % 2 != 0)
    throw std::invalid_argument("variable count must be even and within 2..32");
  if (forms.empty() || forms.size() > 32)
    throw std::invalid_argument("need between 1 and 32 equations");
  if (constants.size() != forms.size())
    throw std::invalid_argument("one constant per equation");
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  for (const auto& rows : forms) {
    if (rows.size() != n)
      throw std::invalid_argument("quadratic forms must be n x n");
    for (std::uint64_t row : rows)
      if ((row & ~mask) != 0)
        throw std::invalid_argument("form rows must fit in n bits");
  }
  for (std::uint8_t c : constants)
    if (c > 1) throw std::invalid_argument("constants must be bits");
  if (witness) {
    if ((*witness & ~mask) != 0)
      throw std::invalid_argument("witness must fit in n bits");
    if (!check(*witness))
      throw std::invalid_argument("witness does not satisfy the system");
  }
}

bool QuadeqInstance::check(std::uint64_t assignment) const {
  for (std::size_t k = 0; k < forms.size(); ++k) {
    std::uint32_t acc = 0;
    for (std::size_t i = 0; i < n; ++i)
      if ((assignment >> i) & 1) acc ^= parity(forms[k][i] & assignment);
    if (acc != (constants[k] & 1)) return false;
  }
  return true;
}

LinearFormStrategy forms_from_assignment(const QuadeqInstance& inst,
                                         std::uint64_t assignment) {
  inst.validate();
  if ((assignment & ~((std::uint64_t{1} << inst.n) - 1)) != 0)
    throw std::invalid_argument("assignment must fit in n bits");
  const std::size_t h = inst.n / 2;
  LinearFormStrategy s;
  s.half1 = assignment & ((std::uint64_t{1} << h) - 1);
  s.half2 = assignment >> h;
  s.full = assignment;
  s.tensor = tensor_of(assignment, assignment, inst.n);
  return s;
}

QuadeqMixture QuadeqMixture::standard() {
  QuadeqMixture m;
  for (std::size_t t = kLinHalf1; t <= kLinTensor; ++t)
    m.weights[t] = Rational(1, 16);
  m.weights[kConsistency] = Rational(1, 4);
  m.weights[kTensorConsistency] = Rational(1, 4);
  m.weights[kConstraint] = Rational(1, 4);
  return m;
}

void QuadeqMixture::validate() const {
  Rational total(0);
  for (const Rational& w : weights) {
    if (w < Rational(0))
      throw std::invalid_argument("sub-test weights must be nonnegative");
    total += w;
  }
  if (total != Rational(1))
    throw std::invalid_argument(
        "sub-test weights must sum to exactly 1, got " + total.to_string());
}

QuadeqGame quadeq_game(const QuadeqInstance& inst, const QuadeqMixture& mixture,
                       bool trimmed) {
  inst.validate();
  mixture.validate();
  const std::size_t n = inst.n, h = n / 2;
  const std::size_t tw = tensor_words(n);
  const std::size_t K = inst.forms.size();

  std::vector<std::vector<std::uint64_t>> flat(K);
  for (std::size_t k = 0; k < K; ++k) flat[k] = flat_form(inst.forms[k], n);
  std::uint64_t cbits = 0;
  for (std::size_t k = 0; k < K; ++k)
    cbits |= static_cast<std::uint64_t>(inst.constants[k] & 1) << k;

  // Cumulative sub-test thresholds; the last edge is forced to 1 so the
  // uniform draw can never fall past the end.
  std::array<double, kNumQuadeqSubtests> cdf{};
  double acc = 0;
  for (std::size_t t = 0; t < kNumQuadeqSubtests; ++t) {
    acc += mixture.weights[t].to_double();
    cdf[t] = acc;
  }
  cdf.back() = 1.0;

  auto draw_words = [tw, n](CounterRng& rng) {
    std::vector<std::uint64_t> w(tw);
    const std::size_t bits = n * n;
    for (std::size_t i = 0; i < tw; ++i) {
      const std::size_t width = std::min<std::size_t>(64, bits - 64 * i);
      w[i] = width == 64 ? rng.next_u64()
                         : rng.next_below(std::uint64_t{1} << width);
    }
    return w;
  };

  auto sampler = [n, h, K, cdf, flat, cbits,
                  draw_words](CounterRng& rng) -> SampledRound {
    const double u01 = rng.next_double();
    std::uint32_t t = 0;
    while (t + 1 < kNumQuadeqSubtests && u01 >= cdf[t]) ++t;

    SampledRound r;
    r.subtest = t;
    switch (t) {
      case kLinHalf1:
      case kLinHalf2: {
        const std::uint64_t span = std::uint64_t{1} << h;
        const std::uint64_t u = rng.next_below(span);
        const std::uint64_t v = rng.next_below(span);
        const auto i = static_cast<std::uint32_t>(rng.next_below(3));
        r.qa = {kPairHalf1 + t, u, v};
        r.qb = {kSingleHalf1 + t, i == 0 ? u : i == 1 ? v : (u ^ v)};
        r.aux = (t << 3) | i;
        break;
      }
      case kLinFull: {
        const std::uint64_t span = std::uint64_t{1} << n;
        const std::uint64_t u = rng.next_below(span);
        const std::uint64_t v = rng.next_below(span);
        const auto i = static_cast<std::uint32_t>(rng.next_below(3));
        r.qa = {kPairFull, u, v};
        r.qb = {kSingleFull, i == 0 ? u : i == 1 ? v : (u ^ v)};
        r.aux = (kLinFull << 3) | i;
        break;
      }
      case kLinTensor: {
        const auto u = draw_words(rng);
        const auto v = draw_words(rng);
        const auto i = static_cast<std::uint32_t>(rng.next_below(3));
        Question qa;
        qa.reserve(1 + 2 * u.size());
        qa.push_back(kPairTensor);
        qa.insert(qa.end(), u.begin(), u.end());
        qa.insert(qa.end(), v.begin(), v.end());
        r.qa = std::move(qa);
        r.qb = with_kind(kSingleTensor,
                         i == 0 ? u : i == 1 ? v : xor_words(u, v));
        r.aux = (kLinTensor << 3) | i;
        break;
      }
      case kConsistency: {
        const std::uint64_t span = std::uint64_t{1} << h;
        const std::uint64_t u = rng.next_below(span);
        const std::uint64_t v = rng.next_below(span);
        const auto i = static_cast<std::uint32_t>(rng.next_below(3));
        r.qa = {kPairMixed, u, v};
        if (i == 0)
          r.qb = {kSingleHalf1, u};
        else if (i == 1)
          r.qb = {kSingleHalf2, v};
        else
          r.qb = {kSingleFull, u | (v << h)};
        r.aux = (kConsistency << 3) | i;
        break;
      }
      case kTensorConsistency: {
        const std::uint64_t span = std::uint64_t{1} << n;
        const std::uint64_t u = rng.next_below(span);
        const std::uint64_t v = rng.next_below(span);
        const auto i = static_cast<std::uint32_t>(rng.next_below(3));
        r.qa = {kPairFull, u, v};
        if (i < 2)
          r.qb = {kSingleFull, i == 0 ? u : v};
        else
          r.qb = with_kind(kSingleTensor, tensor_of(u, v, n));
        r.aux = (kTensorConsistency << 3) | i;
        break;
      }
      default: {  // kConstraint
        const std::uint64_t vbits = rng.next_below(std::uint64_t{1} << K);
        std::vector<std::uint64_t> w(flat.front().size(), 0);
        for (std::size_t k = 0; k < K; ++k)
          if ((vbits >> k) & 1) w = xor_words(std::move(w), flat[k]);
        const std::uint32_t target = parity(vbits & cbits);
        const auto player = static_cast<std::uint32_t>(rng.next_below(2));
        Question qq = with_kind(kSingleTensor, w);
        r.qa = qq;
        r.qb = std::move(qq);
        r.aux = (kConstraint << 3) | player | (target << 1);
        break;
      }
    }
    r.swap_roles = rng.next_below(2) == 1;
    return r;
  };

  auto pred = [trimmed](const Question&, const Question&, std::uint32_t aux,
                        std::size_t a, std::size_t b) -> bool {
    const std::uint32_t sub = aux >> 3, low = aux & 7;
    const auto a1 = static_cast<std::uint32_t>(a & 1);
    const auto a2 = static_cast<std::uint32_t>((a >> 1) & 1);
    const auto bb = static_cast<std::uint32_t>(b & 1);
    switch (sub) {
      case kLinHalf1:
      case kLinHalf2:
      case kLinFull:
      case kLinTensor: {
        const std::uint32_t a3 =
            trimmed ? (a1 ^ a2) : static_cast<std::uint32_t>((a >> 2) & 1);
        if (!trimmed && (a1 ^ a2 ^ a3) != 0) return false;
        return bb == (low == 0 ? a1 : low == 1 ? a2 : a3);
      }
      case kConsistency: {
        const std::uint32_t a3 = a1 ^ a2;
        return bb == (low == 0 ? a1 : low == 1 ? a2 : a3);
      }
      case kTensorConsistency: {
        const std::uint32_t a3 = a1 & a2;
        return bb == (low == 0 ? a1 : low == 1 ? a2 : a3);
      }
      case kConstraint:
        return ((low & 1) == 0 ? a1 : bb) == ((low >> 1) & 1);
      default:
        return false;
    }
  };

  GameSpec g = GameSpec::make_sampled(trimmed ? 4 : 8, 2, std::move(sampler),
                                      std::move(pred), kNumQuadeqSubtests);
  return QuadeqGame{std::move(g), inst, mixture, trimmed};
}

FunctionStrategy QuadeqGame::honest_strategy() const {
  if (!instance.witness)
    throw std::invalid_argument("honest strategy needs a witness");
  return strategy(forms_from_assignment(instance, *instance.witness));
}

FunctionStrategy QuadeqGame::strategy(const LinearFormStrategy& forms) const {
  check_forms(instance, forms);
  const std::size_t tw = tensor_words(instance.n);
  const bool trim = trimmed;

  auto lookup = [fs = forms, tw](std::uint64_t kind, const Question& q,
                                 std::size_t pos) -> std::uint32_t {
    switch (kind) {
      case kSingleHalf1:
        return parity(q.at(pos) & fs.half1);
      case kSingleHalf2:
        return parity(q.at(pos) & fs.half2);
      case kSingleFull:
        return parity(q.at(pos) & fs.full);
      case kSingleTensor: {
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < tw; ++i) acc ^= q.at(pos + i) & fs.tensor[i];
        return parity(acc);
      }
      default:
        throw std::invalid_argument("unexpected question kind");
    }
  };
  auto prover = [lookup, tw, trim](const Question& q) -> std::size_t {
    if (q.empty()) throw std::invalid_argument("empty question");
    switch (q[0]) {
      case kSingleHalf1:
      case kSingleHalf2:
      case kSingleFull:
      case kSingleTensor:
        return lookup(q[0], q, 1);
      case kPairHalf1:
      case kPairHalf2:
      case kPairFull: {
        const std::uint64_t single = q[0] - kPairHalf1;
        return pack_pair(lookup(single, q, 1), lookup(single, q, 2), trim);
      }
      case kPairTensor:
        return pack_pair(lookup(kSingleTensor, q, 1),
                         lookup(kSingleTensor, q, 1 + tw), trim);
      case kPairMixed:
        return pack_pair(lookup(kSingleHalf1, q, 1), lookup(kSingleHalf2, q, 2),
                         trim);
      default:
        throw std::invalid_argument("unexpected question kind");
    }
  };
  return FunctionStrategy{prover, prover};
}

QuadeqBreakdown quadeq_exhaustive(const QuadeqInstance& inst,
                                  const LinearFormStrategy& strat,
                                  const QuadeqMixture& mixture) {
  inst.validate();
  mixture.validate();
  check_forms(inst, strat);
  const std::size_t n = inst.n, h = n / 2;
  const std::size_t K = inst.forms.size();
  if (n > 12)
    throw std::runtime_error(
        "exhaustive evaluation enumerates 4^n pairs; need n <= 12");
  if (K > 20)
    throw std::runtime_error(
        "exhaustive evaluation enumerates 2^K draws; need K <= 20");

  QuadeqBreakdown out;
  // Linear tables pass every linearity round identically: the parity
  // identity holds term by term, and the cross-checked player reads the
  // same table, so b = a_i never fires.
  for (std::size_t t = kLinHalf1; t <= kLinTensor; ++t)
    out.subtest_acceptance[t] = Rational(1);

  {  // halves against the full table
    const std::int64_t total = std::int64_t{1} << n;
    std::int64_t good = 0;
    for (std::uint64_t u = 0; u < (std::uint64_t{1} << h); ++u)
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << h); ++v) {
        const std::uint32_t lhs = parity((u | (v << h)) & strat.full);
        const std::uint32_t rhs =
            parity(u & strat.half1) ^ parity(v & strat.half2);
        good += lhs == rhs ? 1 : 0;
      }
    out.subtest_acceptance[kConsistency] = Rational(2 * total + good, 3 * total);
  }
  {  // products against the tensor table
    const std::int64_t total = std::int64_t{1} << (2 * n);
    std::vector<std::uint64_t> rows(n);
    for (std::size_t i = 0; i < n; ++i)
      rows[i] = get_bits(strat.tensor, i * n, n);
    std::int64_t good = 0;
    for (std::uint64_t u = 0; u < (std::uint64_t{1} << n); ++u) {
      // (u (x) v) . T collapses to (xor of u's active rows) . v.
      std::uint64_t urow = 0;
      for (std::size_t i = 0; i < n; ++i)
        if ((u >> i) & 1) urow ^= rows[i];
      const std::uint32_t au = parity(u & strat.full);
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << n); ++v) {
        const std::uint32_t prod = au & parity(v & strat.full);
        good += prod == parity(urow & v) ? 1 : 0;
      }
    }
    out.subtest_acceptance[kTensorConsistency] =
        Rational(2 * total + good, 3 * total);
  }
  {  // random constraints; both players share the tensor table, so the
     // player coin cannot matter
    std::vector<std::vector<std::uint64_t>> flat(K);
    for (std::size_t k = 0; k < K; ++k) flat[k] = flat_form(inst.forms[k], n);
    std::uint64_t cbits = 0;
    for (std::size_t k = 0; k < K; ++k)
      cbits |= static_cast<std::uint64_t>(inst.constants[k] & 1) << k;
    const std::int64_t total = std::int64_t{1} << K;
    std::int64_t good = 0;
    for (std::uint64_t vb = 0; vb < (std::uint64_t{1} << K); ++vb) {
      std::vector<std::uint64_t> w(tensor_words(n), 0);
      for (std::size_t k = 0; k < K; ++k)
        if ((vb >> k) & 1) w = xor_words(std::move(w), flat[k]);
      good += dot_words(w, strat.tensor) == parity(vb & cbits) ? 1 : 0;
    }
    out.subtest_acceptance[kConstraint] = Rational(good, total);
  }

  Rational overall(0);
  for (std::size_t t = 0; t < kNumQuadeqSubtests; ++t)
    overall += mixture.weights[t] * out.subtest_acceptance[t];
  out.overall = overall;
  return out;
}

// ---------------------------------------------------------------------------
// Answer trimming

GameSpec answer_trim(const GameSpec& g) {
  // Lift a trimmed pair answer back to the untrimmed encoding.
  auto lift = [](std::size_t a) {
    return (a & 3) | (((a & 1) ^ ((a >> 1) & 1)) << 2);
  };
  if (g.is_explicit()) {
    for (std::size_t x = 0; x < g.num_questions_a(); ++x)
      if (g.answers_a(x) != 8)
        throw std::invalid_argument(
            "answer trim expects 3-bit first-player answers");
    for (std::size_t y = 0; y < g.num_questions_b(); ++y)
      if (g.answers_b(y) != 2)
        throw std::invalid_argument(
            "answer trim expects 1-bit second-player answers");
    auto pred = [g, lift](std::size_t qa, std::size_t qb, std::uint32_t aux,
                          std::size_t a, std::size_t b) {
      return g.accepts(qa, qb, aux, lift(a), b);
    };
    return GameSpec::make_explicit(
        std::vector<std::size_t>(g.num_questions_a(), 4),
        std::vector<std::size_t>(g.num_questions_b(), 2), g.entries(),
        std::move(pred), g.projection_verified());
  }
  if (g.sampled_answers_a() != 8 || g.sampled_answers_b() != 2)
    throw std::invalid_argument("answer trim expects 8/2 answer counts");
  auto sampler = [g](CounterRng& rng) { return g.sample(rng); };
  auto pred = [g, lift](const Question& qa, const Question& qb,
                        std::uint32_t aux, std::size_t a, std::size_t b) {
    return g.accepts(qa, qb, aux, lift(a), b);
  };
  return GameSpec::make_sampled(4, 2, std::move(sampler), std::move(pred),
                                g.num_subtests());
}

}  // namespace eglab::protocols
