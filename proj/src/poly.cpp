#include "eglab/poly.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace eglab::poly {

using gf::add_mod;
using gf::FieldElement;
using gf::FieldVector;
using gf::mul_mod;
using gf::pow_mod;
using gf::sub_mod;

bool GradedLexLess::operator()(const std::vector<std::uint32_t>& a,
                               const std::vector<std::uint32_t>& b) const {
  std::uint64_t da = std::accumulate(a.begin(), a.end(), std::uint64_t{0});
  std::uint64_t db = std::accumulate(b.begin(), b.end(), std::uint64_t{0});
  if (da != db) return da < db;
  return a > b;  // ties: lexicographically descending
}

namespace {

std::uint32_t eval_raw(const MultiPoly::CoeffMap& coeffs,
                       const std::vector<std::uint32_t>& point,
                       std::uint32_t q) {
  std::uint64_t acc = 0;
  for (const auto& [exps, c] : coeffs) {
    std::uint64_t term = c;
    for (std::size_t i = 0; i < exps.size(); ++i) {
      if (exps[i] == 0) continue;
      term = term * pow_mod(point[i], exps[i], q) % q;
    }
    acc = (acc + term) % q;
  }
  return static_cast<std::uint32_t>(acc);
}

}  // namespace

MultiPoly::MultiPoly(std::uint32_t num_vars, std::uint64_t modulus,
                     std::uint32_t degree_bound)
    : num_vars_(num_vars), degree_bound_(degree_bound) {
  gf::validate_modulus(modulus);
  modulus_ = static_cast<std::uint32_t>(modulus);
  if (num_vars == 0) throw std::invalid_argument("polynomial needs >= 1 variable");
}

void MultiPoly::set_coeff(const std::vector<std::uint32_t>& exponents,
                          std::uint64_t c) {
  if (exponents.size() != num_vars_)
    throw std::invalid_argument("exponent tuple arity mismatch");
  std::uint64_t deg =
      std::accumulate(exponents.begin(), exponents.end(), std::uint64_t{0});
  if (deg > degree_bound_)
    throw std::invalid_argument("monomial degree " + std::to_string(deg) +
                                " exceeds bound " + std::to_string(degree_bound_));
  std::uint32_t r = static_cast<std::uint32_t>(c % modulus_);
  if (r == 0)
    coeffs_.erase(exponents);
  else
    coeffs_[exponents] = r;
}

std::uint32_t MultiPoly::coeff(const std::vector<std::uint32_t>& exponents) const {
  auto it = coeffs_.find(exponents);
  return it == coeffs_.end() ? 0 : it->second;
}

std::uint32_t MultiPoly::total_degree() const {
  std::uint32_t d = 0;
  for (const auto& [exps, c] : coeffs_)
    d = std::max(d, static_cast<std::uint32_t>(std::accumulate(
                        exps.begin(), exps.end(), std::uint64_t{0})));
  return d;
}

FieldElement MultiPoly::evaluate(const FieldVector& point) const {
  if (point.modulus() != modulus_)
    throw std::invalid_argument("evaluation point modulus mismatch");
  if (point.size() != num_vars_)
    throw std::invalid_argument("evaluation point arity mismatch");
  return FieldElement(eval_raw(coeffs_, point.raw(), modulus_), modulus_);
}

MultiPoly MultiPoly::operator+(const MultiPoly& o) const {
  if (modulus_ != o.modulus_ || num_vars_ != o.num_vars_)
    throw std::invalid_argument("polynomial shape/modulus mismatch");
  MultiPoly r(num_vars_, modulus_, std::max(degree_bound_, o.degree_bound_));
  r.coeffs_ = coeffs_;
  for (const auto& [e, c] : o.coeffs_) {
    std::uint32_t s = add_mod(r.coeff(e), c, modulus_);
    if (s == 0)
      r.coeffs_.erase(e);
    else
      r.coeffs_[e] = s;
  }
  return r;
}

MultiPoly MultiPoly::operator-(const MultiPoly& o) const {
  return *this + o.scaled(FieldElement(modulus_ - 1, modulus_));
}

MultiPoly MultiPoly::operator*(const MultiPoly& o) const {
  if (modulus_ != o.modulus_ || num_vars_ != o.num_vars_)
    throw std::invalid_argument("polynomial shape/modulus mismatch");
  MultiPoly r(num_vars_, modulus_, degree_bound_ + o.degree_bound_);
  for (const auto& [ea, ca] : coeffs_)
    for (const auto& [eb, cb] : o.coeffs_) {
      std::vector<std::uint32_t> e(num_vars_);
      for (std::uint32_t i = 0; i < num_vars_; ++i) e[i] = ea[i] + eb[i];
      std::uint32_t s = add_mod(r.coeff(e), mul_mod(ca, cb, modulus_), modulus_);
      if (s == 0)
        r.coeffs_.erase(e);
      else
        r.coeffs_[e] = s;
    }
  return r;
}

MultiPoly MultiPoly::scaled(const FieldElement& c) const {
  if (c.modulus() != modulus_)
    throw std::invalid_argument("scale factor modulus mismatch");
  MultiPoly r(num_vars_, modulus_, degree_bound_);
  if (c.value() == 0) return r;
  for (const auto& [e, v] : coeffs_) r.coeffs_[e] = mul_mod(v, c.value(), modulus_);
  return r;
}

BivariatePoly::BivariatePoly(std::uint64_t modulus, std::uint32_t degree_bound)
    : degree_bound_(degree_bound) {
  gf::validate_modulus(modulus);
  modulus_ = static_cast<std::uint32_t>(modulus);
}

void BivariatePoly::set_coeff(std::uint32_t i, std::uint32_t j, std::uint64_t c) {
  if (i + j > degree_bound_)
    throw std::invalid_argument("bivariate degree exceeds bound");
  std::uint32_t r = static_cast<std::uint32_t>(c % modulus_);
  if (r == 0)
    coeffs_.erase({i, j});
  else
    coeffs_[{i, j}] = r;
}

std::uint32_t BivariatePoly::coeff(std::uint32_t i, std::uint32_t j) const {
  auto it = coeffs_.find({i, j});
  return it == coeffs_.end() ? 0 : it->second;
}

std::uint32_t BivariatePoly::total_degree() const {
  std::uint32_t d = 0;
  for (const auto& [ij, c] : coeffs_) d = std::max(d, ij.first + ij.second);
  return d;
}

FieldElement BivariatePoly::evaluate(const FieldElement& t1,
                                     const FieldElement& t2) const {
  if (t1.modulus() != modulus_ || t2.modulus() != modulus_)
    throw std::invalid_argument("evaluation point modulus mismatch");
  std::uint64_t acc = 0;
  for (const auto& [ij, c] : coeffs_) {
    std::uint64_t term = c;
    term = term * pow_mod(t1.value(), ij.first, modulus_) % modulus_;
    term = term * pow_mod(t2.value(), ij.second, modulus_) % modulus_;
    acc = (acc + term) % modulus_;
  }
  return FieldElement(acc, modulus_);
}

AffinePlane::AffinePlane(FieldVector base, FieldVector b1, FieldVector b2,
                         std::size_t pivot1, std::size_t pivot2)
    : base_(std::move(base)),
      b1_(std::move(b1)),
      b2_(std::move(b2)),
      pivot1_(pivot1),
      pivot2_(pivot2) {
  const std::size_t m = base_.size();
  if (b1_.size() != m || b2_.size() != m || m < 2)
    throw std::invalid_argument("plane needs ambient dimension >= 2");
  if (b1_.modulus() != base_.modulus() || b2_.modulus() != base_.modulus())
    throw std::invalid_argument("plane component modulus mismatch");
  if (pivot1_ >= pivot2_ || pivot2_ >= m)
    throw std::invalid_argument("plane pivots out of order");
  // Canonical-form invariants: RREF basis, base point zeroed at the pivots.
  bool ok = b1_.raw()[pivot1_] == 1 && b1_.raw()[pivot2_] == 0 &&
            b2_.raw()[pivot1_] == 0 && b2_.raw()[pivot2_] == 1 &&
            base_.raw()[pivot1_] == 0 && base_.raw()[pivot2_] == 0;
  for (std::size_t i = 0; i < pivot1_ && ok; ++i)
    ok = b1_.raw()[i] == 0 && b2_.raw()[i] == 0;
  for (std::size_t i = pivot1_ + 1; i < pivot2_ && ok; ++i) ok = b2_.raw()[i] == 0;
  if (!ok) throw std::invalid_argument("plane is not in canonical form");
}

FieldVector AffinePlane::point_at(const FieldElement& t1,
                                  const FieldElement& t2) const {
  return base_ + b1_.scaled(t1) + b2_.scaled(t2);
}

std::pair<FieldElement, FieldElement> AffinePlane::coordinates_of(
    const FieldVector& x) const {
  if (x.size() != ambient_dim() || x.modulus() != modulus())
    throw std::invalid_argument("point shape/modulus mismatch");
  FieldElement t1 = x.at(pivot1_), t2 = x.at(pivot2_);
  if (point_at(t1, t2) != x)
    throw std::domain_error("point is not on the plane");
  return {t1, t2};
}

bool AffinePlane::contains(const FieldVector& x) const {
  if (x.size() != ambient_dim() || x.modulus() != modulus()) return false;
  return point_at(x.at(pivot1_), x.at(pivot2_)) == x;
}

AffinePlane canonical_plane(const FieldVector& x, const FieldVector& y1,
                            const FieldVector& y2) {
  const std::uint32_t q = x.modulus();
  const std::size_t m = x.size();
  if (y1.modulus() != q || y2.modulus() != q || y1.size() != m || y2.size() != m)
    throw std::invalid_argument("plane inputs must share shape and modulus");
  if (m < 2) throw std::invalid_argument("plane needs ambient dimension >= 2");

  std::vector<std::vector<std::uint32_t>> rows = {y1.raw(), y2.raw()};
  auto pivots = gf::rref(rows, q);
  if (pivots.size() != 2)
    throw std::domain_error("plane directions are linearly dependent");

  FieldVector b1(rows[0], q), b2(rows[1], q);
  // Unique coset representative with zeroed pivot coordinates.
  FieldVector base = x - b1.scaled(x.at(pivots[0])) - b2.scaled(x.at(pivots[1]));
  return AffinePlane(std::move(base), std::move(b1), std::move(b2), pivots[0],
                     pivots[1]);
}

namespace {

// Dense (d+1)x(d+1) coefficient grid for the substitution work; entry [i][j]
// is the coefficient of t1^i t2^j.
using Dense = std::vector<std::vector<std::uint32_t>>;

Dense dense_zero(std::uint32_t d) {
  return Dense(d + 1, std::vector<std::uint32_t>(d + 1, 0));
}

void dense_mul(const Dense& a, std::uint32_t deg_a, const Dense& b,
               std::uint32_t deg_b, Dense& out, std::uint32_t q) {
  for (auto& row : out) std::fill(row.begin(), row.end(), 0);
  for (std::uint32_t i = 0; i <= deg_a; ++i)
    for (std::uint32_t j = 0; i + j <= deg_a; ++j) {
      if (a[i][j] == 0) continue;
      for (std::uint32_t k = 0; k <= deg_b; ++k)
        for (std::uint32_t l = 0; k + l <= deg_b; ++l) {
          if (b[k][l] == 0) continue;
          out[i + k][j + l] =
              add_mod(out[i + k][j + l], mul_mod(a[i][j], b[k][l], q), q);
        }
    }
}

}  // namespace

BivariatePoly restrict_to_plane(const MultiPoly& g, const AffinePlane& s) {
  const std::uint32_t q = g.modulus();
  if (s.modulus() != q)
    throw std::invalid_argument("plane/polynomial modulus mismatch");
  if (s.ambient_dim() != g.num_vars())
    throw std::invalid_argument("plane/polynomial dimension mismatch");

  const std::uint32_t d = g.degree_bound();
  Dense acc = dense_zero(d), term = dense_zero(d), tmp = dense_zero(d);

  for (const auto& [exps, c] : g.coefficients()) {
    for (auto& row : term) std::fill(row.begin(), row.end(), 0);
    term[0][0] = c;
    std::uint32_t deg = 0;
    for (std::size_t v = 0; v < exps.size(); ++v) {
      // x_v substitutes to the affine form base_v + t1*b1_v + t2*b2_v.
      Dense lin = dense_zero(1);
      lin[0][0] = s.base().raw()[v];
      lin[1][0] = s.basis1().raw()[v];
      lin[0][1] = s.basis2().raw()[v];
      for (std::uint32_t rep = 0; rep < exps[v]; ++rep) {
        dense_mul(term, deg, lin, 1, tmp, q);
        std::swap(term, tmp);
        ++deg;
      }
    }
    for (std::uint32_t i = 0; i <= deg; ++i)
      for (std::uint32_t j = 0; i + j <= deg; ++j)
        acc[i][j] = add_mod(acc[i][j], term[i][j], q);
  }

  BivariatePoly r(q, d);
  for (std::uint32_t i = 0; i <= d; ++i)
    for (std::uint32_t j = 0; i + j <= d; ++j)
      if (acc[i][j] != 0) r.set_coeff(i, j, acc[i][j]);
  return r;
}

BivariatePoly interpolate_bivariate(
    const std::vector<std::tuple<FieldElement, FieldElement, FieldElement>>&
        samples,
    std::uint32_t degree_bound, std::uint64_t modulus) {
  gf::validate_modulus(modulus);
  const std::uint32_t q = static_cast<std::uint32_t>(modulus);

  // Unknowns in canonical graded-lex order.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> monos;
  for (std::uint32_t t = 0; t <= degree_bound; ++t)
    for (std::uint32_t i = t + 1; i-- > 0;) monos.push_back({i, t - i});
  const std::size_t n = monos.size();

  std::vector<std::vector<std::uint32_t>> rows;
  rows.reserve(samples.size());
  for (const auto& [t1, t2, val] : samples) {
    if (t1.modulus() != q || t2.modulus() != q || val.modulus() != q)
      throw std::invalid_argument("sample modulus mismatch");
    std::vector<std::uint32_t> row(n + 1);
    for (std::size_t k = 0; k < n; ++k)
      row[k] = mul_mod(pow_mod(t1.value(), monos[k].first, q),
                       pow_mod(t2.value(), monos[k].second, q), q);
    row[n] = val.value();
    rows.push_back(std::move(row));
  }

  auto pivots = gf::rref(rows, q);
  for (std::size_t p : pivots)
    if (p == n)
      throw std::domain_error("no consistent polynomial through the samples");
  if (pivots.size() < n)
    throw std::domain_error(
        "underdetermined interpolation: samples do not pin down a degree-" +
        std::to_string(degree_bound) + " polynomial");

  BivariatePoly r(q, degree_bound);
  for (std::size_t k = 0; k < n; ++k)
    if (rows[k][n] != 0) r.set_coeff(monos[k].first, monos[k].second, rows[k][n]);

  for (const auto& [t1, t2, val] : samples)
    if (r.evaluate(t1, t2) != val)
      throw std::domain_error("no consistent polynomial through the samples");
  return r;
}

Rational agreement_fraction(const MultiPoly& g, const MultiPoly& h) {
  if (g.modulus() != h.modulus() || g.num_vars() != h.num_vars())
    throw std::invalid_argument("polynomial shape/modulus mismatch");
  const std::uint32_t q = g.modulus(), m = g.num_vars();
  std::uint64_t domain = 1;
  for (std::uint32_t i = 0; i < m; ++i) {
    domain *= q;
    if (domain > 10'000'000ull)
      throw std::domain_error("agreement domain q^m exceeds the 1e7 guard");
  }
  std::uint64_t agree = 0;
  for_each_point(m, q, [&](const std::vector<std::uint32_t>& pt) {
    if (eval_raw(g.coefficients(), pt, q) == eval_raw(h.coefficients(), pt, q))
      ++agree;
  });
  return Rational(static_cast<std::int64_t>(agree),
                  static_cast<std::int64_t>(domain));
}

}  // namespace eglab::poly
