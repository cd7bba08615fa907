#include "eglab/gf.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace eglab::gf {

namespace {

std::uint64_t mul_mod64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t pow_mod64(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  a %= m;
  while (e) {
    if (e & 1) r = mul_mod64(r, a, m);
    a = mul_mod64(a, a, m);
    e >>= 1;
  }
  return r;
}

}  // namespace

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                          23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // This base set is a deterministic witness set for n < 3.3e24.
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                          23ull, 29ull, 31ull, 37ull}) {
    std::uint64_t x = pow_mod64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int i = 1; i < s; ++i) {
      x = mul_mod64(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

void validate_modulus(std::uint64_t q) {
  thread_local std::uint64_t last_ok = 0;
  if (q == last_ok) return;
  if (q >= kModulusLimit)
    throw std::invalid_argument("field modulus must be < 2^31, got " +
                                std::to_string(q));
  if (!is_prime(q))
    throw std::invalid_argument("field modulus must be prime, got " +
                                std::to_string(q));
  last_ok = q;
}

FieldElement::FieldElement(std::uint64_t value, std::uint64_t modulus) {
  validate_modulus(modulus);
  modulus_ = static_cast<std::uint32_t>(modulus);
  value_ = static_cast<std::uint32_t>(value % modulus);
}

void FieldElement::check_same_modulus(const FieldElement& o) const {
  if (modulus_ != o.modulus_)
    throw std::invalid_argument("field modulus mismatch: " +
                                std::to_string(modulus_) + " vs " +
                                std::to_string(o.modulus_));
}

FieldElement FieldElement::operator+(const FieldElement& o) const {
  check_same_modulus(o);
  return FieldElement(add_mod(value_, o.value_, modulus_), modulus_);
}

FieldElement FieldElement::operator-(const FieldElement& o) const {
  check_same_modulus(o);
  return FieldElement(sub_mod(value_, o.value_, modulus_), modulus_);
}

FieldElement FieldElement::operator*(const FieldElement& o) const {
  check_same_modulus(o);
  return FieldElement(mul_mod(value_, o.value_, modulus_), modulus_);
}

FieldElement FieldElement::operator-() const {
  return FieldElement(value_ == 0 ? 0 : modulus_ - value_, modulus_);
}

FieldElement FieldElement::inverse() const {
  return FieldElement(inv_mod(value_, modulus_), modulus_);
}

FieldElement FieldElement::pow(std::uint64_t e) const {
  return FieldElement(pow_mod(value_, e, modulus_), modulus_);
}

std::uint32_t pow_mod(std::uint32_t a, std::uint64_t e, std::uint32_t q) {
  std::uint64_t r = 1 % q, b = a % q;
  while (e) {
    if (e & 1) r = r * b % q;
    b = b * b % q;
    e >>= 1;
  }
  return static_cast<std::uint32_t>(r);
}

std::uint32_t inv_mod(std::uint32_t a, std::uint32_t q) {
  a %= q;
  if (a == 0) throw std::domain_error("inverse of zero in F_" + std::to_string(q));
  // Extended Euclid on (a, q); q prime so gcd is 1.
  std::int64_t t = 0, new_t = 1;
  std::int64_t r = q, new_r = a;
  while (new_r != 0) {
    std::int64_t quot = r / new_r;
    std::int64_t tmp = t - quot * new_t;
    t = new_t;
    new_t = tmp;
    tmp = r - quot * new_r;
    r = new_r;
    new_r = tmp;
  }
  if (t < 0) t += q;
  return static_cast<std::uint32_t>(t);
}

FieldVector::FieldVector(std::vector<std::uint32_t> values, std::uint64_t modulus) {
  validate_modulus(modulus);
  modulus_ = static_cast<std::uint32_t>(modulus);
  for (auto& v : values)
    if (v >= modulus_) v %= modulus_;
  values_ = std::move(values);
}

FieldVector FieldVector::zero(std::size_t size, std::uint64_t modulus) {
  return FieldVector(std::vector<std::uint32_t>(size, 0), modulus);
}

FieldElement FieldVector::at(std::size_t i) const {
  return FieldElement(values_.at(i), modulus_);
}

void FieldVector::set(std::size_t i, const FieldElement& v) {
  if (v.modulus() != modulus_)
    throw std::invalid_argument("field modulus mismatch in FieldVector::set");
  values_.at(i) = v.value();
}

FieldVector FieldVector::operator+(const FieldVector& o) const {
  if (modulus_ != o.modulus_ || size() != o.size())
    throw std::invalid_argument("FieldVector shape/modulus mismatch");
  std::vector<std::uint32_t> out(size());
  for (std::size_t i = 0; i < size(); ++i)
    out[i] = add_mod(values_[i], o.values_[i], modulus_);
  return FieldVector(std::move(out), modulus_);
}

FieldVector FieldVector::operator-(const FieldVector& o) const {
  if (modulus_ != o.modulus_ || size() != o.size())
    throw std::invalid_argument("FieldVector shape/modulus mismatch");
  std::vector<std::uint32_t> out(size());
  for (std::size_t i = 0; i < size(); ++i)
    out[i] = sub_mod(values_[i], o.values_[i], modulus_);
  return FieldVector(std::move(out), modulus_);
}

FieldVector FieldVector::scaled(const FieldElement& c) const {
  if (c.modulus() != modulus_)
    throw std::invalid_argument("field modulus mismatch in FieldVector::scaled");
  std::vector<std::uint32_t> out(size());
  for (std::size_t i = 0; i < size(); ++i)
    out[i] = mul_mod(values_[i], c.value(), modulus_);
  return FieldVector(std::move(out), modulus_);
}

bool FieldVector::is_zero() const {
  for (auto v : values_)
    if (v != 0) return false;
  return true;
}

bool linearly_independent(const FieldVector& y1, const FieldVector& y2) {
  if (y1.modulus() != y2.modulus() || y1.size() != y2.size())
    throw std::invalid_argument("direction vectors must share shape and modulus");
  std::vector<std::vector<std::uint32_t>> rows = {y1.raw(), y2.raw()};
  return rref(rows, y1.modulus()).size() == 2;
}

std::vector<std::size_t> rref(std::vector<std::vector<std::uint32_t>>& rows,
                              std::uint32_t q) {
  validate_modulus(q);
  std::vector<std::size_t> pivots;
  if (rows.empty()) return pivots;
  const std::size_t ncols = rows[0].size();
  std::size_t r = 0;
  for (std::size_t c = 0; c < ncols && r < rows.size(); ++c) {
    std::size_t sel = r;
    while (sel < rows.size() && rows[sel][c] % q == 0) ++sel;
    if (sel == rows.size()) continue;
    std::swap(rows[r], rows[sel]);
    std::uint32_t inv = inv_mod(rows[r][c] % q, q);
    for (std::size_t j = c; j < ncols; ++j)
      rows[r][j] = mul_mod(rows[r][j] % q, inv, q);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r) continue;
      std::uint32_t f = rows[i][c] % q;
      if (f == 0) continue;
      for (std::size_t j = c; j < ncols; ++j)
        rows[i][j] = sub_mod(rows[i][j] % q, mul_mod(f, rows[r][j], q), q);
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

}  // namespace eglab::gf
