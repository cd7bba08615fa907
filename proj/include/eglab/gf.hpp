#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <vector>

// Prime-field arithmetic on canonical residues.  Moduli are restricted to
// primes q < 2^31 so that all products fit into 64-bit intermediates; prime
// powers are rejected (no extension-field tower here).
namespace eglab::gf {

inline constexpr std::uint64_t kModulusLimit = std::uint64_t{1} << 31;

// Deterministic Miller-Rabin (fixed base set, exact for everything we accept).
bool is_prime(std::uint64_t n);

// Throws std::invalid_argument unless q is a prime below 2^31.
void validate_modulus(std::uint64_t q);

class FieldElement {
 public:
  FieldElement(std::uint64_t value, std::uint64_t modulus);

  std::uint32_t value() const { return value_; }
  std::uint32_t modulus() const { return modulus_; }

  FieldElement operator+(const FieldElement& o) const;
  FieldElement operator-(const FieldElement& o) const;
  FieldElement operator*(const FieldElement& o) const;
  FieldElement operator-() const;
  FieldElement inverse() const;  // std::domain_error on zero
  FieldElement pow(std::uint64_t e) const;

  bool operator==(const FieldElement&) const = default;

 private:
  std::uint32_t value_;
  std::uint32_t modulus_;

  void check_same_modulus(const FieldElement& o) const;
};

class FieldVector {
 public:
  FieldVector(std::vector<std::uint32_t> values, std::uint64_t modulus);
  static FieldVector zero(std::size_t size, std::uint64_t modulus);

  std::size_t size() const { return values_.size(); }
  std::uint32_t modulus() const { return modulus_; }
  const std::vector<std::uint32_t>& raw() const { return values_; }

  FieldElement at(std::size_t i) const;
  void set(std::size_t i, const FieldElement& v);

  FieldVector operator+(const FieldVector& o) const;
  FieldVector operator-(const FieldVector& o) const;
  FieldVector scaled(const FieldElement& c) const;
  bool is_zero() const;

  bool operator==(const FieldVector&) const = default;
  auto operator<=>(const FieldVector&) const = default;

 private:
  std::uint32_t modulus_;
  std::vector<std::uint32_t> values_;
};

// Rank-2 test for a pair of direction vectors (shared modulus enforced).
bool linearly_independent(const FieldVector& y1, const FieldVector& y2);

// In-place reduced row echelon form over F_q; returns the pivot columns.
// Rows may include augmented columns (callers decide what the width means).
std::vector<std::size_t> rref(std::vector<std::vector<std::uint32_t>>& rows,
                              std::uint32_t q);

// Modular helpers on raw residues (hot paths avoid FieldElement overhead).
inline std::uint32_t add_mod(std::uint32_t a, std::uint32_t b, std::uint32_t q) {
  std::uint64_t s = std::uint64_t{a} + b;
  return static_cast<std::uint32_t>(s >= q ? s - q : s);
}
inline std::uint32_t sub_mod(std::uint32_t a, std::uint32_t b, std::uint32_t q) {
  return a >= b ? a - b : static_cast<std::uint32_t>(a + std::uint64_t{q} - b);
}
inline std::uint32_t mul_mod(std::uint32_t a, std::uint32_t b, std::uint32_t q) {
  return static_cast<std::uint32_t>(std::uint64_t{a} * b % q);
}
std::uint32_t pow_mod(std::uint32_t a, std::uint64_t e, std::uint32_t q);
std::uint32_t inv_mod(std::uint32_t a, std::uint32_t q);

}  // namespace eglab::gf
