#pragma once

#include <cstdint>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include "eglab/gf.hpp"
#include "eglab/rational.hpp"

// Sparse multivariate polynomials over prime fields, affine planes in
// canonical (RREF) form, and the restriction/interpolation machinery the
// plane-vs-point test is built on.
namespace eglab::poly {

// Monomial order used everywhere a canonical ordering is needed: total degree
// ascending, ties broken lexicographically descending.  For two variables
// this reads (i+j ascending, then i descending).
struct GradedLexLess {
  bool operator()(const std::vector<std::uint32_t>& a,
                  const std::vector<std::uint32_t>& b) const;
};

class MultiPoly {
 public:
  using CoeffMap = std::map<std::vector<std::uint32_t>, std::uint32_t, GradedLexLess>;

  MultiPoly(std::uint32_t num_vars, std::uint64_t modulus, std::uint32_t degree_bound);

  std::uint32_t num_vars() const { return num_vars_; }
  std::uint32_t modulus() const { return modulus_; }
  std::uint32_t degree_bound() const { return degree_bound_; }
  const CoeffMap& coefficients() const { return coeffs_; }

  // Stores c at the given exponent tuple (erases the term when c = 0).
  // Throws if the tuple has the wrong arity or exceeds the degree bound.
  void set_coeff(const std::vector<std::uint32_t>& exponents, std::uint64_t c);
  std::uint32_t coeff(const std::vector<std::uint32_t>& exponents) const;

  std::uint32_t total_degree() const;  // 0 for the zero polynomial
  bool is_zero() const { return coeffs_.empty(); }

  gf::FieldElement evaluate(const gf::FieldVector& point) const;

  MultiPoly operator+(const MultiPoly& o) const;
  MultiPoly operator-(const MultiPoly& o) const;
  MultiPoly operator*(const MultiPoly& o) const;  // bound = sum of bounds
  MultiPoly scaled(const gf::FieldElement& c) const;

  bool operator==(const MultiPoly&) const = default;

 private:
  std::uint32_t num_vars_;
  std::uint32_t modulus_;
  std::uint32_t degree_bound_;
  CoeffMap coeffs_;
};

// Bivariate polynomial in the plane parameters (t1, t2), joint degree <= d.
// Kept separate from MultiPoly because it is an interface type of its own
// (plane answers in the protocol), with a fixed two-variable layout.
class BivariatePoly {
 public:
  using CoeffMap = std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t>;

  BivariatePoly(std::uint64_t modulus, std::uint32_t degree_bound);

  std::uint32_t modulus() const { return modulus_; }
  std::uint32_t degree_bound() const { return degree_bound_; }
  const CoeffMap& coefficients() const { return coeffs_; }

  void set_coeff(std::uint32_t i, std::uint32_t j, std::uint64_t c);
  std::uint32_t coeff(std::uint32_t i, std::uint32_t j) const;
  std::uint32_t total_degree() const;

  gf::FieldElement evaluate(const gf::FieldElement& t1,
                            const gf::FieldElement& t2) const;

  bool operator==(const BivariatePoly&) const = default;
  auto operator<=>(const BivariatePoly&) const = default;

 private:
  std::uint32_t modulus_;
  std::uint32_t degree_bound_;
  CoeffMap coeffs_;  // plain (i, j) map; canonical graded-lex order is applied
                     // at serialization time
};

// Two-dimensional affine subspace of F_q^m in canonical form: the basis is
// the unique RREF basis of the direction span, and the base point is the
// unique coset representative whose pivot coordinates are zero.  Equal planes
// therefore compare equal as values.
class AffinePlane {
 public:
  AffinePlane(gf::FieldVector base, gf::FieldVector b1, gf::FieldVector b2,
              std::size_t pivot1, std::size_t pivot2);

  std::uint32_t modulus() const { return base_.modulus(); }
  std::size_t ambient_dim() const { return base_.size(); }
  const gf::FieldVector& base() const { return base_; }
  const gf::FieldVector& basis1() const { return b1_; }
  const gf::FieldVector& basis2() const { return b2_; }
  std::size_t pivot1() const { return pivot1_; }
  std::size_t pivot2() const { return pivot2_; }

  gf::FieldVector point_at(const gf::FieldElement& t1,
                           const gf::FieldElement& t2) const;

  // Plane coordinates of a point on the plane; throws if x is not on it.
  // In canonical form these are just x's pivot coordinates.
  std::pair<gf::FieldElement, gf::FieldElement> coordinates_of(
      const gf::FieldVector& x) const;
  bool contains(const gf::FieldVector& x) const;

  bool operator==(const AffinePlane&) const = default;
  auto operator<=>(const AffinePlane&) const = default;

 private:
  gf::FieldVector base_, b1_, b2_;
  std::size_t pivot1_, pivot2_;
};

// Canonicalizes the plane through x spanned by y1, y2.  Throws
// std::domain_error when the directions are linearly dependent.
AffinePlane canonical_plane(const gf::FieldVector& x, const gf::FieldVector& y1,
                            const gf::FieldVector& y2);

// Symbolic substitution of the plane's affine parametrization into g.
BivariatePoly restrict_to_plane(const MultiPoly& g, const AffinePlane& s);

// Least-degree-<=d bivariate polynomial through the samples (t1, t2, value).
// Throws "underdetermined" when the samples don't pin the coefficients down,
// and "no consistent polynomial" when they contradict every candidate.
BivariatePoly interpolate_bivariate(
    const std::vector<std::tuple<gf::FieldElement, gf::FieldElement,
                                 gf::FieldElement>>& samples,
    std::uint32_t degree_bound, std::uint64_t modulus);

// Exact fraction of points of F_q^m where g and h agree (exhaustive; guarded
// to q^m <= 10^7 points).
Rational agreement_fraction(const MultiPoly& g, const MultiPoly& h);

// Enumerates all q^m coordinate tuples in odometer order.
template <typename F>
void for_each_point(std::uint32_t num_vars, std::uint32_t q, F&& fn) {
  std::vector<std::uint32_t> coords(num_vars, 0);
  while (true) {
    fn(const_cast<const std::vector<std::uint32_t>&>(coords));
    std::size_t i = 0;
    while (i < coords.size() && ++coords[i] == q) coords[i++] = 0;
    if (i == coords.size()) break;
  }
}

}  // namespace eglab::poly
