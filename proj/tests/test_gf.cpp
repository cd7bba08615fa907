#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <stdexcept>

#include "eglab/gf.hpp"

using namespace eglab::gf;

TEST_CASE("field axioms hold exhaustively for small prime moduli") {
  for (std::uint32_t q : {2u, 3u, 5u, 7u}) {
    for (std::uint32_t a = 0; a < q; ++a) {
      FieldElement fa(a, q);
      CHECK((fa + FieldElement(0, q)).value() == a);
      CHECK((fa * FieldElement(1, q)).value() == a);
      CHECK((fa + (-fa)).value() == 0);
      if (a != 0) CHECK((fa * fa.inverse()).value() == 1);
      for (std::uint32_t b = 0; b < q; ++b) {
        FieldElement fb(b, q);
        CHECK((fa + fb) == (fb + fa));
        CHECK((fa * fb) == (fb * fa));
        for (std::uint32_t c = 0; c < q; ++c) {
          FieldElement fc(c, q);
          CHECK(((fa + fb) + fc) == (fa + (fb + fc)));
          CHECK(((fa * fb) * fc) == (fa * (fb * fc)));
          CHECK((fa * (fb + fc)) == (fa * fb + fa * fc));
        }
      }
    }
  }
}

TEST_CASE("hand-checked arithmetic values") {
  CHECK((FieldElement(5, 7) + FieldElement(4, 7)).value() == 2);
  CHECK(FieldElement(2, 7).inverse().value() == 4);  // 2*4 = 8 = 1 mod 7
  CHECK(FieldElement(3, 5).pow(3).value() == 2);     // 27 mod 5
  CHECK((-FieldElement(0, 5)).value() == 0);
}

TEST_CASE("inverse is an involution away from zero") {
  for (std::uint32_t q : {2u, 3u, 5u, 7u, 11u, 101u}) {
    for (std::uint32_t a = 1; a < q; ++a) {
      FieldElement fa(a, q);
      CHECK(fa.inverse().inverse() == fa);
    }
  }
  CHECK_THROWS_AS(FieldElement(0, 7).inverse(), std::domain_error);
}

TEST_CASE("modulus validation: primes below 2^31 only") {
  CHECK_THROWS_AS(FieldElement(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(FieldElement(1, 1), std::invalid_argument);
  CHECK_THROWS_AS(FieldElement(1, 6), std::invalid_argument);
  CHECK_THROWS_AS(FieldElement(1, 9), std::invalid_argument);   // prime power
  CHECK_THROWS_AS(FieldElement(1, 49), std::invalid_argument);  // prime power
  CHECK_THROWS_AS(FieldElement(1, std::uint64_t{1} << 31), std::invalid_argument);
  CHECK_NOTHROW(FieldElement(1, 2147483647ull));  // 2^31 - 1 is prime
  CHECK(FieldElement(2147483650ull, 2147483647ull).value() == 3);
}

TEST_CASE("mixed moduli are rejected") {
  FieldElement a(1, 5), b(1, 7);
  CHECK_THROWS_AS(a + b, std::invalid_argument);
  CHECK_THROWS_AS(a * b, std::invalid_argument);
  CHECK_THROWS_AS(a - b, std::invalid_argument);
}

TEST_CASE("is_prime agrees with trial division up to 10000") {
  auto slow = [](std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t d = 2; d * d <= n; ++d)
      if (n % d == 0) return false;
    return true;
  };
  for (std::uint64_t n = 0; n < 10000; ++n) CHECK(is_prime(n) == slow(n));
}

TEST_CASE("raw helpers match FieldElement over F_7") {
  const std::uint32_t q = 7;
  for (std::uint32_t a = 0; a < q; ++a)
    for (std::uint32_t b = 0; b < q; ++b) {
      CHECK(add_mod(a, b, q) == (FieldElement(a, q) + FieldElement(b, q)).value());
      CHECK(sub_mod(a, b, q) == (FieldElement(a, q) - FieldElement(b, q)).value());
      CHECK(mul_mod(a, b, q) == (FieldElement(a, q) * FieldElement(b, q)).value());
      CHECK(pow_mod(a, b, q) == FieldElement(a, q).pow(b).value());
    }
}

TEST_CASE("linear independence: hand cases") {
  FieldVector e1({1, 0, 0}, 5), e2({0, 1, 0}, 5), z({0, 0, 0}, 5);
  FieldVector v({2, 3, 1}, 5);
  CHECK(linearly_independent(e1, e2));
  CHECK_FALSE(linearly_independent(v, v.scaled(FieldElement(2, 5))));
  CHECK_FALSE(linearly_independent(z, v));
  CHECK_FALSE(linearly_independent(v, z));
  CHECK_THROWS_AS(linearly_independent(e1, FieldVector({1, 0, 0}, 7)),
                  std::invalid_argument);
}

// Exhaustive over F_3^2 x F_3^2: symmetric, and matches the 2x2 determinant.
TEST_CASE("linear independence: exhaustive m=2 q=3 vs determinant oracle") {
  const std::uint32_t q = 3;
  for (std::uint32_t a = 0; a < q * q; ++a)
    for (std::uint32_t b = 0; b < q * q; ++b) {
      FieldVector y1({a % q, a / q}, q), y2({b % q, b / q}, q);
      bool det_nonzero =
          sub_mod(mul_mod(y1.raw()[0], y2.raw()[1], q),
                  mul_mod(y1.raw()[1], y2.raw()[0], q), q) != 0;
      CHECK(linearly_independent(y1, y2) == det_nonzero);
      CHECK(linearly_independent(y1, y2) == linearly_independent(y2, y1));
    }
}

TEST_CASE("rref produces identity-led canonical rows") {
  std::vector<std::vector<std::uint32_t>> rows = {{2, 4, 1}, {1, 2, 0}};
  auto pivots = rref(rows, 5);
  REQUIRE(pivots == std::vector<std::size_t>{0, 2});
  CHECK(rows[0] == std::vector<std::uint32_t>{1, 2, 0});
  CHECK(rows[1] == std::vector<std::uint32_t>{0, 0, 1});

  std::vector<std::vector<std::uint32_t>> dep = {{1, 2}, {2, 4}};
  CHECK(rref(dep, 5).size() == 1);
}
