#pragma once
#include <cstdint>
#include <string>

#include <gmpxx.h>

#include "knotcord/errors.hpp"

namespace knotcord {

// Exact rational coefficients.
struct RationalField {
  using Elem = mpq_class;
  Elem zero() const { return Elem(0); }
  Elem one() const { return Elem(1); }
  Elem from_int(long v) const { return Elem(v); }
  bool is_zero(const Elem& a) const { return sgn(a) == 0; }
  Elem add(const Elem& a, const Elem& b) const { return a + b; }
  Elem sub(const Elem& a, const Elem& b) const { return a - b; }
  Elem mul(const Elem& a, const Elem& b) const { return a * b; }
  Elem neg(const Elem& a) const { return -a; }
  Elem inv(const Elem& a) const { return Elem(1) / a; }
  std::string str(const Elem& a) const { return a.get_str(); }
};

// Integers mod a prime, the modulus carried per instance.
struct PrimeField {
  std::uint64_t p;

  explicit PrimeField(std::uint64_t prime) : p(prime) {
    if (prime < 2 || prime > (1ull << 31))
      throw MalformedSyntax("field modulus out of range");
    for (std::uint64_t d = 2; d * d <= prime; ++d)
      if (prime % d == 0)
        throw MalformedSyntax("field modulus must be prime");
  }

  using Elem = std::uint64_t;
  Elem zero() const { return 0; }
  Elem one() const { return 1 % p; }
  Elem from_int(long v) const {
    long r = v % static_cast<long>(p);
    if (r < 0) r += static_cast<long>(p);
    return static_cast<Elem>(r);
  }
  bool is_zero(Elem a) const { return a == 0; }
  Elem add(Elem a, Elem b) const { return (a + b) % p; }
  Elem sub(Elem a, Elem b) const { return (a + p - b) % p; }
  Elem mul(Elem a, Elem b) const { return a * b % p; }
  Elem neg(Elem a) const { return (p - a) % p; }
  Elem inv(Elem a) const {
    // extended Euclid; a must be nonzero mod p
    std::int64_t t = 0, nt = 1, r = static_cast<std::int64_t>(p),
                 nr = static_cast<std::int64_t>(a);
    while (nr != 0) {
      std::int64_t q = r / nr;
      std::int64_t tmp = t - q * nt;
      t = nt;
      nt = tmp;
      tmp = r - q * nr;
      r = nr;
      nr = tmp;
    }
    if (r != 1) throw InternalInvariantViolation("inverse of zero requested");
    if (t < 0) t += static_cast<std::int64_t>(p);
    return static_cast<Elem>(t);
  }
  std::string str(Elem a) const { return std::to_string(a); }
};

}  // namespace knotcord
