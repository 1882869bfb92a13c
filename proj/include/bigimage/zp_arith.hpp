#pragma once

// Exact arithmetic in Z/p^m and its unit group.
//
// Every residue is stored as a canonical representative in [0, p^m).
// Products go through a 128-bit intermediate, so p^m is capped at 2^62.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>

namespace bigimage {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

bool is_prime(u64 n);

/// a^e mod n for n < 2^63.
u64 powmod(u64 a, u64 e, u64 n);

/// Smallest positive primitive root mod an odd prime p. Cached per p.
u64 primitive_root(u64 p);

/// The ring Z/p^m for an odd prime p.
class Modulus {
 public:
  static constexpr u64 kMaxModulus = u64{1} << 62;

  Modulus(u64 p, unsigned level);

  u64 p() const { return p_; }
  unsigned level() const { return level_; }
  u64 value() const { return pm_; }

  Modulus at_level(unsigned level) const { return Modulus(p_, level); }

  u64 reduce(u64 x) const { return x % pm_; }
  u64 reduce_signed(i64 x) const;
  u64 add(u64 a, u64 b) const {
    u64 s = a + b;
    return s >= pm_ ? s - pm_ : s;
  }
  u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + pm_ - b; }
  u64 neg(u64 a) const { return a == 0 ? 0 : pm_ - a; }
  u64 mul(u64 a, u64 b) const { return static_cast<u64>(u128(a) * b % pm_); }
  u64 pow(u64 a, u64 e) const;
  /// Raises a to a signed exponent; negative exponents need a unit base.
  u64 pow_signed(u64 a, i64 e) const;
  bool is_unit(u64 a) const { return a % p_ != 0; }
  /// Inverse of a unit. Throws std::domain_error on non-units.
  u64 inv(u64 a) const;
  /// p-adic valuation of a residue; level() for zero.
  unsigned valuation(u64 a) const;
  /// p^k for k <= level().
  u64 prime_power(unsigned k) const;

  friend bool operator==(const Modulus& a, const Modulus& b) {
    return a.p_ == b.p_ && a.level_ == b.level_;
  }

 private:
  u64 p_;
  unsigned level_;
  u64 pm_;
};

class RingElem {
 public:
  RingElem(u64 value, const Modulus& mod) : value_(mod.reduce(value)), mod_(mod) {}
  static RingElem from_signed(i64 value, const Modulus& mod) {
    return RingElem(mod.reduce_signed(value), mod);
  }

  u64 value() const { return value_; }
  const Modulus& modulus() const { return mod_; }
  bool is_unit() const { return mod_.is_unit(value_); }

  /// Image under Z/p^m -> Z/p^k.
  RingElem reduce_to(unsigned level) const;

  friend RingElem operator+(const RingElem& a, const RingElem& b);
  friend RingElem operator-(const RingElem& a, const RingElem& b);
  friend RingElem operator*(const RingElem& a, const RingElem& b);
  friend RingElem operator-(const RingElem& a) { return RingElem(a.mod_.neg(a.value_), a.mod_); }
  friend bool operator==(const RingElem& a, const RingElem& b) {
    return a.mod_ == b.mod_ && a.value_ == b.value_;
  }

 private:
  u64 value_;
  Modulus mod_;
};

std::ostream& operator<<(std::ostream& os, const RingElem& x);

/// x^e by square-and-multiply. Negative e requires x to be a unit.
RingElem pow(const RingElem& x, i64 e);

/// Coordinates of a unit u = teichmuller(g)^teich_exponent * (1+p)^one_unit_log,
/// g the smallest primitive root mod p.
struct UnitDecomposition {
  u64 teich_exponent = 0;  // mod p-1
  u64 one_unit_log = 0;    // mod p^(m-1)

  friend bool operator==(const UnitDecomposition&, const UnitDecomposition&) = default;
};

class UnitElem {
 public:
  /// Throws std::domain_error when x is not a unit.
  explicit UnitElem(const RingElem& x);
  UnitElem(u64 value, const Modulus& mod) : UnitElem(RingElem(value, mod)) {}

  const RingElem& elem() const { return elem_; }
  u64 value() const { return elem_.value(); }
  const Modulus& modulus() const { return elem_.modulus(); }
  const UnitDecomposition& decomposition() const { return decomposition_; }

  friend UnitElem operator*(const UnitElem& a, const UnitElem& b) {
    return UnitElem(a.elem_ * b.elem_);
  }
  friend bool operator==(const UnitElem& a, const UnitElem& b) { return a.elem_ == b.elem_; }

 private:
  RingElem elem_;
  UnitDecomposition decomposition_;
};

UnitElem inverse(const UnitElem& x);

/// Teichmuller lift of a nonzero residue a mod p to Z/p^m, by Hensel lifting.
UnitElem teichmuller(u64 a, const Modulus& target);
/// Raw residue of the Teichmuller lift.
u64 teichmuller_value(u64 a, const Modulus& target);

UnitDecomposition unit_decompose(const UnitElem& u);
/// Inverse of unit_decompose.
UnitElem unit_recompose(const UnitDecomposition& d, const Modulus& mod);

/// log_{1+p} of a one-unit (u = 1 mod p), as a residue mod p^(m-1).
u64 one_unit_log(u64 u, const Modulus& mod);

/// Discrete log of a nonzero residue mod p to base g (baby-step giant-step).
u64 discrete_log_mod_p(u64 a, u64 g, u64 p);

}  // namespace bigimage
