#include "bigimage/zp_arith.hpp"

#include <cmath>
#include <mutex>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

namespace bigimage {

bool is_prime(u64 n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (u64 d = 3; d * d <= n; d += 2)
    if (n % d == 0) return false;
  return true;
}

u64 powmod(u64 a, u64 e, u64 n) {
  u64 result = 1 % n;
  a %= n;
  while (e > 0) {
    if (e & 1) result = static_cast<u64>(u128(result) * a % n);
    a = static_cast<u64>(u128(a) * a % n);
    e >>= 1;
  }
  return result;
}

namespace {

std::vector<u64> distinct_prime_factors(u64 n) {
  std::vector<u64> out;
  for (u64 d = 2; d * d <= n; ++d) {
    if (n % d == 0) {
      out.push_back(d);
      while (n % d == 0) n /= d;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

u64 compute_primitive_root(u64 p) {
  if (p == 2) return 1;
  const auto factors = distinct_prime_factors(p - 1);
  for (u64 g = 2; g < p; ++g) {
    bool ok = true;
    for (u64 q : factors) {
      if (powmod(g, (p - 1) / q, p) == 1) {
        ok = false;
        break;
      }
    }
    if (ok) return g;
  }
  throw std::logic_error("no primitive root found");
}

}  // namespace

u64 primitive_root(u64 p) {
  static std::mutex mu;
  static std::unordered_map<u64, u64> cache;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(p); it != cache.end()) return it->second;
  }
  if (!is_prime(p)) throw std::invalid_argument("primitive_root: " + std::to_string(p) + " is not prime");
  const u64 g = compute_primitive_root(p);
  std::lock_guard lock(mu);
  cache.emplace(p, g);
  return g;
}

Modulus::Modulus(u64 p, unsigned level) : p_(p), level_(level), pm_(1) {
  if (p < 3 || p % 2 == 0 || !is_prime(p))
    throw std::invalid_argument("Modulus: p = " + std::to_string(p) + " is not an odd prime");
  if (level < 1) throw std::invalid_argument("Modulus: level must be >= 1");
  for (unsigned i = 0; i < level; ++i) {
    if (pm_ > kMaxModulus / p)
      throw std::overflow_error("Modulus: " + std::to_string(p) + "^" + std::to_string(level) +
                                " exceeds the native width bound 2^62");
    pm_ *= p;
  }
}

u64 Modulus::reduce_signed(i64 x) const {
  const i64 m = static_cast<i64>(pm_);
  i64 r = x % m;
  if (r < 0) r += m;
  return static_cast<u64>(r);
}

u64 Modulus::pow(u64 a, u64 e) const { return powmod(a, e, pm_); }

u64 Modulus::pow_signed(u64 a, i64 e) const {
  if (e >= 0) return pow(a, static_cast<u64>(e));
  // -(e) overflows for INT64_MIN; go through unsigned negation.
  return pow(inv(a), static_cast<u64>(0) - static_cast<u64>(e));
}

u64 Modulus::inv(u64 a) const {
  a %= pm_;
  if (!is_unit(a)) throw std::domain_error("Modulus::inv: " + std::to_string(a) + " is not a unit");
  // Extended Euclid on signed 128-bit to avoid overflow.
  __int128 t = 0, new_t = 1;
  __int128 r = pm_, new_r = a;
  while (new_r != 0) {
    const __int128 q = r / new_r;
    const __int128 tmp_t = t - q * new_t;
    t = new_t;
    new_t = tmp_t;
    const __int128 tmp_r = r - q * new_r;
    r = new_r;
    new_r = tmp_r;
  }
  if (t < 0) t += pm_;
  return static_cast<u64>(t);
}

unsigned Modulus::valuation(u64 a) const {
  a %= pm_;
  if (a == 0) return level_;
  unsigned v = 0;
  while (a % p_ == 0) {
    a /= p_;
    ++v;
  }
  return v;
}

u64 Modulus::prime_power(unsigned k) const {
  if (k > level_) throw std::out_of_range("Modulus::prime_power: exponent above level");
  u64 r = 1;
  for (unsigned i = 0; i < k; ++i) r *= p_;
  return r;
}

RingElem RingElem::reduce_to(unsigned level) const {
  if (level > mod_.level()) throw std::invalid_argument("RingElem::reduce_to: cannot raise the level");
  const Modulus target = mod_.at_level(level);
  return RingElem(value_ % target.value(), target);
}

namespace {
void require_same(const RingElem& a, const RingElem& b) {
  if (!(a.modulus() == b.modulus())) throw std::invalid_argument("RingElem: modulus mismatch");
}
}  // namespace

RingElem operator+(const RingElem& a, const RingElem& b) {
  require_same(a, b);
  return RingElem(a.mod_.add(a.value_, b.value_), a.mod_);
}

RingElem operator-(const RingElem& a, const RingElem& b) {
  require_same(a, b);
  return RingElem(a.mod_.sub(a.value_, b.value_), a.mod_);
}

RingElem operator*(const RingElem& a, const RingElem& b) {
  require_same(a, b);
  return RingElem(a.mod_.mul(a.value_, b.value_), a.mod_);
}

std::ostream& operator<<(std::ostream& os, const RingElem& x) {
  return os << x.value() << " (mod " << x.modulus().p() << "^" << x.modulus().level() << ")";
}

RingElem pow(const RingElem& x, i64 e) {
  if (e < 0 && !x.is_unit()) throw std::domain_error("pow: negative exponent on a non-unit");
  return RingElem(x.modulus().pow_signed(x.value(), e), x.modulus());
}

UnitElem::UnitElem(const RingElem& x) : elem_(x) {
  if (!x.is_unit()) throw std::domain_error("UnitElem: " + std::to_string(x.value()) + " is not a unit");
  decomposition_ = unit_decompose(*this);
}

UnitElem inverse(const UnitElem& x) {
  return UnitElem(RingElem(x.modulus().inv(x.value()), x.modulus()));
}

u64 teichmuller_value(u64 a, const Modulus& target) {
  const u64 p = target.p();
  if (a % p == 0) throw std::domain_error("teichmuller: residue is divisible by p");
  // Newton iteration on f(x) = x^(p-1) - 1; f'(x) = (p-1) x^(p-2) is a unit.
  u64 x = target.reduce(a % p);
  for (unsigned precision = 1; precision < target.level(); precision *= 2) {
    const u64 f = target.sub(target.pow(x, p - 1), 1);
    const u64 df = target.mul(target.reduce(p - 1), target.pow(x, p - 2));
    x = target.sub(x, target.mul(f, target.inv(df)));
  }
  return x;
}

UnitElem teichmuller(u64 a, const Modulus& target) {
  return UnitElem(RingElem(teichmuller_value(a, target), target));
}

u64 discrete_log_mod_p(u64 a, u64 g, u64 p) {
  a %= p;
  if (a == 0) throw std::domain_error("discrete_log_mod_p: zero has no logarithm");
  const u64 order = p - 1;
  const u64 step = static_cast<u64>(std::ceil(std::sqrt(static_cast<double>(order)))) + 1;
  std::unordered_map<u64, u64> baby;
  baby.reserve(step);
  u64 cur = 1;
  for (u64 j = 0; j < step; ++j) {
    baby.emplace(cur, j);
    cur = cur * g % p;
  }
  const u64 giant = powmod(powmod(g, step, p), p - 2, p);  // g^-step
  u64 gamma = a;
  for (u64 i = 0; i <= step; ++i) {
    if (auto it = baby.find(gamma); it != baby.end()) return (i * step + it->second) % order;
    gamma = gamma * giant % p;
  }
  throw std::logic_error("discrete_log_mod_p: base is not a generator");
}

u64 one_unit_log(u64 u, const Modulus& mod) {
  const u64 p = mod.p();
  if (u % p != 1 % p) throw std::domain_error("one_unit_log: argument is not = 1 mod p");
  u64 v = mod.reduce(u);
  u64 log = 0;
  u64 digit_weight = 1;                  // p^(j-1)
  u64 base = mod.reduce(1 + p);          // (1+p)^(p^(j-1)) = 1 + p^j mod p^(j+1)
  u64 pj = p;                            // p^j
  for (unsigned j = 1; j < mod.level(); ++j) {
    const u64 digit = ((v + mod.value() - 1) % mod.value()) / pj % p;
    if (digit != 0) {
      v = mod.mul(v, mod.inv(mod.pow(base, digit)));
      log += digit * digit_weight;
    }
    digit_weight *= p;
    pj *= p;
    base = mod.pow(base, p);
  }
  return log;
}

UnitDecomposition unit_decompose(const UnitElem& u) {
  const Modulus& mod = u.modulus();
  const u64 p = mod.p();
  const u64 g = primitive_root(p);
  UnitDecomposition d;
  d.teich_exponent = discrete_log_mod_p(u.value() % p, g, p);
  const u64 omega = teichmuller_value(g, mod);
  const u64 teich_part = mod.pow(omega, d.teich_exponent);
  const u64 one_unit = mod.mul(u.value(), mod.inv(teich_part));
  d.one_unit_log = one_unit_log(one_unit, mod);
  return d;
}

UnitElem unit_recompose(const UnitDecomposition& d, const Modulus& mod) {
  const u64 omega = teichmuller_value(primitive_root(mod.p()), mod);
  const u64 v = mod.mul(mod.pow(omega, d.teich_exponent), mod.pow(mod.reduce(1 + mod.p()), d.one_unit_log));
  return UnitElem(RingElem(v, mod));
}

}  // namespace bigimage
