#include "bigimage/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace bigimage {

AdMatrix::AdMatrix(std::size_t n, const Modulus& mod) : n_(n), mod_(mod), a_(n * n, 0) {
  if (n == 0) throw std::invalid_argument("AdMatrix: size must be positive");
}

AdMatrix::AdMatrix(std::size_t n, const Modulus& mod, std::vector<u64> row_major)
    : n_(n), mod_(mod), a_(std::move(row_major)) {
  if (n == 0 || a_.size() != n * n) throw std::invalid_argument("AdMatrix: entry count is not n^2");
  for (auto& x : a_) x = mod_.reduce(x);
}

AdMatrix AdMatrix::identity(std::size_t n, const Modulus& mod) {
  AdMatrix out(n, mod);
  for (std::size_t i = 0; i < n; ++i) out.a_[i * n + i] = 1;
  return out;
}

AdMatrix AdMatrix::elementary(std::size_t n, std::size_t i, std::size_t j, const Modulus& mod) {
  if (i < 1 || j < 1 || i > n || j > n) throw std::out_of_range("AdMatrix::elementary: index out of range");
  AdMatrix out(n, mod);
  out.a_[(i - 1) * n + (j - 1)] = 1;
  return out;
}

AdMatrix AdMatrix::diagonal(const std::vector<u64>& diag, const Modulus& mod) {
  AdMatrix out(diag.size(), mod);
  for (std::size_t i = 0; i < diag.size(); ++i) out.a_[i * diag.size() + i] = mod.reduce(diag[i]);
  return out;
}

AdMatrix AdMatrix::from_signed(std::size_t n, const Modulus& mod, const std::vector<i64>& row_major) {
  std::vector<u64> entries;
  entries.reserve(row_major.size());
  for (i64 v : row_major) entries.push_back(mod.reduce_signed(v));
  return AdMatrix(n, mod, std::move(entries));
}

u64 AdMatrix::trace() const {
  u64 t = 0;
  for (std::size_t i = 0; i < n_; ++i) t = mod_.add(t, at(i, i));
  return t;
}

u64 AdMatrix::det() const {
  // Elimination over the local ring Z/p^m: pivot on an entry of minimal
  // valuation in its column, which divides every entry below it.
  std::vector<u64> a = a_;
  const std::size_t n = n_;
  u64 det = 1;
  bool negate = false;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t best = n;
    unsigned best_val = mod_.level();
    for (std::size_t r = c; r < n; ++r) {
      const unsigned v = mod_.valuation(a[r * n + c]);
      if (v < best_val) {
        best_val = v;
        best = r;
      }
    }
    if (best == n) return 0;
    if (best != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[best * n + k], a[c * n + k]);
      negate = !negate;
    }
    const u64 pivot = a[c * n + c];
    const u64 pv = mod_.prime_power(best_val);
    const u64 unit_inv = mod_.inv(pivot / pv);
    for (std::size_t r = c + 1; r < n; ++r) {
      const u64 entry = a[r * n + c];
      if (entry == 0) continue;
      const u64 factor = mod_.mul(entry / pv, unit_inv);
      for (std::size_t k = c; k < n; ++k) a[r * n + k] = mod_.sub(a[r * n + k], mod_.mul(factor, a[c * n + k]));
    }
    det = mod_.mul(det, pivot);
  }
  return negate ? mod_.neg(det) : det;
}

bool AdMatrix::is_invertible() const { return mod_.is_unit(det()); }

AdMatrix AdMatrix::inverse() const {
  const std::size_t n = n_;
  std::vector<u64> a = a_;
  AdMatrix inv = identity(n, mod_);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t sel = c;
    while (sel < n && !mod_.is_unit(a[sel * n + c])) ++sel;
    if (sel == n) throw std::domain_error("AdMatrix::inverse: matrix is singular mod p");
    if (sel != c) {
      for (std::size_t k = 0; k < n; ++k) {
        std::swap(a[sel * n + k], a[c * n + k]);
        std::swap(inv.a_[sel * n + k], inv.a_[c * n + k]);
      }
    }
    const u64 s = mod_.inv(a[c * n + c]);
    for (std::size_t k = 0; k < n; ++k) {
      a[c * n + k] = mod_.mul(a[c * n + k], s);
      inv.a_[c * n + k] = mod_.mul(inv.a_[c * n + k], s);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const u64 f = a[r * n + c];
      if (f == 0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        a[r * n + k] = mod_.sub(a[r * n + k], mod_.mul(f, a[c * n + k]));
        inv.a_[r * n + k] = mod_.sub(inv.a_[r * n + k], mod_.mul(f, inv.a_[c * n + k]));
      }
    }
  }
  return inv;
}

bool AdMatrix::is_zero() const {
  return std::all_of(a_.begin(), a_.end(), [](u64 x) { return x == 0; });
}

bool AdMatrix::is_identity() const { return *this == identity(n_, mod_); }

bool AdMatrix::is_diagonal() const {
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t c = 0; c < n_; ++c)
      if (r != c && at(r, c) != 0) return false;
  return true;
}

AdMatrix AdMatrix::reduce_to(unsigned level) const {
  if (level > mod_.level()) throw std::invalid_argument("AdMatrix::reduce_to: cannot raise the level");
  return AdMatrix(n_, mod_.at_level(level), a_);
}

AdMatrix AdMatrix::lift_to(unsigned level) const {
  if (level < mod_.level()) throw std::invalid_argument("AdMatrix::lift_to: cannot lower the level");
  return AdMatrix(n_, mod_.at_level(level), a_);
}

AdMatrix AdMatrix::divide_by_p_power(unsigned k) const {
  if (k >= mod_.level()) throw std::invalid_argument("AdMatrix::divide_by_p_power: k must be below the level");
  const u64 pk = mod_.prime_power(k);
  std::vector<u64> out(a_.size());
  for (std::size_t i = 0; i < a_.size(); ++i) {
    if (a_[i] % pk != 0) throw std::domain_error("AdMatrix::divide_by_p_power: entry not divisible");
    out[i] = a_[i] / pk;
  }
  return AdMatrix(n_, mod_.at_level(mod_.level() - k), std::move(out));
}

AdMatrix AdMatrix::times_p_power(unsigned k, unsigned level) const {
  const Modulus target = mod_.at_level(level);
  const u64 pk = k >= level ? 0 : target.prime_power(k);
  std::vector<u64> out(a_.size());
  for (std::size_t i = 0; i < a_.size(); ++i) out[i] = target.mul(target.reduce(a_[i]), pk);
  return AdMatrix(n_, target, std::move(out));
}

namespace {
void require_compatible(const AdMatrix& a, const AdMatrix& b) {
  if (a.n() != b.n()) throw std::invalid_argument("AdMatrix: shape mismatch");
  if (!(a.modulus() == b.modulus())) throw std::invalid_argument("AdMatrix: modulus mismatch");
}
}  // namespace

AdMatrix operator+(const AdMatrix& a, const AdMatrix& b) {
  require_compatible(a, b);
  AdMatrix out(a.n_, a.mod_);
  for (std::size_t i = 0; i < a.a_.size(); ++i) out.a_[i] = a.mod_.add(a.a_[i], b.a_[i]);
  return out;
}

AdMatrix operator-(const AdMatrix& a, const AdMatrix& b) {
  require_compatible(a, b);
  AdMatrix out(a.n_, a.mod_);
  for (std::size_t i = 0; i < a.a_.size(); ++i) out.a_[i] = a.mod_.sub(a.a_[i], b.a_[i]);
  return out;
}

AdMatrix operator*(const AdMatrix& a, const AdMatrix& b) {
  require_compatible(a, b);
  const std::size_t n = a.n_;
  const u64 m = a.mod_.value();
  AdMatrix out(n, a.mod_);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      u128 acc = 0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += u128(a.a_[r * n + k]) * b.a_[k * n + c];
        // Each product is < 2^124; reduce often enough to stay in range.
        if ((k & 7) == 7) acc %= m;
      }
      out.a_[r * n + c] = static_cast<u64>(acc % m);
    }
  }
  return out;
}

AdMatrix operator*(u64 s, const AdMatrix& a) {
  AdMatrix out(a.n_, a.mod_);
  const u64 sr = a.mod_.reduce(s);
  for (std::size_t i = 0; i < a.a_.size(); ++i) out.a_[i] = a.mod_.mul(sr, a.a_[i]);
  return out;
}

AdMatrix pow(const AdMatrix& x, i64 e) {
  AdMatrix base = e < 0 ? x.inverse() : x;
  u64 k = e < 0 ? static_cast<u64>(0) - static_cast<u64>(e) : static_cast<u64>(e);
  AdMatrix result = AdMatrix::identity(x.n(), x.modulus());
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k) base = base * base;
  }
  return result;
}

AdMatrix bracket(const AdMatrix& x, const AdMatrix& y) { return x * y - y * x; }

FpVector to_vector(const AdMatrix& x) {
  FpVector v(x.entries());
  const u64 p = x.modulus().p();
  for (auto& e : v) e %= p;
  return v;
}

AdMatrix from_vector(std::size_t n, u64 p, const FpVector& v) { return AdMatrix(n, Modulus(p, 1), v); }

AdMatrix EigenComponents::reassemble(const Modulus& mod) const {
  AdMatrix out = AdMatrix::diagonal(t_part, mod);
  for (const auto& [ij, coeff] : offdiag) out.set(ij.first - 1, ij.second - 1, coeff);
  return out;
}

EigenComponents eigen_decompose(const AdMatrix& x, const std::vector<i64>& ks) {
  const std::size_t n = x.n();
  if (ks.size() != n) throw std::invalid_argument("eigen_decompose: ks length differs from matrix size");
  const i64 order = static_cast<i64>(x.modulus().p() - 1);
  std::set<i64> seen;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const i64 d = ((ks[i] - ks[j]) % order + order) % order;
      if (d == 0 || !seen.insert(d).second)
        throw std::invalid_argument("eigen_decompose: difference characters are not distinct");
    }
  }
  EigenComponents out;
  for (std::size_t i = 0; i < n; ++i) {
    out.t_part.push_back(x.at(i, i));
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && x.at(i, j) != 0) out.offdiag[{i + 1, j + 1}] = x.at(i, j);
  }
  return out;
}

AdMatrix sigma_action(const AdMatrix& x, const std::vector<i64>& ks) {
  const Modulus& mod = x.modulus();
  const std::size_t n = x.n();
  if (ks.size() != n) throw std::invalid_argument("sigma_action: ks length differs from matrix size");
  const i64 order = static_cast<i64>(mod.p() - 1);
  const u64 w = teichmuller_value(primitive_root(mod.p()), mod);
  AdMatrix out(n, mod);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const i64 d = ((ks[i] - ks[j]) % order + order) % order;
      out.set(i, j, mod.mul(x.at(i, j), mod.pow(w, static_cast<u64>(d))));
    }
  }
  return out;
}

CommutatorCheck commutator_identity_check(const AdMatrix& c_lift, const AdMatrix& d_lift, unsigned l,
                                          unsigned m) {
  if (l < 1 || m < 1) throw std::invalid_argument("commutator_identity_check: levels must be >= 1");
  require_compatible(c_lift, d_lift);
  const unsigned top = l + m + 1;
  const std::size_t n = c_lift.n();
  const Modulus mod = c_lift.modulus().at_level(top);
  const AdMatrix id = AdMatrix::identity(n, mod);
  const AdMatrix a = id + c_lift.times_p_power(l, top);
  const AdMatrix b = id + d_lift.times_p_power(m, top);
  // Id + p^l X is invertible for l >= 1.
  if (!a.is_invertible() || !b.is_invertible())
    throw std::logic_error("commutator_identity_check: Id + p^k X must be invertible");
  const AdMatrix comm = a * b * a.inverse() * b.inverse();
  const AdMatrix br = bracket(c_lift.reduce_to(1), d_lift.reduce_to(1));
  const AdMatrix expected = id + br.times_p_power(l + m, top);
  return CommutatorCheck{comm == expected, comm, expected};
}

CommutatorCheck commutator_identity_check(const AdMatrix& c, const AdMatrix& d, unsigned l, unsigned m,
                                          std::mt19937_64& rng) {
  const unsigned top = l + m + 1;
  const Modulus mod = c.modulus().at_level(top);
  const u64 p = mod.p();
  std::uniform_int_distribution<u64> digits(0, mod.value() / p - 1);
  auto lift = [&](const AdMatrix& x) {
    std::vector<u64> e(x.entries().size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = x.entries()[i] % p + p * digits(rng);
    return AdMatrix(x.n(), mod, std::move(e));
  };
  const AdMatrix c_lift = lift(c);
  const AdMatrix d_lift = lift(d);
  return commutator_identity_check(c_lift, d_lift, l, m);
}

GradedFiltration::GradedFiltration(std::size_t n, u64 p, std::vector<i64> ks, unsigned max_level)
    : n_(n), p_(p), ks_(std::move(ks)) {
  if (max_level < 1) throw std::invalid_argument("GradedFiltration: max_level must be >= 1");
  if (!ks_.empty() && ks_.size() != n_) throw std::invalid_argument("GradedFiltration: ks length differs from n");
  levels_.assign(max_level, FpSubspace(p, n * n));
}

const FpSubspace& GradedFiltration::level(unsigned k) const {
  if (k < 1 || k > levels_.size()) throw std::out_of_range("GradedFiltration: level out of range");
  return levels_[k - 1];
}

FpSubspace& GradedFiltration::level(unsigned k) {
  if (k < 1 || k > levels_.size()) throw std::out_of_range("GradedFiltration: level out of range");
  return levels_[k - 1];
}

namespace {

// Scalars by which sigma multiplies the row-major coordinates of Ad mod p.
std::vector<u64> sigma_scalars(std::size_t n, u64 p, const std::vector<i64>& ks) {
  if (ks.empty()) return std::vector<u64>(n * n, 1);
  const u64 g = primitive_root(p);
  const i64 order = static_cast<i64>(p - 1);
  std::vector<u64> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = powmod(g, static_cast<u64>(((ks[i] - ks[j]) % order + order) % order), p);
  return out;
}

FpVector apply_scalars(const FpVector& v, const std::vector<u64>& s, u64 p) {
  FpVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<u64>(u128(v[i]) * s[i] % p);
  return out;
}

bool sigma_close(FpSubspace& space, const std::vector<u64>& scalars) {
  bool grew = false;
  bool changed = true;
  while (changed) {
    changed = false;
    const FpRows snapshot = space.basis();
    for (const auto& v : snapshot) changed |= space.insert(apply_scalars(v, scalars, space.p()));
    grew |= changed;
  }
  return grew;
}

}  // namespace

GradedFiltration graded_closure(const std::vector<Seed>& seeds, std::size_t n, const std::vector<i64>& ks,
                                u64 p, unsigned max_level) {
  GradedFiltration f(n, p, ks, max_level);
  for (const auto& seed : seeds) {
    if (seed.level < 1) throw std::invalid_argument("graded_closure: seed level must be >= 1");
    if (seed.level > max_level) throw std::invalid_argument("graded_closure: max_level below a seed level");
    if (seed.element.n() != n || seed.element.modulus().p() != p)
      throw std::invalid_argument("graded_closure: seed shape or prime mismatch");
    f.level(seed.level).insert(to_vector(seed.element));
  }
  const auto scalars = sigma_scalars(n, p, ks);
  bool changed = true;
  while (changed) {
    changed = false;
    for (unsigned k = 1; k <= max_level; ++k) changed |= sigma_close(f.level(k), scalars);
    for (unsigned k = 2; k <= max_level; ++k) {
      for (unsigned l = 1; l < k; ++l) {
        const unsigned m = k - l;
        if (m < l) break;  // [V_l, V_m] and [V_m, V_l] span the same space
        const FpRows left = f.level(l).basis();
        const FpRows right = f.level(m).basis();
        for (const auto& a : left) {
          const AdMatrix am = from_vector(n, p, a);
          for (const auto& b : right) changed |= f.level(k).insert(to_vector(bracket(am, from_vector(n, p, b))));
        }
      }
    }
  }
  return f;
}

bool verify_filtration(const GradedFiltration& f) {
  const std::size_t n = f.n();
  const u64 p = f.p();
  const auto scalars = sigma_scalars(n, p, f.ks());
  for (unsigned k = 1; k <= f.max_level(); ++k) {
    for (const auto& v : f.level(k).basis())
      if (!f.level(k).contains(apply_scalars(v, scalars, p))) return false;
  }
  for (unsigned l = 1; l <= f.max_level(); ++l) {
    for (unsigned m = 1; l + m <= f.max_level(); ++m) {
      for (const auto& a : f.level(l).basis()) {
        for (const auto& b : f.level(m).basis()) {
          const AdMatrix br = bracket(from_vector(n, p, a), from_vector(n, p, b));
          if (!f.level(l + m).contains(to_vector(br))) return false;
        }
      }
    }
  }
  return true;
}

std::vector<AdMatrix> sl_basis(std::size_t n, u64 p) {
  const Modulus mod(p, 1);
  std::vector<AdMatrix> out;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= n; ++j)
      if (i != j) out.push_back(AdMatrix::elementary(n, i, j, mod));
  for (std::size_t i = 1; i < n; ++i)
    out.push_back(AdMatrix::elementary(n, i, i, mod) - AdMatrix::elementary(n, i + 1, i + 1, mod));
  return out;
}

bool contains_sl(const FpSubspace& space, std::size_t n) {
  for (const auto& x : sl_basis(n, space.p()))
    if (!space.contains(to_vector(x))) return false;
  return true;
}

bool contains_sl(const GradedFiltration& f, unsigned level) { return contains_sl(f.level(level), f.n()); }

bool SubgroupClosure::contains(const AdMatrix& g) const {
  if (overflow) throw std::logic_error("SubgroupClosure::contains: closure overflowed");
  return index_.count(g.entries()) > 0;
}

SubgroupClosure subgroup_bfs(const std::vector<AdMatrix>& generators, std::size_t bound) {
  if (generators.empty()) throw std::invalid_argument("subgroup_bfs: no generators");
  SubgroupClosure out;
  out.n = generators.front().n();
  out.modulus = generators.front().modulus();
  for (const auto& g : generators) {
    if (g.n() != out.n || !(g.modulus() == out.modulus))
      throw std::invalid_argument("subgroup_bfs: generators differ in shape or modulus");
    if (!g.is_invertible()) throw std::invalid_argument("subgroup_bfs: generator is not invertible");
  }
  out.generators = generators;
  const AdMatrix id = AdMatrix::identity(out.n, out.modulus);
  out.elements.push_back(id);
  out.index_.emplace(id.entries(), 0);
  // In a finite group the monoid generated by the generators is the subgroup.
  for (std::size_t head = 0; head < out.elements.size(); ++head) {
    for (const auto& g : generators) {
      AdMatrix next = out.elements[head] * g;
      if (out.index_.count(next.entries())) continue;
      if (out.elements.size() >= bound) {
        out.overflow = true;
        return out;
      }
      out.index_.emplace(next.entries(), out.elements.size());
      out.elements.push_back(std::move(next));
    }
  }
  return out;
}

KernelVerdict congruence_kernel_verdict(const SubgroupClosure& closure, unsigned k,
                                        std::size_t enumeration_bound) {
  if (closure.overflow) throw std::invalid_argument("contains_congruence_kernel: closure overflowed");
  const Modulus& mod = closure.modulus;
  const unsigned m = mod.level();
  if (k < 1 || k >= m) throw std::invalid_argument("contains_congruence_kernel: need 1 <= k < m");
  const std::size_t n = closure.n;
  const u64 p = mod.p();
  const u64 span = mod.prime_power(m - k);
  const u64 pk = mod.prime_power(k);

  KernelVerdict verdict;
  const double order_log = static_cast<double>((m - k) * (n * n - 1));
  verdict.kernel_order = static_cast<u64>(std::llround(std::pow(static_cast<double>(p), order_log)));
  const double candidates = std::pow(static_cast<double>(span), static_cast<double>(n * n));

  if (candidates <= static_cast<double>(enumeration_bound)) {
    verdict.method = KernelMethod::Enumerated;
    std::vector<u64> digits(n * n, 0);
    bool all = true;
    const AdMatrix id = AdMatrix::identity(n, mod);
    while (true) {
      std::vector<u64> e(n * n);
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = id.entries()[i] + pk * digits[i];
      const AdMatrix g(n, mod, std::move(e));
      if (g.det() == 1) {
        if (closure.contains(g))
          ++verdict.found;
        else
          all = false;
      }
      std::size_t pos = 0;
      while (pos < digits.size() && ++digits[pos] == span) digits[pos++] = 0;
      if (pos == digits.size()) break;
    }
    verdict.contained = all;
    return verdict;
  }

  verdict.method = KernelMethod::Counted;
  for (const auto& g : closure.elements) {
    if (g.det() != 1) continue;
    if (g.reduce_to(k).is_identity()) ++verdict.found;
  }
  verdict.contained = verdict.found == verdict.kernel_order;
  return verdict;
}

bool contains_congruence_kernel(const SubgroupClosure& closure, unsigned k) {
  return congruence_kernel_verdict(closure, k).contained;
}

}  // namespace bigimage
