#include "bigimage/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

namespace bigimage {

namespace {

// NTT prime 29 * 2^57 + 1 with primitive root 3.
constexpr u64 kNttPrime = 4179340454199820289ULL;
constexpr u64 kNttRoot = 3;

u64 mulq(u64 a, u64 b) { return static_cast<u64>(u128(a) * b % kNttPrime); }

void ntt(std::vector<u64>& a, bool invert) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    u64 w = powmod(kNttRoot, (kNttPrime - 1) / len, kNttPrime);
    if (invert) w = powmod(w, kNttPrime - 2, kNttPrime);
    std::vector<u64> roots(len / 2);
    roots[0] = 1;
    for (std::size_t k = 1; k < len / 2; ++k) roots[k] = mulq(roots[k - 1], w);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const u64 u = a[i + k];
        const u64 v = mulq(a[i + k + len / 2], roots[k]);
        a[i + k] = u + v >= kNttPrime ? u + v - kNttPrime : u + v;
        a[i + k + len / 2] = u >= v ? u - v : u + kNttPrime - v;
      }
    }
  }
  if (invert) {
    const u64 inv_n = powmod(n % kNttPrime, kNttPrime - 2, kNttPrime);
    for (auto& x : a) x = mulq(x, inv_n);
  }
}

// Product of two series mod p, truncated to `limit` terms. Exact as long as
// min(len) * (p-1)^2 < kNttPrime, which the caller guarantees.
std::vector<u64> multiply_mod_p(const std::vector<u64>& a, const std::vector<u64>& b, u64 p, std::size_t limit) {
  const std::size_t need = a.size() + b.size() - 1;
  std::size_t size = 1;
  while (size < need) size <<= 1;
  std::vector<u64> fa(a), fb(b);
  fa.resize(size, 0);
  fb.resize(size, 0);
  ntt(fa, false);
  ntt(fb, false);
  for (std::size_t i = 0; i < size; ++i) fa[i] = mulq(fa[i], fb[i]);
  ntt(fa, true);
  fa.resize(std::min(limit, need));
  for (auto& x : fa) x %= p;
  return fa;
}

// Inverse of a power series with f[0] a unit mod p, to `len` terms.
std::vector<u64> series_inverse(const std::vector<u64>& f, u64 p, std::size_t len) {
  std::vector<u64> g{powmod(f[0], p - 2, p)};
  std::size_t have = 1;
  while (have < len) {
    const std::size_t next = std::min(2 * have, len);
    std::vector<u64> head(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(std::min(next, f.size())));
    std::vector<u64> t = multiply_mod_p(head, g, p, next);
    for (auto& x : t) x = (p - x) % p;
    t[0] = (t[0] + 2) % p;
    g = multiply_mod_p(g, t, p, next);
    have = next;
  }
  g.resize(len, 0);
  return g;
}

struct Factorials {
  std::vector<u64> fact, inv_fact;
  Factorials(u64 p, std::size_t upto) : fact(upto + 1), inv_fact(upto + 1) {
    fact[0] = 1;
    for (std::size_t i = 1; i <= upto; ++i) fact[i] = fact[i - 1] * (i % p) % p;
    inv_fact[upto] = powmod(fact[upto], p - 2, p);
    for (std::size_t i = upto; i > 0; --i) inv_fact[i - 1] = inv_fact[i] * (i % p) % p;
  }
};

void require_odd_prime_at_least_5(u64 p, const char* who) {
  if (p < 5 || !is_prime(p)) throw std::invalid_argument(std::string(who) + ": p must be a prime >= 5");
}

}  // namespace

u64 BernoulliTable::at(u64 k) const {
  if (k + 3 > p_) throw std::out_of_range("BernoulliTable::at: index above p-3");
  if (k == 1) return (p_ - powmod(2, p_ - 2, p_)) % p_;
  if (k % 2 == 1) return 0;
  return even_[k / 2];
}

BernoulliTable bernoulli_all_mod_p(u64 p, const Budget& budget) {
  require_odd_prime_at_least_5(p, "bernoulli_all_mod_p");
  if (p > budget.max_prime)
    throw BudgetExceeded("bernoulli_all_mod_p: p = " + std::to_string(p) + " exceeds the prime budget " +
                         std::to_string(budget.max_prime));
  const std::size_t terms = (p - 3) / 2 + 1;  // B_0, B_2, ..., B_(p-3)
  if (u128(terms) * (p - 1) * (p - 1) >= kNttPrime)
    throw BudgetExceeded("bernoulli_all_mod_p: p too large for exact NTT convolution");
  if (budget.expired()) throw BudgetExceeded("bernoulli_all_mod_p: time budget exhausted");

  const Factorials f(p, p - 2);
  // S(y) = sum y^j / (4^j (2j+1)!), C(y) = sum y^j / (4^j (2j)!).
  const u64 inv4 = powmod(4, p - 2, p);
  std::vector<u64> sinh_series(terms), cosh_series(terms);
  u64 scale = 1;
  for (std::size_t j = 0; j < terms; ++j) {
    sinh_series[j] = scale * f.inv_fact[2 * j + 1] % p;
    cosh_series[j] = scale * f.inv_fact[2 * j] % p;
    scale = scale * inv4 % p;
  }
  const std::vector<u64> quotient = multiply_mod_p(cosh_series, series_inverse(sinh_series, p, terms), p, terms);
  std::vector<u64> even(terms);
  for (std::size_t k = 0; k < terms; ++k) even[k] = quotient[k] * f.fact[2 * k] % p;
  return BernoulliTable(p, std::move(even));
}

BernoulliTable bernoulli_recurrence_mod_p(u64 p) {
  require_odd_prime_at_least_5(p, "bernoulli_recurrence_mod_p");
  const Factorials f(p, p - 2);
  auto binom = [&](std::size_t n, std::size_t k) { return f.fact[n] * f.inv_fact[k] % p * f.inv_fact[n - k] % p; };
  const u64 b1 = (p - powmod(2, p - 2, p)) % p;
  std::vector<u64> even{1};
  for (std::size_t m = 2; m + 3 <= p; m += 2) {
    // B_m = -1/(m+1) * sum_{j<m} C(m+1, j) B_j; odd j >= 3 vanish.
    u64 acc = (1 + binom(m + 1, 1) * b1) % p;
    for (std::size_t j = 2; j < m; j += 2) acc = (acc + binom(m + 1, j) * even[j / 2]) % p;
    const u64 inv = powmod((m + 1) % p, p - 2, p);
    even.push_back((p - acc * inv % p) % p);
  }
  return BernoulliTable(p, std::move(even));
}

std::vector<u64> irregular_indices(u64 p, const Budget& budget) {
  if (p == 3) return {};
  const BernoulliTable table = bernoulli_all_mod_p(p, budget);
  std::vector<u64> out;
  for (std::size_t j = 1; j < table.even().size(); ++j)
    if (table.even()[j] == 0) out.push_back(2 * j);
  return out;
}

std::string to_string(Assumption a) {
  switch (a) {
    case Assumption::Vandiver:
      return "vandiver";
  }
  return "unknown";
}

std::string to_string(EigenspaceKind k) {
  switch (k) {
    case EigenspaceKind::ZeroCertified:
      return "zero(certified)";
    case EigenspaceKind::NonzeroCertified:
      return "nonzero(certified)";
    case EigenspaceKind::ZeroAssumedVandiver:
      return "zero(assumed:vandiver)";
  }
  return "unknown";
}

IrregularityProfile make_profile(u64 p, std::vector<u64> indices) {
  if (p < 3 || !is_prime(p)) throw std::invalid_argument("make_profile: p must be an odd prime");
  for (u64 k : indices)
    if (k % 2 != 0 || k < 2 || k + 3 > p) throw std::invalid_argument("make_profile: irregular index out of range");
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  IrregularityProfile profile;
  profile.p = p;
  profile.e_p = indices.size();
  profile.irregular_indices = std::move(indices);
  profile.assumptions = {Assumption::Vandiver};
  return profile;
}

IrregularityProfile make_profile(u64 p, const Budget& budget) { return make_profile(p, irregular_indices(p, budget)); }

EigenspaceVerdict eigenspace_verdict(u64 p, u64 i, const IrregularityProfile& profile) {
  if (profile.p != p) throw std::invalid_argument("eigenspace_verdict: profile is for a different prime");
  if (i > p - 2) throw std::out_of_range("eigenspace_verdict: index outside [0, p-2]");
  if (i == 0 || i == 1) return {EigenspaceKind::ZeroCertified, i, std::nullopt};
  if (i % 2 == 0) return {EigenspaceKind::ZeroAssumedVandiver, i, std::nullopt};
  const u64 companion = p - i;
  const bool hit = std::binary_search(profile.irregular_indices.begin(), profile.irregular_indices.end(), companion);
  return {hit ? EigenspaceKind::NonzeroCertified : EigenspaceKind::ZeroCertified, i, companion};
}

RegularityIndex index_of_regularity(u64 p, const Budget& budget) {
  const auto profile = make_profile(p, budget);
  return {profile.e_p, profile.assumptions};
}

double expected_density(unsigned r) {
  double d = std::exp(-0.5);
  for (unsigned k = 1; k <= r; ++k) d /= 2.0 * k;
  return d;
}

std::vector<u64> primes_in_range(u64 lo, u64 hi) {
  std::vector<u64> out;
  if (hi <= lo) return out;
  std::vector<bool> composite(hi, false);
  for (u64 i = 2; i * i < hi; ++i)
    if (!composite[i])
      for (u64 j = i * i; j < hi; j += i) composite[j] = true;
  for (u64 n = std::max<u64>(lo, 2); n < hi; ++n)
    if (!composite[n]) out.push_back(n);
  return out;
}

ScanStats scan_range(u64 lo, u64 hi, const Budget& budget, RegularityCache* cache, unsigned threads) {
  if (lo < 5 || lo >= hi) throw std::invalid_argument("scan_range: need 5 <= lo < hi");
  const std::vector<u64> primes = primes_in_range(lo, hi);
  std::vector<std::optional<std::vector<u64>>> results(primes.size());
  for (std::size_t i = 0; i < primes.size(); ++i) {
    if (cache) {
      if (auto it = cache->find(primes[i]); it != cache->end()) results[i] = it->second;
    }
  }

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  auto worker = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < primes.size(); i += stride) {
      if (results[i]) continue;
      if (primes[i] > budget.max_prime || budget.expired()) return;
      try {
        results[i] = irregular_indices(primes[i], budget);
      } catch (const BudgetExceeded&) {
        return;
      }
    }
  };
  std::vector<std::future<void>> jobs;
  for (unsigned t = 0; t < threads; ++t) jobs.push_back(std::async(std::launch::async, worker, t, threads));
  for (auto& j : jobs) j.get();

  ScanStats stats;
  stats.lo = lo;
  stats.hi = hi;
  stats.scanned_below = hi;
  u64 regular = 0;
  for (std::size_t i = 0; i < primes.size(); ++i) {
    if (!results[i]) {
      stats.partial = true;
      stats.scanned_below = primes[i];
      break;
    }
    const auto& idx = *results[i];
    if (cache) cache->emplace(primes[i], idx);
    ++stats.primes_scanned;
    if (stats.counts.size() <= idx.size()) stats.counts.resize(idx.size() + 1, 0);
    ++stats.counts[idx.size()];
    if (idx.empty())
      ++regular;
    else
      stats.irregular.emplace(primes[i], idx);
  }
  if (stats.counts.empty()) stats.counts.push_back(0);
  for (unsigned r = 0; r < stats.counts.size(); ++r) stats.expected.push_back(expected_density(r));
  stats.regular_density =
      stats.primes_scanned == 0 ? 0.0 : static_cast<double>(regular) / static_cast<double>(stats.primes_scanned);
  return stats;
}

RegularityCache load_cache(const std::filesystem::path& path) {
  RegularityCache cache;
  std::ifstream in(path);
  if (!in) return cache;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("cache " + path.string() + ":" + std::to_string(lineno) + ": missing ':'");
    const u64 p = std::stoull(line.substr(0, colon));
    std::vector<u64> indices;
    std::stringstream rest(line.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      const auto first = item.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      indices.push_back(std::stoull(item.substr(first)));
    }
    cache[p] = std::move(indices);
  }
  return cache;
}

void save_cache(const std::filesystem::path& path, const RegularityCache& cache) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write cache " + path.string());
  for (const auto& [p, indices] : cache) {
    out << p << ":";
    for (std::size_t i = 0; i < indices.size(); ++i) out << (i ? "," : " ") << indices[i];
    out << "\n";
  }
}

}  // namespace bigimage
