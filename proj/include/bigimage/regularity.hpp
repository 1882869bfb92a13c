#pragma once

// Bernoulli numbers mod p, irregular indices, the class-group eigenspace
// oracle and range statistics.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bigimage/zp_arith.hpp"

namespace bigimage {

/// Largest prime the NTT kernel accepts by default. The convolution is exact
/// while (p-1)/2 * (p-1)^2 stays below the 62-bit NTT prime.
inline constexpr u64 kDefaultMaxPrime = u64{1} << 20;

struct Budget {
  u64 max_prime = kDefaultMaxPrime;
  std::optional<std::chrono::steady_clock::time_point> deadline;

  static Budget with_time_limit(std::chrono::milliseconds limit) {
    Budget b;
    b.deadline = std::chrono::steady_clock::now() + limit;
    return b;
  }
  bool expired() const { return deadline && std::chrono::steady_clock::now() >= *deadline; }
};

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// B_k mod p for 0 <= k <= p-3. Odd k >= 3 are zero; B_1 = -1/2.
class BernoulliTable {
 public:
  BernoulliTable(u64 p, std::vector<u64> even) : p_(p), even_(std::move(even)) {}
  u64 p() const { return p_; }
  u64 at(u64 k) const;
  /// even()[j] = B_(2j) mod p.
  const std::vector<u64>& even() const { return even_; }

  friend bool operator==(const BernoulliTable&, const BernoulliTable&) = default;

 private:
  u64 p_;
  std::vector<u64> even_;
};

/// Fast kernel: power series x/2 coth(x/2) = C(y)/S(y), y = x^2, inverted by
/// Newton iteration with NTT products. Throws BudgetExceeded past the budget.
BernoulliTable bernoulli_all_mod_p(u64 p, const Budget& budget = {});

/// O(p^2) reference: sum_{j<=m} C(m+1, j) B_j = 0 solved mod p.
BernoulliTable bernoulli_recurrence_mod_p(u64 p);

/// Even k in [2, p-3] with B_k = 0 mod p.
std::vector<u64> irregular_indices(u64 p, const Budget& budget = {});

enum class Assumption { Vandiver };
std::string to_string(Assumption a);

struct IrregularityProfile {
  u64 p = 0;
  std::vector<u64> irregular_indices;
  u64 e_p = 0;
  std::vector<Assumption> assumptions;
};

IrregularityProfile make_profile(u64 p, const Budget& budget = {});
/// Profile from already-known irregular indices (e.g. the cache file).
IrregularityProfile make_profile(u64 p, std::vector<u64> indices);

enum class EigenspaceKind { ZeroCertified, NonzeroCertified, ZeroAssumedVandiver };
std::string to_string(EigenspaceKind k);

struct EigenspaceVerdict {
  EigenspaceKind kind;
  u64 index;                          // i in [0, p-2]
  std::optional<u64> bernoulli_index; // p - i for odd i != 1

  bool is_zero() const { return kind != EigenspaceKind::NonzeroCertified; }
};

/// Verdict for the chi^i eigenspace of the mod-p class group of Q(mu_p).
/// Odd i != 1 is decided by p | B_(p-i); i = 0, 1 are zero unconditionally;
/// even i != 0 is assumed zero (Vandiver).
EigenspaceVerdict eigenspace_verdict(u64 p, u64 i, const IrregularityProfile& profile);

struct RegularityIndex {
  u64 e_p;
  std::vector<Assumption> assumptions;
};
RegularityIndex index_of_regularity(u64 p, const Budget& budget = {});

/// e^(-1/2) / (2^r r!).
double expected_density(unsigned r);

struct ScanStats {
  u64 lo = 0;
  u64 hi = 0;
  u64 primes_scanned = 0;
  std::vector<u64> counts;  // counts[r] = primes with e_p = r
  double regular_density = 0.0;
  std::vector<double> expected;  // expected[r] for each r in counts
  std::map<u64, std::vector<u64>> irregular;  // irregular primes and their indices
  bool partial = false;
  u64 scanned_below = 0;  // every prime in [lo, scanned_below) was scanned
};

using RegularityCache = std::map<u64, std::vector<u64>>;

/// Scans primes in [lo, hi). Primes are processed in parallel; results merge
/// as the longest completed prefix, so a budget cut yields a prefix of the
/// unbounded scan. Cached primes are reused and new ones added to `cache`.
ScanStats scan_range(u64 lo, u64 hi, const Budget& budget = {}, RegularityCache* cache = nullptr,
                     unsigned threads = 0);

/// Cache file: one line per prime, "p: k1,k2,..." (empty list allowed).
RegularityCache load_cache(const std::filesystem::path& path);
void save_cache(const std::filesystem::path& path, const RegularityCache& cache);

std::vector<u64> primes_in_range(u64 lo, u64 hi);

}  // namespace bigimage
