#pragma once

// Exponent tuples (k_1, ..., k_n) for the diagonal residual representation:
// the explicit m-sequence, difference-distinctness checks, the five-condition
// checker and tuple selection/search.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bigimage/regularity.hpp"

namespace bigimage {

/// m_j = 2^(j+1) + (j even ? 1 : 0), j = 1..n+2e.
struct MSequence {
  unsigned n = 0;
  unsigned e = 0;
  std::vector<i64> entries;
};

MSequence m_sequence(unsigned n, unsigned e);

struct SidonCollision {
  // Positions are 0-based; the colliding differences are
  // seq[first.second] - seq[first.first] and seq[second.second] - seq[second.first].
  std::pair<std::size_t, std::size_t> first;
  std::pair<std::size_t, std::size_t> second;  // equal to `first` for a zero difference
};

struct SidonResult {
  bool pass = true;
  std::optional<SidonCollision> collision;
};

/// Passes iff all ordered differences seq[j] - seq[i] (i != j) are nonzero
/// and pairwise distinct mod `modulus`. Reports the first collision in
/// lexicographic (i, j) order.
SidonResult sidon_check(const std::vector<i64>& seq, i64 modulus);

struct ConditionVerdict {
  bool pass = true;
  std::string witness;  // empty on pass
};

struct ConditionReport {
  u64 p = 0;
  std::vector<i64> ks;
  std::array<ConditionVerdict, 5> conditions;  // (1) .. (5)
  std::vector<Assumption> assumptions;          // inherited through condition (5)
  std::vector<u64> assumed_zero_indices;         // eigenspaces taken as zero under Vandiver

  bool pass() const;
  /// 1-based number of the first failing condition, 0 if all pass.
  unsigned first_failure() const;
};

/// (1) 0 < k_i < (p-1)/2; (2) k_i even for odd i and odd for even i;
/// (3) k_i - k_j != 1 mod p-1; (4) differences distinct mod p-1;
/// (5) the chi^(p - (k_i - k_j)) eigenspace is zero, for ordered i != j.
ConditionReport check_conditions(u64 p, const std::vector<i64>& ks, const IrregularityProfile& profile);

enum class SelectionStep { RegularityIndex, Boundary, Parity, Verification };
std::string to_string(SelectionStep s);

struct SelectionFailure {
  SelectionStep step;
  std::string reason;
};

struct Selection {
  std::vector<i64> ks;
  std::vector<std::size_t> positions;  // 1-based indices into the m-sequence
  std::vector<std::size_t> discarded;  // 1-based indices dropped for bad eigenspaces
  std::vector<u64> avoided_eigenspaces;
  ConditionReport report;
};

/// Builds m_sequence(n, e), discards the larger index of every pair whose
/// difference character hits a nonzero eigenspace, then picks n survivors with
/// alternating parity. The result is only returned if check_conditions passes.
std::variant<Selection, SelectionFailure> select_ks(u64 p, unsigned n, unsigned e, const IrregularityProfile& profile);

enum class SearchStrategy { Exhaustive, Randomized };

struct SearchOptions {
  SearchStrategy strategy = SearchStrategy::Exhaustive;
  u64 max_candidates = 50'000'000;  // exhaustive bound on tuples visited
  u64 seed = 0;
  u64 attempts = 100'000;  // randomized draws
};

class SearchBoundExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exhaustive mode: lexicographically first passing tuple with the parity
/// pattern of condition (2) and 0 < k_i < (p-1)/2. Randomized mode: first
/// passing draw from a seeded generator.
std::optional<std::vector<i64>> search_ks(u64 p, unsigned n, const IrregularityProfile& profile,
                                          const SearchOptions& options = {});

}  // namespace bigimage
