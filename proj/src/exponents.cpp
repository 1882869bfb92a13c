#include "bigimage/exponents.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace bigimage {

namespace {

i64 mod_floor(i64 a, i64 m) { return ((a % m) + m) % m; }

// Eigenspace index hit by the difference d: (p - d) mod (p-1).
u64 eigenspace_index(u64 p, i64 d) {
  const i64 order = static_cast<i64>(p - 1);
  return static_cast<u64>(mod_floor(static_cast<i64>(p) - d, order));
}

}  // namespace

MSequence m_sequence(unsigned n, unsigned e) {
  if (n < 2) throw std::invalid_argument("m_sequence: n must be > 1");
  const unsigned t = n + 2 * e;
  if (t + 1 > 61) throw std::overflow_error("m_sequence: 2^(t+1) overflows the native width");
  MSequence seq{n, e, {}};
  for (unsigned j = 1; j <= t; ++j) seq.entries.push_back((i64{1} << (j + 1)) + (j % 2 == 0 ? 1 : 0));
  return seq;
}

SidonResult sidon_check(const std::vector<i64>& seq, i64 modulus) {
  if (modulus < 2) throw std::invalid_argument("sidon_check: modulus must be >= 2");
  std::map<i64, std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    for (std::size_t j = 0; j < seq.size(); ++j) {
      if (i == j) continue;
      const i64 d = mod_floor(seq[j] - seq[i], modulus);
      if (d == 0) return {false, SidonCollision{{i, j}, {i, j}}};
      auto [it, inserted] = seen.emplace(d, std::make_pair(i, j));
      if (!inserted) return {false, SidonCollision{it->second, {i, j}}};
    }
  }
  return {true, std::nullopt};
}

bool ConditionReport::pass() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const ConditionVerdict& v) { return v.pass; });
}

unsigned ConditionReport::first_failure() const {
  for (unsigned i = 0; i < conditions.size(); ++i)
    if (!conditions[i].pass) return i + 1;
  return 0;
}

ConditionReport check_conditions(u64 p, const std::vector<i64>& ks, const IrregularityProfile& profile) {
  if (profile.p != p) throw std::invalid_argument("check_conditions: profile is for a different prime");
  ConditionReport report;
  report.p = p;
  report.ks = ks;
  const std::size_t n = ks.size();
  const i64 order = static_cast<i64>(p - 1);
  const i64 half = order / 2;

  for (std::size_t i = 0; i < n && report.conditions[0].pass; ++i) {
    if (ks[i] <= 0 || ks[i] >= half) {
      std::ostringstream w;
      w << "k_" << i + 1 << " = " << ks[i] << " violates 0 < k_i < " << half;
      report.conditions[0] = {false, w.str()};
    }
  }

  for (std::size_t i = 0; i < n && report.conditions[1].pass; ++i) {
    const bool position_odd = (i + 1) % 2 == 1;
    const bool value_even = mod_floor(ks[i], 2) == 0;
    if (position_odd != value_even) {
      std::ostringstream w;
      w << "k_" << i + 1 << " = " << ks[i] << " should be " << (position_odd ? "even" : "odd");
      report.conditions[1] = {false, w.str()};
    }
  }

  for (std::size_t i = 0; i < n && report.conditions[2].pass; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (mod_floor(ks[i] - ks[j], order) == 1) {
        std::ostringstream w;
        w << "pair (" << i + 1 << "," << j + 1 << "): k_" << i + 1 << " - k_" << j + 1 << " = 1 mod " << order;
        report.conditions[2] = {false, w.str()};
        break;
      }
    }
  }

  {
    const auto sidon = sidon_check(ks, order);
    if (!sidon.pass) {
      const auto& c = *sidon.collision;
      std::ostringstream w;
      if (c.first == c.second) {
        w << "pair (" << c.first.first + 1 << "," << c.first.second + 1 << ") has difference 0 mod " << order;
      } else {
        w << "pairs (" << c.first.second + 1 << "," << c.first.first + 1 << ") and (" << c.second.second + 1 << ","
          << c.second.first + 1 << ") share the difference "
          << mod_floor(ks[c.first.second] - ks[c.first.first], order) << " mod " << order;
      }
      report.conditions[3] = {false, w.str()};
    }
  }

  std::set<u64> assumed;
  for (std::size_t i = 0; i < n && report.conditions[4].pass; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const u64 idx = eigenspace_index(p, ks[i] - ks[j]);
      const auto verdict = eigenspace_verdict(p, idx, profile);
      if (verdict.kind == EigenspaceKind::NonzeroCertified) {
        std::ostringstream w;
        w << "pair (" << i + 1 << "," << j + 1 << "): eigenspace chi^" << idx << " is nonzero (p | B_"
          << *verdict.bernoulli_index << ")";
        report.conditions[4] = {false, w.str()};
        break;
      }
      if (verdict.kind == EigenspaceKind::ZeroAssumedVandiver) assumed.insert(idx);
    }
  }
  report.assumed_zero_indices.assign(assumed.begin(), assumed.end());
  report.assumptions = profile.assumptions;
  return report;
}

std::string to_string(SelectionStep s) {
  switch (s) {
    case SelectionStep::RegularityIndex:
      return "regularity-index";
    case SelectionStep::Boundary:
      return "boundary";
    case SelectionStep::Parity:
      return "parity";
    case SelectionStep::Verification:
      return "verification";
  }
  return "unknown";
}

std::variant<Selection, SelectionFailure> select_ks(u64 p, unsigned n, unsigned e,
                                                    const IrregularityProfile& profile) {
  if (profile.p != p) throw std::invalid_argument("select_ks: profile is for a different prime");
  if (profile.e_p > e) {
    std::ostringstream r;
    r << "index of regularity e_p = " << profile.e_p << " exceeds e = " << e;
    return SelectionFailure{SelectionStep::RegularityIndex, r.str()};
  }
  const MSequence seq = m_sequence(n, e);
  const i64 half = static_cast<i64>((p - 1) / 2);
  for (std::size_t j = 0; j < seq.entries.size(); ++j) {
    if (seq.entries[j] >= half) {
      std::ostringstream r;
      r << "m_" << j + 1 << " = " << seq.entries[j] << " violates m_j < (p-1)/2 = " << half
        << " (condition (1) fails for k = " << seq.entries[j] << ")";
      return SelectionFailure{SelectionStep::Boundary, r.str()};
    }
  }

  const std::size_t t = seq.entries.size();
  std::vector<bool> alive(t, true);
  Selection sel;
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < t; ++j) {
      if (i == j || !alive[i] || !alive[j]) continue;
      const u64 idx = eigenspace_index(p, seq.entries[i] - seq.entries[j]);
      if (eigenspace_verdict(p, idx, profile).kind == EigenspaceKind::NonzeroCertified) {
        const std::size_t drop = std::max(i, j);
        alive[drop] = false;
        sel.discarded.push_back(drop + 1);
      }
    }
  }

  // m_j is even exactly when j is odd; position i of the tuple wants an even
  // value when i is odd.
  std::vector<std::size_t> odd_positions, even_positions;
  for (std::size_t j = 0; j < t; ++j) {
    if (!alive[j]) continue;
    ((j + 1) % 2 == 1 ? odd_positions : even_positions).push_back(j);
  }
  const std::size_t need_odd = (n + 1) / 2;
  const std::size_t need_even = n / 2;
  if (odd_positions.size() < need_odd || even_positions.size() < need_even) {
    std::ostringstream r;
    r << "need " << need_odd << " even and " << need_even << " odd survivors, have " << odd_positions.size()
      << " and " << even_positions.size();
    return SelectionFailure{SelectionStep::Parity, r.str()};
  }
  std::size_t next_odd = 0, next_even = 0;
  for (unsigned i = 1; i <= n; ++i) {
    const std::size_t j = i % 2 == 1 ? odd_positions[next_odd++] : even_positions[next_even++];
    sel.ks.push_back(seq.entries[j]);
    sel.positions.push_back(j + 1);
  }
  for (u64 k : profile.irregular_indices) sel.avoided_eigenspaces.push_back(p - k);

  sel.report = check_conditions(p, sel.ks, profile);
  if (!sel.report.pass()) {
    const unsigned c = sel.report.first_failure();
    return SelectionFailure{SelectionStep::Verification,
                            "condition (" + std::to_string(c) + ") failed: " + sel.report.conditions[c - 1].witness};
  }
  return sel;
}

namespace {

// Pairwise part of conditions (3)-(5) for the new entry at position `last`.
bool compatible_prefix(u64 p, const std::vector<i64>& ks, std::size_t last, const IrregularityProfile& profile,
                       std::set<i64>& diffs) {
  const i64 order = static_cast<i64>(p - 1);
  std::vector<i64> added;
  for (std::size_t i = 0; i < last; ++i) {
    for (const i64 d : {ks[last] - ks[i], ks[i] - ks[last]}) {
      const i64 r = mod_floor(d, order);
      if (r == 0 || r == 1 || diffs.count(r) ||
          std::find(added.begin(), added.end(), r) != added.end())
        return false;
      if (eigenspace_verdict(p, eigenspace_index(p, d), profile).kind == EigenspaceKind::NonzeroCertified)
        return false;
      added.push_back(r);
    }
  }
  diffs.insert(added.begin(), added.end());
  return true;
}

std::vector<i64> allowed_values(u64 p, std::size_t position) {
  const i64 half = static_cast<i64>((p - 1) / 2);
  std::vector<i64> out;
  const i64 start = (position + 1) % 2 == 1 ? 2 : 1;
  for (i64 k = start; k < half; k += 2) out.push_back(k);
  return out;
}

}  // namespace

std::optional<std::vector<i64>> search_ks(u64 p, unsigned n, const IrregularityProfile& profile,
                                          const SearchOptions& options) {
  if (profile.p != p) throw std::invalid_argument("search_ks: profile is for a different prime");
  if (n < 1) throw std::invalid_argument("search_ks: n must be positive");
  std::vector<std::vector<i64>> choices(n);
  for (std::size_t i = 0; i < n; ++i) choices[i] = allowed_values(p, i);

  if (options.strategy == SearchStrategy::Randomized) {
    std::mt19937_64 rng(options.seed);
    for (u64 attempt = 0; attempt < options.attempts; ++attempt) {
      std::vector<i64> ks(n);
      bool empty = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (choices[i].empty()) {
          empty = true;
          break;
        }
        std::uniform_int_distribution<std::size_t> pick(0, choices[i].size() - 1);
        ks[i] = choices[i][pick(rng)];
      }
      if (empty) return std::nullopt;
      if (check_conditions(p, ks, profile).pass()) return ks;
    }
    return std::nullopt;
  }

  // Depth-first in lexicographic order with pairwise pruning.
  std::vector<i64> ks(n);
  std::vector<std::size_t> cursor(n, 0);
  std::vector<std::set<i64>> diff_stack(n + 1);
  u64 visited = 0;
  std::size_t depth = 0;
  while (true) {
    if (cursor[depth] >= choices[depth].size()) {
      if (depth == 0) return std::nullopt;
      cursor[depth] = 0;
      --depth;
      ++cursor[depth];
      continue;
    }
    if (++visited > options.max_candidates)
      throw SearchBoundExceeded("search_ks: exhaustive bound of " + std::to_string(options.max_candidates) +
                                " candidates exceeded");
    ks[depth] = choices[depth][cursor[depth]];
    diff_stack[depth + 1] = diff_stack[depth];
    if (!compatible_prefix(p, ks, depth, profile, diff_stack[depth + 1])) {
      ++cursor[depth];
      continue;
    }
    if (depth + 1 == n) {
      if (check_conditions(p, ks, profile).pass()) return ks;
      ++cursor[depth];
      continue;
    }
    ++depth;
    cursor[depth] = 0;
  }
}

}  // namespace bigimage
