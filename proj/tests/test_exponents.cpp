#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <set>

#include "bigimage/exponents.hpp"

using namespace bigimage;

namespace {

i64 mod(i64 a, i64 m) { return ((a % m) + m) % m; }

// Direct transcription of the five conditions, used as an oracle.
bool brute_conditions(u64 p, const std::vector<i64>& ks, const IrregularityProfile& prof) {
  const i64 P = static_cast<i64>(p);
  const std::size_t n = ks.size();
  std::set<i64> diffs;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(0 < ks[i] && 2 * ks[i] < P - 1)) return false;
    if ((ks[i] % 2 == 0) != ((i + 1) % 2 == 1)) return false;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const i64 d = mod(ks[i] - ks[j], P - 1);
      if (d == 1 || d == 0) return false;
      if (!diffs.insert(d).second) return false;
      const u64 idx = static_cast<u64>(mod(P - (ks[i] - ks[j]), P - 1));
      if (!eigenspace_verdict(p, idx, prof).is_zero()) return false;
    }
  return true;
}

// Lexicographically first tuple passing the oracle.
std::optional<std::vector<i64>> brute_first(u64 p, unsigned n, const IrregularityProfile& prof) {
  std::vector<i64> cur;
  std::optional<std::vector<i64>> found;
  std::function<void()> rec = [&] {
    if (found) return;
    if (cur.size() == n) {
      if (brute_conditions(p, cur, prof)) found = cur;
      return;
    }
    for (i64 k = 1; 2 * k < static_cast<i64>(p) - 1 && !found; ++k) {
      cur.push_back(k);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return found;
}

}  // namespace

TEST_CASE("m-sequence examples") {
  CHECK(m_sequence(2, 0).entries == std::vector<i64>{4, 9});
  CHECK(m_sequence(2, 1).entries == std::vector<i64>{4, 9, 16, 33});
  CHECK(m_sequence(3, 1).entries == std::vector<i64>{4, 9, 16, 33, 64});
  CHECK_THROWS(m_sequence(0, 0));
  CHECK_THROWS(m_sequence(40, 20));
}

TEST_CASE("m-sequence is absolutely difference-distinct") {
  for (unsigned len = 2; len <= 20; ++len) {
    const auto seq = m_sequence(len, 0).entries;
    std::set<i64> d;
    bool distinct = true;
    for (std::size_t i = 0; i < seq.size(); ++i)
      for (std::size_t j = 0; j < seq.size(); ++j)
        if (i != j) distinct = distinct && d.insert(seq[j] - seq[i]).second && seq[j] != seq[i];
    CHECK(distinct);
    CHECK(sidon_check(seq, i64{1} << 40).pass);
  }
}

TEST_CASE("sidon check examples") {
  CHECK(sidon_check({4, 9}, 22).pass);
  CHECK(sidon_check({4, 9, 16, 33}, 256).pass);
  const auto bad = sidon_check({1, 2, 3}, 10);
  CHECK_FALSE(bad.pass);
  REQUIRE(bad.collision);
  // 2 - 1 == 3 - 2
  CHECK(bad.collision->first == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(bad.collision->second == std::pair<std::size_t, std::size_t>{1, 2});
  const auto zero = sidon_check({3, 13}, 10);
  CHECK_FALSE(zero.pass);
  CHECK(zero.collision->first == zero.collision->second);
}

TEST_CASE("condition fixtures") {
  const auto p23 = make_profile(23);
  const auto ok = check_conditions(23, {4, 9}, p23);
  CHECK(ok.pass());
  CHECK(ok.first_failure() == 0);
  CHECK(ok.assumptions == std::vector<Assumption>{Assumption::Vandiver});
  CHECK(ok.assumed_zero_indices == std::vector<u64>{6, 18});

  const auto adj = check_conditions(23, {4, 5}, p23);
  CHECK_FALSE(adj.pass());
  CHECK(adj.first_failure() == 3);
  CHECK(adj.conditions[2].witness.find("(2,1)") != std::string::npos);

  const auto p37 = make_profile(37);
  CHECK(check_conditions(37, {4, 9, 16}, p37).pass());

  const auto p19 = make_profile(19);
  const auto big = check_conditions(19, {4, 9}, p19);
  CHECK_FALSE(big.pass());
  CHECK(big.first_failure() == 1);
  CHECK(big.conditions[0].witness.find("9") != std::string::npos);

  CHECK(check_conditions(23, {3, 4}, p23).first_failure() == 2);
}

TEST_CASE("condition checker agrees with the oracle") {
  for (u64 p : {13, 23, 37, 59, 67}) {
    const auto prof = make_profile(p);
    for (i64 a = 1; 2 * a < static_cast<i64>(p) - 1; ++a)
      for (i64 b = 1; 2 * b < static_cast<i64>(p) - 1; ++b)
        CHECK(check_conditions(p, {a, b}, prof).pass() == brute_conditions(p, {a, b}, prof));
  }
  const auto p37 = make_profile(37);
  for (i64 a = 2; a < 18; a += 2)
    for (i64 b = 1; b < 18; b += 2)
      for (i64 c = 2; c < 18; c += 2)
        CHECK(check_conditions(37, {a, b, c}, p37).pass() == brute_conditions(37, {a, b, c}, p37));
}

TEST_CASE("selection") {
  const auto s23 = select_ks(23, 2, 0, make_profile(23));
  REQUIRE(std::holds_alternative<Selection>(s23));
  CHECK(std::get<Selection>(s23).ks == std::vector<i64>{4, 9});

  const auto s19 = select_ks(19, 2, 0, make_profile(19));
  REQUIRE(std::holds_alternative<SelectionFailure>(s19));
  CHECK(std::get<SelectionFailure>(s19).step == SelectionStep::Boundary);

  const auto s131 = select_ks(131, 3, 1, make_profile(131));
  REQUIRE(std::holds_alternative<Selection>(s131));
  const auto& sel = std::get<Selection>(s131);
  CHECK(sel.ks == std::vector<i64>{4, 9, 16});
  CHECK(sel.avoided_eigenspaces == std::vector<u64>{109});
  CHECK(brute_conditions(131, sel.ks, make_profile(131)));

  const auto s157 = select_ks(157, 3, 0, make_profile(157));
  REQUIRE(std::holds_alternative<SelectionFailure>(s157));
  CHECK(std::get<SelectionFailure>(s157).step == SelectionStep::RegularityIndex);
}

TEST_CASE("selection is monotone in the profile") {
  // Removing irregular indices never breaks a passing selection.
  for (u64 p : {131, 157, 271}) {
    const auto full = make_profile(p);
    for (unsigned n = 2; n <= 3; ++n) {
      const auto s = select_ks(p, n, static_cast<unsigned>(full.e_p), full);
      if (!std::holds_alternative<Selection>(s)) continue;
      const auto& ks = std::get<Selection>(s).ks;
      CHECK(check_conditions(p, ks, make_profile(p, std::vector<u64>{})).pass());
    }
  }
}

TEST_CASE("search") {
  CHECK_FALSE(search_ks(7, 3, make_profile(7)).has_value());
  const auto p37 = make_profile(37);
  const auto found = search_ks(37, 3, p37);
  REQUIRE(found.has_value());
  CHECK(check_conditions(37, *found, p37).pass());
  CHECK(found == brute_first(37, 3, p37));
  for (u64 p : {11, 13, 23, 29}) {
    const auto prof = make_profile(p);
    CHECK(search_ks(p, 2, prof) == brute_first(p, 2, prof));
  }
  CHECK(search_ks(23, 2, make_profile(23)) == std::vector<i64>{2, 5});

  SearchOptions tight;
  tight.max_candidates = 3;
  CHECK_THROWS_AS(search_ks(101, 4, make_profile(101), tight), SearchBoundExceeded);

  SearchOptions rnd;
  rnd.strategy = SearchStrategy::Randomized;
  rnd.seed = 7;
  const auto r1 = search_ks(37, 3, p37, rnd);
  REQUIRE(r1.has_value());
  CHECK(check_conditions(37, *r1, p37).pass());
  CHECK(search_ks(37, 3, p37, rnd) == r1);
}
