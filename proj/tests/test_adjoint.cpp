#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bigimage/adjoint.hpp"

using namespace bigimage;

namespace {

AdMatrix E(std::size_t n, std::size_t i, std::size_t j, const Modulus& mod) {
  return AdMatrix::elementary(n, i, j, mod);
}

AdMatrix random_matrix(std::size_t n, const Modulus& mod, std::mt19937_64& rng) {
  std::vector<u64> v(n * n);
  for (auto& x : v) x = rng() % mod.value();
  return AdMatrix(n, mod, v);
}

// Naive closure: per-level spans, saturated by brackets of basis vectors and
// by conjugation with diag(g^k_1, ..., g^k_n) mod p, until nothing changes.
std::vector<FpSubspace> naive_closure(const std::vector<Seed>& seeds, std::size_t n, const std::vector<i64>& ks,
                                      u64 p, unsigned max_level) {
  const Modulus mod(p, 1);
  std::vector<FpSubspace> lv(max_level + 1, FpSubspace(p, n * n));
  for (const auto& s : seeds) lv[s.level].insert(to_vector(s.element.reduce_to(1)));
  std::vector<u64> t(n);
  const u64 g = primitive_root(p);
  for (std::size_t i = 0; i < n; ++i) t[i] = mod.pow_signed(g, ks[i]);
  const AdMatrix D = AdMatrix::diagonal(t, mod), Dinv = D.inverse();
  bool changed = true;
  while (changed) {
    changed = false;
    for (unsigned l = 1; l <= max_level; ++l) {
      const auto basis = lv[l].basis();
      for (const auto& v : basis) changed |= lv[l].insert(to_vector(D * from_vector(n, p, v) * Dinv));
      for (unsigned m = 1; l + m <= max_level; ++m)
        for (const auto& a : basis)
          for (const auto& b : lv[m].basis())
            changed |= lv[l + m].insert(to_vector(bracket(from_vector(n, p, a), from_vector(n, p, b))));
    }
  }
  return lv;
}

}  // namespace

TEST_CASE("linear algebra over F_p") {
  FpRows a{{1, 2, 3}, {2, 4, 6}, {0, 1, 1}};
  CHECK(rank(a, 7, 3) == 2);
  const auto x = solve(a, {6, 5, 2}, 7, 3);
  REQUIRE(x);
  CHECK(mat_vec(a, *x, 7) == FpVector{6, 5, 2});
  CHECK_FALSE(solve(a, {1, 0, 0}, 7, 3));
  const auto k = kernel_basis(a, 7, 3);
  REQUIRE(k.size() == 1);
  CHECK(mat_vec(a, k[0], 7) == FpVector{0, 0, 0});
  FpSubspace s(7, 3);
  CHECK(s.insert({1, 2, 3}));
  CHECK_FALSE(s.insert({2, 4, 6}));
  CHECK(s.contains(FpVector{3, 6, 2}));
  CHECK_FALSE(s.contains(FpVector{0, 0, 1}));
}

TEST_CASE("bracket examples") {
  const Modulus m(23, 1);
  CHECK(bracket(E(2, 1, 2, m), E(2, 2, 1, m)) == E(2, 1, 1, m) - E(2, 2, 2, m));
  std::mt19937_64 rng(1);
  const auto x = random_matrix(3, m, rng);
  CHECK(bracket(x, x).is_zero());
  const auto w = AdMatrix::diagonal({4, 9, 16}, m);
  for (std::size_t i = 1; i <= 3; ++i)
    for (std::size_t j = 1; j <= 3; ++j) {
      if (i == j) continue;
      const u64 coef = m.sub(w.at(i - 1, i - 1), w.at(j - 1, j - 1));
      CHECK(bracket(w, E(3, i, j, m)) == coef * E(3, i, j, m));
    }
}

TEST_CASE("Jacobi identity and antisymmetry on random matrices") {
  std::mt19937_64 rng(2);
  for (u64 p : {5, 7, 11})
    for (unsigned lvl = 1; lvl <= 3; ++lvl) {
      const Modulus m(p, lvl);
      for (int t = 0; t < 20; ++t) {
        const auto x = random_matrix(3, m, rng), y = random_matrix(3, m, rng), z = random_matrix(3, m, rng);
        CHECK((bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y))).is_zero());
        CHECK((bracket(x, y) + bracket(y, x)).is_zero());
        CHECK(bracket(x, y).trace() == 0);
      }
    }
}

TEST_CASE("sl_n is perfect") {
  for (std::size_t n = 2; n <= 4; ++n)
    for (u64 p : {5, 7}) {
      const auto basis = sl_basis(n, p);
      CHECK(basis.size() == n * n - 1);
      FpSubspace span(p, n * n);
      for (const auto& a : basis)
        for (const auto& b : basis) span.insert(to_vector(bracket(a, b)));
      CHECK(span.dim() == n * n - 1);
      CHECK(contains_sl(span, n));
    }
}

TEST_CASE("eigen decomposition") {
  const Modulus m(23, 1);
  const auto x = E(2, 1, 2, m) + 3 * E(2, 2, 2, m);
  const auto c = eigen_decompose(x, {4, 9});
  CHECK(c.t_part == std::vector<u64>{0, 3});
  CHECK(c.offdiag.size() == 1);
  CHECK(c.offdiag.at({1, 2}) == 1);
  CHECK(c.reassemble(m) == x);
  const auto id = eigen_decompose(AdMatrix::identity(2, m), {4, 9});
  CHECK(id.t_part == std::vector<u64>{1, 1});
  CHECK(id.offdiag.empty());
  CHECK_THROWS(eigen_decompose(x, {4, 4}));
}

TEST_CASE("sigma action matches direct conjugation") {
  for (unsigned lvl = 1; lvl <= 3; ++lvl) {
    const Modulus m(23, lvl);
    const u64 w = teichmuller_value(5, m);
    const auto D = AdMatrix::diagonal({m.pow(w, 4), m.pow(w, 9)}, m);
    std::mt19937_64 rng(lvl);
    const auto x = random_matrix(2, m, rng);
    const auto direct = D * x * D.inverse();
    CHECK(sigma_action(x, {4, 9}) == direct);
    CHECK(direct.at(0, 1) == m.mul(m.pow_signed(w, -5), x.at(0, 1)));
  }
}

TEST_CASE("commutator identity") {
  const Modulus m5(5, 1);
  const auto r = commutator_identity_check(E(2, 1, 2, m5), E(2, 2, 1, m5), 1, 1);
  CHECK(r.pass);
  const Modulus m125(5, 3);
  CHECK(r.commutator == AdMatrix::identity(2, m125) + 25 * (E(2, 1, 1, m125) - E(2, 2, 2, m125)));

  std::mt19937_64 rng(3);
  const auto c = random_matrix(3, Modulus(7, 1), rng);
  const auto same = commutator_identity_check(c, c, 2, 1, rng);
  CHECK(same.pass);
  CHECK(same.expected.is_identity());

  int passed = 0;
  const u64 primes[] = {5, 7, 11};
  for (int t = 0; t < 1000; ++t) {
    const u64 p = primes[rng() % 3];
    const std::size_t n = 2 + rng() % 3;
    const unsigned l = 1 + rng() % 3, mm = 1 + rng() % 3;
    const Modulus mod(p, 1);
    if (commutator_identity_check(random_matrix(n, mod, rng), random_matrix(n, mod, rng), l, mm, rng).pass) ++passed;
  }
  CHECK(passed == 1000);
}

TEST_CASE("graded closure") {
  const Modulus m23(23, 1);
  // diag(4, 9) - 13/2 Id
  const u64 half13 = m23.mul(13, m23.inv(2));
  const auto w2 = AdMatrix::diagonal({m23.sub(4, half13), m23.sub(9, half13)}, m23);
  const auto f2 = graded_closure({{1, w2}, {1, E(2, 1, 2, m23)}, {1, E(2, 2, 1, m23)}}, 2, {4, 9}, 23, 4);
  CHECK(contains_sl(f2, 2));
  CHECK(verify_filtration(f2));

  const Modulus m37(37, 1);
  const auto w3 = AdMatrix::diagonal({1, 2, 4}, m37);
  const std::vector<Seed> s3{{1, w3}, {1, E(3, 1, 2, m37)}, {1, E(3, 2, 1, m37)}, {1, E(3, 2, 3, m37)},
                             {1, E(3, 3, 2, m37)}};
  const auto f3 = graded_closure(s3, 3, {4, 9, 16}, 37, 4);
  CHECK(contains_sl(f3, 4));
  // Level 2 already holds every e_ij (i != j) and both diagonal differences.
  CHECK(contains_sl(f3, 2));
  CHECK(contains_sl(f3, 3));
  CHECK_FALSE(contains_sl(f3, 1));
  CHECK(verify_filtration(f3));

  const auto f0 = graded_closure({{1, AdMatrix(2, m23)}}, 2, {4, 9}, 23, 4);
  for (unsigned k = 1; k <= 4; ++k) {
    CHECK(f0.level(k).is_zero());
    CHECK_FALSE(contains_sl(f0, k));
  }
}

TEST_CASE("graded closure matches a naive saturation") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    const u64 p = t % 2 ? 7 : 11;
    const std::size_t n = 2 + t % 2;
    const Modulus m(p, 1);
    std::vector<i64> ks(n);
    for (auto& k : ks) k = static_cast<i64>(rng() % (p - 1));
    std::vector<Seed> seeds;
    const unsigned count = 1 + rng() % 2;
    for (unsigned s = 0; s < count; ++s) {
      auto x = AdMatrix(n, m);
      x.set(rng() % n, rng() % n, 1 + rng() % (p - 1));
      x.set(rng() % n, rng() % n, rng() % p);
      seeds.push_back({static_cast<unsigned>(1 + rng() % 2), x});
    }
    const auto f = graded_closure(seeds, n, ks, p, 4);
    const auto oracle = naive_closure(seeds, n, ks, p, 4);
    for (unsigned k = 1; k <= 4; ++k) CHECK(f.level(k) == oracle[k]);
    CHECK(verify_filtration(f));
  }
}

TEST_CASE("closure is monotone in the seeds") {
  const Modulus m(11, 1);
  const std::vector<Seed> small{{1, E(3, 1, 2, m)}, {1, E(3, 2, 3, m)}};
  auto big = small;
  big.push_back({1, E(3, 3, 1, m)});
  const auto fs = graded_closure(small, 3, {2, 5, 0}, 11, 4);
  const auto fb = graded_closure(big, 3, {2, 5, 0}, 11, 4);
  for (unsigned k = 1; k <= 4; ++k) CHECK(fb.level(k).contains(fs.level(k)));
}

TEST_CASE("subgroup closure") {
  const Modulus m9(3, 2);
  const auto id = AdMatrix::identity(2, m9);
  const auto k27 = subgroup_bfs({id + 3 * E(2, 1, 2, m9), id + 3 * E(2, 2, 1, m9),
                                 id + 3 * (E(2, 1, 1, m9) - E(2, 2, 2, m9))});
  CHECK_FALSE(k27.overflow);
  CHECK(k27.elements.size() == 27);
  for (const auto& g : k27.elements) {
    CHECK(g.det() == 1);
    CHECK(g.reduce_to(1).is_identity());
  }
  CHECK(contains_congruence_kernel(k27, 1));

  CHECK(subgroup_bfs({id}).elements.size() == 1);

  const Modulus m5(5, 1);
  const auto torus = subgroup_bfs({AdMatrix::diagonal({2, 1}, m5), AdMatrix::diagonal({1, 2}, m5)});
  CHECK(torus.elements.size() == 16);
  const Modulus m25(5, 2);
  const auto torus25 = subgroup_bfs({AdMatrix::diagonal({2, 1}, m25), AdMatrix::diagonal({1, 2}, m25)});
  CHECK(torus25.elements.size() == 400);
  CHECK_FALSE(contains_congruence_kernel(torus25, 1));
  CHECK_THROWS(contains_congruence_kernel(torus, 1));

  const auto capped = subgroup_bfs({AdMatrix::diagonal({2, 1}, m5), AdMatrix::diagonal({1, 2}, m5)}, 5);
  CHECK(capped.overflow);

  const Modulus m27(3, 3);
  const auto id3 = AdMatrix::identity(2, m27);
  std::vector<AdMatrix> gens;
  for (const auto& x : sl_basis(2, 3)) gens.push_back(id3 + 3 * x.lift_to(3));
  gens.push_back(AdMatrix::diagonal({2, m27.inv(2)}, m27));
  const auto big = subgroup_bfs(gens);
  CHECK_FALSE(big.overflow);
  CHECK(contains_congruence_kernel(big, 2));
  const auto v = congruence_kernel_verdict(big, 2);
  CHECK(v.kernel_order == 27);
  CHECK(v.found == 27);
}
