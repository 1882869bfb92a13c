#pragma once

// Matrices over Z/p^m and the Lie-theoretic checks built on them: brackets,
// the eigen-decomposition of Ad under the diagonal torus, graded bracket
// closure of filtrations, and brute-force subgroup closure.

#include <cstddef>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "bigimage/fp_linalg.hpp"
#include "bigimage/zp_arith.hpp"

namespace bigimage {

/// n x n matrix over Z/p^m. `at` is 0-based; `elementary(i, j)` takes the
/// 1-based (row, column) labels of e_{i,j}.
class AdMatrix {
 public:
  AdMatrix(std::size_t n, const Modulus& mod);
  AdMatrix(std::size_t n, const Modulus& mod, std::vector<u64> row_major);

  static AdMatrix identity(std::size_t n, const Modulus& mod);
  static AdMatrix elementary(std::size_t n, std::size_t i, std::size_t j, const Modulus& mod);
  static AdMatrix diagonal(const std::vector<u64>& diag, const Modulus& mod);
  static AdMatrix from_signed(std::size_t n, const Modulus& mod, const std::vector<i64>& row_major);

  std::size_t n() const { return n_; }
  const Modulus& modulus() const { return mod_; }
  u64 at(std::size_t r, std::size_t c) const { return a_[r * n_ + c]; }
  void set(std::size_t r, std::size_t c, u64 v) { a_[r * n_ + c] = mod_.reduce(v); }
  const std::vector<u64>& entries() const { return a_; }

  u64 trace() const;
  u64 det() const;
  bool is_invertible() const;
  /// Throws std::domain_error if the matrix is singular mod p.
  AdMatrix inverse() const;
  bool is_zero() const;
  bool is_identity() const;
  bool is_diagonal() const;

  /// Image under Z/p^m -> Z/p^level.
  AdMatrix reduce_to(unsigned level) const;
  /// Entrywise integer representative viewed at a higher level.
  AdMatrix lift_to(unsigned level) const;
  /// For X = 0 mod p^k, returns X / p^k with entries mod p^(m-k).
  AdMatrix divide_by_p_power(unsigned k) const;
  /// Multiplies entries by p^k and views the result at `level`.
  AdMatrix times_p_power(unsigned k, unsigned level) const;

  friend AdMatrix operator+(const AdMatrix& a, const AdMatrix& b);
  friend AdMatrix operator-(const AdMatrix& a, const AdMatrix& b);
  friend AdMatrix operator*(const AdMatrix& a, const AdMatrix& b);
  friend AdMatrix operator*(u64 s, const AdMatrix& a);
  friend bool operator==(const AdMatrix& a, const AdMatrix& b) {
    return a.n_ == b.n_ && a.mod_ == b.mod_ && a.a_ == b.a_;
  }

 private:
  std::size_t n_;
  Modulus mod_;
  std::vector<u64> a_;
};

/// X^e; negative e requires X invertible.
AdMatrix pow(const AdMatrix& x, i64 e);

/// [X, Y] = XY - YX.
AdMatrix bracket(const AdMatrix& x, const AdMatrix& y);

/// Row-major entries of a level-1 matrix as an F_p vector.
FpVector to_vector(const AdMatrix& x);
AdMatrix from_vector(std::size_t n, u64 p, const FpVector& v);

/// Diagonal part plus coefficients of e_{i,j} (1-based keys) for i != j.
struct EigenComponents {
  std::vector<u64> t_part;
  std::map<std::pair<std::size_t, std::size_t>, u64> offdiag;

  AdMatrix reassemble(const Modulus& mod) const;
};

/// Splits X into its diagonal and the chi^(k_i - k_j) lines. Requires the
/// differences k_i - k_j (i != j) to be nonzero and distinct mod p-1.
EigenComponents eigen_decompose(const AdMatrix& x, const std::vector<i64>& ks);

/// Conjugation of X by diag(w^k_1, ..., w^k_n), w = Teichmuller(g) at X's
/// level, g the smallest primitive root. Scales e_{i,j} by w^(k_i - k_j).
AdMatrix sigma_action(const AdMatrix& x, const std::vector<i64>& ks);

struct CommutatorCheck {
  bool pass = false;
  AdMatrix commutator;  // A B A^-1 B^-1
  AdMatrix expected;    // Id + p^(l+m) [c, d]
};

/// Checks A B A^-1 B^-1 == Id + p^(l+m)[c,d] in GL_n(Z/p^(l+m+1)) for
/// A = Id + p^l c~, B = Id + p^m d~ with the given lifts c~, d~ of c, d.
CommutatorCheck commutator_identity_check(const AdMatrix& c_lift, const AdMatrix& d_lift, unsigned l,
                                          unsigned m);
/// Same, lifting c and d (given mod p) to Z/p^(l+m+1) with random digits.
CommutatorCheck commutator_identity_check(const AdMatrix& c, const AdMatrix& d, unsigned l, unsigned m,
                                          std::mt19937_64& rng);

/// Per-level subspaces of Ad (as F_p^(n^2)), levels 1..max_level.
class GradedFiltration {
 public:
  GradedFiltration(std::size_t n, u64 p, std::vector<i64> ks, unsigned max_level);

  std::size_t n() const { return n_; }
  u64 p() const { return p_; }
  const std::vector<i64>& ks() const { return ks_; }
  unsigned max_level() const { return static_cast<unsigned>(levels_.size()); }
  const FpSubspace& level(unsigned k) const;
  FpSubspace& level(unsigned k);

 private:
  std::size_t n_;
  u64 p_;
  std::vector<i64> ks_;
  std::vector<FpSubspace> levels_;
};

struct Seed {
  unsigned level;
  AdMatrix element;  // level-1 matrix (reduced if given at a higher level)
};

/// Smallest filtration containing the seeds, closed under brackets
/// ([V_l, V_m] in V_(l+m)) and under the sigma-action induced by ks.
/// Level inclusion V_k in V_(k+1) is not imposed. Empty ks: no sigma-action.
GradedFiltration graded_closure(const std::vector<Seed>& seeds, std::size_t n, const std::vector<i64>& ks,
                                u64 p, unsigned max_level);

/// Independent re-check of the closure conditions on the final bases.
bool verify_filtration(const GradedFiltration& f);

/// Basis of sl_n over F_p: e_{i,j} (i != j) then e_{i,i} - e_{i+1,i+1}.
std::vector<AdMatrix> sl_basis(std::size_t n, u64 p);

/// True iff level `level` of the filtration contains all trace-zero matrices.
bool contains_sl(const GradedFiltration& f, unsigned level);
bool contains_sl(const FpSubspace& space, std::size_t n);

struct SubgroupClosure {
  std::size_t n = 0;
  Modulus modulus{3, 1};
  std::vector<AdMatrix> generators;
  std::vector<AdMatrix> elements;  // BFS discovery order, identity first
  bool overflow = false;

  bool contains(const AdMatrix& g) const;

 private:
  friend SubgroupClosure subgroup_bfs(const std::vector<AdMatrix>&, std::size_t);
  std::map<std::vector<u64>, std::size_t> index_;
};

inline constexpr std::size_t kDefaultBfsBound = 2'000'000;

/// Closure of invertible generators under multiplication. Stops with
/// overflow = true once more than `bound` elements are found.
SubgroupClosure subgroup_bfs(const std::vector<AdMatrix>& generators, std::size_t bound = kDefaultBfsBound);

enum class KernelMethod { Enumerated, Counted };

struct KernelVerdict {
  bool contained = false;
  KernelMethod method = KernelMethod::Enumerated;
  u64 kernel_order = 0;
  u64 found = 0;  // kernel elements present in the closure
};

/// Whether ker(SL_n(Z/p^m) -> SL_n(Z/p^k)) lies inside the closure. The
/// kernel is enumerated when it has at most `enumeration_bound` candidates;
/// otherwise the closure elements inside the kernel are counted against the
/// kernel order p^((m-k)(n^2-1)).
KernelVerdict congruence_kernel_verdict(const SubgroupClosure& closure, unsigned k,
                                        std::size_t enumeration_bound = 1'000'000);
bool contains_congruence_kernel(const SubgroupClosure& closure, unsigned k);

}  // namespace bigimage
