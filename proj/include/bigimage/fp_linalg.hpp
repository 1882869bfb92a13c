#pragma once

// Linear algebra over F_p: row-reduced subspaces and linear solves.

#include <cstddef>
#include <optional>
#include <vector>

#include "bigimage/zp_arith.hpp"

namespace bigimage {

using FpVector = std::vector<u64>;
using FpRows = std::vector<FpVector>;

/// A subspace of F_p^dim kept as a reduced row-echelon basis.
class FpSubspace {
 public:
  FpSubspace(u64 p, std::size_t ambient_dim);

  u64 p() const { return p_; }
  std::size_t ambient_dim() const { return dim_; }
  std::size_t dim() const { return rows_.size(); }
  bool is_zero() const { return rows_.empty(); }

  /// Canonical basis: rows sorted by pivot column, pivots equal to 1, pivot
  /// columns cleared in every other row.
  const FpRows& basis() const { return rows_; }
  const std::vector<std::size_t>& pivots() const { return pivots_; }

  /// Adds v to the span. Returns true iff the dimension grew.
  bool insert(FpVector v);
  bool contains(const FpVector& v) const;
  bool contains(const FpSubspace& other) const;
  /// Residue of v modulo the span (zero iff v is in the span).
  FpVector reduce(FpVector v) const;

  friend bool operator==(const FpSubspace& a, const FpSubspace& b) {
    return a.p_ == b.p_ && a.dim_ == b.dim_ && a.rows_ == b.rows_;
  }

 private:
  u64 p_;
  std::size_t dim_;
  FpRows rows_;
  std::vector<std::size_t> pivots_;
};

/// Reduced row echelon form in place; returns the pivot columns.
std::vector<std::size_t> rref(FpRows& rows, u64 p, std::size_t ncols);

std::size_t rank(FpRows rows, u64 p, std::size_t ncols);

/// Solves A x = b over F_p. Free variables are set to zero, so the answer is
/// deterministic. Returns nullopt when the system is inconsistent.
std::optional<FpVector> solve(const FpRows& a, const FpVector& b, u64 p, std::size_t ncols);

/// Basis of {x : A x = 0}, one vector per free column in increasing order.
FpRows kernel_basis(const FpRows& a, u64 p, std::size_t ncols);

FpVector mat_vec(const FpRows& a, const FpVector& x, u64 p);

}  // namespace bigimage
