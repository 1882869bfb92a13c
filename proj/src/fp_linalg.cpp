#include "bigimage/fp_linalg.hpp"

#include <algorithm>
#include <stdexcept>

namespace bigimage {

namespace {

u64 mulp(u64 a, u64 b, u64 p) { return static_cast<u64>(u128(a) * b % p); }
u64 invp(u64 a, u64 p) { return powmod(a, p - 2, p); }

// row -= factor * other, entries mod p.
void axpy(FpVector& row, const FpVector& other, u64 factor, u64 p) {
  if (factor == 0) return;
  const u64 neg = p - factor;
  for (std::size_t c = 0; c < row.size(); ++c) {
    if (other[c] != 0) row[c] = (row[c] + mulp(neg, other[c], p)) % p;
  }
}

}  // namespace

FpSubspace::FpSubspace(u64 p, std::size_t ambient_dim) : p_(p), dim_(ambient_dim) {}

FpVector FpSubspace::reduce(FpVector v) const {
  if (v.size() != dim_) throw std::invalid_argument("FpSubspace: vector length mismatch");
  for (auto& x : v) x %= p_;
  for (std::size_t r = 0; r < rows_.size(); ++r) axpy(v, rows_[r], v[pivots_[r]], p_);
  return v;
}

bool FpSubspace::contains(const FpVector& v) const {
  const FpVector rest = reduce(v);
  return std::all_of(rest.begin(), rest.end(), [](u64 x) { return x == 0; });
}

bool FpSubspace::contains(const FpSubspace& other) const {
  return std::all_of(other.rows_.begin(), other.rows_.end(), [&](const FpVector& v) { return contains(v); });
}

bool FpSubspace::insert(FpVector v) {
  v = reduce(std::move(v));
  const auto it = std::find_if(v.begin(), v.end(), [](u64 x) { return x != 0; });
  if (it == v.end()) return false;
  const std::size_t pivot = static_cast<std::size_t>(it - v.begin());
  const u64 scale = invp(v[pivot], p_);
  for (auto& x : v) x = mulp(x, scale, p_);
  for (auto& row : rows_) axpy(row, v, row[pivot], p_);
  const auto pos = std::lower_bound(pivots_.begin(), pivots_.end(), pivot) - pivots_.begin();
  pivots_.insert(pivots_.begin() + pos, pivot);
  rows_.insert(rows_.begin() + pos, std::move(v));
  return true;
}

std::vector<std::size_t> rref(FpRows& rows, u64 p, std::size_t ncols) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < ncols && r < rows.size(); ++c) {
    std::size_t sel = r;
    while (sel < rows.size() && rows[sel][c] % p == 0) ++sel;
    if (sel == rows.size()) continue;
    std::swap(rows[r], rows[sel]);
    const u64 scale = invp(rows[r][c] % p, p);
    for (auto& x : rows[r]) x = mulp(x % p, scale, p);
    for (std::size_t o = 0; o < rows.size(); ++o)
      if (o != r) axpy(rows[o], rows[r], rows[o][c] % p, p);
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

std::size_t rank(FpRows rows, u64 p, std::size_t ncols) { return rref(rows, p, ncols).size(); }

std::optional<FpVector> solve(const FpRows& a, const FpVector& b, u64 p, std::size_t ncols) {
  if (a.size() != b.size()) throw std::invalid_argument("solve: row count mismatch");
  FpRows aug;
  aug.reserve(a.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r].size() != ncols) throw std::invalid_argument("solve: column count mismatch");
    FpVector row(a[r]);
    row.push_back(b[r] % p);
    aug.push_back(std::move(row));
  }
  const auto pivots = rref(aug, p, ncols + 1);
  if (!pivots.empty() && pivots.back() == ncols) return std::nullopt;
  FpVector x(ncols, 0);
  for (std::size_t r = 0; r < pivots.size(); ++r) x[pivots[r]] = aug[r][ncols];
  return x;
}

FpRows kernel_basis(const FpRows& a, u64 p, std::size_t ncols) {
  FpRows rows(a);
  const auto pivots = rref(rows, p, ncols);
  std::vector<bool> is_pivot(ncols, false);
  for (auto c : pivots) is_pivot[c] = true;
  FpRows out;
  for (std::size_t free = 0; free < ncols; ++free) {
    if (is_pivot[free]) continue;
    FpVector v(ncols, 0);
    v[free] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = (p - rows[r][free] % p) % p;
    out.push_back(std::move(v));
  }
  return out;
}

FpVector mat_vec(const FpRows& a, const FpVector& x, u64 p) {
  FpVector out(a.size(), 0);
  for (std::size_t r = 0; r < a.size(); ++r) {
    u64 acc = 0;
    for (std::size_t c = 0; c < x.size(); ++c) acc = (acc + mulp(a[r][c] % p, x[c] % p, p)) % p;
    out[r] = acc;
  }
  return out;
}

}  // namespace bigimage
