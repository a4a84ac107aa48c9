#include "hcsaddle/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace hcsaddle {

SparseSymMatrix SparseSymMatrix::from_triplets(int dimension, std::span<const Triplet> entries,
                                               bool symmetric) {
  SparseSymMatrix a;
  a.dim_ = dimension;
  a.symmetric_ = symmetric;

  std::vector<int> counts(static_cast<std::size_t>(dimension) + 1, 0);
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= dimension || t.col < 0 || t.col >= dimension) {
      throw Error(ErrorCode::kDimension, "triplet (" + std::to_string(t.row) + ", " +
                                             std::to_string(t.col) + ") outside a " +
                                             std::to_string(dimension) + "-dimensional matrix");
    }
    ++counts[static_cast<std::size_t>(t.row) + 1];
  }
  for (int r = 0; r < dimension; ++r) counts[r + 1] += counts[r];

  std::vector<int> cols(entries.size());
  std::vector<double> vals(entries.size());
  std::vector<int> fill(counts.begin(), counts.end() - 1);
  for (const Triplet& t : entries) {
    const int at = fill[t.row]++;
    cols[at] = t.col;
    vals[at] = t.value;
  }

  a.row_ptr_.assign(static_cast<std::size_t>(dimension) + 1, 0);
  a.col_idx_.reserve(entries.size());
  a.values_.reserve(entries.size());
  std::vector<int> perm;
  for (int r = 0; r < dimension; ++r) {
    const int lo = counts[r];
    const int hi = counts[r + 1];
    perm.resize(static_cast<std::size_t>(hi - lo));
    for (int k = lo; k < hi; ++k) perm[k - lo] = k;
    std::sort(perm.begin(), perm.end(), [&](int x, int y) { return cols[x] < cols[y]; });
    int last_col = -1;
    for (int k : perm) {
      if (cols[k] == last_col) {
        a.values_.back() += vals[k];
      } else {
        a.col_idx_.push_back(cols[k]);
        a.values_.push_back(vals[k]);
        last_col = cols[k];
      }
    }
    a.row_ptr_[r + 1] = static_cast<int>(a.col_idx_.size());
  }
  return a;
}

void SparseSymMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  require_same_size(x.size(), static_cast<std::size_t>(dim_), "SparseSymMatrix::multiply");
  require_same_size(y.size(), static_cast<std::size_t>(dim_), "SparseSymMatrix::multiply");
  for (int r = 0; r < dim_; ++r) {
    double s = 0.0;
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += values_[k] * x[col_idx_[k]];
    y[r] = s;
  }
}

Vector SparseSymMatrix::multiply(std::span<const double> x) const {
  Vector y(static_cast<std::size_t>(dim_));
  multiply(x, y);
  return y;
}

double SparseSymMatrix::entry(int row, int col) const {
  const auto first = col_idx_.begin() + row_ptr_.at(row);
  const auto last = col_idx_.begin() + row_ptr_.at(row + 1);
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

Vector SparseSymMatrix::diagonal() const {
  Vector d(static_cast<std::size_t>(dim_));
  for (int r = 0; r < dim_; ++r) d[r] = entry(r, r);
  return d;
}

double SparseSymMatrix::asymmetry() const {
  double worst = 0.0;
  for (int r = 0; r < dim_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      worst = std::max(worst, std::abs(values_[k] - entry(col_idx_[k], r)));
    }
  }
  return worst;
}

void SparseSymMatrix::write_matrix_market(std::ostream& os) const {
  std::size_t count = 0;
  for (int r = 0; r < dim_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (!symmetric_ || col_idx_[k] <= r) ++count;
    }
  }
  os << "%%MatrixMarket matrix coordinate real " << (symmetric_ ? "symmetric" : "general") << "\n";
  os << dim_ << " " << dim_ << " " << count << "\n";
  char buf[64];
  for (int r = 0; r < dim_; ++r) {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (symmetric_ && col_idx_[k] > r) continue;
      std::snprintf(buf, sizeof buf, "%.17g", values_[k]);
      os << (r + 1) << " " << (col_idx_[k] + 1) << " " << buf << "\n";
    }
  }
}

}  // namespace hcsaddle
