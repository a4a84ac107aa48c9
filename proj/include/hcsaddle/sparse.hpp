#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "hcsaddle/vector_ops.hpp"

namespace hcsaddle {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Square sparse matrix in compressed-row form. Both triangles are stored; the
/// symmetric flag records that the pattern and values were assembled
/// symmetrically.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  /// Duplicates are summed; explicit zeros are kept so the pattern stays
  /// structurally symmetric.
  [[nodiscard]] static SparseSymMatrix from_triplets(int dimension, std::span<const Triplet> entries,
                                                     bool symmetric = true);

  [[nodiscard]] int dimension() const noexcept { return dim_; }
  [[nodiscard]] std::size_t nonzeros() const noexcept { return values_.size(); }
  [[nodiscard]] bool symmetric() const noexcept { return symmetric_; }

  [[nodiscard]] std::span<const int> row_ptr() const noexcept { return row_ptr_; }
  [[nodiscard]] std::span<const int> col_idx() const noexcept { return col_idx_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
  [[nodiscard]] Vector multiply(std::span<const double> x) const;

  [[nodiscard]] double entry(int row, int col) const;
  [[nodiscard]] Vector diagonal() const;

  /// Largest |a_ij - a_ji| over the stored pattern.
  [[nodiscard]] double asymmetry() const;

  /// Matrix Market coordinate format, 1-based, lower triangle when symmetric.
  void write_matrix_market(std::ostream& os) const;

 private:
  int dim_ = 0;
  bool symmetric_ = true;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

}  // namespace hcsaddle
