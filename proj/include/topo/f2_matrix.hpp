#pragma once

#include <cstdint>
#include <vector>

namespace topo {

/// Sparse column over the two-element field: sorted row indices.
using Column = std::vector<std::int32_t>;

/// target <- target + source (symmetric difference of sorted index lists).
void add_to(Column& target, const Column& source);

/// Column reduction R = M * V of a sparse matrix over the two-element field,
/// with V upper unitriangular and, optionally, U = V^{-1} kept alongside.
///
/// Adjacent column and row transpositions of M update (R, V, U) in place so
/// that the decomposition stays valid for the permuted matrix.
class F2Decomposition {
 public:
  F2Decomposition() = default;

  /// Standard left-to-right reduction; columns must be sorted.
  static F2Decomposition reduce(std::vector<Column> columns, int num_rows,
                                bool track_inverse = true);

  int num_rows() const { return num_rows_; }
  int num_cols() const { return static_cast<int>(r_.size()); }
  bool tracks_inverse() const { return track_inverse_; }

  const Column& r(int j) const { return r_[j]; }
  const Column& v(int j) const { return v_[j]; }
  /// Row i of U = V^{-1} (column indices); requires tracks_inverse().
  const Column& u_row(int i) const { return u_rows_[i]; }

  /// Largest row index of column j of R, or -1 for a zero column.
  int low(int j) const { return col_low_[j]; }
  /// Column whose low is `row`, or -1.
  int column_with_low(int row) const { return low_to_col_[row]; }

  bool v_entry(int row, int col) const;
  bool u_entry(int row, int col) const;

  /// Swaps adjacent columns i and i+1 of M.
  void swap_columns(int i);
  /// Swaps adjacent rows i and i+1 of M.
  void swap_rows(int i);

  /// Row i of U computed from V by forward substitution over columns
  /// [i, end_col); independent of the maintained U.
  Column solve_u_row(int i, int end_col) const;

  /// Number of column additions performed so far.
  std::int64_t column_operations() const { return column_ops_; }

 private:
  void add_column(int src, int dst);
  void settle(int j);
  void detach(int j);

  int num_rows_ = 0;
  bool track_inverse_ = true;
  std::vector<Column> r_, v_, u_rows_;
  std::vector<std::int32_t> col_low_, low_to_col_;
  std::int64_t column_ops_ = 0;
};

}  // namespace topo
