#include "topo/f2_matrix.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace topo {

void add_to(Column& target, const Column& source) {
  if (source.empty()) return;
  Column out;
  out.reserve(target.size() + source.size());
  auto a = target.cbegin();
  auto b = source.cbegin();
  while (a != target.cend() && b != source.cend()) {
    if (*a < *b) {
      out.push_back(*a++);
    } else if (*b < *a) {
      out.push_back(*b++);
    } else {
      ++a;
      ++b;
    }
  }
  out.insert(out.end(), a, target.cend());
  out.insert(out.end(), b, source.cend());
  target.swap(out);
}

namespace {

bool contains(const Column& c, std::int32_t x) { return std::binary_search(c.begin(), c.end(), x); }

// Applies the transposition (i i+1) to the labels of a sorted index list.
void relabel_adjacent(Column& c, std::int32_t i) {
  auto it = std::lower_bound(c.begin(), c.end(), i);
  if (it == c.end()) return;
  const bool has_i = *it == i;
  const bool has_next = has_i ? (it + 1 != c.end() && *(it + 1) == i + 1) : *it == i + 1;
  if (has_i && has_next) return;
  if (has_i) *it = i + 1;
  else if (has_next) *it = i;
}

}  // namespace

F2Decomposition F2Decomposition::reduce(std::vector<Column> columns, int num_rows,
                                        bool track_inverse) {
  F2Decomposition d;
  const int n = static_cast<int>(columns.size());
  d.num_rows_ = num_rows;
  d.track_inverse_ = track_inverse;
  d.r_ = std::move(columns);
  d.v_.resize(n);
  for (int j = 0; j < n; ++j) d.v_[j] = {j};
  if (track_inverse) {
    d.u_rows_.resize(n);
    for (int j = 0; j < n; ++j) d.u_rows_[j] = {j};
  }
  d.col_low_.assign(n, -1);
  d.low_to_col_.assign(num_rows, -1);
  for (int j = 0; j < n; ++j) {
    while (!d.r_[j].empty()) {
      const int l = d.r_[j].back();
      const int other = d.low_to_col_[l];
      if (other < 0) {
        d.low_to_col_[l] = j;
        d.col_low_[j] = l;
        break;
      }
      d.add_column(other, j);
    }
  }
  return d;
}

void F2Decomposition::add_column(int src, int dst) {
  add_to(r_[dst], r_[src]);
  add_to(v_[dst], v_[src]);
  // V <- V (I + e_src e_dst^T) implies U <- (I + e_src e_dst^T) U
  if (track_inverse_) add_to(u_rows_[src], u_rows_[dst]);
  ++column_ops_;
}

bool F2Decomposition::v_entry(int row, int col) const { return contains(v_[col], row); }

bool F2Decomposition::u_entry(int row, int col) const {
  if (!track_inverse_) throw std::logic_error("decomposition does not track U");
  return contains(u_rows_[row], col);
}

void F2Decomposition::detach(int j) {
  const int l = col_low_[j];
  if (l >= 0 && low_to_col_[l] == j) low_to_col_[l] = -1;
  col_low_[j] = -1;
}

// Re-inserts column j into the low table, restoring reducedness by adding
// earlier columns into later ones.
void F2Decomposition::settle(int j) {
  while (true) {
    if (r_[j].empty()) {
      col_low_[j] = -1;
      return;
    }
    const int l = r_[j].back();
    const int other = low_to_col_[l];
    if (other < 0 || other == j) {
      low_to_col_[l] = j;
      col_low_[j] = l;
      return;
    }
    if (other < j) {
      add_column(other, j);
      continue;
    }
    low_to_col_[l] = j;
    col_low_[j] = l;
    col_low_[other] = -1;
    add_column(j, other);
    j = other;
  }
}

void F2Decomposition::swap_columns(int i) {
  const int n = num_cols();
  if (i < 0 || i + 1 >= n) throw std::out_of_range("swap_columns index");
  const bool coupled = v_entry(i, i + 1);
  detach(i);
  detach(i + 1);
  // R <- R P, V <- P V P, U <- P U P
  std::swap(r_[i], r_[i + 1]);
  std::swap(v_[i], v_[i + 1]);
  for (int j = i; j < n; ++j) relabel_adjacent(v_[j], i);
  if (track_inverse_) {
    std::swap(u_rows_[i], u_rows_[i + 1]);
    for (int k = 0; k <= i + 1; ++k) relabel_adjacent(u_rows_[k], i);
  }
  if (coupled) {
    // V[i+1, i] became nonzero: clear it with column i+1.
    add_column(i + 1, i);
  }
  settle(i);
  settle(i + 1);
}

void F2Decomposition::swap_rows(int i) {
  if (i < 0 || i + 1 >= num_rows_) throw std::out_of_range("swap_rows index");
  const int a = low_to_col_[i];
  const int b = low_to_col_[i + 1];
  if (a >= 0) detach(a);
  if (b >= 0) detach(b);
  // Only columns with an entry in row i or i+1 change; their lows are
  // affected only when the low itself was i or i+1.
  for (auto& c : r_) {
    if (c.empty() || c.back() < i) continue;
    relabel_adjacent(c, i);
  }
  if (a >= 0 && b >= 0) {
    settle(std::min(a, b));
    settle(std::max(a, b));
  } else if (a >= 0) {
    settle(a);
  } else if (b >= 0) {
    settle(b);
  }
}

Column F2Decomposition::solve_u_row(int i, int end_col) const {
  // U V = I, V upper unitriangular: u_j = sum_{i <= k < j} u_k V[k, j].
  Column out{i};
  std::vector<char> in_row(static_cast<std::size_t>(std::max(end_col, i + 1)), 0);
  in_row[i] = 1;
  for (int j = i + 1; j < end_col; ++j) {
    int parity = 0;
    for (auto k : v_[j]) {
      if (k >= j) break;
      if (k >= i && in_row[k]) parity ^= 1;
    }
    if (parity) {
      in_row[j] = 1;
      out.push_back(j);
    }
  }
  return out;
}

}  // namespace topo
