#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "topo/complex.hpp"
#include "topo/f2_matrix.hpp"
#include "topo/persistence.hpp"

namespace topo {

enum class MovingCase { death_earlier, death_later, birth_earlier, birth_later };
const char* to_string(MovingCase c);

/// Simplices that move together with tau so that its partner sigma stays
/// paired with it. `simplices` starts with tau.
struct MovingSet {
  MovingCase which = MovingCase::death_earlier;
  double target = 0.0;  // after clipping to tau's faces/cofaces
  std::vector<SimplexId> simplices;
};

/// The single matrix whose column order decides a (sigma, tau) pair.
///
/// Boundary block (death case): D_p, columns are p-simplices and rows
/// (p-1)-simplices, both in filtration order. Coboundary block (birth case):
/// D_{p+1} anti-transposed, columns are p-simplices and rows (p+1)-simplices,
/// both in reverse filtration order. In both, moving tau is a column move and
/// sigma is the low of tau's reduced column. One block serves every pair of
/// the same kind.
struct BlockMatrix {
  bool coboundary = false;
  int col_dim = 0, row_dim = 0;
  std::vector<SimplexId> col_labels, row_labels;
  std::vector<Column> columns;
  /// Block index of a simplex, looked up by id - first_of_dim.
  std::vector<int> col_index, row_index;
  SimplexId col_base = 0, row_base = 0;

  int col_of(SimplexId s) const { return col_index[s - col_base]; }
  int row_of(SimplexId s) const { return row_index[s - row_base]; }
};

BlockMatrix block_matrix(const Filtration& f, const OrderingSignature& order, int col_dim,
                         bool coboundary);

/// One requested move of tau towards t inside a block.
struct Move {
  MovingCase which = MovingCase::death_earlier;
  double target = 0.0;
  int tau_col = -1;
  int partner_row = -1;
  /// Columns in the value window, nearest to tau first: the p-simplices
  /// strictly between tau and t in the total order.
  std::vector<int> window;
  /// Direction of the move in block order.
  bool later = false;
};

/// Classifies the move and clips t so that tau does not pass its own faces,
/// cofaces or partner.
MovingCase classify_move(const Filtration& f, const OrderingSignature& order, SimplexId tau,
                         SimplexId sigma, double t);
double clip_target(const Filtration& f, SimplexId tau, SimplexId sigma, double t);
Move locate_move(const BlockMatrix& b, const Filtration& f, const OrderingSignature& order,
                 SimplexId tau, SimplexId sigma, double t);

/// How the naive simulation decides that a window simplex joins the set.
enum class NaiveRule {
  partner_joins,  // the window simplex becomes sigma's partner after the jump
  tau_loses       // tau is no longer sigma's partner after the jump
};

/// Moves tau's block past each window simplex in turn and re-reduces the
/// block; a simplex that would take over sigma joins the block instead.
/// `preserved` reports whether tau is still sigma's partner at the end.
MovingSet moving_set_naive(const Filtration& f, const OrderingSignature& order, SimplexId tau,
                           SimplexId sigma, double t, NaiveRule rule = NaiveRule::partner_joins,
                           bool* preserved = nullptr);

/// Reads the set off the reduction of the block: the support of V's column
/// of tau when moving earlier in block order, of U's row of tau when moving
/// later, restricted to the window.
MovingSet moving_set_fast(const Filtration& f, const OrderingSignature& order, SimplexId tau,
                          SimplexId sigma, double t);

MovingSet moving_set_naive(const ReducedDecomposition& dec, SimplexId tau, SimplexId sigma,
                           double t);
MovingSet moving_set_fast(const ReducedDecomposition& dec, SimplexId tau, SimplexId sigma, double t);

/// Reduction of a block that only ever reduces the columns it is asked for.
/// Owners of pivots come from a known pairing, so a column is reduced exactly
/// as the left-to-right algorithm would, without touching unrelated columns.
class LazyBlockReduction {
 public:
  /// owner[row] = column whose reduced low is `row`, or -1.
  LazyBlockReduction(const std::vector<Column>* columns, std::vector<int> owner);

  /// Column j of V (sorted column indices).
  const Column& v_column(int j);
  /// Entries of U's row i with column index < end.
  Column u_row(int i, int end);

  std::size_t reduced_columns() const { return reduced_; }

 private:
  struct Entry {
    Column r, v;
    bool done = false;
  };
  // Dense working columns, one pair per recursion depth.
  struct Accumulator {
    std::vector<std::uint64_t> r, v;
  };
  void reduce(int j);

  const std::vector<Column>* columns_;
  std::vector<int> owner_;
  std::vector<Entry> cache_;
  std::vector<std::unique_ptr<Accumulator>> pool_;
  std::size_t depth_ = 0;
  std::size_t reduced_ = 0;
};

/// Owner table of a block from a persistence pairing of the same order.
std::vector<int> block_owners(const BlockMatrix& block, const PersistencePairing& pairing);

/// Fast moving set from a lazily reduced block (large complexes).
MovingSet moving_set_lazy(const BlockMatrix& block, const Move& move, LazyBlockReduction& lazy);

}  // namespace topo
