#pragma once

#include <iosfwd>
#include <limits>
#include <vector>

#include "topo/complex.hpp"
#include "topo/f2_matrix.hpp"

namespace topo {

struct PersistencePair {
  SimplexId birth;
  SimplexId death;
  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

/// Per homology dimension: persistence pairs sorted by the position of the
/// death simplex, and essential (unpaired) simplices sorted by position.
struct PersistencePairing {
  std::vector<std::vector<PersistencePair>> pairs;
  std::vector<std::vector<SimplexId>> essential;

  int max_dim() const { return static_cast<int>(pairs.size()) - 1; }
  friend bool operator==(const PersistencePairing&, const PersistencePairing&) = default;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct DiagramPoint {
  double birth;
  double death;
  double persistence() const { return death - birth; }
  bool essential() const { return death == kInfinity; }
  friend bool operator==(const DiagramPoint&, const DiagramPoint&) = default;
};

using Diagram = std::vector<DiagramPoint>;

struct PersistenceDiagram {
  std::vector<Diagram> dims;
  const Diagram& operator[](int p) const { return dims.at(p); }
  /// Finite points of dimension p.
  Diagram ordinary(int p) const;
};

/// Boundary-matrix reduction of a whole filtration in its total order:
/// R = D V with U = V^{-1}. Row and column k of D stand for order[k].
class ReducedDecomposition {
 public:
  static ReducedDecomposition reduce(const Filtration& f, bool track_inverse = true);

  const Filtration& filtration() const { return filtration_; }
  const OrderingSignature& order() const { return order_; }
  const F2Decomposition& matrix() const { return matrix_; }

  PersistencePairing pairing() const;

  /// Exchanges the simplices at positions i and i+1 (vineyard update).
  /// Throws std::invalid_argument when one is a facet of the other.
  void transpose(int i);

 private:
  ReducedDecomposition(Filtration f, OrderingSignature order, F2Decomposition m)
      : filtration_(std::move(f)), order_(std::move(order)), matrix_(std::move(m)) {}

  Filtration filtration_;
  OrderingSignature order_;
  F2Decomposition matrix_;
};

inline ReducedDecomposition reduce(const Filtration& f) { return ReducedDecomposition::reduce(f); }

/// Returns a copy of dec with positions i and i+1 exchanged.
ReducedDecomposition transpose_adjacent(ReducedDecomposition dec, int i);

/// Persistence pairs via coboundary reduction with clearing, dimension by
/// dimension. Pairs are those of the boundary reduction in the same total
/// order. Dimensions above max_dim (when >= 0) are skipped.
PersistencePairing persistence_pairs(const Filtration& f, int max_dim = -1);
PersistencePairing persistence_pairs(const Filtration& f, const OrderingSignature& order,
                                     int max_dim = -1);

/// Points (f(birth), f(death)) plus (f(essential), inf).
PersistenceDiagram diagram(const Filtration& f, const PersistencePairing& pairing,
                           bool drop_zero_persistence = false);

/// Ordinary points of one dimension aligned with the pairs that create them.
struct Lift {
  int dim = 0;
  Diagram points;
  std::vector<PersistencePair> pairs;
  std::size_t size() const { return points.size(); }
};

/// Points with persistence <= min_persistence are pruned.
Lift ordinary_lift(const Filtration& f, const PersistencePairing& pairing, int dim,
                   double min_persistence = 1e-12);

/// `dim,birth,death` table with 17 significant digits and `inf` for
/// essential deaths.
void write_diagram(std::ostream& out, const PersistenceDiagram& dgm);
PersistenceDiagram read_diagram(std::istream& in);

}  // namespace topo
