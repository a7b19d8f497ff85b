#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <limits>
#include <utility>
#include <vector>

#include "topo/persistence.hpp"

namespace topo {

inline constexpr int kDiagonal = -1;

/// Assignment of the ordinary points of two diagrams. Indices refer to the
/// input diagrams; kDiagonal on one side means the point went to the diagonal.
struct PartialMatching {
  std::vector<std::pair<int, int>> pairs;
  double cost = 0.0;
};

/// Ground distance in the q' norm (q' = infinity allowed).
double ground_distance(const DiagramPoint& a, const DiagramPoint& b, double ground);
/// Distance from a point to the diagonal in the q' norm: (d-b)/2 * 2^{1/q'}.
double diagonal_distance(const DiagramPoint& a, double ground);
/// Orthogonal projection onto the diagonal (the nearest point for every q').
DiagramPoint diagonal_projection(const DiagramPoint& a);

/// Minimum-cost perfect assignment on a square matrix. Returns the total cost
/// and, for each row, its column.
std::pair<double, std::vector<int>> hungarian(const Eigen::MatrixXd& cost);

/// FG_q between the ordinary parts of a and b (essential points dropped).
/// Exact, via the Hungarian method on the (m1+m2) augmented matrix.
PartialMatching fg_distance(const Diagram& a, const Diagram& b, double q = 2.0,
                            double ground = 2.0);

/// Sup-cost version. Binary search over the candidate costs with a
/// bipartite feasibility test.
double bottleneck_distance(const Diagram& a, const Diagram& b,
                           double ground = std::numeric_limits<double>::infinity(),
                           PartialMatching* matching = nullptr);

/// `side_a,side_b` table, -1 for the diagonal.
void write_matching(std::ostream& out, const PartialMatching& m);
PartialMatching read_matching(std::istream& in);

}  // namespace topo
