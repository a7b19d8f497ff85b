#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "topo/complex.hpp"

namespace topo {

/// n x d coordinates, one point per row.
using PointCloud = Eigen::MatrixXd;
/// Same shape as the parameter it differentiates.
using ParamGradient = Eigen::MatrixXd;

/// Table with header `x0,x1,...`; one point per row.
PointCloud read_point_cloud(std::istream& in);
void write_point_cloud(std::ostream& out, const PointCloud& x);

/// Rows with at least one nonzero entry.
std::vector<int> support_rows(const ParamGradient& g);

/// Sparse derivative of one filtration value: a few nonzero parameter rows.
struct GradientTerm {
  int row;
  Eigen::RowVectorXd value;
};
using SparseGradient = std::vector<GradientTerm>;

/// out += scale * g
void scatter(const SparseGradient& g, double scale, ParamGradient& out);

/// What realizes a simplex's value. For Rips kinds (a, b) is the critical
/// edge; for lower-star and height `a` is the critical vertex; for raw values
/// `a` is the simplex whose raw value is attained. `branch` distinguishes the
/// weighted Rips cases.
struct Witness {
  enum Branch : std::int8_t { kEdge = 0, kVertex = 1 };
  std::int32_t a = -1;
  std::int32_t b = -1;
  Branch branch = kEdge;
  friend bool operator==(const Witness&, const Witness&) = default;
};

struct EvaluatedFiltration {
  Filtration filtration;
  std::vector<Witness> witnesses;
  /// Distinct witness atoms share a value: the parameter sits on a stratum
  /// boundary and the tie-break picked one side.
  bool on_boundary = false;
  /// Weighted Rips only: per-point weights and, for DTM, the neighbor sets
  /// they were computed from.
  std::vector<double> weights;
  std::vector<std::vector<int>> neighbors;
};

enum class FamilyKind { vietoris_rips, weighted_rips, lower_star, height, raw_values };
std::string to_string(FamilyKind k);

/// A parametrized family theta -> F(theta) on a fixed complex. Parameters are
/// always a matrix: points (n x d), vertex values (n x 1), a direction (1 x d)
/// or raw simplex values (|K| x 1).
class FiltrationFamily {
 public:
  virtual ~FiltrationFamily() = default;

  virtual FamilyKind kind() const = 0;
  const std::shared_ptr<const SimplicialComplex>& complex_ptr() const { return complex_; }
  const SimplicialComplex& complex() const { return *complex_; }
  /// True when parameter rows are points in space.
  bool point_cloud_parameters() const {
    return kind() == FamilyKind::vietoris_rips || kind() == FamilyKind::weighted_rips;
  }

  virtual EvaluatedFiltration evaluate(const Eigen::MatrixXd& theta) const = 0;
  /// Derivative of the value of simplex s at theta.
  virtual SparseGradient gradient(const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev,
                                  SimplexId s) const = 0;
  /// Value recomputed from the witness alone.
  virtual double witness_value(const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev,
                               SimplexId s) const = 0;
  /// Equal keys mean equal total orders. The default is the order itself.
  virtual std::vector<std::int64_t> stratum_key(const Eigen::MatrixXd& theta) const;

 protected:
  explicit FiltrationFamily(std::shared_ptr<const SimplicialComplex> k) : complex_(std::move(k)) {}
  std::shared_ptr<const SimplicialComplex> complex_;
};

/// Half of the Euclidean distance, the Rips edge value.
double half_distance(const PointCloud& x, int i, int j);

/// Complete complex up to max_dim; value is half the diameter. The witness is
/// the lexicographically smallest farthest pair.
class VietorisRips final : public FiltrationFamily {
 public:
  VietorisRips(int num_points, int max_dim);
  /// Reuses an existing complete complex.
  explicit VietorisRips(std::shared_ptr<const SimplicialComplex> complete);

  FamilyKind kind() const override { return FamilyKind::vietoris_rips; }
  EvaluatedFiltration evaluate(const Eigen::MatrixXd& x) const override;
  SparseGradient gradient(const Eigen::MatrixXd& x, const EvaluatedFiltration& ev,
                          SimplexId s) const override;
  double witness_value(const Eigen::MatrixXd& x, const EvaluatedFiltration& ev,
                       SimplexId s) const override;
  /// Every value is an edge value, so the ranking of the edges (with ties)
  /// fixes the order.
  std::vector<std::int64_t> stratum_key(const Eigen::MatrixXd& x) const override;
};

/// Point weights f for weighted Rips.
struct WeightSpec {
  enum class Type { constant, function, dtm };
  Type type = Type::constant;
  std::vector<double> constant;  // one per point
  std::function<double(const Eigen::RowVectorXd&)> fn;
  std::function<Eigen::RowVectorXd(const Eigen::RowVectorXd&)> fn_gradient;
  int k = 0;  // dtm neighbors

  static WeightSpec constant_weights(std::vector<double> w);
  static WeightSpec function(std::function<double(const Eigen::RowVectorXd&)> f,
                             std::function<Eigen::RowVectorXd(const Eigen::RowVectorXd&)> grad);
  static WeightSpec dtm(int k);
};

/// Mean distance from each point to its k nearest other points, with the
/// neighbor sets used (ties by index).
std::vector<double> dtm_weights(const PointCloud& x, int k, std::vector<std::vector<int>>* nbrs);

/// Vertex value 2f(x_i); edge value max{2f(x_i), 2f(x_j), |x_i - x_j| + f(x_i) + f(x_j)};
/// higher simplices take the max over their edges. On equal branches the edge
/// term wins, then the larger-weight vertex, then the smaller vertex id.
class WeightedRips final : public FiltrationFamily {
 public:
  WeightedRips(int num_points, int max_dim, WeightSpec w);

  FamilyKind kind() const override { return FamilyKind::weighted_rips; }
  const WeightSpec& weights() const { return spec_; }
  EvaluatedFiltration evaluate(const Eigen::MatrixXd& x) const override;
  SparseGradient gradient(const Eigen::MatrixXd& x, const EvaluatedFiltration& ev,
                          SimplexId s) const override;
  double witness_value(const Eigen::MatrixXd& x, const EvaluatedFiltration& ev,
                       SimplexId s) const override;

 private:
  SparseGradient weight_gradient(const Eigen::MatrixXd& x, const EvaluatedFiltration& ev,
                                 int i) const;
  WeightSpec spec_;
};

/// Value of a simplex is the max over its vertices of f (an n x 1 parameter);
/// ties go to the smallest vertex id.
class LowerStar final : public FiltrationFamily {
 public:
  explicit LowerStar(std::shared_ptr<const SimplicialComplex> k);

  FamilyKind kind() const override { return FamilyKind::lower_star; }
  EvaluatedFiltration evaluate(const Eigen::MatrixXd& f) const override;
  SparseGradient gradient(const Eigen::MatrixXd& f, const EvaluatedFiltration& ev,
                          SimplexId s) const override;
  double witness_value(const Eigen::MatrixXd& f, const EvaluatedFiltration& ev,
                       SimplexId s) const override;
};

/// Lower-star of x -> <x, theta/|theta|> for a complex embedded by `coords`.
/// theta is a 1 x d direction; non-unit directions are normalized with a
/// warning.
class Height final : public FiltrationFamily {
 public:
  Height(std::shared_ptr<const SimplicialComplex> k, PointCloud coords);

  FamilyKind kind() const override { return FamilyKind::height; }
  const PointCloud& coordinates() const { return coords_; }
  EvaluatedFiltration evaluate(const Eigen::MatrixXd& theta) const override;
  SparseGradient gradient(const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev,
                          SimplexId s) const override;
  double witness_value(const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev,
                       SimplexId s) const override;

 private:
  PointCloud coords_;
};

/// Parameters are the filtration values themselves (|K| x 1). A simplex takes
/// the max of its own raw value and its faces' values, so any parameter gives
/// a monotone filtration; on ties the simplex itself is the witness.
class RawValues final : public FiltrationFamily {
 public:
  explicit RawValues(std::shared_ptr<const SimplicialComplex> k);

  FamilyKind kind() const override { return FamilyKind::raw_values; }
  EvaluatedFiltration evaluate(const Eigen::MatrixXd& theta) const override;
  SparseGradient gradient(const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev,
                          SimplexId s) const override;
  double witness_value(const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev,
                       SimplexId s) const override;
};

/// Clamps raw values into a monotone filtration after an update that moved
/// `moved` simplices: cofaces are raised to at least their faces, then faces
/// lowered to at most their cofaces, keeping moved values where possible.
void repair_monotone(const SimplicialComplex& k, std::vector<double>& values,
                     const std::vector<SimplexId>& moved);

/// Total order of F(theta) with the boundary flag set.
OrderingSignature strata_signature(const Eigen::MatrixXd& theta, const FiltrationFamily& family);

}  // namespace topo
