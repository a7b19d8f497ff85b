#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "topo/filtrations.hpp"
#include "topo/metrics.hpp"
#include "topo/persistence.hpp"

namespace topo {

/// Value and per-point derivatives (m x 2: d/dbirth, d/ddeath). Essential
/// points contribute nothing and get zero rows.
struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd gradient;
};

/// sign * 1/2 sum (d-b)^p.
LossResult total_persistence(const Diagram& a, double sign = 1.0, double p = 2.0,
                             bool death_only = false);
/// sum (d-b) over points with d-b < eta (strict).
LossResult simplification_loss(const Diagram& a, double eta);
/// 1/2 FG_2(a, target)^2; the gradient holds the optimal matching fixed.
LossResult distance_to_target(const Diagram& a, const Diagram& target);
/// sign * FG_2(a, empty) = sign * sqrt(sum (d-b)^2 / 2).
LossResult norm_to_empty(const Diagram& a, double sign = 1.0);
/// |a[index] - q0|; zero gradient when they coincide.
LossResult singleton_loss(const Diagram& a, std::size_t index, const DiagramPoint& q0);

/// Sum of Gaussian bumps exp(-|g - x|^2 / (2 s^2)) over the points, sampled
/// at the grid nodes (k x 2). jacobian is k x 2m with columns (b_i, d_i).
struct Vectorization {
  Eigen::VectorXd values;
  Eigen::MatrixXd jacobian;
};
Vectorization linear_vectorization(const Diagram& a, const Eigen::MatrixX2d& grid, double s);
/// Regular n_b x n_d lattice over [lo, hi]^2, row-major in birth.
Eigen::MatrixX2d lattice(double lo, double hi, int n_b, int n_d);

/// A differentiable function of one diagram.
class DiagramLoss {
 public:
  virtual ~DiagramLoss() = default;
  /// `pairs` is aligned with `points`; only singleton-type losses use it.
  virtual LossResult evaluate(const Diagram& points,
                              const std::vector<PersistencePair>& pairs) const = 0;
  /// Singleton-type losses: the pair they act on and its target point.
  virtual bool is_singleton() const { return false; }
};

std::shared_ptr<DiagramLoss> make_total_persistence(double sign = 1.0, double p = 2.0,
                                                    bool death_only = false);
std::shared_ptr<DiagramLoss> make_simplification(double eta);
std::shared_ptr<DiagramLoss> make_distance_to_target(Diagram target);
std::shared_ptr<DiagramLoss> make_norm_to_empty(double sign = 1.0);

/// Pushes the point of one persistence pair toward q0.
class SingletonLoss final : public DiagramLoss {
 public:
  SingletonLoss(PersistencePair pair, DiagramPoint q0) : pair_(pair), q0_(q0) {}
  LossResult evaluate(const Diagram& points,
                      const std::vector<PersistencePair>& pairs) const override;
  bool is_singleton() const override { return true; }
  const PersistencePair& pair() const { return pair_; }
  const DiagramPoint& target() const { return q0_; }

 private:
  PersistencePair pair_;
  DiagramPoint q0_;
};

/// Parameter gradient sum_i dL/db_i grad f(birth_i) + dL/dd_i grad f(death_i).
ParamGradient compose_gradient(const Eigen::MatrixXd& dgm_grad, const Lift& lift,
                               const FiltrationFamily& family, const Eigen::MatrixXd& theta,
                               const EvaluatedFiltration& ev);

/// Penalty on parameters directly, value plus gradient.
using ParamRegularizer = std::function<double(const Eigen::MatrixXd&, Eigen::MatrixXd*)>;
/// sum over coordinates of (|x| - bound)_+^2.
ParamRegularizer box_confinement(double bound);

/// L(theta) = sum_t weight_t * loss_t(Dgm_{dim_t}(F(theta))) + reg(theta).
class Objective {
 public:
  struct Term {
    int dim;
    std::shared_ptr<const DiagramLoss> loss;
    double weight = 1.0;
  };
  struct Evaluation {
    double value = 0.0;
    ParamGradient gradient;
    EvaluatedFiltration ev;
    PersistencePairing pairing;
    std::vector<Lift> lifts;             // one per term
    std::vector<LossResult> term_values;  // one per term
    double regularizer = 0.0;
  };

  Objective(std::shared_ptr<const FiltrationFamily> family, std::vector<Term> terms,
            ParamRegularizer reg = {});

  const FiltrationFamily& family() const { return *family_; }
  const std::shared_ptr<const FiltrationFamily>& family_ptr() const { return family_; }
  const std::vector<Term>& terms() const { return terms_; }
  const ParamRegularizer& regularizer() const { return reg_; }
  int max_dim() const { return max_dim_; }

  Evaluation evaluate(const Eigen::MatrixXd& theta, bool with_gradient = true) const;
  double value(const Eigen::MatrixXd& theta) const { return evaluate(theta, false).value; }

  /// Same loss on another family (for subsampled complexes).
  Objective with_family(std::shared_ptr<const FiltrationFamily> family) const;

 private:
  std::shared_ptr<const FiltrationFamily> family_;
  std::vector<Term> terms_;
  ParamRegularizer reg_;
  int max_dim_ = 0;
};

}  // namespace topo
