#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "topo/filtrations.hpp"
#include "topo/losses.hpp"
#include "topo/metrics.hpp"

namespace topo {

using Rng = std::mt19937_64;

/// Plain composition through the current pairing.
ParamGradient vanilla_gradient(const Eigen::MatrixXd& theta, const Objective& obj);

// ---------------------------------------------------------------- strata

struct StratumSample {
  Eigen::MatrixXd theta;
  std::vector<std::int64_t> key;  // FiltrationFamily::stratum_key
};

/// Uniform draws in the Frobenius ball of radius eps around theta, one per
/// distinct total order. theta's own stratum comes first. Stops at m strata
/// or after 20*m draws.
std::vector<StratumSample> sample_strata(const Eigen::MatrixXd& theta, double eps, int m,
                                         const FiltrationFamily& family, Rng& rng);

/// Minimum-norm point of the convex hull of the inputs (Wolfe's method).
/// `weights`, when given, receives the convex coefficients.
ParamGradient min_norm_point(const std::vector<ParamGradient>& g,
                             std::vector<double>* weights = nullptr);

struct StratifiedConfig {
  double eps = 0.1;     // initial neighborhood radius
  int m = 4;            // strata per sample
  double gamma = 0.5;   // radius shrink rate
  double beta = 0.5;    // decrease constant
  double lipschitz = 1.0;
  double eta = 1e-6;    // stationarity threshold on the norm
  void validate() const;
};

struct StratifiedStep {
  ParamGradient gradient;
  double alpha = 0.0;   // 0 signals stationarity
  double radius = 0.0;  // final neighborhood radius
  int strata = 0;       // gradients in the final hull
  int rounds = 0;       // samplings performed
};

/// Shrinks the radius by gamma, resampling each time, until
/// radius <= (1 - beta) / (2C) * |g|; alpha = radius / |g|.
StratifiedStep stratified_gradient(const Eigen::MatrixXd& theta, const StratifiedConfig& cfg,
                                   const Objective& obj, Rng& rng);
/// One sample; if the guard fails the radius drops to the bound in one go
/// and the hull is rebuilt from the samples inside it.
StratifiedStep stratified_gradient_const(const Eigen::MatrixXd& theta,
                                         const StratifiedConfig& cfg, const Objective& obj,
                                         Rng& rng);

/// The constant-time rule on a sample already drawn at radius cfg.eps;
/// gs as returned by strata_gradients.
StratifiedStep stratified_from_samples(const Eigen::MatrixXd& theta, const StratifiedConfig& cfg,
                                      const std::vector<StratumSample>& samples,
                                      const std::vector<ParamGradient>& gs);

/// Vanilla gradients at theta and at one point per sampled stratum.
std::vector<ParamGradient> strata_gradients(const Eigen::MatrixXd& theta,
                                            const std::vector<StratumSample>& samples,
                                            const Objective& obj);

/// Crude Lipschitz bound: twice the largest gradient norm seen at theta and
/// around it.
double estimate_lipschitz(const Eigen::MatrixXd& theta, const Objective& obj, double radius,
                          int probes, Rng& rng);

// --------------------------------------------------------------- big step

struct BigStepReport {
  std::size_t pairs = 0;          // pairs with a nonzero derivative
  std::size_t moved = 0;          // simplices receiving a derivative
  std::size_t reduced_columns = 0;
};

/// Every loss derivative on a critical simplex s becomes a target value
/// f(s) - step * dL/ds. The simplices that must move with s to keep its pair
/// receive s's derivative. A simplex reached by several targets keeps the
/// one farthest from its value, and simplices sharing a witness atom (a
/// critical edge, vertex, ...) contribute once: the sum over the pair simplices
/// among them if there are any, otherwise the largest push.
ParamGradient big_step_gradient(const Eigen::MatrixXd& theta, const Objective& obj, double step,
                                BigStepReport* report = nullptr);

// ----------------------------------------------------------- continuation

/// Rows are the diagram coordinates (b_1, d_1, b_2, d_2, ...) of the lift,
/// columns the flattened parameter (row-major).
Eigen::MatrixXd diagram_jacobian(const Lift& lift, const FiltrationFamily& family,
                                 const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev);

/// Pseudo-inverse via SVD, singular values below cutoff * s_max dropped.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double cutoff = 1e-10);

/// Diagram displacement toward the target: optimal FG_q matching, matched
/// points go to their partner, unmatched ones to the diagonal.
Eigen::MatrixXd continuation_velocity(const Diagram& current, const Diagram& target, double q);

/// X + gamma * J^+ v with v from the current matching to the target diagram of
/// homology dimension `dim`.
PointCloud continuation_step(const PointCloud& x, const FiltrationFamily& family,
                             const Diagram& target, int dim, double q, double gamma);

// ------------------------------------------------------------ distributed

/// Complete complexes shared across subsample draws of the same size. The
/// base family serves its own size; it may be smaller than the cloud.
class SubsampleFamilies {
 public:
  explicit SubsampleFamilies(std::shared_ptr<const FiltrationFamily> base)
      : base_(std::move(base)) {}
  std::shared_ptr<const FiltrationFamily> get(int s);

 private:
  std::shared_ptr<const FiltrationFamily> base_;
  std::vector<std::pair<int, std::shared_ptr<const FiltrationFamily>>> cache_;
};

/// Uniform s-point subset, sorted.
std::vector<int> draw_subsample(int n, int s, Rng& rng);

/// Vanilla gradient of the objective on the sub-cloud, scattered back.
ParamGradient subsample_gradient(const Eigen::MatrixXd& x, const std::vector<int>& rows,
                                 const Objective& obj, SubsampleFamilies& families);

/// Mean of n_sub subsample gradients.
ParamGradient distributed_gradient(const Eigen::MatrixXd& x, const Objective& obj, int n_sub,
                                   int s, Rng& rng, SubsampleFamilies* families = nullptr);

// ---------------------------------------------------------------- diffeo

struct DiffeoConfig {
  double sigma = 0.05;
  double ridge = 0.0;
  void validate() const;
};

/// V(x) = sum_i exp(-|x - c_i|^2 / 2 sigma^2) alpha_i.
struct VectorField {
  Eigen::MatrixXd centers;  // |I| x d
  Eigen::MatrixXd alpha;    // |I| x d
  double sigma = 1.0;
  double ridge_used = 0.0;

  Eigen::RowVectorXd operator()(const Eigen::RowVectorXd& x) const;
  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& x) const;
};

/// Interpolates the nonzero rows of g at their points.
VectorField diffeo_interpolate(const PointCloud& cloud, const ParamGradient& g,
                               const DiffeoConfig& cfg);

}  // namespace topo
