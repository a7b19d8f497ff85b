#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topo/gradient_schemes.hpp"
#include "topo/losses.hpp"

namespace topo {

enum class Method { vanilla, stratified, big_step, continuation, distributed, diffeo };
std::string to_string(Method m);
/// Throws std::invalid_argument on an unknown name.
Method parse_method(const std::string& name);

enum class Schedule {
  geometric,  // lr * decay^k
  harmonic    // lr / (k + 1)
};

struct DescentConfig {
  Method method = Method::vanilla;
  int steps = 20;
  double lr = 0.1;
  double decay = 1.0;
  Schedule schedule = Schedule::geometric;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  /// Steps whose parameters are kept in the trace.
  std::vector<int> snapshots;

  // stratified: the radius of step k is the scheduled step size unless
  // fixed_radius is set; C <= 0 means estimate it at the start
  StratifiedConfig stratified{};
  bool fixed_radius = false;
  bool constant_time = false;
  int max_rejections = 40;

  // continuation: with a target diagram the velocity follows the optimal
  // matching, otherwise it is minus the loss derivative in diagram space
  int continuation_dim = 1;
  double continuation_q = 2.0;
  std::optional<Diagram> continuation_target;

  // vanilla, distributed and diffeo: gradients of one (or n_sub) random
  // subsamples of this size
  int n_sub = 10;
  int subsample = 0;  // 0: the full cloud (not for distributed)
  DiffeoConfig diffeo{};

  /// Loss reported in the trace on a fixed subsample of this size (0: all).
  int eval_subsample = 0;

  void validate() const;
};

/// Step size at step k (0-based).
double step_size(const DescentConfig& cfg, int k);

struct TraceRow {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // vanilla gradient at this iterate
  double time_ms = 0.0;    // cumulative time spent on updates
};

/// One accepted stratified step: theta_{k+1} = theta_k - alpha g.
struct AcceptedStep {
  int step = 0;
  double alpha = 0.0;
  double grad_sq = 0.0;  // |g|^2
  double radius = 0.0;
  double lipschitz = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  std::map<int, Eigen::MatrixXd> snapshots;
  std::string stop_reason = "budget";
  // stratified driver
  std::vector<AcceptedStep> accepted;
  int rejected_steps = 0;
};

/// `step,loss,grad_norm,time_ms` table.
void write_trace(std::ostream& out, const Trace& t);
std::vector<TraceRow> read_trace(std::istream& in);

struct DescentResult {
  Eigen::MatrixXd theta;
  Trace trace;
};

/// theta_{k+1} = theta_k - s_k (g_k + noise). Stratified steps use the
/// returned alpha and are only accepted when
/// L(theta - alpha g) <= L(theta) - beta alpha |g|^2; a rejected step is
/// recomputed with C doubled, and every step starts again from the base C.
/// Stops early on stationarity or a non-finite loss.
DescentResult descend(const Eigen::MatrixXd& theta0, const Objective& obj,
                      const DescentConfig& cfg);

struct GoldsteinResult {
  bool stationary = false;
  double norm = 0.0;
  int strata = 0;
};

/// Distance from 0 to the hull of the gradients of the strata met in the
/// eps-ball, compared to eta.
GoldsteinResult goldstein_check(const Eigen::MatrixXd& theta, double eps, int m,
                                const Objective& obj, double eta, Rng& rng);

}  // namespace topo
