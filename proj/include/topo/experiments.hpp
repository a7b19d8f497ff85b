#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "topo/filtrations.hpp"
#include "topo/losses.hpp"
#include "topo/optimizer.hpp"

namespace topo {

/// n points at uniform angles on the unit circle with Gaussian radial noise;
/// with `outlier` one more point at the origin, jittered by 0.01.
PointCloud gen_circle(int n, double noise_std, bool outlier, std::uint64_t seed);

/// n points uniform on the unit sphere in R^3 with Gaussian radial noise.
PointCloud gen_sphere(int n, double noise_std, std::uint64_t seed);

/// -FG_2(Dgm^1, empty) + box confinement to [-2, 2]^2 over the full Rips
/// complex of n points.
Objective circle_loss(int n);
/// -FG_2(Dgm^2, empty)^2 + box confinement to [-1, 1]^3.
Objective sphere_loss(int n);

struct ExperimentSpec {
  /// circle_outlier, circle_subsample, sphere_h2 or custom
  std::string name = "circle_outlier";
  int n_points = 100;
  bool outlier = true;
  double noise = 0.05;
  std::uint64_t data_seed = 0;
  /// custom only: the starting cloud (2D clouds get the circle loss, 3D the
  /// sphere loss)
  PointCloud input;

  std::vector<Method> methods;
  std::vector<double> lrs;
  std::vector<double> decays;
  int steps = 20;
  std::uint64_t seed = 0;
  /// Snapshot steps; the final step is always added.
  std::vector<int> snapshots{0, 1, 5, 10, 20};
  /// Method-specific settings; method, lr, decay, steps, seed and snapshots
  /// are set per grid cell.
  DescentConfig base;
  /// Size of the complex the loss is built on when it is smaller than the
  /// cloud (subsampling experiments); 0 for the full cloud.
  int loss_points = 0;

  /// Empty: nothing is written.
  std::string out_dir;
  int threads = 1;

  /// Presets: circle_outlier with the grid lr in {0.064, 0.128, 0.256},
  /// decay in {1, 0.9, 0.8, 0.7}; circle_subsample with n = 2000, s = 50,
  /// sigma = 0.05 and 10 subsamples; sphere_h2 on 500 points through 40-point
  /// subsamples. Throws std::invalid_argument on an unknown name.
  static ExperimentSpec preset(const std::string& name);
  void validate() const;
};

PointCloud experiment_cloud(const ExperimentSpec& spec);
Objective experiment_objective(const ExperimentSpec& spec);

struct CellResult {
  Method method = Method::vanilla;
  double lr = 0.0;
  double decay = 1.0;
  DescentResult result;
  double final_loss() const { return result.trace.rows.back().loss; }
  double initial_loss() const { return result.trace.rows.front().loss; }
  double total_ms() const { return result.trace.rows.back().time_ms; }
};

struct ExperimentResult {
  PointCloud initial;
  std::vector<CellResult> cells;
  /// Per method, the cell with the smallest final loss (first on ties).
  std::map<Method, std::size_t> best;
};

/// Runs every method on every (lr, decay) cell, `threads` cells at a time,
/// and writes per-cell traces, snapshots and diagrams, a timing table and a
/// manifest when out_dir is set.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// key=value lines; no timings, so reruns give identical bytes.
void write_manifest(std::ostream& out, const ExperimentSpec& spec, const ExperimentResult& r);

/// Reads the thread count from TOPO_THREADS (default 1).
int threads_from_env();

}  // namespace topo
