// topo-opt: experiment runner, acceptance checks and diagram distances.
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "acceptance.hpp"
#include "topo/experiments.hpp"
#include "topo/metrics.hpp"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kValidationError = 2;

struct RunArgs {
  std::string experiment = "circle_outlier";
  std::vector<std::string> methods;
  int steps = 20;
  std::vector<double> lrs;
  std::vector<double> decays;
  std::uint64_t seed = 0;
  std::uint64_t data_seed = 0;
  std::string out;
  std::string input;
  int points = 0;
};

int run(const RunArgs& a) {
  auto spec = topo::ExperimentSpec::preset(a.experiment);
  if (!a.methods.empty()) {
    spec.methods.clear();
    for (const auto& m : a.methods) spec.methods.push_back(topo::parse_method(m));
  }
  if (!a.lrs.empty()) spec.lrs = a.lrs;
  if (!a.decays.empty()) spec.decays = a.decays;
  spec.steps = a.steps;
  spec.seed = a.seed;
  spec.data_seed = a.data_seed;
  spec.out_dir = a.out;
  spec.threads = topo::threads_from_env();
  if (a.points > 0) spec.n_points = a.points;
  if (!a.input.empty()) {
    std::ifstream in(a.input);
    if (!in) throw std::runtime_error("cannot read " + a.input);
    spec.input = topo::read_point_cloud(in);
  } else if (a.experiment == "custom") {
    throw std::invalid_argument("the custom experiment needs --input");
  }
  const auto r = topo::run_experiment(spec);
  std::cout << fmt::format("{:<13} {:>8} {:>6} {:>12} {:>10}\n", "method", "lr", "decay",
                           "final loss", "time (s)");
  for (const auto& [m, i] : r.best) {
    const auto& c = r.cells[i];
    std::cout << fmt::format("{:<13} {:>8g} {:>6g} {:>12.6f} {:>10.3f}\n", topo::to_string(m),
                             c.lr, c.decay, c.final_loss(), c.total_ms() / 1000.0);
  }
  if (!r.cells.empty())
    std::cout << fmt::format("initial loss {:.6f}; results in {}\n", r.cells.front().initial_loss(),
                             a.out);
  return 0;
}

topo::PersistenceDiagram load_diagram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return topo::read_diagram(in);
}

int distance(const std::string& fa, const std::string& fb, const std::string& q_text, int dim) {
  const double q = q_text == "inf" ? std::numeric_limits<double>::infinity() : std::stod(q_text);
  if (!(q >= 1.0)) throw std::invalid_argument("q must be >= 1 or inf");
  const auto a = load_diagram(fa), b = load_diagram(fb);
  const int top = static_cast<int>(std::max(a.dims.size(), b.dims.size())) - 1;
  // points on the diagonal never change an optimal matching's cost
  auto part = [](const topo::PersistenceDiagram& d, int p) {
    topo::Diagram out;
    if (p < static_cast<int>(d.dims.size()))
      for (const auto& x : d.ordinary(p))
        if (x.death > x.birth) out.push_back(x);
    return out;
  };
  auto one = [&](int p) {
    const auto da = part(a, p), db = part(b, p);
    return std::isinf(q) ? topo::bottleneck_distance(da, db, 2.0)
                         : topo::fg_distance(da, db, q, 2.0).cost;
  };
  if (dim >= 0) {
    std::cout << fmt::format("{:.17g}\n", one(dim));
    return 0;
  }
  for (int p = 0; p <= top; ++p) std::cout << fmt::format("dim {}: {:.17g}\n", p, one(p));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological optimization benchmarks"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress");

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment over its (lr, decay) grid");
  run_cmd
      ->add_option("--experiment", ra.experiment,
                   "circle_outlier, circle_subsample, sphere_h2 or custom")
      ->check(CLI::IsMember({"circle_outlier", "circle_subsample", "sphere_h2", "custom"}));
  run_cmd->add_option("--method", ra.methods,
                      "vanilla, stratified, big_step, continuation, distributed or diffeo "
                      "(repeatable; default: the experiment's methods)")
      ->delimiter(',');
  run_cmd->add_option("--steps", ra.steps, "Gradient steps")->check(CLI::PositiveNumber);
  run_cmd->add_option("--lr", ra.lrs, "Learning rate(s); default: the experiment's grid")
      ->delimiter(',');
  run_cmd->add_option("--decay", ra.decays, "Decay rate(s); default: the experiment's grid")
      ->delimiter(',');
  run_cmd->add_option("--seed", ra.seed, "Seed of the optimizers");
  run_cmd->add_option("--data-seed", ra.data_seed, "Seed of the generated cloud");
  run_cmd->add_option("--points", ra.points, "Override the number of generated points");
  run_cmd->add_option("--input", ra.input, "Starting cloud for the custom experiment");
  run_cmd->add_option("--out", ra.out, "Output directory")->required();

  std::vector<int> only;
  auto* check_cmd = app.add_subcommand("check", "Run the acceptance criteria");
  check_cmd->add_option("--criteria", only, "Subset of criteria (1-10)")
      ->delimiter(',')
      ->check(CLI::Range(1, 10));

  std::string fa, fb, q = "2";
  int dim = -1;
  auto* dist_cmd = app.add_subcommand("distance", "FG_q distance between two diagram files");
  dist_cmd->add_option("--a", fa, "First diagram (dim,birth,death)")->required();
  dist_cmd->add_option("--b", fb, "Second diagram")->required();
  dist_cmd->add_option("--q", q, "Order, a number >= 1 or inf");
  dist_cmd->add_option("--dim", dim, "Homology dimension (default: every dimension)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationError;
  }
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (*run_cmd) return run(ra);
    if (*check_cmd) return topo::acceptance::run(only, std::cout) ? 0 : kValidationError;
    if (*dist_cmd) return distance(fa, fb, q, dim);
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kValidationError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntimeError;
  }
  return 0;
}
