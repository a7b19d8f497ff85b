#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "topo/experiments.hpp"

using namespace topo;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentSpec small_spec(const fs::path& out) {
  auto spec = ExperimentSpec::preset("circle_outlier");
  spec.n_points = 20;
  spec.methods = {Method::vanilla, Method::big_step};
  spec.lrs = {0.064, 0.128};
  spec.decays = {1.0, 0.9};
  spec.steps = 3;
  spec.snapshots = {0, 1, 3};
  spec.out_dir = out.string();
  return spec;
}

}  // namespace

TEST_CASE("gen_circle") {
  CHECK(gen_circle(100, 0.05, true, 0).rows() == 101);
  CHECK(gen_circle(100, 0.05, false, 0).rows() == 100);
  const auto clean = gen_circle(64, 0.0, false, 1);
  for (int i = 0; i < clean.rows(); ++i) CHECK(std::abs(clean.row(i).norm() - 1.0) <= 1e-12);
  CHECK(gen_circle(50, 0.05, true, 7) == gen_circle(50, 0.05, true, 7));
  CHECK(gen_circle(50, 0.05, true, 7) != gen_circle(50, 0.05, true, 8));
  const auto x = gen_circle(50, 0.05, true, 2);
  CHECK(x.row(50).norm() < 0.1);
  CHECK_THROWS(gen_circle(2, 0.0, false, 0));
  CHECK_THROWS(gen_circle(10, -1.0, false, 0));
}

TEST_CASE("gen_sphere") {
  const auto x = gen_sphere(40, 0.0, 3);
  CHECK(x.cols() == 3);
  for (int i = 0; i < x.rows(); ++i) CHECK(std::abs(x.row(i).norm() - 1.0) <= 1e-12);
  CHECK(gen_sphere(40, 0.05, 3) == gen_sphere(40, 0.05, 3));
}

TEST_CASE("circle loss examples") {
  SUBCASE("points inside the box with no loop") {
    Eigen::MatrixXd x(3, 2);
    x << 0, 0, 1, 0, 0.5, 0.1;
    CHECK(circle_loss(3).value(x) == 0.0);
  }
  SUBCASE("a point at (3, 0) adds 1") {
    Eigen::MatrixXd x(3, 2);
    x << 0, 0, 1, 0, 0.5, 0.1;
    Eigen::MatrixXd y = x;
    y.row(2) << 3, 0;
    const auto e = circle_loss(3).evaluate(y);
    CHECK(e.regularizer == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.value == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("clean circle has one dominant bar") {
    const auto x = gen_circle(60, 0.0, false, 4);
    const auto obj = circle_loss(60);
    const auto e = obj.evaluate(x);
    const auto& pts = e.lifts[0].points;
    REQUIRE(!pts.empty());
    double top = 0.0, second = 0.0, fg2 = 0.0;
    for (const auto& p : pts) {
      const double l = p.persistence();
      fg2 += 2.0 * std::pow(l / 2.0, 2.0);  // squared distance to the diagonal
      if (l > top) second = top, top = l;
      else if (l > second) second = l;
    }
    CHECK(top > 0.5);
    CHECK(second < 0.05 * top);
    // loss is minus the FG_2 norm of the diagram, carried by the big bar
    CHECK(e.value == doctest::Approx(-std::sqrt(fg2)).epsilon(1e-12));
    CHECK(e.value == doctest::Approx(-top / std::sqrt(2.0)).epsilon(1e-2));
  }
}

TEST_CASE("presets") {
  const auto c = ExperimentSpec::preset("circle_outlier");
  CHECK(c.methods.size() * c.lrs.size() * c.decays.size() == 5 * 12);
  CHECK(c.lrs == std::vector<double>{0.064, 0.128, 0.256});
  CHECK(c.decays == std::vector<double>{1.0, 0.9, 0.8, 0.7});
  CHECK(experiment_cloud(c).rows() == 101);
  const auto s = ExperimentSpec::preset("circle_subsample");
  CHECK(s.n_points == 2000);
  CHECK(s.base.subsample == 50);
  CHECK(s.base.n_sub == 10);
  CHECK(s.base.diffeo.sigma == 0.05);
  CHECK(experiment_objective(s).family().complex().num_vertices() == 50);
  const auto h2 = ExperimentSpec::preset("sphere_h2");
  CHECK(experiment_cloud(h2).cols() == 3);
  CHECK(experiment_objective(h2).max_dim() == 2);
  CHECK_THROWS(ExperimentSpec::preset("bunny"));
  auto custom = ExperimentSpec::preset("custom");
  CHECK_THROWS(custom.validate());
  custom.input = gen_circle(10, 0.05, false, 0);
  CHECK_NOTHROW(custom.validate());
}

TEST_CASE("run_experiment writes its files and a stable manifest") {
  const auto root = fs::temp_directory_path() / "topo_experiment_test";
  fs::remove_all(root);
  auto spec = small_spec(root / "a");
  const auto r = run_experiment(spec);
  CHECK(r.cells.size() == 8);
  for (const auto& c : r.cells) {
    const auto dir = root / "a" / to_string(c.method) /
                     (c.lr == 0.064 ? (c.decay == 1.0 ? "lr_0.064_decay_1" : "lr_0.064_decay_0.9")
                                    : (c.decay == 1.0 ? "lr_0.128_decay_1" : "lr_0.128_decay_0.9"));
    CHECK(fs::exists(dir / "trace.csv"));
    for (int k : {0, 1, 3}) {
      CHECK(fs::exists(dir / ("snapshot_" + std::to_string(k) + ".csv")));
      // diagrams round-trip through the parser
      std::ifstream in(dir / ("diagram_" + std::to_string(k) + ".csv"));
      const auto dg = read_diagram(in);
      std::stringstream again;
      write_diagram(again, dg);
      CHECK(again.str() == slurp(dir / ("diagram_" + std::to_string(k) + ".csv")));
    }
    std::ifstream tr(dir / "trace.csv");
    CHECK(read_trace(tr).size() == 4);
  }
  CHECK(fs::exists(root / "a" / "timing.csv"));
  CHECK(fs::exists(root / "a" / "timing_summary.csv"));
  CHECK(fs::exists(root / "a" / "initial.csv"));

  spec.out_dir = (root / "b").string();
  spec.threads = 3;
  run_experiment(spec);
  const auto ma = slurp(root / "a" / "manifest.txt"), mb = slurp(root / "b" / "manifest.txt");
  CHECK(!ma.empty());
  CHECK(ma == mb);
  CHECK(ma.find("vanilla.best_lr=") != std::string::npos);
  CHECK(ma.find("time") == std::string::npos);
  fs::remove_all(root);
}

TEST_CASE("run_experiment refuses an unwritable directory") {
  const auto root = fs::temp_directory_path() / "topo_experiment_blocked";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "file") << "x";
  auto spec = small_spec(root / "file" / "sub");
  spec.methods = {Method::vanilla};
  spec.lrs = {0.064};
  spec.decays = {1.0};
  CHECK_THROWS(run_experiment(spec));
  fs::remove_all(root);
}

TEST_CASE("thread count from the environment") {
  ::setenv("TOPO_THREADS", "3", 1);
  CHECK(threads_from_env() == 3);
  ::setenv("TOPO_THREADS", "zero", 1);
  CHECK(threads_from_env() == 1);
  ::unsetenv("TOPO_THREADS");
  CHECK(threads_from_env() == 1);
}
