#include "topo/experiments.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace topo {

PointCloud gen_circle(int n, double noise_std, bool outlier, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("gen_circle: need at least 3 points");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("gen_circle: noise must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PointCloud x(n + (outlier ? 1 : 0), 2);
  for (int i = 0; i < n; ++i) {
    const double a = angle(rng);
    const double r = 1.0 + noise_std * gauss(rng);
    x(i, 0) = r * std::cos(a);
    x(i, 1) = r * std::sin(a);
  }
  if (outlier) {
    x(n, 0) = 0.01 * gauss(rng);
    x(n, 1) = 0.01 * gauss(rng);
  }
  return x;
}

PointCloud gen_sphere(int n, double noise_std, std::uint64_t seed) {
  if (n < 4) throw std::invalid_argument("gen_sphere: need at least 4 points");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("gen_sphere: noise must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  PointCloud x(n, 3);
  for (int i = 0; i < n; ++i) {
    Eigen::RowVector3d p;
    do {
      p = {gauss(rng), gauss(rng), gauss(rng)};
    } while (p.norm() < 1e-12);
    x.row(i) = p.normalized() * (1.0 + noise_std * gauss(rng));
  }
  return x;
}

Objective circle_loss(int n) {
  return Objective(std::make_shared<VietorisRips>(n, 2), {{1, make_norm_to_empty(-1.0), 1.0}},
                   box_confinement(2.0));
}

Objective sphere_loss(int n) {
  return Objective(std::make_shared<VietorisRips>(n, 3),
                   {{2, make_total_persistence(-1.0, 2.0), 1.0}}, box_confinement(1.0));
}

ExperimentSpec ExperimentSpec::preset(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  s.lrs = {0.064, 0.128, 0.256};
  s.decays = {1.0, 0.9, 0.8, 0.7};
  s.base.stratified.lipschitz = 0.0;  // estimated at the start
  s.base.constant_time = true;
  s.base.diffeo.sigma = 0.05;
  if (name == "circle_outlier" || name == "custom") {
    s.methods = {Method::vanilla, Method::stratified, Method::big_step, Method::continuation,
                 Method::diffeo};
  } else if (name == "circle_subsample") {
    s.n_points = 2000;
    s.outlier = false;
    s.methods = {Method::vanilla, Method::diffeo, Method::distributed};
    s.lrs = {0.064};
    s.decays = {1.0};
    s.base.subsample = 50;
    s.base.n_sub = 10;
    s.base.eval_subsample = 100;
    s.loss_points = 50;
  } else if (name == "sphere_h2") {
    s.n_points = 500;
    s.outlier = false;
    s.methods = {Method::vanilla, Method::diffeo, Method::distributed};
    s.lrs = {0.064};
    s.decays = {1.0};
    s.base.subsample = 40;
    s.base.n_sub = 10;
    s.base.eval_subsample = 40;
    s.loss_points = 40;
  } else {
    throw std::invalid_argument("unknown experiment '" + name + "'");
  }
  return s;
}

void ExperimentSpec::validate() const {
  if (name != "circle_outlier" && name != "circle_subsample" && name != "sphere_h2" &&
      name != "custom")
    throw std::invalid_argument("unknown experiment '" + name + "'");
  if (name == "custom" && (input.rows() < 3 || (input.cols() != 2 && input.cols() != 3)))
    throw std::invalid_argument("custom experiment needs a 2D or 3D input cloud of >= 3 points");
  if (name != "custom" && n_points < 4) throw std::invalid_argument("need at least 4 points");
  if (methods.empty() || lrs.empty() || decays.empty())
    throw std::invalid_argument("experiment needs methods and a non-empty grid");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (loss_points < 0) throw std::invalid_argument("loss_points must be >= 0");
  for (Method m : methods) {
    for (double lr : lrs)
      for (double d : decays) {
        DescentConfig c = base;
        c.method = m;
        c.lr = lr;
        c.decay = d;
        c.steps = steps;
        c.validate();
      }
  }
}

PointCloud experiment_cloud(const ExperimentSpec& spec) {
  if (spec.name == "custom") return spec.input;
  if (spec.name == "sphere_h2") return gen_sphere(spec.n_points, spec.noise, spec.data_seed);
  return gen_circle(spec.n_points, spec.noise, spec.outlier, spec.data_seed);
}

Objective experiment_objective(const ExperimentSpec& spec) {
  const bool sphere = spec.name == "sphere_h2" || (spec.name == "custom" && spec.input.cols() == 3);
  int n = spec.loss_points;
  if (n == 0) n = static_cast<int>(experiment_cloud(spec).rows());
  return sphere ? sphere_loss(n) : circle_loss(n);
}

int threads_from_env() {
  const char* v = std::getenv("TOPO_THREADS");
  if (!v || !*v) return 1;
  try {
    const int t = std::stoi(v);
    if (t >= 1) return t;
  } catch (const std::exception&) {
  }
  spdlog::warn("TOPO_THREADS='{}' is not a positive integer, using 1", v);
  return 1;
}

namespace {

namespace fs = std::filesystem;

std::string num(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out.precision(17);
  return out;
}

fs::path cell_dir(const ExperimentSpec& spec, const CellResult& c) {
  return fs::path(spec.out_dir) / to_string(c.method) /
         ("lr_" + num(c.lr) + "_decay_" + num(c.decay));
}

void write_cell(const ExperimentSpec& spec, const Objective& obj, const CellResult& c,
                bool diagrams) {
  const fs::path dir = cell_dir(spec, c);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "trace.csv");
    write_trace(out, c.result.trace);
  }
  for (const auto& [k, x] : c.result.trace.snapshots) {
    auto out = open_out(dir / ("snapshot_" + std::to_string(k) + ".csv"));
    write_point_cloud(out, x);
    if (!diagrams) continue;
    const auto ev = obj.family().evaluate(x);
    const auto pairing = persistence_pairs(ev.filtration, obj.max_dim());
    auto dg = open_out(dir / ("diagram_" + std::to_string(k) + ".csv"));
    // zero-length Rips bars number in the thousands and carry no information
    write_diagram(dg, diagram(ev.filtration, pairing, true));
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult r;
  r.initial = experiment_cloud(spec);
  const Objective obj = experiment_objective(spec);

  for (Method m : spec.methods)
    for (double lr : spec.lrs)
      for (double d : spec.decays) r.cells.push_back({m, lr, d, {}});

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(r.cells.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < r.cells.size(); i = next++) {
      auto& c = r.cells[i];
      DescentConfig cfg = spec.base;
      cfg.method = c.method;
      cfg.lr = c.lr;
      cfg.decay = c.decay;
      cfg.steps = spec.steps;
      cfg.seed = spec.seed;
      // the requested steps that exist, plus the last one
      cfg.snapshots.clear();
      for (int k : spec.snapshots)
        if (k <= spec.steps) cfg.snapshots.push_back(k);
      cfg.snapshots.push_back(spec.steps);
      try {
        c.result = descend(r.initial, obj, cfg);
        spdlog::info("{} lr={} decay={}: loss {:.6f} -> {:.6f} in {:.0f} ms", to_string(c.method),
                     c.lr, c.decay, c.initial_loss(), c.final_loss(), c.total_ms());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int nt = std::min<int>(spec.threads, static_cast<int>(r.cells.size()));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const auto& c = r.cells[i];
    auto it = r.best.find(c.method);
    const double loss = c.final_loss();
    if (it == r.best.end() ||
        (std::isfinite(loss) && !(r.cells[it->second].final_loss() <= loss)))
      r.best[c.method] = i;
  }

  if (!spec.out_dir.empty()) {
    const fs::path root(spec.out_dir);
    fs::create_directories(root);
    const bool diagrams = spec.loss_points == 0;
    for (const auto& c : r.cells) write_cell(spec, obj, c, diagrams);
    {
      auto out = open_out(root / "initial.csv");
      write_point_cloud(out, r.initial);
    }
    {
      auto out = open_out(root / "timing.csv");
      out << "method,lr,decay,steps_run,total_ms,best\n";
      for (std::size_t i = 0; i < r.cells.size(); ++i) {
        const auto& c = r.cells[i];
        out << to_string(c.method) << ',' << c.lr << ',' << c.decay << ','
            << c.result.trace.rows.size() - 1 << ',' << c.total_ms() << ','
            << (r.best.at(c.method) == i ? 1 : 0) << '\n';
      }
    }
    {
      // per method: the selected cell and the whole grid
      auto out = open_out(root / "timing_summary.csv");
      out << "method,best_cell_ms,grid_total_ms,cells\n";
      for (Method m : spec.methods) {
        double grid = 0.0;
        int cells = 0;
        for (const auto& c : r.cells)
          if (c.method == m) grid += c.total_ms(), ++cells;
        out << to_string(m) << ',' << r.cells[r.best.at(m)].total_ms() << ',' << grid << ','
            << cells << '\n';
      }
    }
    auto out = open_out(root / "manifest.txt");
    write_manifest(out, spec, r);
  }
  return r;
}

void write_manifest(std::ostream& out, const ExperimentSpec& spec, const ExperimentResult& r) {
  auto list = [](const auto& v, auto f) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + f(x);
    return s;
  };
  out.precision(17);
  out << "experiment=" << spec.name << '\n';
  out << "points=" << r.initial.rows() << '\n';
  out << "dimension=" << r.initial.cols() << '\n';
  out << "data_seed=" << spec.data_seed << '\n';
  out << "seed=" << spec.seed << '\n';
  out << "steps=" << spec.steps << '\n';
  out << "methods=" << list(spec.methods, [](Method m) { return to_string(m); }) << '\n';
  out << "grid.lr=" << list(spec.lrs, num) << '\n';
  out << "grid.decay=" << list(spec.decays, num) << '\n';
  out << "snapshots=" << list(spec.snapshots, [](int k) { return std::to_string(k); }) << '\n';
  if (!r.cells.empty()) out << "initial_loss=" << r.cells.front().initial_loss() << '\n';
  for (Method m : spec.methods) {
    const auto& c = r.cells[r.best.at(m)];
    const std::string k = to_string(m);
    out << k << ".best_lr=" << c.lr << '\n';
    out << k << ".best_decay=" << c.decay << '\n';
    out << k << ".final_loss=" << c.final_loss() << '\n';
    out << k << ".steps_run=" << c.result.trace.rows.size() - 1 << '\n';
    out << k << ".stop=" << c.result.trace.stop_reason << '\n';
    out << k << ".dir=" << (fs::path(to_string(m)) / cell_dir(spec, c).filename()).string()
        << '\n';
  }
}

}  // namespace topo
