#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

#include "topo/experiments.hpp"
#include "topo/metrics.hpp"

namespace py = pybind11;
using namespace topo;

namespace {

Diagram from_array(const Eigen::MatrixX2d& a) {
  Diagram d;
  for (Eigen::Index i = 0; i < a.rows(); ++i) d.push_back({a(i, 0), a(i, 1)});
  return d;
}

Eigen::MatrixX2d to_array(const Diagram& d) {
  Eigen::MatrixX2d a(static_cast<Eigen::Index>(d.size()), 2);
  for (std::size_t i = 0; i < d.size(); ++i) a.row(static_cast<Eigen::Index>(i)) << d[i].birth, d[i].death;
  return a;
}

Objective loss_for(const Eigen::MatrixXd& x) {
  if (x.cols() == 2) return circle_loss(static_cast<int>(x.rows()));
  if (x.cols() == 3) return sphere_loss(static_cast<int>(x.rows()));
  throw std::invalid_argument("expected a 2D or 3D point cloud");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Persistence-based topological optimization";

  m.def("gen_circle", &gen_circle, py::arg("n"), py::arg("noise") = 0.05,
        py::arg("outlier") = true, py::arg("seed") = 0);
  m.def("gen_sphere", &gen_sphere, py::arg("n"), py::arg("noise") = 0.05, py::arg("seed") = 0);

  m.def(
      "rips_diagram",
      [](const Eigen::MatrixXd& x, int max_dim) {
        VietorisRips vr(static_cast<int>(x.rows()), max_dim + 1);
        const auto ev = vr.evaluate(x);
        const auto dgm = diagram(ev.filtration, persistence_pairs(ev.filtration, max_dim), true);
        std::vector<Eigen::MatrixX2d> out;
        for (int p = 0; p <= max_dim; ++p)
          out.push_back(to_array(p < static_cast<int>(dgm.dims.size()) ? dgm[p] : Diagram{}));
        return out;
      },
      py::arg("points"), py::arg("max_dim") = 1,
      "Rips persistence diagrams (half-distance convention) for dims 0..max_dim; essential "
      "deaths are inf.");

  m.def(
      "fg_distance",
      [](const Eigen::MatrixX2d& a, const Eigen::MatrixX2d& b, double q) {
        const auto da = from_array(a), db = from_array(b);
        return std::isinf(q) ? bottleneck_distance(da, db, 2.0) : fg_distance(da, db, q, 2.0).cost;
      },
      py::arg("a"), py::arg("b"), py::arg("q") = 2.0);

  m.def(
      "experiment_loss",
      [](const Eigen::MatrixXd& x) {
        const auto e = loss_for(x).evaluate(x);
        return py::make_tuple(e.value, Eigen::MatrixXd(e.gradient));
      },
      py::arg("points"),
      "Circle loss for 2D clouds, sphere loss for 3D clouds: (value, gradient).");

  m.def(
      "descend",
      [](const Eigen::MatrixXd& x, const std::string& method, int steps, double lr, double decay,
         std::uint64_t seed) {
        DescentConfig cfg;
        cfg.method = parse_method(method);
        cfg.steps = steps;
        cfg.lr = lr;
        cfg.decay = decay;
        cfg.seed = seed;
        cfg.stratified.lipschitz = 0.0;
        if (cfg.method == Method::distributed) cfg.subsample = std::min<int>(50, x.rows());
        const auto r = [&] {
          py::gil_scoped_release release;
          return descend(x, loss_for(x), cfg);
        }();
        py::list rows;
        for (const auto& row : r.trace.rows)
          rows.append(py::make_tuple(row.step, row.loss, row.grad_norm, row.time_ms));
        py::dict out;
        out["theta"] = r.theta;
        out["trace"] = rows;
        out["stop_reason"] = r.trace.stop_reason;
        return out;
      },
      py::arg("points"), py::arg("method") = "vanilla", py::arg("steps") = 20,
      py::arg("lr") = 0.064, py::arg("decay") = 1.0, py::arg("seed") = 0);
}
