#include "topo/optimizer.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace topo {

namespace {

constexpr std::pair<Method, const char*> kMethodNames[] = {
    {Method::vanilla, "vanilla"},           {Method::stratified, "stratified"},
    {Method::big_step, "big_step"},         {Method::continuation, "continuation"},
    {Method::distributed, "distributed"},   {Method::diffeo, "diffeo"},
};

}  // namespace

std::string to_string(Method m) {
  for (const auto& [k, name] : kMethodNames)
    if (k == m) return name;
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (const auto& [k, n] : kMethodNames)
    if (name == n) return k;
  if (name == "big-step") return Method::big_step;
  throw std::invalid_argument("unknown method '" + name + "'");
}

void DescentConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("decay must be in (0, 1]");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
  if (method == Method::stratified) {
    StratifiedConfig c = stratified;
    if (!(c.lipschitz > 0.0)) c.lipschitz = 1.0;  // estimated later
    c.validate();
    if (noise_std > 0.0)
      throw std::invalid_argument("the stratified driver takes no noise: its step is certified");
    if (max_rejections < 0) throw std::invalid_argument("max_rejections must be >= 0");
  }
  if (method == Method::continuation && !(continuation_q >= 1.0))
    throw std::invalid_argument("continuation q must be >= 1");
  if (method == Method::distributed && (n_sub < 1 || subsample < 1))
    throw std::invalid_argument("distributed gradient needs n_sub >= 1 and a subsample size");
  if (method == Method::diffeo) {
    diffeo.validate();
    if (subsample < 0) throw std::invalid_argument("subsample must be >= 0");
  }
  if (eval_subsample < 0) throw std::invalid_argument("eval_subsample must be >= 0");
}

double step_size(const DescentConfig& cfg, int k) {
  if (cfg.schedule == Schedule::harmonic) return cfg.lr / static_cast<double>(k + 1);
  return cfg.lr * std::pow(cfg.decay, k);
}

void write_trace(std::ostream& out, const Trace& t) {
  out << "step,loss,grad_norm,time_ms\n";
  out.precision(17);
  for (const auto& r : t.rows)
    out << r.step << ',' << r.loss << ',' << r.grad_norm << ',' << r.time_ms << '\n';
}

std::vector<TraceRow> read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,loss,grad_norm,time_ms", 0) != 0)
    throw std::runtime_error("trace: missing header");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[4];
    for (auto& x : f) std::getline(ss, x, ',');
    TraceRow r;
    try {
      r.step = std::stoi(f[0]);
      r.loss = std::stod(f[1]);  // accepts nan and inf
      r.grad_norm = std::stod(f[2]);
      r.time_ms = std::stod(f[3]);
    } catch (const std::exception&) {
      throw std::runtime_error("trace: bad line: " + line);
    }
    rows.push_back(r);
  }
  return rows;
}

namespace {

using Clock = std::chrono::steady_clock;

// -J^+ dL/dalpha (or the matching velocity) plus the penalty gradient, so
// that theta - s * direction is the continuation update.
Eigen::MatrixXd continuation_direction(const Eigen::MatrixXd& x, const Objective& obj,
                                       const DescentConfig& cfg) {
  const auto& family = obj.family();
  Eigen::MatrixXd dx;
  if (cfg.continuation_target) {
    dx = (continuation_step(x, family, *cfg.continuation_target, cfg.continuation_dim,
                            cfg.continuation_q, 1.0) -
          x);
  } else {
    const auto e = obj.evaluate(x, true);
    std::vector<Eigen::MatrixXd> blocks;
    std::vector<Eigen::VectorXd> vs;
    Eigen::Index rows = 0;
    for (std::size_t t = 0; t < obj.terms().size(); ++t) {
      const auto& lift = e.lifts[t];
      if (lift.size() == 0) continue;
      blocks.push_back(diagram_jacobian(lift, family, x, e.ev));
      Eigen::VectorXd v(2 * lift.size());
      for (std::size_t i = 0; i < lift.size(); ++i)
        for (int side = 0; side < 2; ++side)
          v(2 * i + side) = -obj.terms()[t].weight * e.term_values[t].gradient(i, side);
      vs.push_back(std::move(v));
      rows += blocks.back().rows();
    }
    dx = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    if (rows > 0) {
      Eigen::MatrixXd jac(rows, x.size());
      Eigen::VectorXd v(rows);
      Eigen::Index at = 0;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        jac.middleRows(at, blocks[b].rows()) = blocks[b];
        v.segment(at, vs[b].size()) = vs[b];
        at += blocks[b].rows();
      }
      const Eigen::VectorXd flat = pseudo_inverse(jac) * v;
      for (Eigen::Index r = 0; r < x.rows(); ++r)
        for (Eigen::Index c = 0; c < x.cols(); ++c) dx(r, c) = flat(r * x.cols() + c);
    }
  }
  Eigen::MatrixXd d = -dx;
  if (obj.regularizer()) {
    Eigen::MatrixXd rg;
    obj.regularizer()(x, &rg);
    d += rg;
  }
  return d;
}

}  // namespace

DescentResult descend(const Eigen::MatrixXd& theta0, const Objective& obj,
                      const DescentConfig& cfg) {
  cfg.validate();
  const bool cloud_only = cfg.method == Method::continuation ||
                          cfg.method == Method::distributed || cfg.method == Method::diffeo;
  if (cloud_only && !obj.family().point_cloud_parameters())
    throw std::invalid_argument(to_string(cfg.method) + " needs point-cloud parameters");
  if ((cfg.subsample > 0 || cfg.eval_subsample > 0) &&
      std::max(cfg.subsample, cfg.eval_subsample) > theta0.rows())
    throw std::invalid_argument("subsample larger than the point cloud");
  // an objective built on fewer points than the cloud is only ever used on
  // subsamples
  const bool partial = obj.family().point_cloud_parameters() &&
                       theta0.rows() != obj.family().complex().num_vertices();
  if (partial) {
    const bool sub_method = cfg.method == Method::vanilla || cfg.method == Method::distributed ||
                            cfg.method == Method::diffeo;
    if (!sub_method || cfg.subsample < 1 || cfg.eval_subsample < 1)
      throw std::invalid_argument(
          "the cloud is larger than the objective's complex: use vanilla, distributed or diffeo "
          "with a subsample and an evaluation subsample");
  }

  Rng rng(cfg.seed);
  SubsampleFamilies fams(obj.family_ptr());
  std::vector<int> eval_rows;
  if (cfg.eval_subsample > 0) {
    Rng eval_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    eval_rows = draw_subsample(static_cast<int>(theta0.rows()), cfg.eval_subsample, eval_rng);
  }
  const Objective eval_obj =
      eval_rows.empty() ? obj : obj.with_family(fams.get(static_cast<int>(eval_rows.size())));
  auto measure = [&](const Eigen::MatrixXd& th) {
    if (eval_rows.empty()) {
      const auto e = obj.evaluate(th, true);
      return std::make_pair(e.value, e.gradient.norm());
    }
    Eigen::MatrixXd sub(eval_rows.size(), th.cols());
    for (std::size_t i = 0; i < eval_rows.size(); ++i) sub.row(i) = th.row(eval_rows[i]);
    const auto e = eval_obj.evaluate(sub, true);
    return std::make_pair(e.value, e.gradient.norm());
  };

  DescentResult res;
  res.theta = theta0;
  Trace& tr = res.trace;
  // time spent on updates only; the trace's own evaluations are not counted
  double elapsed_ms = 0.0;
  auto record = [&](int k) {
    const auto [loss, gn] = measure(res.theta);
    tr.rows.push_back({k, loss, gn, elapsed_ms});
    for (int s : cfg.snapshots)
      if (s == k) tr.snapshots[k] = res.theta;
    return std::isfinite(loss);
  };
  if (!record(0)) {
    tr.stop_reason = "non-finite loss";
    spdlog::error("descend: non-finite loss at the starting point");
    return res;
  }

  double lipschitz = cfg.stratified.lipschitz;
  if (cfg.method == Method::stratified && !(lipschitz > 0.0)) {
    lipschitz = estimate_lipschitz(res.theta, obj, step_size(cfg, 0), cfg.stratified.m, rng);
    spdlog::info("stratified: estimated C = {:.4g}", lipschitz);
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto n = static_cast<int>(theta0.rows());

  for (int k = 0; k < cfg.steps; ++k) {
    const auto tick = Clock::now();
    const double s = step_size(cfg, k);
    Eigen::MatrixXd next;
    if (cfg.method == Method::stratified) {
      StratifiedConfig sc = cfg.stratified;
      sc.lipschitz = lipschitz;
      if (!cfg.fixed_radius) sc.eps = s;
      const double before = obj.value(res.theta);
      bool accepted = false, stationary = false;
      // the constant-time rule draws once per step and only refilters on a
      // rejection; the shrinking rule resumes from the radius it reached
      std::vector<StratumSample> samples;
      std::vector<ParamGradient> gs;
      if (cfg.constant_time) {
        samples = sample_strata(res.theta, sc.eps, sc.m, obj.family(), rng);
        gs = strata_gradients(res.theta, samples, obj);
      }
      for (int attempt = 0; attempt <= cfg.max_rejections; ++attempt) {
        const auto st = cfg.constant_time ? stratified_from_samples(res.theta, sc, samples, gs)
                                          : stratified_gradient(res.theta, sc, obj, rng);
        if (st.alpha == 0.0) {
          stationary = true;
          break;
        }
        next = res.theta - st.alpha * st.gradient;
        const double g2 = st.gradient.squaredNorm();
        const double after = obj.value(next);
        if (after <= before - sc.beta * st.alpha * g2) {
          tr.accepted.push_back({k, st.alpha, g2, st.radius, sc.lipschitz});
          accepted = true;
          break;
        }
        ++tr.rejected_steps;
        sc.lipschitz *= 2.0;
        if (!cfg.constant_time) sc.eps = st.radius;
        spdlog::debug("stratified step {} rejected, C -> {:.4g}", k, sc.lipschitz);
      }
      if (stationary) {
        tr.stop_reason = "stationary";
        break;
      }
      if (!accepted) {
        tr.stop_reason = "no certified decrease";
        spdlog::warn("stratified: no step passed the decrease test at step {}", k);
        break;
      }
    } else {
      Eigen::MatrixXd d;
      switch (cfg.method) {
        case Method::vanilla:
          d = cfg.subsample > 0
                  ? subsample_gradient(res.theta, draw_subsample(n, cfg.subsample, rng), obj, fams)
                  : vanilla_gradient(res.theta, obj);
          break;
        case Method::big_step:
          d = big_step_gradient(res.theta, obj, s);
          break;
        case Method::continuation:
          d = continuation_direction(res.theta, obj, cfg);
          break;
        case Method::distributed:
          d = distributed_gradient(res.theta, obj, cfg.n_sub, cfg.subsample, rng, &fams);
          break;
        case Method::diffeo: {
          const ParamGradient g =
              cfg.subsample > 0
                  ? subsample_gradient(res.theta, draw_subsample(n, cfg.subsample, rng), obj, fams)
                  : vanilla_gradient(res.theta, obj);
          d = support_rows(g).empty() ? g
                                      : diffeo_interpolate(res.theta, g, cfg.diffeo).evaluate(res.theta);
          break;
        }
        case Method::stratified:
          break;
      }
      if (cfg.noise_std > 0.0)
        for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] += cfg.noise_std * gauss(rng);
      next = res.theta - s * d;
    }
    res.theta = std::move(next);
    elapsed_ms += std::chrono::duration<double, std::milli>(Clock::now() - tick).count();
    if (!record(k + 1)) {
      tr.stop_reason = "non-finite loss";
      spdlog::error("descend: non-finite loss at step {}", k + 1);
      break;
    }
  }
  return res;
}

GoldsteinResult goldstein_check(const Eigen::MatrixXd& theta, double eps, int m,
                                const Objective& obj, double eta, Rng& rng) {
  const auto samples = sample_strata(theta, eps, m, obj.family(), rng);
  const auto gs = strata_gradients(theta, samples, obj);
  GoldsteinResult r;
  r.norm = min_norm_point(gs).norm();
  r.strata = static_cast<int>(gs.size());
  r.stationary = r.norm <= eta;
  return r;
}

}  // namespace topo
