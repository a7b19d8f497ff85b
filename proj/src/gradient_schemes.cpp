#include "topo/gradient_schemes.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "topo/moving_set.hpp"

namespace topo {

ParamGradient vanilla_gradient(const Eigen::MatrixXd& theta, const Objective& obj) {
  auto e = obj.evaluate(theta, true);
  if (e.ev.on_boundary) spdlog::debug("vanilla gradient taken on a stratum boundary");
  return std::move(e.gradient);
}

// ---------------------------------------------------------------- strata

std::vector<StratumSample> sample_strata(const Eigen::MatrixXd& theta, double eps, int m,
                                         const FiltrationFamily& family, Rng& rng) {
  if (!(eps > 0.0)) throw std::invalid_argument("sample_strata: eps must be positive");
  if (m < 1) throw std::invalid_argument("sample_strata: m must be at least 1");
  std::vector<StratumSample> out;
  out.push_back({theta, family.stratum_key(theta)});
  const Eigen::Index dim = theta.size();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int draw = 0; draw < 20 * m && static_cast<int>(out.size()) < m; ++draw) {
    Eigen::MatrixXd dir(theta.rows(), theta.cols());
    for (Eigen::Index i = 0; i < dim; ++i) dir.data()[i] = gauss(rng);
    const double nrm = dir.norm();
    if (nrm == 0.0) continue;
    const double r = eps * std::pow(unit(rng), 1.0 / static_cast<double>(dim));
    Eigen::MatrixXd p = theta + (r / nrm) * dir;
    auto key = family.stratum_key(p);
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const StratumSample& s) { return s.key == key; });
    if (!seen) out.push_back({std::move(p), std::move(key)});
  }
  return out;
}

ParamGradient min_norm_point(const std::vector<ParamGradient>& g, std::vector<double>* weights) {
  if (g.empty()) throw std::invalid_argument("min_norm_point: empty input");
  const int n = static_cast<int>(g.size());
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) gram(i, j) = gram(j, i) = (g[i].array() * g[j].array()).sum();
  const double scale = std::max(1.0, gram.diagonal().maxCoeff());
  const double tol = 1e-13 * scale;

  // Wolfe's method in barycentric coordinates; x = sum lambda_i g_i.
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
  int start = 0;
  gram.diagonal().minCoeff(&start);
  std::vector<int> active{start};
  lambda(start) = 1.0;

  for (int major = 0; major < 10 * n + 100; ++major) {
    const Eigen::VectorXd gx = gram * lambda;  // <g_i, x>
    const double xx = lambda.dot(gx);
    int j = 0;
    gx.minCoeff(&j);
    if (gx(j) - xx >= -tol) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);

    for (int minor = 0; minor < n + 5; ++minor) {
      // affine minimizer over the active set
      const int k = static_cast<int>(active.size());
      Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(k + 1, k + 1);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) sys(a, b) = gram(active[a], active[b]);
        sys(a, k) = sys(k, a) = 1.0;
      }
      rhs(k) = 1.0;
      const Eigen::VectorXd mu = sys.completeOrthogonalDecomposition().solve(rhs).head(k);
      if ((mu.array() > 1e-14).all()) {
        lambda.setZero();
        for (int a = 0; a < k; ++a) lambda(active[a]) = mu(a);
        break;
      }
      double step = 1.0;
      for (int a = 0; a < k; ++a) {
        if (mu(a) <= 1e-14) {
          const double la = lambda(active[a]);
          step = std::min(step, la / (la - mu(a)));
        }
      }
      for (int a = 0; a < k; ++a) lambda(active[a]) += step * (mu(a) - lambda(active[a]));
      std::vector<int> keep;
      for (int a : active)
        if (lambda(a) > 1e-14) keep.push_back(a);
        else lambda(a) = 0.0;
      if (keep.empty()) {
        keep.push_back(j);
        lambda(j) = 1.0;
      }
      active.swap(keep);
    }
  }
  lambda /= lambda.sum();
  ParamGradient out = ParamGradient::Zero(g[0].rows(), g[0].cols());
  for (int i = 0; i < n; ++i)
    if (lambda(i) != 0.0) out += lambda(i) * g[i];
  if (weights) weights->assign(lambda.data(), lambda.data() + n);
  return out;
}

void StratifiedConfig::validate() const {
  if (!(eps > 0.0) || m < 1 || !(gamma > 0.0 && gamma < 1.0) || !(beta > 0.0 && beta < 1.0) ||
      !(lipschitz > 0.0) || !(eta >= 0.0))
    throw std::invalid_argument(
        "stratified config needs eps > 0, m >= 1, 0 < gamma < 1, 0 < beta < 1, C > 0, eta >= 0");
}

std::vector<ParamGradient> strata_gradients(const Eigen::MatrixXd& theta,
                                            const std::vector<StratumSample>& samples,
                                            const Objective& obj) {
  std::vector<ParamGradient> g;
  g.push_back(vanilla_gradient(theta, obj));
  for (const auto& s : samples)
    if (!(s.theta.rows() == theta.rows() && s.theta.cols() == theta.cols() && s.theta == theta))
      g.push_back(vanilla_gradient(s.theta, obj));
  return g;
}

namespace {

double guard(const StratifiedConfig& cfg, double norm) {
  return (1.0 - cfg.beta) / (2.0 * cfg.lipschitz) * norm;
}

}  // namespace

StratifiedStep stratified_gradient(const Eigen::MatrixXd& theta, const StratifiedConfig& cfg,
                                   const Objective& obj, Rng& rng) {
  cfg.validate();
  StratifiedStep out;
  double eps = cfg.eps;
  for (int round = 1;; ++round) {
    const auto samples = sample_strata(theta, eps, cfg.m, obj.family(), rng);
    const auto gs = strata_gradients(theta, samples, obj);
    out.gradient = min_norm_point(gs);
    out.strata = static_cast<int>(gs.size());
    out.rounds = round;
    out.radius = eps;
    const double nrm = out.gradient.norm();
    if (eps <= guard(cfg, nrm)) {
      out.alpha = eps / nrm;
      return out;
    }
    if (nrm <= cfg.eta || round >= 200) {
      if (nrm > cfg.eta) spdlog::warn("stratified gradient: radius shrink did not converge");
      out.alpha = 0.0;
      return out;
    }
    eps *= cfg.gamma;
  }
}

StratifiedStep stratified_from_samples(const Eigen::MatrixXd& theta, const StratifiedConfig& cfg,
                                      const std::vector<StratumSample>& samples,
                                      const std::vector<ParamGradient>& gs) {
  cfg.validate();
  StratifiedStep out;
  out.gradient = min_norm_point(gs);
  out.strata = static_cast<int>(gs.size());
  out.rounds = 1;
  out.radius = cfg.eps;
  double nrm = out.gradient.norm();
  if (cfg.eps > guard(cfg, nrm)) {
    if (nrm <= cfg.eta) {
      out.alpha = 0.0;
      return out;
    }
    const double eps = guard(cfg, nrm);
    // gs[0] is theta's own gradient; gs[i] belongs to samples[i] for i >= 1
    std::vector<ParamGradient> kept{gs[0]};
    for (std::size_t i = 1; i < samples.size() && i < gs.size(); ++i)
      if ((samples[i].theta - theta).norm() <= eps) kept.push_back(gs[i]);
    out.gradient = min_norm_point(kept);
    out.strata = static_cast<int>(kept.size());
    out.radius = eps;
    nrm = out.gradient.norm();
  }
  out.alpha = nrm > cfg.eta ? out.radius / nrm : 0.0;
  return out;
}

StratifiedStep stratified_gradient_const(const Eigen::MatrixXd& theta,
                                         const StratifiedConfig& cfg, const Objective& obj,
                                         Rng& rng) {
  cfg.validate();
  const auto samples = sample_strata(theta, cfg.eps, cfg.m, obj.family(), rng);
  return stratified_from_samples(theta, cfg, samples, strata_gradients(theta, samples, obj));
}

double estimate_lipschitz(const Eigen::MatrixXd& theta, const Objective& obj, double radius,
                          int probes, Rng& rng) {
  double best = vanilla_gradient(theta, obj).norm();
  if (probes > 0 && radius > 0.0) {
    for (const auto& s : sample_strata(theta, radius, probes, obj.family(), rng))
      best = std::max(best, vanilla_gradient(s.theta, obj).norm());
  }
  return 2.0 * std::max(best, 1e-12);
}

// --------------------------------------------------------------- big step

namespace {

struct Push {
  SimplexId simplex = -1;
  SimplexId partner = -1;
  double derivative = 0.0;
  double target = 0.0;
};

struct Candidate {
  double push = -1.0;
  double derivative = 0.0;
  bool own = false;
  double landing = 0.0;  // raw-values parameters only
};
using Candidates = std::unordered_map<SimplexId, Candidate>;

// Moving sets of several pushes on one filtration, sharing block reductions.
class MovingSets {
 public:
  MovingSets(const Filtration& f, const PersistencePairing& pairing)
      : f_(f), order_(total_order(f)), pairing_(pairing) {}

  // Every simplex reached keeps the push that moves it farthest.
  void add(const Push& p, Candidates& cand) {
    const auto& k = f_.complex();
    const SimplexId s = p.simplex;
    if (p.target == f_.value(s)) {
      auto& own = cand[s];
      if (0.0 > own.push) own = {0.0, p.derivative, true, f_.value(s)};
      return;
    }
    const bool death = k.dimension(p.partner) < k.dimension(s);
    const auto key = std::make_pair(k.dimension(s), !death);
    auto it = blocks_.find(key);
    if (it == blocks_.end()) {
      Block st;
      st.matrix = block_matrix(f_, order_, key.first, key.second);
      it = blocks_.emplace(key, std::move(st)).first;
      it->second.lazy = std::make_unique<LazyBlockReduction>(
          &it->second.matrix.columns, block_owners(it->second.matrix, pairing_));
    }
    auto& st = it->second;
    MovingSet xs;
    try {
      const Move mv = locate_move(st.matrix, f_, order_, s, p.partner, p.target);
      const std::size_t before = st.lazy->reduced_columns();
      xs = moving_set_lazy(st.matrix, mv, *st.lazy);
      spdlog::debug("big-step {}: window {}, moving set {}, columns reduced {}", to_string(mv.which),
                    mv.window.size(), xs.simplices.size(), st.lazy->reduced_columns() - before);
    } catch (const std::logic_error& err) {
      throw std::runtime_error(std::string("big-step: pair (") + std::to_string(p.partner) + ", " +
                               std::to_string(s) + ") is not consistent with the reduction: " +
                               err.what());
    }
    // Raw values land just inside the window, in their current order, so
    // that nothing outside the window is crossed.
    std::vector<SimplexId> members = xs.simplices;
    std::sort(members.begin(), members.end(),
              [&](SimplexId a, SimplexId b) { return order_.position[a] < order_.position[b]; });
    const double tt = xs.target;
    const bool earlier = tt < f_.value(s);
    const double delta = 1e-9 * std::max(1.0, std::abs(tt));
    const auto n = static_cast<double>(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      const SimplexId m = members[i];
      double landing = f_.value(m);
      if (tt != f_.value(s))
        landing = earlier ? tt + static_cast<double>(i + 1) * delta
                          : tt - (n - static_cast<double>(i)) * delta;
      const double pm = std::abs(f_.value(m) - tt);
      auto& c = cand[m];
      if (pm > c.push) c = {pm, p.derivative, m == s, landing};
    }
  }

  std::size_t reduced_columns() const {
    std::size_t r = 0;
    for (const auto& [key, st] : blocks_) r += st.lazy->reduced_columns();
    return r;
  }

 private:
  struct Block {
    BlockMatrix matrix;
    std::unique_ptr<LazyBlockReduction> lazy;
  };
  const Filtration& f_;
  OrderingSignature order_;
  const PersistencePairing& pairing_;
  std::map<std::pair<int, bool>, Block> blocks_;
};

// Values after the landings, clamped back to a filtration.
std::vector<double> landed_values(const Filtration& f, const Candidates& cand) {
  std::vector<double> vals(f.values().begin(), f.values().end());
  std::vector<SimplexId> moved;
  for (const auto& [s, c] : cand) {
    vals[s] = c.landing;
    moved.push_back(s);
  }
  std::sort(moved.begin(), moved.end());
  repair_monotone(f.complex(), vals, moved);
  return vals;
}

bool has_pair(const PersistencePairing& p, SimplexId a, SimplexId b) {
  for (const auto& dim : p.pairs)
    for (const auto& pr : dim)
      if ((pr.birth == a && pr.death == b) || (pr.birth == b && pr.death == a)) return true;
  return false;
}

using AtomKey = std::tuple<std::int32_t, std::int32_t, int>;

}  // namespace

ParamGradient big_step_gradient(const Eigen::MatrixXd& theta, const Objective& obj, double step,
                                BigStepReport* report) {
  if (!(step > 0.0)) throw std::invalid_argument("big_step_gradient: step must be positive");
  const auto e = obj.evaluate(theta, false);
  const auto& f = e.ev.filtration;
  const auto& k = f.complex();
  const auto& family = obj.family();

  // Summed loss derivative per critical simplex; singleton losses fix the
  // target, the rest aim at f(s) - step * dL/ds.
  struct Acc {
    double derivative = 0.0;
    SimplexId partner = -1;
    bool has_target = false;
    double target = 0.0;
  };
  std::map<SimplexId, Acc> acc;
  bool all_singleton = true;
  for (std::size_t ti = 0; ti < obj.terms().size(); ++ti) {
    const auto& term = obj.terms()[ti];
    const auto& lift = e.lifts[ti];
    const auto& grad = e.term_values[ti].gradient;
    const auto* singleton = dynamic_cast<const SingletonLoss*>(term.loss.get());
    if (!singleton) all_singleton = false;
    for (std::size_t i = 0; i < lift.pairs.size(); ++i) {
      const auto& pr = lift.pairs[i];
      for (int side = 0; side < 2; ++side) {
        const double d = term.weight * grad(i, side);
        if (d == 0.0) continue;
        auto& a = acc[side == 0 ? pr.birth : pr.death];
        a.derivative += d;
        a.partner = side == 0 ? pr.death : pr.birth;
        if (singleton) {
          a.has_target = true;
          a.target = side == 0 ? singleton->target().birth : singleton->target().death;
        }
      }
    }
  }
  std::vector<Push> pushes;
  for (const auto& [s, a] : acc) {
    if (a.derivative == 0.0) continue;
    pushes.push_back({s, a.partner, a.derivative,
                      a.has_target ? a.target : f.value(s) - step * a.derivative});
  }

  Candidates cand;
  std::size_t reduced = 0;
  auto finish = [&](ParamGradient g) {
    if (obj.regularizer()) {
      Eigen::MatrixXd rg;
      obj.regularizer()(theta, &rg);
      g += rg;
    }
    if (report) {
      report->pairs = pushes.size();
      report->moved = cand.size();
      report->reduced_columns = reduced;
    }
    return g;
  };

  if (family.kind() == FamilyKind::raw_values) {
    std::vector<double> vals;
    if (all_singleton) {
      // Fixed targets: one move at a time, each read off the filtration the
      // previous ones produced, so that moving both ends keeps the pair.
      Filtration cur = f;
      PersistencePairing pairing = e.pairing;
      for (const auto& p : pushes) {
        if (p.target == cur.value(p.simplex)) continue;
        if (!has_pair(pairing, p.simplex, p.partner)) {
          spdlog::warn("big-step: pair ({}, {}) was broken by an earlier move, skipped", p.partner,
                       p.simplex);
          continue;
        }
        Candidates local;
        MovingSets sets(cur, pairing);
        sets.add(p, local);
        reduced += sets.reduced_columns();
        for (const auto& [s, c] : local) cand[s] = c;
        cur = Filtration(f.complex_ptr(), landed_values(cur, local));
        pairing = persistence_pairs(cur, obj.max_dim());
      }
      vals.assign(cur.values().begin(), cur.values().end());
    } else {
      MovingSets sets(f, e.pairing);
      for (const auto& p : pushes) sets.add(p, cand);
      reduced = sets.reduced_columns();
      vals = landed_values(f, cand);
    }
    // A raw value only changes where the max over itself and its faces would
    // otherwise miss the new value. Facets have smaller ids.
    ParamGradient g = ParamGradient::Zero(theta.rows(), theta.cols());
    for (SimplexId i = 0; i < static_cast<SimplexId>(k.size()); ++i) {
      double reach = theta(i, 0);
      for (SimplexId fc : k.facets(i)) reach = std::max(reach, vals[fc]);
      if (reach != vals[i]) g(i, 0) = (theta(i, 0) - vals[i]) / step;
    }
    return finish(std::move(g));
  }

  MovingSets sets(f, e.pairing);
  for (const auto& p : pushes) sets.add(p, cand);
  reduced = sets.reduced_columns();

  // One contribution per witness atom: the summed derivatives of the pair
  // simplices on it, or else the largest push.
  struct AtomSum {
    SimplexId rep = -1;
    bool has_own = false;
    double own_sum = 0.0;
    double best_push = -1.0;
    double best = 0.0;
  };
  std::map<AtomKey, AtomSum> atoms;
  for (const auto& [s, c] : cand) {
    const auto& w = e.ev.witnesses[s];
    auto& a = atoms[AtomKey{w.a, w.b, static_cast<int>(w.branch)}];
    if (a.rep < 0 || s < a.rep) a.rep = s;
    if (c.own) {
      a.has_own = true;
      a.own_sum += c.derivative;
    } else if (c.push > a.best_push) {
      a.best_push = c.push;
      a.best = c.derivative;
    }
  }
  ParamGradient g = ParamGradient::Zero(theta.rows(), theta.cols());
  for (const auto& [key, a] : atoms) {
    const double d = a.has_own ? a.own_sum : a.best;
    if (d != 0.0) scatter(family.gradient(theta, e.ev, a.rep), d, g);
  }
  return finish(std::move(g));
}

// ----------------------------------------------------------- continuation

Eigen::MatrixXd diagram_jacobian(const Lift& lift, const FiltrationFamily& family,
                                 const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev) {
  const Eigen::Index cols = theta.cols();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * lift.pairs.size(), theta.size());
  for (std::size_t i = 0; i < lift.pairs.size(); ++i) {
    for (int side = 0; side < 2; ++side) {
      const SimplexId s = side == 0 ? lift.pairs[i].birth : lift.pairs[i].death;
      for (const auto& term : family.gradient(theta, ev, s))
        for (Eigen::Index c = 0; c < cols; ++c)
          jac(2 * i + side, term.row * cols + c) += term.value(c);
    }
  }
  return jac;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double cutoff) {
  if (a.size() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff * smax && s(i) > 0.0) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd continuation_velocity(const Diagram& current, const Diagram& target, double q) {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(current.size(), 2);
  if (current.empty()) return v;
  const auto m = fg_distance(current, target, q, 2.0);
  for (const auto& [i, j] : m.pairs) {
    if (i == kDiagonal) continue;
    const DiagramPoint goal = j == kDiagonal ? diagonal_projection(current[i]) : target[j];
    v(i, 0) = goal.birth - current[i].birth;
    v(i, 1) = goal.death - current[i].death;
  }
  return v;
}

PointCloud continuation_step(const PointCloud& x, const FiltrationFamily& family,
                             const Diagram& target, int dim, double q, double gamma) {
  const auto ev = family.evaluate(x);
  const auto pairing = persistence_pairs(ev.filtration, dim + 1);
  const auto lift = ordinary_lift(ev.filtration, pairing, dim);
  const Eigen::MatrixXd v = continuation_velocity(lift.points, target, q);
  if (v.size() == 0 || v.isZero(0.0)) return x;
  const Eigen::MatrixXd jac = diagram_jacobian(lift, family, x, ev);
  Eigen::VectorXd flat_v(v.size());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    flat_v(2 * i) = v(i, 0);
    flat_v(2 * i + 1) = v(i, 1);
  }
  const Eigen::VectorXd dx = pseudo_inverse(jac) * flat_v;
  PointCloud out = x;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) out(r, c) += gamma * dx(r * x.cols() + c);
  return out;
}

// ------------------------------------------------------------ distributed

std::shared_ptr<const FiltrationFamily> SubsampleFamilies::get(int s) {
  if (s == base_->complex().num_vertices()) return base_;
  for (const auto& [size, fam] : cache_)
    if (size == s) return fam;
  const int dim = base_->complex().dimension();
  std::shared_ptr<const FiltrationFamily> fam;
  if (base_->kind() == FamilyKind::vietoris_rips) {
    fam = std::make_shared<VietorisRips>(s, dim);
  } else if (base_->kind() == FamilyKind::weighted_rips) {
    const auto& w = static_cast<const WeightedRips&>(*base_).weights();
    if (w.type == WeightSpec::Type::constant)
      throw std::invalid_argument("subsampling needs weights defined per point, not a table");
    fam = std::make_shared<WeightedRips>(s, dim, w);
  } else {
    throw std::invalid_argument("subsampling needs point-cloud parameters");
  }
  cache_.emplace_back(s, fam);
  return fam;
}

std::vector<int> draw_subsample(int n, int s, Rng& rng) {
  if (s < 1 || s > n) throw std::invalid_argument("subsample size must be in [1, n]");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // partial Fisher-Yates
  for (int i = 0; i < s; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(s);
  std::sort(idx.begin(), idx.end());
  return idx;
}

ParamGradient subsample_gradient(const Eigen::MatrixXd& x, const std::vector<int>& rows,
                                 const Objective& obj, SubsampleFamilies& families) {
  Eigen::MatrixXd sub(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) sub.row(i) = x.row(rows[i]);
  const auto local = obj.with_family(families.get(static_cast<int>(rows.size())));
  const ParamGradient gs = vanilla_gradient(sub, local);
  ParamGradient g = ParamGradient::Zero(x.rows(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) g.row(rows[i]) = gs.row(i);
  return g;
}

ParamGradient distributed_gradient(const Eigen::MatrixXd& x, const Objective& obj, int n_sub,
                                   int s, Rng& rng, SubsampleFamilies* families) {
  if (n_sub < 1) throw std::invalid_argument("distributed gradient needs n_sub >= 1");
  SubsampleFamilies local(obj.family_ptr());
  SubsampleFamilies& fams = families ? *families : local;
  // draws first so the generator is consumed in a fixed order
  std::vector<std::vector<int>> draws;
  for (int i = 0; i < n_sub; ++i) draws.push_back(draw_subsample(static_cast<int>(x.rows()), s, rng));
  ParamGradient g = ParamGradient::Zero(x.rows(), x.cols());
  for (const auto& rows : draws) g += subsample_gradient(x, rows, obj, fams);
  return g / static_cast<double>(n_sub);
}

// ---------------------------------------------------------------- diffeo

void DiffeoConfig::validate() const {
  if (!(sigma > 0.0) || !(ridge >= 0.0))
    throw std::invalid_argument("diffeo config needs sigma > 0 and ridge >= 0");
}

Eigen::RowVectorXd VectorField::operator()(const Eigen::RowVectorXd& x) const {
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(alpha.cols());
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (Eigen::Index i = 0; i < centers.rows(); ++i)
    v += std::exp(-(x - centers.row(i)).squaredNorm() * inv) * alpha.row(i);
  return v;
}

Eigen::MatrixXd VectorField::evaluate(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), alpha.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) out.row(r) = (*this)(x.row(r));
  return out;
}

VectorField diffeo_interpolate(const PointCloud& cloud, const ParamGradient& g,
                               const DiffeoConfig& cfg) {
  cfg.validate();
  const auto rows = support_rows(g);
  if (rows.empty()) throw std::invalid_argument("diffeo_interpolate: gradient has empty support");
  const auto k = static_cast<Eigen::Index>(rows.size());
  VectorField field;
  field.sigma = cfg.sigma;
  field.centers.resize(k, cloud.cols());
  Eigen::MatrixXd a(k, g.cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    field.centers.row(i) = cloud.row(rows[i]);
    a.row(i) = g.row(rows[i]);
  }
  Eigen::MatrixXd gram(k, k);
  const double inv = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      gram(i, j) = gram(j, i) =
          std::exp(-(field.centers.row(i) - field.centers.row(j)).squaredNorm() * inv);

  auto solve = [&](double ridge) -> bool {
    Eigen::MatrixXd kk = gram;
    kk.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(kk);
    if (llt.info() != Eigen::Success) return false;
    field.alpha = llt.solve(a);
    field.ridge_used = ridge;
    const double resid = (kk * field.alpha - a).cwiseAbs().maxCoeff();
    return std::isfinite(resid) && resid <= 1e-8 * std::max(1.0, a.cwiseAbs().maxCoeff());
  };
  if (!solve(cfg.ridge)) {
    spdlog::warn("diffeo_interpolate: kernel matrix is singular, retrying with ridge 1e-10");
    if (!solve(std::max(cfg.ridge, 1e-10)))
      throw std::runtime_error("diffeo_interpolate: kernel system could not be solved");
  }
  return field;
}

}  // namespace topo
