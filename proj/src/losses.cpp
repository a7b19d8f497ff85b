#include "topo/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace topo {

LossResult total_persistence(const Diagram& a, double sign, double p, bool death_only) {
  if (p < 1.0) throw std::invalid_argument("total_persistence: exponent must be >= 1");
  LossResult r{0.0, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.size()), 2)};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].essential()) continue;
    const double l = a[i].death - a[i].birth;
    r.value += 0.5 * std::pow(l, p);
    const double dl = sign * 0.5 * p * std::pow(l, p - 1.0);
    if (!death_only) r.gradient(i, 0) = -dl;
    r.gradient(i, 1) = dl;
  }
  r.value *= sign;
  return r;
}

LossResult simplification_loss(const Diagram& a, double eta) {
  if (!(eta > 0)) throw std::invalid_argument("simplification_loss: eta must be positive");
  LossResult r{0.0, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.size()), 2)};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].essential()) continue;
    const double l = a[i].death - a[i].birth;
    if (!(std::abs(l) < eta)) continue;
    r.value += l;
    r.gradient(i, 0) = -1.0;
    r.gradient(i, 1) = 1.0;
  }
  return r;
}

LossResult distance_to_target(const Diagram& a, const Diagram& target) {
  LossResult r{0.0, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.size()), 2)};
  const auto m = fg_distance(a, target, 2.0, 2.0);
  double sum = 0.0;
  for (const auto& [i, j] : m.pairs) {
    if (i == kDiagonal) {
      const double d = diagonal_distance(target[j], 2.0);
      sum += d * d;
      continue;
    }
    const DiagramPoint pi = j == kDiagonal ? diagonal_projection(a[i]) : target[j];
    const double db = a[i].birth - pi.birth, dd = a[i].death - pi.death;
    sum += db * db + dd * dd;
    r.gradient(i, 0) = db;
    r.gradient(i, 1) = dd;
  }
  r.value = 0.5 * sum;
  return r;
}

LossResult norm_to_empty(const Diagram& a, double sign) {
  LossResult r{0.0, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.size()), 2)};
  double s = 0.0;
  for (const auto& x : a)
    if (!x.essential()) s += 0.5 * (x.death - x.birth) * (x.death - x.birth);
  const double norm = std::sqrt(s);
  r.value = sign * norm;
  if (norm == 0.0) return r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].essential()) continue;
    const double c = sign * 0.5 * (a[i].death - a[i].birth) / norm;
    r.gradient(i, 0) = -c;
    r.gradient(i, 1) = c;
  }
  return r;
}

LossResult singleton_loss(const Diagram& a, std::size_t index, const DiagramPoint& q0) {
  if (index >= a.size()) throw std::out_of_range("singleton_loss: no such point");
  LossResult r{0.0, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.size()), 2)};
  const double db = a[index].birth - q0.birth, dd = a[index].death - q0.death;
  r.value = std::hypot(db, dd);
  if (r.value > 0.0) {
    r.gradient(index, 0) = db / r.value;
    r.gradient(index, 1) = dd / r.value;
  }
  return r;
}

Vectorization linear_vectorization(const Diagram& a, const Eigen::MatrixX2d& grid, double s) {
  if (!(s > 0)) throw std::invalid_argument("linear_vectorization: width must be positive");
  const auto k = grid.rows();
  const auto m = static_cast<Eigen::Index>(a.size());
  Vectorization v{Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(k, 2 * m)};
  const double inv = 1.0 / (s * s);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (a[i].essential()) continue;
    for (Eigen::Index g = 0; g < k; ++g) {
      const double db = grid(g, 0) - a[i].birth, dd = grid(g, 1) - a[i].death;
      const double phi = std::exp(-0.5 * (db * db + dd * dd) * inv);
      v.values(g) += phi;
      v.jacobian(g, 2 * i) = phi * db * inv;
      v.jacobian(g, 2 * i + 1) = phi * dd * inv;
    }
  }
  return v;
}

Eigen::MatrixX2d lattice(double lo, double hi, int n_b, int n_d) {
  Eigen::MatrixX2d g(static_cast<Eigen::Index>(n_b) * n_d, 2);
  auto at = [&](int i, int n) { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); };
  for (int i = 0; i < n_b; ++i)
    for (int j = 0; j < n_d; ++j) g.row(i * n_d + j) << at(i, n_b), at(j, n_d);
  return g;
}

namespace {

class FnLoss final : public DiagramLoss {
 public:
  explicit FnLoss(std::function<LossResult(const Diagram&)> f) : f_(std::move(f)) {}
  LossResult evaluate(const Diagram& points, const std::vector<PersistencePair>&) const override {
    return f_(points);
  }

 private:
  std::function<LossResult(const Diagram&)> f_;
};

}  // namespace

std::shared_ptr<DiagramLoss> make_total_persistence(double sign, double p, bool death_only) {
  return std::make_shared<FnLoss>(
      [=](const Diagram& a) { return total_persistence(a, sign, p, death_only); });
}

std::shared_ptr<DiagramLoss> make_simplification(double eta) {
  return std::make_shared<FnLoss>([=](const Diagram& a) { return simplification_loss(a, eta); });
}

std::shared_ptr<DiagramLoss> make_distance_to_target(Diagram target) {
  return std::make_shared<FnLoss>(
      [t = std::move(target)](const Diagram& a) { return distance_to_target(a, t); });
}

std::shared_ptr<DiagramLoss> make_norm_to_empty(double sign) {
  return std::make_shared<FnLoss>([=](const Diagram& a) { return norm_to_empty(a, sign); });
}

LossResult SingletonLoss::evaluate(const Diagram& points,
                                   const std::vector<PersistencePair>& pairs) const {
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (pairs[i] == pair_) return singleton_loss(points, i, q0_);
  throw std::runtime_error("singleton loss: persistence pair no longer present");
}

ParamGradient compose_gradient(const Eigen::MatrixXd& dgm_grad, const Lift& lift,
                               const FiltrationFamily& family, const Eigen::MatrixXd& theta,
                               const EvaluatedFiltration& ev) {
  if (dgm_grad.rows() != static_cast<Eigen::Index>(lift.size()) || dgm_grad.cols() != 2)
    throw std::invalid_argument("compose_gradient: diagram gradient does not match the lift");
  ParamGradient g = ParamGradient::Zero(theta.rows(), theta.cols());
  for (std::size_t i = 0; i < lift.size(); ++i) {
    const double gb = dgm_grad(static_cast<Eigen::Index>(i), 0);
    const double gd = dgm_grad(static_cast<Eigen::Index>(i), 1);
    if (gb != 0.0) scatter(family.gradient(theta, ev, lift.pairs[i].birth), gb, g);
    if (gd != 0.0) scatter(family.gradient(theta, ev, lift.pairs[i].death), gd, g);
  }
  return g;
}

ParamRegularizer box_confinement(double bound) {
  return [bound](const Eigen::MatrixXd& x, Eigen::MatrixXd* grad) {
    const Eigen::ArrayXXd excess = (x.array().abs() - bound).max(0.0);
    if (grad) *grad = (2.0 * excess * x.array().sign()).matrix();
    return excess.square().sum();
  };
}

Objective::Objective(std::shared_ptr<const FiltrationFamily> family, std::vector<Term> terms,
                     ParamRegularizer reg)
    : family_(std::move(family)), terms_(std::move(terms)), reg_(std::move(reg)) {
  if (!family_) throw std::invalid_argument("objective needs a filtration family");
  for (const auto& t : terms_) {
    if (t.dim < 0 || !t.loss) throw std::invalid_argument("objective term is malformed");
    max_dim_ = std::max(max_dim_, t.dim);
  }
}

Objective::Evaluation Objective::evaluate(const Eigen::MatrixXd& theta, bool with_gradient) const {
  Evaluation e{0.0, {}, family_->evaluate(theta), {}, {}, {}, 0.0};
  e.pairing = persistence_pairs(e.ev.filtration, max_dim_);
  if (with_gradient) e.gradient = ParamGradient::Zero(theta.rows(), theta.cols());
  for (const auto& t : terms_) {
    e.lifts.push_back(ordinary_lift(e.ev.filtration, e.pairing, t.dim));
    const auto& lift = e.lifts.back();
    e.term_values.push_back(t.loss->evaluate(lift.points, lift.pairs));
    const auto& r = e.term_values.back();
    e.value += t.weight * r.value;
    if (with_gradient)
      e.gradient += t.weight * compose_gradient(r.gradient, lift, *family_, theta, e.ev);
  }
  if (reg_) {
    Eigen::MatrixXd rg;
    e.regularizer = reg_(theta, with_gradient ? &rg : nullptr);
    e.value += e.regularizer;
    if (with_gradient) e.gradient += rg;
  }
  return e;
}

Objective Objective::with_family(std::shared_ptr<const FiltrationFamily> family) const {
  return Objective(std::move(family), terms_, reg_);
}

}  // namespace topo
