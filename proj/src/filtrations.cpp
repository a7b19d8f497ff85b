#include "topo/filtrations.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace topo {

PointCloud read_point_cloud(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty point cloud file");
  int d = 0;
  {
    std::istringstream hs(line);
    for (std::string tok; std::getline(hs, tok, ',');) {
      while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.pop_back();
      if (tok != "x" + std::to_string(d))
        throw std::runtime_error("point cloud header must be x0,x1,...");
      ++d;
    }
  }
  if (d == 0) throw std::runtime_error("point cloud header has no columns");
  std::vector<double> data;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    int cols = 0;
    for (std::string tok; std::getline(ls, tok, ',');) {
      const double v = std::stod(tok);
      if (!std::isfinite(v)) throw std::runtime_error("non-finite coordinate");
      data.push_back(v);
      ++cols;
    }
    if (cols != d)
      throw std::runtime_error("row " + std::to_string(rows + 1) + " has " + std::to_string(cols) +
                               " columns, expected " + std::to_string(d));
    ++rows;
  }
  if (rows == 0) throw std::runtime_error("point cloud has no points");
  PointCloud x(rows, d);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = data[static_cast<std::size_t>(i) * d + j];
  return x;
}

void write_point_cloud(std::ostream& out, const PointCloud& x) {
  for (int j = 0; j < x.cols(); ++j) out << (j ? ",x" : "x") << j;
  out << '\n';
  char buf[64];
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", x(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

std::vector<int> support_rows(const ParamGradient& g) {
  std::vector<int> rows;
  for (int i = 0; i < g.rows(); ++i)
    if ((g.row(i).array() != 0.0).any()) rows.push_back(i);
  return rows;
}

void scatter(const SparseGradient& g, double scale, ParamGradient& out) {
  for (const auto& t : g) out.row(t.row) += scale * t.value;
}

std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::vietoris_rips: return "vietoris_rips";
    case FamilyKind::weighted_rips: return "weighted_rips";
    case FamilyKind::lower_star: return "lower_star";
    case FamilyKind::height: return "height";
    case FamilyKind::raw_values: return "raw_values";
  }
  return "unknown";
}

double half_distance(const PointCloud& x, int i, int j) { return 0.5 * (x.row(i) - x.row(j)).norm(); }

namespace {

double distance(const PointCloud& x, int i, int j) { return (x.row(i) - x.row(j)).norm(); }

bool witness_less(const Witness& a, const Witness& b) {
  if (a.a != b.a) return a.a < b.a;
  return a.b < b.b;
}

// True when two different atoms carry the same value.
bool shares_value(std::vector<std::pair<double, Witness>> atoms) {
  std::sort(atoms.begin(), atoms.end(), [](const auto& l, const auto& r) {
    if (l.first != r.first) return l.first < r.first;
    if (l.second.branch != r.second.branch) return l.second.branch < r.second.branch;
    return witness_less(l.second, r.second);
  });
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  for (std::size_t i = 1; i < atoms.size(); ++i)
    if (atoms[i].first == atoms[i - 1].first) return true;
  return false;
}

Eigen::RowVectorXd unit(const PointCloud& x, int i, int j) {
  Eigen::RowVectorXd u = x.row(i) - x.row(j);
  const double n = u.norm();
  if (n == 0.0) return Eigen::RowVectorXd::Zero(x.cols());
  return u / n;
}

void require_rows(const Eigen::MatrixXd& theta, Eigen::Index rows, const char* what) {
  if (theta.rows() != rows)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(rows) +
                                " parameter rows, got " + std::to_string(theta.rows()));
}

// Values and witnesses of the lower-star of per-vertex values.
EvaluatedFiltration lower_star_of(const std::shared_ptr<const SimplicialComplex>& kp,
                                  const std::vector<double>& vertex_values) {
  const auto& k = *kp;
  const auto n = static_cast<SimplexId>(k.size());
  std::vector<double> values(n);
  std::vector<Witness> wit(n);
  std::vector<std::pair<double, Witness>> atoms;
  for (SimplexId s = 0; s < n; ++s) {
    if (k.dimension(s) == 0) {
      const Vertex v = k.simplex(s)[0];
      values[s] = vertex_values[v];
      wit[s] = {v, -1, Witness::kVertex};
      atoms.push_back({values[s], wit[s]});
      continue;
    }
    bool first = true;
    for (SimplexId f : k.facets(s)) {
      if (first || values[f] > values[s] || (values[f] == values[s] && wit[f].a < wit[s].a)) {
        values[s] = values[f];
        wit[s] = wit[f];
        first = false;
      }
    }
  }
  EvaluatedFiltration ev{Filtration(kp, std::move(values)), std::move(wit), false, {}, {}};
  ev.on_boundary = shares_value(std::move(atoms));
  return ev;
}

}  // namespace

// ---------------------------------------------------------------- Rips

VietorisRips::VietorisRips(int num_points, int max_dim)
    : FiltrationFamily(std::make_shared<SimplicialComplex>(
          SimplicialComplex::complete(num_points, max_dim))) {}

VietorisRips::VietorisRips(std::shared_ptr<const SimplicialComplex> complete)
    : FiltrationFamily(std::move(complete)) {}

EvaluatedFiltration VietorisRips::evaluate(const Eigen::MatrixXd& x) const {
  const auto& k = *complex_;
  require_rows(x, k.num_vertices(), "vietoris_rips");
  const auto n = static_cast<SimplexId>(k.size());
  std::vector<double> values(n, 0.0);
  std::vector<Witness> wit(n);
  std::vector<std::pair<double, Witness>> atoms;
  for (SimplexId s = 0; s < n; ++s) {
    const int dim = k.dimension(s);
    const auto& sx = k.simplex(s);
    if (dim == 0) {
      wit[s] = {sx[0], sx[0], Witness::kEdge};
    } else if (dim == 1) {
      values[s] = half_distance(x, sx[0], sx[1]);
      wit[s] = {sx[0], sx[1], Witness::kEdge};
      atoms.push_back({values[s], wit[s]});
    } else {
      bool first = true;
      for (SimplexId f : k.facets(s)) {
        if (first || values[f] > values[s] ||
            (values[f] == values[s] && witness_less(wit[f], wit[s]))) {
          values[s] = values[f];
          wit[s] = wit[f];
          first = false;
        }
      }
    }
  }
  EvaluatedFiltration ev{Filtration(complex_, std::move(values)), std::move(wit), false, {}, {}};
  ev.on_boundary = shares_value(std::move(atoms));
  return ev;
}

SparseGradient VietorisRips::gradient(const Eigen::MatrixXd& x, const EvaluatedFiltration& ev,
                                      SimplexId s) const {
  const auto& w = ev.witnesses[s];
  if (w.a == w.b) return {};
  Eigen::RowVectorXd u = unit(x, w.a, w.b);
  if (u.isZero()) return {};
  u *= 0.5;
  return {{w.a, u}, {w.b, -u}};
}

double VietorisRips::witness_value(const Eigen::MatrixXd& x, const EvaluatedFiltration& ev,
                                   SimplexId s) const {
  const auto& w = ev.witnesses[s];
  return w.a == w.b ? 0.0 : half_distance(x, w.a, w.b);
}

// ---------------------------------------------------------------- weighted Rips

WeightSpec WeightSpec::constant_weights(std::vector<double> w) {
  WeightSpec s;
  s.type = Type::constant;
  s.constant = std::move(w);
  return s;
}

WeightSpec WeightSpec::function(std::function<double(const Eigen::RowVectorXd&)> f,
                                std::function<Eigen::RowVectorXd(const Eigen::RowVectorXd&)> grad) {
  WeightSpec s;
  s.type = Type::function;
  s.fn = std::move(f);
  s.fn_gradient = std::move(grad);
  return s;
}

WeightSpec WeightSpec::dtm(int k) {
  WeightSpec s;
  s.type = Type::dtm;
  s.k = k;
  return s;
}

std::vector<double> dtm_weights(const PointCloud& x, int k, std::vector<std::vector<int>>* nbrs) {
  const int n = static_cast<int>(x.rows());
  if (k < 1 || k >= n)
    throw std::invalid_argument("DTM needs 1 <= k < n (k=" + std::to_string(k) +
                                ", n=" + std::to_string(n) + ")");
  std::vector<double> w(n);
  if (nbrs) nbrs->assign(n, {});
  std::vector<std::pair<double, int>> d;
  for (int i = 0; i < n; ++i) {
    d.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) d.push_back({distance(x, i, j), j});
    std::partial_sort(d.begin(), d.begin() + k, d.end());
    double sum = 0.0;
    for (int t = 0; t < k; ++t) {
      sum += d[t].first;
      if (nbrs) (*nbrs)[i].push_back(d[t].second);
    }
    w[i] = sum / k;
  }
  return w;
}

WeightedRips::WeightedRips(int num_points, int max_dim, WeightSpec w)
    : FiltrationFamily(std::make_shared<SimplicialComplex>(
          SimplicialComplex::complete(num_points, max_dim))),
      spec_(std::move(w)) {
  if (spec_.type == WeightSpec::Type::constant &&
      static_cast<int>(spec_.constant.size()) != num_points)
    throw std::invalid_argument("constant weights need one value per point");
  if (spec_.type == WeightSpec::Type::dtm && (spec_.k < 1 || spec_.k >= num_points))
    throw std::invalid_argument("DTM needs 1 <= k < n");
  if (spec_.type == WeightSpec::Type::function && (!spec_.fn || !spec_.fn_gradient))
    throw std::invalid_argument("weight function and its gradient are required");
}

EvaluatedFiltration WeightedRips::evaluate(const Eigen::MatrixXd& x) const {
  const auto& k = *complex_;
  const int np = k.num_vertices();
  require_rows(x, np, "weighted_rips");
  std::vector<double> f(np);
  std::vector<std::vector<int>> nbrs;
  switch (spec_.type) {
    case WeightSpec::Type::constant: f = spec_.constant; break;
    case WeightSpec::Type::function:
      for (int i = 0; i < np; ++i) f[i] = spec_.fn(x.row(i));
      break;
    case WeightSpec::Type::dtm: f = dtm_weights(x, spec_.k, &nbrs); break;
  }

  const auto n = static_cast<SimplexId>(k.size());
  std::vector<double> values(n, 0.0);
  std::vector<Witness> wit(n);
  std::vector<std::pair<double, Witness>> atoms;
  bool branch_tie = false;
  for (SimplexId s = 0; s < n; ++s) {
    const int dim = k.dimension(s);
    const auto& sx = k.simplex(s);
    if (dim == 0) {
      values[s] = 2.0 * f[sx[0]];
      wit[s] = {sx[0], -1, Witness::kVertex};
      atoms.push_back({values[s], wit[s]});
    } else if (dim == 1) {
      const int i = sx[0], j = sx[1];
      const double edge = distance(x, i, j) + f[i] + f[j];
      const double vi = 2.0 * f[i], vj = 2.0 * f[j];
      const double m = std::max({edge, vi, vj});
      if (edge == m) {
        wit[s] = {i, j, Witness::kEdge};
        branch_tie |= (vi == m || vj == m);
      } else {
        wit[s] = {vi >= vj ? i : j, -1, Witness::kVertex};
        branch_tie |= (vi == vj);
      }
      values[s] = m;
      atoms.push_back({values[s], wit[s]});
    } else {
      bool first = true;
      for (SimplexId fc : k.facets(s)) {
        const auto& wf = wit[fc];
        const bool better =
            first || values[fc] > values[s] ||
            (values[fc] == values[s] && wf.branch == Witness::kEdge &&
             wit[s].branch == Witness::kVertex);
        if (better) {
          values[s] = values[fc];
          wit[s] = wf;
          first = false;
        }
      }
    }
  }
  EvaluatedFiltration ev{Filtration(complex_, std::move(values)), std::move(wit), false,
                         std::move(f), std::move(nbrs)};
  ev.on_boundary = branch_tie || shares_value(std::move(atoms));
  if (branch_tie) spdlog::debug("weighted rips: tied branches resolved by priority");
  return ev;
}

SparseGradient WeightedRips::weight_gradient(const Eigen::MatrixXd& x,
                                             const EvaluatedFiltration& ev, int i) const {
  switch (spec_.type) {
    case WeightSpec::Type::constant: return {};
    case WeightSpec::Type::function: return {{i, spec_.fn_gradient(x.row(i))}};
    case WeightSpec::Type::dtm: {
      // neighbor set frozen at the evaluation point
      SparseGradient g;
      const double inv_k = 1.0 / spec_.k;
      Eigen::RowVectorXd self = Eigen::RowVectorXd::Zero(x.cols());
      for (int j : ev.neighbors[i]) {
        const Eigen::RowVectorXd u = unit(x, i, j) * inv_k;
        self += u;
        g.push_back({j, -u});
      }
      g.push_back({i, self});
      return g;
    }
  }
  return {};
}

SparseGradient WeightedRips::gradient(const Eigen::MatrixXd& x, const EvaluatedFiltration& ev,
                                      SimplexId s) const {
  const auto& w = ev.witnesses[s];
  SparseGradient g;
  if (w.branch == Witness::kVertex) {
    g = weight_gradient(x, ev, w.a);
    for (auto& t : g) t.value *= 2.0;
    return g;
  }
  const Eigen::RowVectorXd u = unit(x, w.a, w.b);
  g.push_back({w.a, u});
  g.push_back({w.b, -u});
  for (int v : {w.a, w.b}) {
    auto gw = weight_gradient(x, ev, v);
    g.insert(g.end(), gw.begin(), gw.end());
  }
  return g;
}

double WeightedRips::witness_value(const Eigen::MatrixXd& x, const EvaluatedFiltration& ev,
                                   SimplexId s) const {
  const auto& w = ev.witnesses[s];
  const auto& f = ev.weights;
  if (w.branch == Witness::kVertex) return 2.0 * f[w.a];
  return distance(x, w.a, w.b) + f[w.a] + f[w.b];
}

// ---------------------------------------------------------------- lower-star / height

LowerStar::LowerStar(std::shared_ptr<const SimplicialComplex> k) : FiltrationFamily(std::move(k)) {}

EvaluatedFiltration LowerStar::evaluate(const Eigen::MatrixXd& f) const {
  if (f.cols() != 1) throw std::invalid_argument("lower_star: vertex values must be n x 1");
  std::vector<double> vv(f.data(), f.data() + f.rows());
  for (SimplexId s = complex_->first_of_dim(0); s < complex_->end_of_dim(0); ++s)
    if (complex_->simplex(s)[0] >= f.rows())
      throw std::invalid_argument("lower_star: vertex id beyond the value vector");
  return lower_star_of(complex_, vv);
}

SparseGradient LowerStar::gradient(const Eigen::MatrixXd&, const EvaluatedFiltration& ev,
                                   SimplexId s) const {
  return {{ev.witnesses[s].a, Eigen::RowVectorXd::Ones(1)}};
}

double LowerStar::witness_value(const Eigen::MatrixXd& f, const EvaluatedFiltration& ev,
                                SimplexId s) const {
  return f(ev.witnesses[s].a, 0);
}

Height::Height(std::shared_ptr<const SimplicialComplex> k, PointCloud coords)
    : FiltrationFamily(std::move(k)), coords_(std::move(coords)) {
  for (SimplexId s = complex_->first_of_dim(0); s < complex_->end_of_dim(0); ++s)
    if (complex_->simplex(s)[0] >= coords_.rows())
      throw std::invalid_argument("height: vertex without coordinates");
}

namespace {

Eigen::RowVectorXd direction(const Eigen::MatrixXd& theta, Eigen::Index d, bool warn) {
  if (theta.rows() != 1 || theta.cols() != d)
    throw std::invalid_argument("height: direction must be 1 x " + std::to_string(d));
  const double n = theta.norm();
  if (n == 0.0) throw std::invalid_argument("height: zero direction");
  if (warn && std::abs(n - 1.0) > 1e-12) spdlog::warn("height: normalizing direction of norm {}", n);
  return theta.row(0) / n;
}

}  // namespace

EvaluatedFiltration Height::evaluate(const Eigen::MatrixXd& theta) const {
  const Eigen::RowVectorXd u = direction(theta, coords_.cols(), true);
  std::vector<double> vv(coords_.rows());
  for (int i = 0; i < coords_.rows(); ++i) vv[i] = coords_.row(i).dot(u);
  return lower_star_of(complex_, vv);
}

SparseGradient Height::gradient(const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev,
                                SimplexId s) const {
  const Eigen::RowVectorXd u = direction(theta, coords_.cols(), false);
  const Eigen::RowVectorXd xw = coords_.row(ev.witnesses[s].a);
  return {{0, (xw - u * xw.dot(u)) / theta.norm()}};
}

double Height::witness_value(const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev,
                             SimplexId s) const {
  const Eigen::RowVectorXd u = direction(theta, coords_.cols(), false);
  return coords_.row(ev.witnesses[s].a).dot(u);
}

// ---------------------------------------------------------------- raw values

RawValues::RawValues(std::shared_ptr<const SimplicialComplex> k) : FiltrationFamily(std::move(k)) {}

EvaluatedFiltration RawValues::evaluate(const Eigen::MatrixXd& theta) const {
  const auto& k = *complex_;
  const auto n = static_cast<SimplexId>(k.size());
  if (theta.rows() != n || theta.cols() != 1)
    throw std::invalid_argument("raw_values: parameter must be |K| x 1");
  std::vector<double> values(n);
  std::vector<Witness> wit(n);
  std::vector<std::pair<double, Witness>> atoms;
  for (SimplexId s = 0; s < n; ++s) {
    values[s] = theta(s, 0);
    wit[s] = {s, -1, Witness::kVertex};
    for (SimplexId f : k.facets(s)) {
      if (values[f] > values[s]) {
        values[s] = values[f];
        wit[s] = wit[f];
      }
    }
    atoms.push_back({values[s], wit[s]});
  }
  EvaluatedFiltration ev{Filtration(complex_, std::move(values)), std::move(wit), false, {}, {}};
  ev.on_boundary = shares_value(std::move(atoms));
  return ev;
}

SparseGradient RawValues::gradient(const Eigen::MatrixXd&, const EvaluatedFiltration& ev,
                                   SimplexId s) const {
  return {{ev.witnesses[s].a, Eigen::RowVectorXd::Ones(1)}};
}

double RawValues::witness_value(const Eigen::MatrixXd& theta, const EvaluatedFiltration& ev,
                                SimplexId s) const {
  return theta(ev.witnesses[s].a, 0);
}

void repair_monotone(const SimplicialComplex& k, std::vector<double>& values,
                     const std::vector<SimplexId>& moved) {
  std::vector<char> is_moved(k.size(), 0);
  for (SimplexId s : moved) is_moved[s] = 1;
  // lowered simplices drag their faces down
  for (auto s = static_cast<SimplexId>(k.size()) - 1; s >= 0; --s)
    for (SimplexId f : k.facets(s))
      if (values[f] > values[s] && !is_moved[f]) values[f] = values[s];
  // then everything is raised to its faces
  for (SimplexId s = 0; s < static_cast<SimplexId>(k.size()); ++s)
    for (SimplexId f : k.facets(s)) values[s] = std::max(values[s], values[f]);
}

std::vector<std::int64_t> FiltrationFamily::stratum_key(const Eigen::MatrixXd& theta) const {
  const auto sig = total_order(evaluate(theta).filtration);
  return {sig.order.begin(), sig.order.end()};
}

std::vector<std::int64_t> VietorisRips::stratum_key(const Eigen::MatrixXd& x) const {
  const auto& k = *complex_;
  require_rows(x, k.num_vertices(), "vietoris_rips");
  const SimplexId lo = k.first_of_dim(1), hi = k.end_of_dim(1);
  std::vector<double> v(hi - lo);
  for (SimplexId e = lo; e < hi; ++e) {
    const auto& sx = k.simplex(e);
    v[e - lo] = half_distance(x, sx[0], sx[1]);
  }
  std::vector<std::int64_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::int64_t a, std::int64_t b) {
    return v[a] < v[b] || (v[a] == v[b] && a < b);
  });
  // odd entries mark a tie with the previous edge
  for (std::size_t i = idx.size(); i-- > 0;) {
    const bool tie = i > 0 && v[idx[i]] == v[idx[i - 1]];
    idx[i] = 2 * idx[i] + (tie ? 1 : 0);
  }
  return idx;
}

OrderingSignature strata_signature(const Eigen::MatrixXd& theta, const FiltrationFamily& family) {
  const auto ev = family.evaluate(theta);
  auto sig = total_order(ev.filtration);
  sig.on_boundary = ev.on_boundary;
  return sig;
}

}  // namespace topo
