#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "topo/filtrations.hpp"
#include "topo/persistence.hpp"

using namespace topo;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

// Central differences of every simplex value against the analytic sparse
// gradients; returns the worst relative error.
double fd_error(const FiltrationFamily& fam, const Eigen::MatrixXd& theta, double h = 1e-6) {
  const auto ev = fam.evaluate(theta);
  const auto n = static_cast<SimplexId>(fam.complex().size());
  std::vector<ParamGradient> analytic(n, ParamGradient::Zero(theta.rows(), theta.cols()));
  for (SimplexId s = 0; s < n; ++s) scatter(fam.gradient(theta, ev, s), 1.0, analytic[s]);
  std::vector<ParamGradient> numeric(n, ParamGradient::Zero(theta.rows(), theta.cols()));
  for (int i = 0; i < theta.rows(); ++i)
    for (int j = 0; j < theta.cols(); ++j) {
      Eigen::MatrixXd p = theta, m = theta;
      p(i, j) += h;
      m(i, j) -= h;
      const auto ep = fam.evaluate(p);
      const auto em = fam.evaluate(m);
      const auto vp = ep.filtration.values();
      const auto vm = em.filtration.values();
      for (SimplexId s = 0; s < n; ++s) numeric[s](i, j) = (vp[s] - vm[s]) / (2 * h);
    }
  double worst = 0.0;
  for (SimplexId s = 0; s < n; ++s) {
    const double scale = std::max(1.0, analytic[s].norm());
    worst = std::max(worst, (analytic[s] - numeric[s]).norm() / scale);
  }
  return worst;
}

void check_witnesses(const FiltrationFamily& fam, const Eigen::MatrixXd& theta) {
  const auto ev = fam.evaluate(theta);
  CHECK(Filtration::is_monotone(fam.complex(), ev.filtration.values()));
  for (SimplexId s = 0; s < static_cast<SimplexId>(fam.complex().size()); ++s)
    CHECK(fam.witness_value(theta, ev, s) == ev.filtration.value(s));
}

}  // namespace

TEST_CASE("Rips values") {
  VietorisRips two(2, 1);
  Eigen::MatrixXd x(2, 2);
  x << 0, 0, 3, 4;
  auto ev = two.evaluate(x);
  CHECK(ev.filtration.value(2) == 2.5);

  VietorisRips sq(4, 2);
  Eigen::MatrixXd s(4, 2);
  s << 0, 0, 1, 0, 1, 1, 0, 1;
  auto es = sq.evaluate(s);
  const auto& k = sq.complex();
  CHECK(es.filtration.value(k.id_of({0, 1})) == 0.5);
  CHECK(es.filtration.value(k.id_of({0, 2})) == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-15));
  for (SimplexId t = k.first_of_dim(2); t < k.end_of_dim(2); ++t)
    CHECK(es.filtration.value(t) == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-15));
  CHECK(es.on_boundary);  // sides tie, and so do the diagonals

  Eigen::MatrixXd dup(3, 2);
  dup << 1, 1, 1, 1, 0, 2;
  VietorisRips d3(3, 2);
  auto ed = d3.evaluate(dup);
  CHECK(ed.filtration.value(d3.complex().id_of({0, 1})) == 0.0);
  CHECK(d3.gradient(dup, ed, d3.complex().id_of({0, 1})).empty());
}

TEST_CASE("Rips gradient") {
  VietorisRips vr(3, 2);
  Eigen::MatrixXd x(3, 2);
  x << 5, 5, 0, 0, 3, 4;
  auto ev = vr.evaluate(x);
  ParamGradient g = ParamGradient::Zero(3, 2);
  scatter(vr.gradient(x, ev, vr.complex().id_of({1, 2})), 1.0, g);
  CHECK(g(1, 0) == doctest::Approx(-0.3));
  CHECK(g(1, 1) == doctest::Approx(-0.4));
  CHECK(g(2, 0) == doctest::Approx(0.3));
  CHECK(g(2, 1) == doctest::Approx(0.4));
  CHECK(g.row(0).isZero());
  CHECK(vr.gradient(x, ev, 0).empty());

  // triangle takes the gradient of its longest edge
  Eigen::MatrixXd y(3, 2);
  y << 0, 0, 10, 0, 5, 1;
  auto ey = vr.evaluate(y);
  const auto& k = vr.complex();
  CHECK(ey.witnesses[k.id_of({0, 1, 2})] == ey.witnesses[k.id_of({0, 1})]);
}

TEST_CASE("Rips finite differences and invariances") {
  std::mt19937_64 rng(1);
  VietorisRips vr(6, 2);
  for (int trial = 0; trial < 100; ++trial) {
    auto x = random_matrix(rng, 6, 3);
    CHECK(fd_error(vr, x) < 1e-5);
    check_witnesses(vr, x);
    // rigid motion
    Eigen::Matrix3d q = Eigen::Quaterniond::UnitRandom().toRotationMatrix();
    Eigen::MatrixXd y = (x * q.transpose()).rowwise() + Eigen::RowVector3d(1, -2, 0.5);
    const auto ea = vr.evaluate(x);
    const auto eb = vr.evaluate(y);
    const auto a = ea.filtration.values();
    const auto b = eb.filtration.values();
    double diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    CHECK(diff <= 1e-12);
  }
}

TEST_CASE("weighted Rips values") {
  Eigen::MatrixXd x(2, 1);
  x << 0, 2;
  WeightedRips zero(2, 1, WeightSpec::constant_weights({0, 0}));
  CHECK(zero.evaluate(x).filtration.value(2) == 2.0);
  WeightedRips ones(2, 1, WeightSpec::constant_weights({1, 1}));
  CHECK(ones.evaluate(x).filtration.value(2) == 4.0);
  Eigen::MatrixXd y(2, 1);
  y << 0, 1;
  WeightedRips heavy(2, 1, WeightSpec::constant_weights({10, 0}));
  auto ev = heavy.evaluate(y);
  CHECK(ev.filtration.value(2) == 20.0);
  CHECK(ev.witnesses[2].branch == Witness::kVertex);
  CHECK(ev.witnesses[2].a == 0);

  CHECK_THROWS_AS(WeightedRips(5, 1, WeightSpec::dtm(5)), std::invalid_argument);
  CHECK_THROWS_AS(dtm_weights(Eigen::MatrixXd::Zero(3, 2), 3, nullptr), std::invalid_argument);
}

TEST_CASE("weighted Rips gradients") {
  std::mt19937_64 rng(2);
  WeightedRips flat(5, 2, WeightSpec::constant_weights(std::vector<double>(5, 0.0)));
  VietorisRips vr(5, 2);
  auto x = random_matrix(rng, 5, 2);
  auto ef = flat.evaluate(x);
  auto ev = vr.evaluate(x);
  for (SimplexId s = 5; s < 15; ++s) {
    ParamGradient a = ParamGradient::Zero(5, 2), b = a;
    scatter(flat.gradient(x, ef, s), 1.0, a);
    scatter(vr.gradient(x, ev, s), 2.0, b);
    CHECK((a - b).norm() < 1e-15);
  }

  WeightedRips dtm(5, 2, WeightSpec::dtm(2));
  std::uniform_real_distribution<double> u(0, 0.6);
  std::vector<double> w(6);
  for (auto& v : w) v = u(rng);
  WeightedRips cst(6, 2, WeightSpec::constant_weights(w));
  WeightedRips fn(6, 2,
                  WeightSpec::function(
                      [](const Eigen::RowVectorXd& p) { return 0.3 * p.squaredNorm(); },
                      [](const Eigen::RowVectorXd& p) -> Eigen::RowVectorXd { return 0.6 * p; }));
  int vertex_branch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_matrix(rng, 5, 2);
    CHECK(fd_error(dtm, a) < 1e-5);
    check_witnesses(dtm, a);
    auto b = random_matrix(rng, 6, 2);
    CHECK(fd_error(cst, b) < 1e-5);
    CHECK(fd_error(fn, b) < 1e-5);
    check_witnesses(fn, b);
    for (const auto& wt : cst.evaluate(b).witnesses) vertex_branch += wt.branch == Witness::kVertex;
  }
  CHECK(vertex_branch > 600);  // vertices plus some vertex-dominated edges
}

TEST_CASE("lower-star") {
  auto k = std::make_shared<SimplicialComplex>(SimplicialComplex::from_simplices({{0, 1}, {1, 2}}));
  LowerStar ls(k);
  Eigen::MatrixXd f(3, 1);
  f << 0, 2, 1;
  auto ev = ls.evaluate(f);
  CHECK(ev.filtration.value(k->id_of({0, 1})) == 2);
  CHECK(ev.filtration.value(k->id_of({1, 2})) == 2);
  auto g = ls.gradient(f, ev, k->id_of({1, 2}));
  REQUIRE(g.size() == 1);
  CHECK(g[0].row == 1);

  Eigen::MatrixXd eq = Eigen::MatrixXd::Constant(3, 1, 4.0);
  auto ee = ls.evaluate(eq);
  for (double v : ee.filtration.values()) CHECK(v == 4.0);
  CHECK(ee.witnesses[k->id_of({1, 2})].a == 1);
  CHECK(ee.on_boundary);

  std::mt19937_64 rng(4);
  auto big = std::make_shared<SimplicialComplex>(SimplicialComplex::complete(6, 3));
  LowerStar lb(big);
  for (int trial = 0; trial < 100; ++trial) {
    auto v = random_matrix(rng, 6, 1);
    CHECK(fd_error(lb, v) < 1e-5);
    check_witnesses(lb, v);
  }
}

TEST_CASE("height") {
  auto tri = std::make_shared<SimplicialComplex>(SimplicialComplex::from_simplices({{0, 1, 2}}));
  PointCloud c(3, 2);
  c << 0, 0, 1, 0, 0, 1;
  Height h(tri, c);
  Eigen::MatrixXd e2(1, 2);
  e2 << 0, 1;
  auto ev = h.evaluate(e2);
  CHECK(ev.filtration.value(0) == 0);
  CHECK(ev.filtration.value(1) == 0);
  CHECK(ev.filtration.value(2) == 1);

  // tangent projection at a unit direction
  Eigen::MatrixXd th(1, 2);
  th << 0.6, 0.8;
  auto et = h.evaluate(th);
  auto g = h.gradient(th, et, 2);
  Eigen::RowVector2d x2(0, 1);
  Eigen::RowVector2d expect = x2 - th.row(0) * th.row(0).dot(x2);
  CHECK((g[0].value - expect).norm() < 1e-15);

  // finite differences (normalization makes the map well-defined off the sphere)
  std::mt19937_64 rng(8);
  auto k = std::make_shared<SimplicialComplex>(SimplicialComplex::complete(7, 2));
  Height hk(k, random_matrix(rng, 7, 3));
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd d = random_matrix(rng, 1, 3);
    d /= d.norm();
    CHECK(fd_error(hk, d) < 1e-5);
    check_witnesses(hk, d);
  }

  // a symmetry of the complex leaves the diagram unchanged
  PointCloud sq(4, 2);
  sq << 1, 0, 0, 1, -1, 0, 0, -1;
  auto cyc = std::make_shared<SimplicialComplex>(
      SimplicialComplex::from_simplices({{0, 1}, {1, 2}, {2, 3}, {0, 3}}));
  Height hs(cyc, sq);
  Eigen::MatrixXd a(1, 2), b(1, 2);
  a << std::cos(0.3), std::sin(0.3);
  b << std::cos(0.3 + M_PI / 2), std::sin(0.3 + M_PI / 2);
  auto fa = hs.evaluate(a).filtration;
  auto fb = hs.evaluate(b).filtration;
  auto da = diagram(fa, persistence_pairs(fa));
  auto db = diagram(fb, persistence_pairs(fb));
  for (int p = 0; p < 2; ++p) {
    REQUIRE(da[p].size() == db[p].size());
    auto sa = da[p], sb = db[p];
    auto cmp = [](auto& l, auto& r) { return std::tie(l.birth, l.death) < std::tie(r.birth, r.death); };
    std::sort(sa.begin(), sa.end(), cmp);
    std::sort(sb.begin(), sb.end(), cmp);
    for (std::size_t i = 0; i < sa.size(); ++i) {
      CHECK(sa[i].birth == doctest::Approx(sb[i].birth).epsilon(1e-12));
      if (!sa[i].essential()) CHECK(sa[i].death == doctest::Approx(sb[i].death).epsilon(1e-12));
    }
  }
}

TEST_CASE("raw values") {
  auto k = std::make_shared<SimplicialComplex>(SimplicialComplex::from_simplices({{0, 1, 2}}));
  RawValues raw(k);
  Eigen::MatrixXd t(7, 1);
  t << 0, 1, 2, 1.5, 2, 3, 3;
  auto ev = raw.evaluate(t);
  for (int i = 0; i < 7; ++i) CHECK(ev.witnesses[i].a == i);
  t(3, 0) = 0.5;  // edge {0,1} below its vertex 1
  ev = raw.evaluate(t);
  CHECK(ev.filtration.value(3) == 1.0);
  CHECK(ev.witnesses[3].a == 1);

  std::vector<double> vals{0, 1, 2, 1.5, 2, 3, 3};
  vals[5] = 0.2;  // lower edge {1,2}
  repair_monotone(*k, vals, {5});
  CHECK(Filtration::is_monotone(*k, vals));
  CHECK(vals[5] == 0.2);
  CHECK(vals[1] == 0.2);
  CHECK(vals[2] == 0.2);
}

TEST_CASE("strata signatures") {
  std::mt19937_64 rng(9);
  VietorisRips vr(5, 2);
  auto x = random_matrix(rng, 5, 2);
  auto s0 = strata_signature(x, vr);
  CHECK_FALSE(s0.on_boundary);
  Eigen::MatrixXd y = x + 1e-10 * random_matrix(rng, 5, 2);
  CHECK(strata_signature(y, vr) == s0);

  // move point 0 across the sphere |x_0 - x_2| = |x_3 - x_4|
  VietorisRips v5(5, 1);
  Eigen::MatrixXd z(5, 2);
  z << 0, 0, 10, 10, 1, 0, 20, 0, 21, 0;
  auto before = strata_signature(z, v5);
  CHECK(before.on_boundary);
  z(0, 0) = -0.01;
  auto after_far = strata_signature(z, v5);
  z(0, 0) = 0.01;
  auto after_near = strata_signature(z, v5);
  CHECK_FALSE(after_far.on_boundary);
  CHECK_FALSE(after_near == after_far);

  VietorisRips sq(4, 2);
  Eigen::MatrixXd s(4, 2);
  s << 0, 0, 1, 0, 1, 1, 0, 1;
  CHECK(strata_signature(s, sq).on_boundary);
}

TEST_CASE("point cloud text round trip") {
  PointCloud x(2, 3);
  x << 0.1, -2, 1.0 / 3.0, 1e-300, 4, 5;
  std::stringstream ss;
  write_point_cloud(ss, x);
  CHECK(ss.str().rfind("x0,x1,x2\n", 0) == 0);
  auto y = read_point_cloud(ss);
  CHECK(y == x);
  std::stringstream bad("x0,x1\n1,2,3\n");
  CHECK_THROWS(read_point_cloud(bad));
}

TEST_CASE("Rips stratum key agrees with the total order") {
  std::mt19937_64 rng(17);
  VietorisRips vr(6, 2);
  std::uniform_int_distribution<int> coord(0, 3);
  int same = 0, differ = 0;
  for (int trial = 0; trial < 400; ++trial) {
    // a coarse integer grid makes ties and shared orders common
    Eigen::MatrixXd a(6, 2), b(6, 2);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) {
        a(i, j) = coord(rng);
        b(i, j) = coord(rng) % 2 ? a(i, j) : coord(rng);
      }
    // ties make the key finer than the order, never coarser
    const bool keys = vr.stratum_key(a) == vr.stratum_key(b);
    CHECK((!keys || strata_signature(a, vr) == strata_signature(b, vr)));
  }
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 400; ++trial) {
    Eigen::MatrixXd a(6, 2), b(6, 2);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) {
        a(i, j) = g(rng);
        b(i, j) = a(i, j) + 0.02 * g(rng);
      }
    const bool keys = vr.stratum_key(a) == vr.stratum_key(b);
    CHECK(keys == (strata_signature(a, vr) == strata_signature(b, vr)));
    (keys ? same : differ)++;
  }
  CHECK(same > 10);
  CHECK(differ > 10);
}
