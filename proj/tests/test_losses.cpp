#include <cmath>
#include <numeric>
#include <set>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "topo/losses.hpp"

using namespace topo;
using testing_support::objective_fd_error;

namespace {

Diagram random_diagram(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0, 1);
  Diagram d;
  for (int i = 0; i < n; ++i) {
    const double b = u(rng);
    d.push_back({b, b + 0.05 + u(rng)});
  }
  return d;
}

// Central differences over the 2m diagram coordinates.
double diagram_fd_error(const std::function<LossResult(const Diagram&)>& loss, const Diagram& a,
                        double h = 1e-6) {
  const auto r = loss(a);
  Eigen::MatrixXd fd = Eigen::MatrixXd::Zero(r.gradient.rows(), 2);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int c = 0; c < 2; ++c) {
      Diagram p = a, m = a;
      (c ? p[i].death : p[i].birth) += h;
      (c ? m[i].death : m[i].birth) -= h;
      fd(static_cast<Eigen::Index>(i), c) = (loss(p).value - loss(m).value) / (2 * h);
    }
  const double scale = std::max({r.gradient.norm(), fd.norm(), 1e-5});
  return (r.gradient - fd).norm() / scale;
}

Eigen::MatrixXd cloud(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = g(rng);
  return x;
}

}  // namespace

TEST_CASE("total persistence") {
  auto r = total_persistence({{0, 2}});
  CHECK(r.value == 2);
  CHECK(r.gradient(0, 0) == -2);
  CHECK(r.gradient(0, 1) == 2);
  CHECK(total_persistence({}).value == 0);
  CHECK(total_persistence({}).gradient.rows() == 0);
  auto z = total_persistence({{1, 1}});
  CHECK(z.value == 0);
  CHECK(z.gradient.isZero());
  auto neg = total_persistence({{0, 2}}, -1.0, 2.0, true);
  CHECK(neg.value == -2);
  CHECK(neg.gradient(0, 0) == 0);
  CHECK(neg.gradient(0, 1) == -2);
  auto ess = total_persistence({{0, kInfinity}});
  CHECK(ess.value == 0);
}

TEST_CASE("simplification") {
  auto r = simplification_loss({{0, 0.1}, {0, 5}}, 1.0);
  CHECK(r.value == doctest::Approx(0.1));
  CHECK(r.gradient.row(0).norm() > 0);
  CHECK(r.gradient.row(1).isZero());
  CHECK(simplification_loss({{0, 3}, {1, 4}}, 1.0).value == 0);
  auto edge = simplification_loss({{0, 1}}, 1.0);
  CHECK(edge.value == 0);
  CHECK(edge.gradient.isZero());
}

TEST_CASE("distance to target") {
  Diagram a{{0, 2}, {0.5, 1.5}};
  auto same = distance_to_target(a, a);
  CHECK(same.value == 0);
  CHECK(same.gradient.isZero());
  auto r = distance_to_target({{0, 2}}, {});
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.gradient(0, 0) == -1);
  CHECK(r.gradient(0, 1) == 1);
}

TEST_CASE("singleton") {
  auto r = singleton_loss({{1, 3}}, 0, {1, 5});
  CHECK(r.value == 2);
  CHECK(r.gradient(0, 0) == 0);
  CHECK(r.gradient(0, 1) == -1);
  auto z = singleton_loss({{1, 3}}, 0, {1, 3});
  CHECK(z.value == 0);
  CHECK(z.gradient.isZero());
}

TEST_CASE("norm to empty") {
  auto r = norm_to_empty({{0, 2}}, -1.0);
  CHECK(r.value == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-15));
  CHECK(norm_to_empty({}, -1.0).value == 0);
  // equals FG_2 to the empty diagram
  Diagram a{{0, 1}, {0.3, 2}, {1, 1.4}};
  CHECK(norm_to_empty(a).value == doctest::Approx(fg_distance(a, {}).cost).epsilon(1e-14));
}

TEST_CASE("diagram-level finite differences") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    auto a = random_diagram(rng, 5);
    auto t = random_diagram(rng, 4);
    CHECK(diagram_fd_error([](const Diagram& d) { return total_persistence(d); }, a) < 1e-4);
    CHECK(diagram_fd_error([](const Diagram& d) { return total_persistence(d, -1, 3, false); }, a) <
          1e-4);
    CHECK(diagram_fd_error([](const Diagram& d) { return simplification_loss(d, 0.5); }, a) < 1e-4);
    CHECK(diagram_fd_error([&](const Diagram& d) { return distance_to_target(d, t); }, a) < 1e-4);
    CHECK(diagram_fd_error([](const Diagram& d) { return singleton_loss(d, 2, {0.3, 0.9}); }, a) <
          1e-6);
    CHECK(diagram_fd_error([](const Diagram& d) { return norm_to_empty(d, -1); }, a) < 1e-4);
  }
}

TEST_CASE("linear vectorization") {
  auto grid = lattice(0, 1, 5, 5);
  auto e = linear_vectorization({}, grid, 0.1);
  CHECK(e.values.isZero());
  auto one = linear_vectorization({{0.25, 0.5}}, grid, 0.1);
  CHECK(one.values.maxCoeff() == 1.0);
  CHECK(one.values(1 * 5 + 2) == 1.0);

  std::mt19937_64 rng(47);
  auto a = random_diagram(rng, 3), b = random_diagram(rng, 2);
  Diagram ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  auto va = linear_vectorization(a, grid, 0.2), vb = linear_vectorization(b, grid, 0.2);
  auto vab = linear_vectorization(ab, grid, 0.2);
  CHECK((vab.values - va.values - vb.values).norm() < 1e-14);

  // jacobian against finite differences
  const double h = 1e-6;
  for (std::size_t i = 0; i < ab.size(); ++i) {
    Diagram p = ab, m = ab;
    p[i].death += h;
    m[i].death -= h;
    Eigen::VectorXd fd =
        (linear_vectorization(p, grid, 0.2).values - linear_vectorization(m, grid, 0.2).values) /
        (2 * h);
    CHECK((fd - vab.jacobian.col(2 * i + 1)).norm() < 1e-6);
  }
}

TEST_CASE("compose gradient") {
  VietorisRips vr_family(4, 2);
  Eigen::MatrixXd sq(4, 2);
  sq << 0, 0, 1, 0, 1, 1, 0, 1;
  auto ev = vr_family.evaluate(sq);
  auto lift = ordinary_lift(ev.filtration, persistence_pairs(ev.filtration), 1);
  REQUIRE(lift.size() == 1);
  auto zero = compose_gradient(Eigen::MatrixXd::Zero(1, 2), lift, vr_family, sq, ev);
  CHECK(zero.isZero());
  CHECK_THROWS_AS(compose_gradient(Eigen::MatrixXd::Zero(2, 2), lift, vr_family, sq, ev),
                  std::invalid_argument);
  auto tp = total_persistence(lift.points);
  auto g = compose_gradient(tp.gradient, lift, vr_family, sq, ev);
  // support is the union of the witness edges of the birth and death
  // simplices; a side and a diagonal always share a corner, so three points
  std::set<int> corners;
  for (SimplexId s : {lift.pairs[0].birth, lift.pairs[0].death}) {
    corners.insert(ev.witnesses[s].a);
    corners.insert(ev.witnesses[s].b);
  }
  const auto rows = support_rows(g);
  CHECK(std::set<int>(rows.begin(), rows.end()) == corners);
  CHECK(rows.size() == 3);

  auto family = std::make_shared<VietorisRips>(4, 2);
  Eigen::MatrixXd jitter(4, 2);
  jitter << 0.01, -0.02, 1.03, 0.01, 0.98, 1.02, -0.01, 0.97;
  Objective obj(family, {{1, make_total_persistence(), 1.0}});
  CHECK(objective_fd_error(obj, jitter) < 1e-5);
  auto e = obj.evaluate(jitter);
  CHECK(support_rows(e.gradient).size() == 3);
}

TEST_CASE("lift order does not change the composite gradient") {
  std::mt19937_64 rng(53);
  VietorisRips vr(9, 2);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = cloud(rng, 9, 2);
    auto ev = vr.evaluate(x);
    auto lift = ordinary_lift(ev.filtration, persistence_pairs(ev.filtration), 0);
    auto r = total_persistence(lift.points);
    auto g = compose_gradient(r.gradient, lift, vr, x, ev);
    std::vector<std::size_t> perm(lift.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Lift shuffled = lift;
    Eigen::MatrixXd sg(r.gradient.rows(), 2);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled.points[i] = lift.points[perm[i]];
      shuffled.pairs[i] = lift.pairs[perm[i]];
      sg.row(i) = r.gradient.row(perm[i]);
    }
    CHECK((compose_gradient(sg, shuffled, vr, x, ev) - g).norm() < 1e-12);
  }
}

TEST_CASE("composite finite differences") {
  std::mt19937_64 rng(59);
  auto vr = std::make_shared<VietorisRips>(8, 2);
  auto wr = std::make_shared<WeightedRips>(8, 2, WeightSpec::dtm(2));
  // a ring with chords: lower-star H0 on a complete graph is all zero-length
  auto ring = std::make_shared<SimplicialComplex>(SimplicialComplex::from_simplices(
      {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {0, 7}, {0, 4}, {2, 6, 7}}));
  auto ls = std::make_shared<LowerStar>(ring);
  int singleton_checks = 0;
  auto target = Diagram{{0.1, 0.6}, {0.2, 0.4}};
  for (int trial = 0; trial < 30; ++trial) {
    auto x = cloud(rng, 8, 2);
    Eigen::MatrixXd f = cloud(rng, 8, 1);
    for (const auto& fam : std::vector<std::shared_ptr<const FiltrationFamily>>{vr, wr, ls}) {
      const auto& theta = fam->kind() == FamilyKind::lower_star ? f : x;
      Objective tp(fam, {{0, make_total_persistence(), 1.0}, {1, make_total_persistence(-1.0), 1.0}});
      CHECK(objective_fd_error(tp, theta) < 1e-4);
      Objective dt(fam, {{0, make_distance_to_target(target), 1.0}});
      CHECK(objective_fd_error(dt, theta) < 1e-4);
      auto e = tp.evaluate(theta);
      const auto& lift = e.lifts[0];
      if (lift.size() == 0) continue;
      ++singleton_checks;
      auto single = std::make_shared<SingletonLoss>(lift.pairs.back(), DiagramPoint{-1.0, 3.0});
      Objective sg(fam, {{0, single, 1.0}});
      CHECK(objective_fd_error(sg, theta) < 1e-4);
    }
  }
  CHECK(singleton_checks > 80);
}

TEST_CASE("box confinement") {
  auto reg = box_confinement(2.0);
  Eigen::MatrixXd x(2, 2);
  x << 3, 0, 0.5, -1;
  Eigen::MatrixXd g;
  CHECK(reg(x, &g) == 1.0);
  CHECK(g(0, 0) == 2.0);
  CHECK(g.bottomRows(1).isZero());
  Eigen::MatrixXd inside = Eigen::MatrixXd::Constant(3, 2, 1.9);
  CHECK(reg(inside, nullptr) == 0.0);
}
