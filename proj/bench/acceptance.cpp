#include "acceptance.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>

#include "support.hpp"
#include "topo/experiments.hpp"
#include "topo/gradient_schemes.hpp"
#include "topo/metrics.hpp"
#include "topo/moving_set.hpp"

namespace topo::acceptance {

using namespace testing_support;

namespace {

Eigen::MatrixXd gaussian(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

// ------------------------------------------------------------------ 1

Outcome torus_betti() {
  auto k = std::make_shared<SimplicialComplex>(SimplicialComplex::from_simplices(torus_triangles()));
  Filtration f(k, std::vector<double>(k->size(), 0.0));
  const auto p = persistence_pairs(f);
  std::vector<std::size_t> ess(3, 0);
  for (int d = 0; d < 3 && d <= p.max_dim(); ++d) ess[d] = p.essential[d].size();
  const bool ok = ess == std::vector<std::size_t>{1, 2, 1} && p.max_dim() == 2;
  return {ok, fmt::format("essential counts ({}, {}, {}) on {} simplices", ess[0], ess[1], ess[2],
                          k->size())};
}

// ------------------------------------------------------------------ 2

Outcome pairing_oracle() {
  std::mt19937_64 rng(2);
  int mismatches = 0, pairs = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = random_filtration(rng, 6, 3, 4, 30);
    const auto expected = brute_force_pairs(f);
    const auto by_reduce = reduce(f).pairing();
    const auto by_cohomology = persistence_pairs(f);
    pairs += static_cast<int>(expected.size());
    std::set<int> expected_essential;
    for (SimplexId s = 0; s < static_cast<SimplexId>(f.complex().size()); ++s)
      expected_essential.insert(s);
    for (const auto& [b, d] : expected) expected_essential.erase(b), expected_essential.erase(d);
    if (as_set(by_reduce) != expected || essentials(by_reduce) != expected_essential ||
        by_cohomology != by_reduce)
      ++mismatches;
  }
  return {mismatches == 0,
          fmt::format("200 filtrations, {} pairs, {} mismatches", pairs, mismatches)};
}

// ------------------------------------------------------------------ 3

Outcome square_bar() {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 0, 1, 1, 0, 1;
  VietorisRips vr(4, 2);
  const auto ev = vr.evaluate(x);
  const auto dgm = diagram(ev.filtration, persistence_pairs(ev.filtration), true);
  const auto h1 = dgm.ordinary(1);
  // oracle: pairs from ranks of the boundary matrix, no reduction
  Diagram oracle;
  for (const auto& [b, d] : brute_force_pairs(ev.filtration))
    if (ev.filtration.complex().dimension(b) == 1 &&
        ev.filtration.value(d) > ev.filtration.value(b))
      oracle.push_back({ev.filtration.value(b), ev.filtration.value(d)});
  const double want_d = std::sqrt(2.0) / 2.0;
  const bool ok = h1.size() == 1 && oracle.size() == 1 && std::abs(h1[0].birth - 0.5) <= 1e-12 &&
                  std::abs(h1[0].death - want_d) <= 1e-12 &&
                  std::abs(oracle[0].birth - 0.5) <= 1e-12 &&
                  std::abs(oracle[0].death - want_d) <= 1e-12;
  if (h1.empty()) return {false, "no H1 bar"};
  return {ok, fmt::format("H1 = {} bar(s), first ({:.17g}, {:.17g})", h1.size(), h1[0].birth,
                          h1[0].death)};
}

// ------------------------------------------------------------------ 4

// Every partial injection a -> b; returns (min q-sum)^{1/q} and the min-max.
std::pair<double, double> enumerate(const Diagram& a, const Diagram& b, double q, double ground) {
  double best_sum = std::numeric_limits<double>::infinity(), best_max = best_sum;
  std::vector<char> used(b.size(), 0);
  std::function<void(std::size_t, double, double)> rec = [&](std::size_t i, double sum,
                                                             double mx) {
    if (i == a.size()) {
      for (std::size_t j = 0; j < b.size(); ++j)
        if (!used[j]) {
          const double c = diagonal_distance(b[j], ground);
          sum += std::pow(c, q);
          mx = std::max(mx, c);
        }
      best_sum = std::min(best_sum, sum);
      best_max = std::min(best_max, mx);
      return;
    }
    const double cd = diagonal_distance(a[i], ground);
    rec(i + 1, sum + std::pow(cd, q), std::max(mx, cd));
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      const double c = ground_distance(a[i], b[j], ground);
      rec(i + 1, sum + std::pow(c, q), std::max(mx, c));
      used[j] = 0;
    }
  };
  rec(0, 0.0, 0.0);
  return {std::pow(best_sum, 1.0 / q), best_max};
}

Outcome fg_exactness() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> count(0, 5);
  std::uniform_real_distribution<double> u(0, 1);
  auto random_diagram = [&] {
    Diagram d;
    for (int i = count(rng); i > 0; --i) {
      const double b = u(rng);
      d.push_back({b, b + u(rng)});
    }
    return d;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_diagram(), b = random_diagram();
    for (double q : {1.0, 2.0}) {
      const auto [fg, bn] = enumerate(a, b, q, 2.0);
      worst = std::max(worst, std::abs(fg_distance(a, b, q, 2.0).cost - fg));
      if (q == 2.0) worst = std::max(worst, std::abs(bottleneck_distance(a, b, 2.0) - bn));
    }
    const auto [fg_inf, bn_inf] = enumerate(a, b, 1.0, std::numeric_limits<double>::infinity());
    worst = std::max(worst, std::abs(bottleneck_distance(a, b) - bn_inf));
  }

  // stability: FG_inf <= |f - g|_inf for lower-star filtrations
  auto k = std::make_shared<SimplicialComplex>(SimplicialComplex::complete(8, 2));
  LowerStar ls(k);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> small(-0.2, 0.2);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd f(8, 1), h(8, 1);
    for (int i = 0; i < 8; ++i) {
      f(i, 0) = g(rng);
      h(i, 0) = f(i, 0) + small(rng);
    }
    const double linf = (f - h).cwiseAbs().maxCoeff();
    const auto ef = ls.evaluate(f), eh = ls.evaluate(h);
    const auto df = diagram(ef.filtration, persistence_pairs(ef.filtration));
    const auto dh = diagram(eh.filtration, persistence_pairs(eh.filtration));
    for (int p = 0; p < 2; ++p)
      if (bottleneck_distance(df.ordinary(p), dh.ordinary(p)) > linf) ++violations;
  }
  return {worst <= 1e-12 && violations == 0,
          fmt::format("max |exact - enumeration| = {:.3g} over 100 pairs; {} stability violations "
                      "in 100 trials",
                      worst, violations)};
}

// ------------------------------------------------------------------ 5

Outcome composite_gradients() {
  std::mt19937_64 rng(5);
  auto vr = std::make_shared<VietorisRips>(8, 2);
  auto wr = std::make_shared<WeightedRips>(8, 2, WeightSpec::dtm(2));
  auto ring = std::make_shared<SimplicialComplex>(SimplicialComplex::from_simplices(
      {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {0, 7}, {0, 4}, {2, 6, 7}}));
  auto ls = std::make_shared<LowerStar>(ring);
  const Diagram target{{0.1, 0.6}, {0.2, 0.4}};
  struct Family {
    std::string name;
    std::shared_ptr<const FiltrationFamily> fam;
    int cols;
  };
  const std::vector<Family> families{{"rips", vr, 2}, {"weighted rips", wr, 2}, {"lower star", ls, 1}};
  std::string detail;
  bool ok = true;
  for (const auto& fam : families) {
    std::map<std::string, std::pair<int, double>> seen;  // loss -> (configs, worst error)
    auto check = [&](const std::string& loss, const Objective& obj, const Eigen::MatrixXd& theta) {
      auto& [n, worst] = seen[loss];
      if (n >= 100) return;
      ++n;
      worst = std::max(worst, objective_fd_error(obj, theta));
    };
    for (int trial = 0; trial < 2000; ++trial) {
      const auto theta = gaussian(rng, 8, fam.cols);
      Objective tp(fam.fam, {{0, make_total_persistence(), 1.0},
                             {1, make_total_persistence(-1.0), 1.0}});
      const auto e = tp.evaluate(theta, false);
      check("total persistence", tp, theta);
      check("distance to target",
            Objective(fam.fam, {{0, make_distance_to_target(target), 1.0}}), theta);
      for (const auto& lift : e.lifts)
        if (lift.size() > 0) {
          const auto& pr = lift.pairs[trial % lift.size()];
          check("singleton",
                Objective(fam.fam, {{lift.dim, std::make_shared<SingletonLoss>(
                                                   pr, DiagramPoint{-1.0, 3.0}),
                                     1.0}}),
                theta);
          break;
        }
      if (seen.size() == 3 && std::all_of(seen.begin(), seen.end(),
                                          [](const auto& s) { return s.second.first >= 100; }))
        break;
    }
    for (const auto& [loss, s] : seen) {
      const bool pass = s.first >= 100 && s.second <= 1e-4;
      ok = ok && pass;
      detail += fmt::format("{}{}/{}: {} configs, max rel err {:.2g}", detail.empty() ? "" : "; ",
                            fam.name, loss, s.first, s.second);
    }
    if (seen.size() < 3) ok = false;
  }
  return {ok, detail};
}

// ------------------------------------------------------------------ 6

Outcome prop4_decrease() {
  int accepted = 0, violations = 0, rejected = 0, mismatched = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = gen_circle(100, 0.05, true, seed);
    const auto obj = circle_loss(101);
    DescentConfig cfg;
    cfg.method = Method::stratified;
    cfg.steps = 20;
    cfg.lr = 0.064;
    cfg.seed = seed;
    cfg.stratified.lipschitz = 0.0;
    cfg.stratified.beta = 0.5;
    for (int k = 0; k <= cfg.steps; ++k) cfg.snapshots.push_back(k);
    const auto r = descend(x, obj, cfg);
    rejected += r.trace.rejected_steps;
    for (const auto& a : r.trace.accepted) {
      ++accepted;
      const auto& before = r.trace.snapshots.at(a.step);
      const auto after_it = r.trace.snapshots.find(a.step + 1);
      if (after_it == r.trace.snapshots.end()) {
        ++mismatched;
        continue;
      }
      // recomputed from the stored iterates, not from the driver's own values
      const double lhs = obj.value(after_it->second);
      const double rhs = obj.value(before) - cfg.stratified.beta * a.alpha * a.grad_sq;
      if (!(lhs <= rhs)) ++violations;
    }
  }
  return {accepted > 0 && violations == 0 && mismatched == 0,
          fmt::format("{} accepted steps over 3 seeds, {} violations, {} rejected attempts",
                      accepted, violations, rejected)};
}

// ------------------------------------------------------------------ 7

Outcome moving_sets() {
  std::mt19937_64 rng(7);
  std::map<int, int> trials, nontrivial;
  int mismatches = 0, naive_broken = 0, big_step_broken = 0, total = 0;
  for (int c = 0; c < 4; ++c) {
    while (trials[c] < 200) {
      const auto f = random_filtration(rng, 7, 3, 5, 50);
      const auto order = total_order(f);
      const auto pairing = persistence_pairs(f, order, -1);
      std::vector<PersistencePair> all;
      // pairs with a diagram point, so the big-step loss can address them
      for (const auto& d : pairing.pairs)
        for (const auto& pr : d)
          if (f.value(pr.death) > f.value(pr.birth)) all.push_back(pr);
      if (all.empty()) continue;
      const auto pr = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
      const bool death = c < 2, earlier = c == 0 || c == 2;
      const SimplexId tau = death ? pr.death : pr.birth;
      const SimplexId sigma = death ? pr.birth : pr.death;
      double off = std::uniform_real_distribution<double>(0.0, 4.0)(rng);
      if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) off = std::ceil(off);
      const double t = earlier ? f.value(tau) - off : f.value(tau) + off;

      bool preserved = false;
      const auto a = moving_set_naive(f, order, tau, sigma, t, NaiveRule::partner_joins, &preserved);
      const auto b = moving_set_naive(f, order, tau, sigma, t, NaiveRule::tau_loses);
      const auto fast = moving_set_fast(f, order, tau, sigma, t);
      auto sorted = [](std::vector<SimplexId> v) {
        std::sort(v.begin(), v.end());
        return v;
      };
      if (sorted(a.simplices) != sorted(fast.simplices) ||
          sorted(b.simplices) != sorted(fast.simplices) || static_cast<int>(fast.which) != c)
        ++mismatches;
      if (!preserved) ++naive_broken;
      if (fast.simplices.size() > 1) ++nontrivial[c];

      // big-step in raw-values space with tau's coordinate sent to t
      DiagramPoint q0{f.value(pr.birth), f.value(pr.death)};
      (death ? q0.death : q0.birth) = t;
      const int dim = f.complex().dimension(pr.birth);
      Objective obj(std::make_shared<RawValues>(f.complex_ptr()),
                    {{dim, std::make_shared<SingletonLoss>(pr, q0), 1.0}});
      Eigen::MatrixXd theta(f.complex().size(), 1);
      for (std::size_t i = 0; i < f.complex().size(); ++i) theta(i, 0) = f.value(i);
      const double step = 0.5;
      const Eigen::MatrixXd next = theta - step * big_step_gradient(theta, obj, step);
      const auto after = persistence_pairs(obj.family().evaluate(next).filtration);
      const auto pairs_after = as_set(after);
      if (!pairs_after.count({pr.birth, pr.death})) ++big_step_broken;

      ++trials[c];
      ++total;
    }
  }
  bool covered = true;
  for (int c = 0; c < 4; ++c) covered = covered && nontrivial[c] > 0;
  return {mismatches == 0 && naive_broken == 0 && big_step_broken == 0 && covered,
          fmt::format("{} trials ({} / {} / {} / {} nontrivial by case), {} mismatches, pair broken "
                      "by simulation {}, by big-step {}",
                      total, nontrivial[0], nontrivial[1], nontrivial[2], nontrivial[3],
                      mismatches, naive_broken, big_step_broken)};
}

// ------------------------------------------------------------------ 8

Outcome diffeo_interpolation() {
  std::mt19937_64 rng(8);
  double resid = 0.0;
  bool ridge_free = true;
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = gaussian(rng, 60, 2);
    ParamGradient g = ParamGradient::Zero(60, 2);
    const int k = 1 + trial % 12;
    for (int i = 0; i < k; ++i)
      g.row(std::uniform_int_distribution<int>(0, 59)(rng)) = gaussian(rng, 1, 2);
    const auto field = diffeo_interpolate(x, g, {});
    ridge_free = ridge_free && field.ridge_used == 0.0;
    for (int r : support_rows(g)) resid = std::max(resid, (field(x.row(r)) - g.row(r)).norm());
  }
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = gen_circle(40, 0.05, true, seed);
    const auto g = vanilla_gradient(x, circle_loss(41));
    const auto v = diffeo_interpolate(x, g, {}).evaluate(x);
    const double along = (g.array() * v.array()).sum();
    worst = std::max(worst, std::abs(along - g.squaredNorm()) / g.squaredNorm());
  }
  return {ridge_free && resid <= 1e-8 && worst <= 1e-6,
          fmt::format("max residual {:.3g} on 50 supports (ridge 0: {}); max relative gap "
                      "<g, V(X)> vs |g|^2 = {:.3g}",
                      resid, ridge_free ? "yes" : "no", worst)};
}

// ------------------------------------------------------------------ 9

Outcome circle_reproduction() {
  auto spec = ExperimentSpec::preset("circle_outlier");
  spec.threads = threads_from_env();
  if (const char* dir = std::getenv("TOPO_ACCEPTANCE_OUT")) spec.out_dir = dir;
  const auto r = run_experiment(spec);
  std::map<Method, const CellResult*> best;
  for (const auto& [m, i] : r.best) best[m] = &r.cells[i];

  bool decrease = true;
  std::string losses, times;
  for (const auto& [m, c] : best) {
    decrease = decrease && c->final_loss() < c->initial_loss();
    losses += fmt::format(" {}={:.4f}", to_string(m), c->final_loss());
    times += fmt::format(" {}={:.2f}s", to_string(m), c->total_ms() / 1000.0);
  }
  const double bs = best.at(Method::big_step)->final_loss();
  bool lowest = true;
  for (Method m : {Method::vanilla, Method::stratified, Method::continuation})
    lowest = lowest && bs < best.at(m)->final_loss();
  bool slowest = true;
  double fastest = std::numeric_limits<double>::infinity();
  for (const auto& [m, c] : best) {
    fastest = std::min(fastest, c->total_ms());
    if (m != Method::big_step) slowest = slowest && c->total_ms() < best.at(Method::big_step)->total_ms();
  }
  // "among the fastest": within 1.5x of the fastest method
  const bool vanilla_fast = best.at(Method::vanilla)->total_ms() <= 1.5 * fastest;
  return {decrease && lowest && slowest && vanilla_fast,
          fmt::format("(a) decrease {} (b) big-step lowest {} (c) big-step slowest {}, vanilla "
                      "fast {}; initial {:.4f}, best final:{}; time:{}",
                      decrease ? "yes" : "no", lowest ? "yes" : "no", slowest ? "yes" : "no",
                      vanilla_fast ? "yes" : "no", best.begin()->second->initial_loss(), losses,
                      times)};
}

// ------------------------------------------------------------------ 10

Outcome subsample_support() {
  const auto x = gen_circle(2000, 0.05, false, 10);
  const auto obj = circle_loss(50);
  SubsampleFamilies families(obj.family_ptr());
  Rng rng(10);
  const int trials = 10;
  double vanilla = 0, distributed = 0, diffeo = 0;
  for (int t = 0; t < trials; ++t) {
    const auto rows = draw_subsample(2000, 50, rng);
    const auto g = subsample_gradient(x, rows, obj, families);
    vanilla += support_rows(g).size();
    distributed += support_rows(distributed_gradient(x, obj, 10, 50, rng, &families)).size();
    // the field is nonzero everywhere in exact arithmetic; count points it
    // moves by more than 1e-8 of its largest displacement
    const auto v = diffeo_interpolate(x, g, {0.05, 0.0}).evaluate(x);
    const double vmax = v.rowwise().norm().maxCoeff();
    diffeo += (v.rowwise().norm().array() > 1e-8 * vmax).count();
  }
  vanilla /= trials, distributed /= trials, diffeo /= trials;
  const bool ok = distributed >= 10 * vanilla && diffeo >= 10 * vanilla;
  return {ok, fmt::format("mean support over {} draws: vanilla {:.1f}, distributed (10 subsamples) "
                          "{:.1f} ({:.1f}x), diffeo {:.1f} ({:.1f}x)",
                          trials, vanilla, distributed, distributed / vanilla, diffeo,
                          diffeo / vanilla)};
}

}  // namespace

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "torus Betti numbers", torus_betti},
      {2, "pairing oracle equivalence", pairing_oracle},
      {3, "unit-square Rips H1 bar", square_bar},
      {4, "FG distance exactness and stability", fg_exactness},
      {5, "composite gradient finite differences", composite_gradients},
      {6, "stratified sufficient decrease", prop4_decrease},
      {7, "moving sets and big-step pairing", moving_sets},
      {8, "diffeomorphic interpolation", diffeo_interpolation},
      {9, "circle with outlier, qualitative", circle_reproduction},
      {10, "subsampling support", subsample_support},
  };
  return all;
}

namespace {
// wall-clock limits, seconds
double limit(int id) {
  switch (id) {
    case 1: return 1.0;
    case 2: return 30.0;
    case 5: return 120.0;
    case 9: return 600.0;
    case 10: return 120.0;
    default: return std::numeric_limits<double>::infinity();
  }
}
}  // namespace

bool run(const std::vector<int>& only, std::ostream& out) {
  bool all = true;
  for (const auto& c : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = o.seconds < limit(c.id);
    const bool pass = o.pass && in_time;
    all = all && pass;
    out << fmt::format("{} {:>2} {}: {} [{:.2f}s{}]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                       o.detail, o.seconds,
                       in_time ? "" : fmt::format(", limit {:.0f}s", limit(c.id)))
        << std::flush;
  }
  return all;
}

}  // namespace topo::acceptance
