#include <doctest.h>

#include <algorithm>
#include <map>
#include <optional>
#include <random>

#include "support.hpp"
#include "topo/moving_set.hpp"

using namespace topo;
using namespace testing_support;

namespace {

struct Trial {
  Filtration f;
  OrderingSignature order;
  PersistencePairing pairing;
  SimplexId tau, sigma;
  double t;
};

// Random pair, random role for tau, random target on either side of f(tau).
std::optional<Trial> draw_trial(std::mt19937_64& rng, int want_case) {
  auto f = random_filtration(rng, 7, 3, 5, 50);
  auto order = total_order(f);
  auto pairing = persistence_pairs(f, order, -1);
  std::vector<PersistencePair> all;
  for (const auto& d : pairing.pairs)
    for (const auto& pr : d) all.push_back(pr);
  if (all.empty()) return std::nullopt;
  const auto pr = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
  const bool death = want_case == 0 || want_case == 1;
  const bool earlier = want_case == 0 || want_case == 2;
  const SimplexId tau = death ? pr.death : pr.birth;
  const SimplexId sigma = death ? pr.birth : pr.death;
  std::uniform_real_distribution<double> u(0.0, 4.0);
  double off = u(rng);
  if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) off = std::ceil(off);  // land on ties
  const double t = earlier ? f.value(tau) - off : f.value(tau) + off;
  return Trial{f, order, pairing, tau, sigma, t};
}

std::vector<SimplexId> sorted(std::vector<SimplexId> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("moving set: fast formula agrees with the transposition simulation") {
  std::mt19937_64 rng(11);
  std::map<int, int> checked, nontrivial, mismatch_a, mismatch_b, not_preserved;
  for (int c = 0; c < 4; ++c) {
    int done = 0;
    while ((done < 200 || nontrivial[c] < 25) && done < 20000) {
      auto drawn = draw_trial(rng, c);
      if (!drawn) continue;
      const Trial& tr = *drawn;
      bool preserved_a = false, preserved_b = false;
      auto a = moving_set_naive(tr.f, tr.order, tr.tau, tr.sigma, tr.t, NaiveRule::partner_joins,
                                &preserved_a);
      auto b = moving_set_naive(tr.f, tr.order, tr.tau, tr.sigma, tr.t, NaiveRule::tau_loses,
                                &preserved_b);
      auto fast = moving_set_fast(tr.f, tr.order, tr.tau, tr.sigma, tr.t);
      const bool death = tr.f.complex().dimension(tr.sigma) < tr.f.complex().dimension(tr.tau);
      const auto block = block_matrix(tr.f, tr.order, tr.f.complex().dimension(tr.tau), !death);
      const auto move = locate_move(block, tr.f, tr.order, tr.tau, tr.sigma, tr.t);
      LazyBlockReduction lazy(&block.columns, block_owners(block, tr.pairing));
      auto lz = moving_set_lazy(block, move, lazy);
      CHECK(static_cast<int>(fast.which) == c);
      CHECK(sorted(lz.simplices) == sorted(fast.simplices));
      if (sorted(a.simplices) != sorted(fast.simplices)) ++mismatch_a[c];
      if (sorted(b.simplices) != sorted(fast.simplices)) ++mismatch_b[c];
      if (!preserved_a) ++not_preserved[c];
      if (fast.simplices.size() > 1) ++nontrivial[c];
      ++checked[c];
      ++done;
    }
  }
  for (int c = 0; c < 4; ++c) {
    INFO(to_string(static_cast<MovingCase>(c)));
    MESSAGE(std::string(to_string(static_cast<MovingCase>(c))) << ": " << checked[c] << " trials, " << nontrivial[c] << " nontrivial");
    CHECK(nontrivial[c] >= 25);
    CHECK(mismatch_a[c] == 0);
    CHECK(mismatch_b[c] == 0);
    CHECK(not_preserved[c] == 0);
  }
}

TEST_CASE("moving set: empty window leaves tau alone") {
  auto k = std::make_shared<SimplicialComplex>(SimplicialComplex::from_simplices({{0, 1, 2}}));
  // vertices 0, edges 1, 2, 3, triangle 4
  Filtration f(k, {0, 0, 0, 1, 2, 3, 4});
  const auto order = total_order(f);
  const SimplexId tri = 6, last_edge = 5;
  for (double t : {3.5, 4.5}) {
    CHECK(moving_set_fast(f, order, tri, last_edge, t).simplices == std::vector<SimplexId>{tri});
    CHECK(moving_set_naive(f, order, tri, last_edge, t).simplices ==
          std::vector<SimplexId>{tri});
  }
  // the death edge of an H0 pair moving down past no other edge
  const auto pairing = persistence_pairs(f);
  REQUIRE(pairing.pairs[0].size() == 2);
  const auto pr = pairing.pairs[0][0];
  CHECK(moving_set_fast(f, order, pr.death, pr.birth, f.value(pr.death) - 0.5).simplices ==
        std::vector<SimplexId>{pr.death});
}

TEST_CASE("moving set: death moving earlier reads V's column in the value window") {
  std::mt19937_64 rng(5);
  int nontrivial = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto f = random_filtration(rng, 7, 3, 5, 50);
    const auto dec = ReducedDecomposition::reduce(f);
    const auto& order = dec.order();
    for (const auto& dim : dec.pairing().pairs)
      for (const auto& pr : dim) {
        const double t = f.value(pr.death) - std::uniform_real_distribution<double>(0, 4)(rng);
        const auto ms = moving_set_fast(f, order, pr.death, pr.birth, t);
        std::vector<SimplexId> expect{pr.death};
        for (int row : dec.matrix().v(order.position[pr.death])) {
          const SimplexId s = order.order[row];
          if (s != pr.death && f.value(s) > ms.target) expect.push_back(s);
        }
        CHECK(sorted(ms.simplices) == sorted(expect));
        if (expect.size() > 1) ++nontrivial;
      }
  }
  CHECK(nontrivial > 20);
}
