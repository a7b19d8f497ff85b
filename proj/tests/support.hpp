// Test-only helpers: random inputs and independent oracles.
#pragma once

#include <algorithm>
#include <bitset>
#include <memory>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "topo/complex.hpp"
#include "topo/persistence.hpp"

namespace testing_support {

using namespace topo;

// Closure of a few random simplices on nv vertices, values built bottom-up so
// that ties between faces and cofaces are common.
inline Filtration random_filtration(std::mt19937_64& rng, int nv, int max_dim, int num_seeds,
                                    std::size_t max_size) {
  std::uniform_int_distribution<int> dim_d(0, max_dim);
  std::uniform_int_distribution<int> inc(0, 2);
  while (true) {
    std::vector<std::vector<Vertex>> lists;
    for (int s = 0; s < num_seeds; ++s) {
      std::vector<Vertex> all(nv);
      for (int v = 0; v < nv; ++v) all[v] = v;
      std::shuffle(all.begin(), all.end(), rng);
      const int d = std::min(dim_d(rng), nv - 1);
      lists.emplace_back(all.begin(), all.begin() + d + 1);
    }
    auto k = std::make_shared<SimplicialComplex>(SimplicialComplex::from_simplices(lists));
    if (k->size() > max_size) continue;
    std::vector<double> values(k->size(), 0.0);
    for (SimplexId i = 0; i < static_cast<SimplexId>(k->size()); ++i) {
      double m = 0.0;
      for (SimplexId f : k->facets(i)) m = std::max(m, values[f]);
      values[i] = m + inc(rng);
    }
    return Filtration(k, std::move(values));
  }
}

// Boundary matrix columns in the total order (rows/cols are positions).
inline std::vector<std::vector<int>> boundary_columns(const Filtration& f,
                                                      const OrderingSignature& sig) {
  const auto& k = f.complex();
  std::vector<std::vector<int>> cols(k.size());
  for (std::size_t j = 0; j < k.size(); ++j) {
    for (SimplexId face : k.facets(sig.order[j])) cols[j].push_back(sig.position[face]);
    std::sort(cols[j].begin(), cols[j].end());
  }
  return cols;
}

constexpr std::size_t kMaxBits = 64;
using Bits = std::bitset<kMaxBits>;

inline int rank_f2(std::vector<Bits> rows) {
  int rank = 0;
  for (std::size_t c = 0; c < kMaxBits && rank < static_cast<int>(rows.size()); ++c) {
    std::size_t piv = rank;
    while (piv < rows.size() && !rows[piv][c]) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[piv], rows[rank]);
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (r != static_cast<std::size_t>(rank) && rows[r][c]) rows[r] ^= rows[rank];
    ++rank;
  }
  return rank;
}

// Pairing from ranks of lower-left submatrices of D:
// (i, j) is a pair iff r(i,j) - r(i+1,j) - r(i,j-1) + r(i+1,j-1) = 1, where
// r(i,j) is the rank of rows >= i, columns <= j. No reduction involved.
inline std::set<std::pair<int, int>> brute_force_pairs(const Filtration& f) {
  const auto sig = total_order(f);
  const auto cols = boundary_columns(f, sig);
  const int n = static_cast<int>(cols.size());
  auto r = [&](int i, int j) {
    if (j < 0 || i >= n) return 0;
    std::vector<Bits> m;
    for (int c = 0; c <= j; ++c) {
      Bits b;
      for (int row : cols[c])
        if (row >= i) b.set(row);
      m.push_back(b);
    }
    return rank_f2(m);
  };
  std::set<std::pair<int, int>> out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (r(i, j) - r(i + 1, j) - r(i, j - 1) + r(i + 1, j - 1) == 1)
        out.insert({sig.order[i], sig.order[j]});
  return out;
}

inline std::set<std::pair<int, int>> as_set(const PersistencePairing& p) {
  std::set<std::pair<int, int>> out;
  for (const auto& dim : p.pairs)
    for (const auto& pr : dim) out.insert({pr.birth, pr.death});
  return out;
}

inline std::set<int> essentials(const PersistencePairing& p) {
  std::set<int> out;
  for (const auto& dim : p.essential) out.insert(dim.begin(), dim.end());
  return out;
}

// The 3x3 grid triangulation of the torus: 9 vertices, 27 edges, 18 triangles.
inline std::vector<std::vector<Vertex>> torus_triangles() {
  std::vector<std::vector<Vertex>> tris;
  auto v = [](int i, int j) { return static_cast<Vertex>(3 * ((i + 3) % 3) + (j + 3) % 3); };
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      tris.push_back({v(i, j), v(i + 1, j), v(i + 1, j + 1)});
      tris.push_back({v(i, j), v(i, j + 1), v(i + 1, j + 1)});
    }
  return tris;
}

}  // namespace testing_support

#include "topo/losses.hpp"

namespace testing_support {

// Central differences of an objective at theta; relative error of the
// analytic gradient, with a tiny absolute floor for all-zero gradients.
inline double objective_fd_error(const topo::Objective& obj, const Eigen::MatrixXd& theta,
                                 double h = 1e-6) {
  const auto e = obj.evaluate(theta, true);
  Eigen::MatrixXd fd = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
  for (int i = 0; i < theta.rows(); ++i)
    for (int j = 0; j < theta.cols(); ++j) {
      Eigen::MatrixXd p = theta, m = theta;
      p(i, j) += h;
      m(i, j) -= h;
      fd(i, j) = (obj.value(p) - obj.value(m)) / (2 * h);
    }
  const double scale = std::max({e.gradient.norm(), fd.norm(), 1e-5});
  return (e.gradient - fd).norm() / scale;
}

}  // namespace testing_support
