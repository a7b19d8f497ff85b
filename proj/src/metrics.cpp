#include "topo/metrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace topo {

double ground_distance(const DiagramPoint& a, const DiagramPoint& b, double ground) {
  const double dx = std::abs(a.birth - b.birth), dy = std::abs(a.death - b.death);
  if (std::isinf(ground)) return std::max(dx, dy);
  if (ground == 2.0) return std::hypot(dx, dy);
  if (ground == 1.0) return dx + dy;
  return std::pow(std::pow(dx, ground) + std::pow(dy, ground), 1.0 / ground);
}

double diagonal_distance(const DiagramPoint& a, double ground) {
  const double half = std::abs(a.death - a.birth) / 2.0;
  if (std::isinf(ground)) return half;
  if (ground == 2.0) return half * std::sqrt(2.0);
  return half * std::pow(2.0, 1.0 / ground);
}

DiagramPoint diagonal_projection(const DiagramPoint& a) {
  const double m = (a.birth + a.death) / 2.0;
  return {m, m};
}

std::pair<double, std::vector<int>> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("hungarian: matrix must be square");
  if (n == 0) return {0.0, {}};
  // shortest augmenting paths with potentials, 1-based with a virtual column 0
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost(i, row_to_col[i]);
  return {total, row_to_col};
}

namespace {

std::vector<int> ordinary_indices(const Diagram& d, const char* side) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(d.size()); ++i)
    if (!d[i].essential()) idx.push_back(i);
  if (idx.size() != d.size())
    spdlog::debug("diagram {}: dropped {} essential points", side, d.size() - idx.size());
  return idx;
}

// Augmented problem: rows are a's points then diagonal slots for b's points;
// columns are b's points then diagonal slots for a's points. Any diagonal
// slot accepts any point, which has the same optimum as one slot per point.
struct Augmented {
  std::vector<int> ia, ib;
  Eigen::MatrixXd ground;  // plain (not powered) costs
};

Augmented augment(const Diagram& a, const Diagram& b, double ground) {
  Augmented g{ordinary_indices(a, "a"), ordinary_indices(b, "b"), {}};
  const int m1 = static_cast<int>(g.ia.size()), m2 = static_cast<int>(g.ib.size());
  const int n = m1 + m2;
  g.ground = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < m1; ++i) {
    const auto& x = a[g.ia[i]];
    for (int j = 0; j < m2; ++j) g.ground(i, j) = ground_distance(x, b[g.ib[j]], ground);
    const double dx = diagonal_distance(x, ground);
    for (int j = m2; j < n; ++j) g.ground(i, j) = dx;
  }
  for (int j = 0; j < m2; ++j) {
    const double dy = diagonal_distance(b[g.ib[j]], ground);
    for (int i = m1; i < n; ++i) g.ground(i, j) = dy;
  }
  return g;
}

PartialMatching to_matching(const Augmented& g, const std::vector<int>& row_to_col) {
  const int m1 = static_cast<int>(g.ia.size()), m2 = static_cast<int>(g.ib.size());
  PartialMatching m;
  for (int i = 0; i < m1 + m2; ++i) {
    const int j = row_to_col[i];
    if (i < m1 && j < m2) m.pairs.push_back({g.ia[i], g.ib[j]});
    else if (i < m1) m.pairs.push_back({g.ia[i], kDiagonal});
    else if (j < m2) m.pairs.push_back({kDiagonal, g.ib[j]});
  }
  return m;
}

}  // namespace

PartialMatching fg_distance(const Diagram& a, const Diagram& b, double q, double ground) {
  if (!(q >= 1.0) || std::isinf(q)) throw std::invalid_argument("fg_distance: q must be in [1, inf)");
  const auto g = augment(a, b, ground);
  const Eigen::MatrixXd powered = q == 1.0 ? g.ground : Eigen::MatrixXd(g.ground.array().pow(q));
  const auto assignment = hungarian(powered).second;
  auto m = to_matching(g, assignment);
  // recomputed from the ground costs so the value is that of the matching
  double sum = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    sum += std::pow(g.ground(static_cast<int>(i), assignment[i]), q);
  m.cost = std::pow(sum, 1.0 / q);
  return m;
}

namespace {

// Kuhn's augmenting paths on edges with cost <= threshold.
bool perfect_under(const Eigen::MatrixXd& c, double threshold, std::vector<int>* row_to_col) {
  const int n = static_cast<int>(c.rows());
  std::vector<int> col_owner(n, -1);
  std::vector<char> seen;
  std::function<bool(int)> augment_row = [&](int i) {
    for (int j = 0; j < n; ++j) {
      if (c(i, j) > threshold || seen[j]) continue;
      seen[j] = 1;
      if (col_owner[j] < 0 || augment_row(col_owner[j])) {
        col_owner[j] = i;
        return true;
      }
    }
    return false;
  };
  for (int i = 0; i < n; ++i) {
    seen.assign(n, 0);
    if (!augment_row(i)) return false;
  }
  if (row_to_col) {
    row_to_col->assign(n, -1);
    for (int j = 0; j < n; ++j) (*row_to_col)[col_owner[j]] = j;
  }
  return true;
}

}  // namespace

double bottleneck_distance(const Diagram& a, const Diagram& b, double ground,
                           PartialMatching* matching) {
  const auto g = augment(a, b, ground);
  const int n = static_cast<int>(g.ground.rows());
  if (n == 0) {
    if (matching) *matching = {};
    return 0.0;
  }
  std::vector<double> cand(g.ground.data(), g.ground.data() + g.ground.size());
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  std::size_t lo = 0, hi = cand.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (perfect_under(g.ground, cand[mid], nullptr)) hi = mid;
    else lo = mid + 1;
  }
  if (matching) {
    std::vector<int> assignment;
    perfect_under(g.ground, cand[lo], &assignment);
    *matching = to_matching(g, assignment);
    matching->cost = cand[lo];
  }
  return cand[lo];
}

void write_matching(std::ostream& out, const PartialMatching& m) {
  out << "side_a,side_b\n";
  for (const auto& [x, y] : m.pairs) out << x << ',' << y << '\n';
}

PartialMatching read_matching(std::istream& in) {
  PartialMatching m;
  std::string line;
  if (!std::getline(in, line) || line.rfind("side_a,side_b", 0) != 0)
    throw std::runtime_error("matching file must start with header side_a,side_b");
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed matching row: " + line);
    m.pairs.push_back({std::stoi(line.substr(0, comma)), std::stoi(line.substr(comma + 1))});
  }
  return m;
}

}  // namespace topo
