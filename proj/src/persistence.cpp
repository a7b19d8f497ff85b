#include "topo/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace topo {

Diagram PersistenceDiagram::ordinary(int p) const {
  Diagram out;
  if (p < 0 || p >= static_cast<int>(dims.size())) return out;
  for (const auto& x : dims[p])
    if (!x.essential()) out.push_back(x);
  return out;
}

ReducedDecomposition ReducedDecomposition::reduce(const Filtration& f, bool track_inverse) {
  OrderingSignature order = total_order(f);
  const auto& k = f.complex();
  const int n = static_cast<int>(k.size());
  std::vector<Column> columns(n);
  for (int j = 0; j < n; ++j) {
    for (SimplexId face : k.facets(order.order[j])) columns[j].push_back(order.position[face]);
    std::sort(columns[j].begin(), columns[j].end());
  }
  auto m = F2Decomposition::reduce(std::move(columns), n, track_inverse);
  return ReducedDecomposition(f, std::move(order), std::move(m));
}

PersistencePairing ReducedDecomposition::pairing() const {
  const auto& k = filtration_.complex();
  const int top = std::max(k.dimension(), 0);
  PersistencePairing out;
  out.pairs.resize(top + 1);
  out.essential.resize(top + 1);
  const int n = matrix_.num_cols();
  for (int j = 0; j < n; ++j) {
    const int l = matrix_.low(j);
    if (l >= 0) {
      const SimplexId birth = order_.order[l];
      out.pairs[k.dimension(birth)].push_back({birth, order_.order[j]});
    } else if (matrix_.column_with_low(j) < 0) {
      const SimplexId s = order_.order[j];
      out.essential[k.dimension(s)].push_back(s);
    }
  }
  return out;
}

void ReducedDecomposition::transpose(int i) {
  const int n = matrix_.num_cols();
  if (i < 0 || i + 1 >= n) throw std::out_of_range("transpose position out of range");
  const auto& k = filtration_.complex();
  const SimplexId a = order_.order[i];
  const SimplexId b = order_.order[i + 1];
  for (SimplexId face : k.facets(b))
    if (face == a) throw std::invalid_argument("cannot transpose a simplex with its coface");
  matrix_.swap_rows(i);
  matrix_.swap_columns(i);
  std::swap(order_.order[i], order_.order[i + 1]);
  order_.position[a] = i + 1;
  order_.position[b] = i;
}

ReducedDecomposition transpose_adjacent(ReducedDecomposition dec, int i) {
  dec.transpose(i);
  return dec;
}

PersistencePairing persistence_pairs(const Filtration& f, int max_dim) {
  return persistence_pairs(f, total_order(f), max_dim);
}

PersistencePairing persistence_pairs(const Filtration& f, const OrderingSignature& order,
                                     int max_dim) {
  const auto& k = f.complex();
  const int top = std::max(k.dimension(), 0);
  const int last = max_dim < 0 ? top : std::min(max_dim, top);
  const auto& pos = order.position;

  PersistencePairing out;
  out.pairs.resize(last + 1);
  out.essential.resize(last + 1);

  std::vector<char> killed(k.size(), 0);
  std::vector<std::int32_t> pivot_owner(k.size(), -1);
  std::vector<Column> stored;
  std::vector<SimplexId> ids;
  Column col;

  for (int p = 0; p <= last; ++p) {
    ids.clear();
    for (SimplexId s = k.first_of_dim(p); s < k.end_of_dim(p); ++s)
      if (!killed[s]) ids.push_back(s);
    std::sort(ids.begin(), ids.end(), [&](SimplexId a, SimplexId b) { return pos[a] > pos[b]; });
    stored.clear();
    for (SimplexId s : ids) {
      col.clear();
      for (SimplexId c : k.cofacets(s)) col.push_back(pos[c]);
      std::sort(col.begin(), col.end());
      // the pivot of a coboundary column is its earliest coface
      while (!col.empty()) {
        const auto owner = pivot_owner[col.front()];
        if (owner < 0) break;
        add_to(col, stored[owner]);
      }
      if (col.empty()) {
        out.essential[p].push_back(s);
      } else {
        const SimplexId death = order.order[col.front()];
        out.pairs[p].push_back({s, death});
        killed[death] = 1;
        pivot_owner[col.front()] = static_cast<std::int32_t>(stored.size());
        stored.push_back(col);
      }
    }
    std::sort(out.pairs[p].begin(), out.pairs[p].end(),
              [&](const PersistencePair& a, const PersistencePair& b) {
                return pos[a.death] < pos[b.death];
              });
    std::sort(out.essential[p].begin(), out.essential[p].end(),
              [&](SimplexId a, SimplexId b) { return pos[a] < pos[b]; });
  }
  return out;
}

PersistenceDiagram diagram(const Filtration& f, const PersistencePairing& pairing,
                           bool drop_zero_persistence) {
  PersistenceDiagram out;
  out.dims.resize(pairing.pairs.size());
  for (std::size_t p = 0; p < pairing.pairs.size(); ++p) {
    for (const auto& pr : pairing.pairs[p]) {
      const double b = f.value(pr.birth), d = f.value(pr.death);
      if (drop_zero_persistence && b == d) continue;
      out.dims[p].push_back({b, d});
    }
    for (SimplexId s : pairing.essential[p]) out.dims[p].push_back({f.value(s), kInfinity});
  }
  return out;
}

Lift ordinary_lift(const Filtration& f, const PersistencePairing& pairing, int dim,
                   double min_persistence) {
  Lift lift;
  lift.dim = dim;
  if (dim < 0 || dim >= static_cast<int>(pairing.pairs.size())) return lift;
  for (const auto& pr : pairing.pairs[dim]) {
    const double b = f.value(pr.birth), d = f.value(pr.death);
    if (d - b <= min_persistence) continue;
    lift.points.push_back({b, d});
    lift.pairs.push_back(pr);
  }
  return lift;
}

void write_diagram(std::ostream& out, const PersistenceDiagram& dgm) {
  out << "dim,birth,death\n";
  char buf[64];
  for (std::size_t p = 0; p < dgm.dims.size(); ++p) {
    for (const auto& x : dgm.dims[p]) {
      out << p << ',';
      std::snprintf(buf, sizeof buf, "%.17g", x.birth);
      out << buf << ',';
      if (x.essential()) {
        out << "inf";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", x.death);
        out << buf;
      }
      out << '\n';
    }
  }
}

PersistenceDiagram read_diagram(std::istream& in) {
  PersistenceDiagram dgm;
  std::string line;
  if (!std::getline(in, line)) return dgm;
  if (line.rfind("dim,birth,death", 0) != 0)
    throw std::runtime_error("diagram file must start with header dim,birth,death");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    std::string dim_s, birth_s, death_s;
    if (!std::getline(ls, dim_s, ',') || !std::getline(ls, birth_s, ',') ||
        !std::getline(ls, death_s))
      throw std::runtime_error("malformed diagram row at line " + std::to_string(line_no));
    const int p = std::stoi(dim_s);
    if (p < 0) throw std::runtime_error("negative homology dimension");
    const double b = std::strtod(birth_s.c_str(), nullptr);
    const double d = std::strtod(death_s.c_str(), nullptr);
    if (static_cast<int>(dgm.dims.size()) <= p) dgm.dims.resize(p + 1);
    dgm.dims[p].push_back({b, d});
  }
  return dgm;
}

}  // namespace topo
