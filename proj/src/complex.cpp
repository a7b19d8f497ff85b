#include "topo/complex.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace topo {

Simplex::Simplex(std::vector<Vertex> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.empty()) throw std::invalid_argument("empty simplex");
  std::sort(vertices_.begin(), vertices_.end());
  if (vertices_.front() < 0) throw std::invalid_argument("negative vertex id");
  if (std::adjacent_find(vertices_.begin(), vertices_.end()) != vertices_.end())
    throw std::invalid_argument("duplicate vertex in simplex");
}

Simplex::Simplex(std::initializer_list<Vertex> vertices)
    : Simplex(std::vector<Vertex>(vertices)) {}

Simplex Simplex::facet(std::size_t i) const {
  std::vector<Vertex> out;
  out.reserve(vertices_.size() - 1);
  for (std::size_t k = 0; k < vertices_.size(); ++k)
    if (k != i) out.push_back(vertices_[k]);
  return Simplex(std::move(out), Unchecked{});
}

bool Simplex::contains(const Simplex& other) const {
  return std::includes(vertices_.begin(), vertices_.end(), other.vertices_.begin(),
                       other.vertices_.end());
}

std::size_t SimplexHash::operator()(const Simplex& s) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (Vertex v : s.vertices()) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

std::vector<Simplex> boundary(const Simplex& s) {
  std::vector<Simplex> out;
  if (s.dimension() < 1) return out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back(s.facet(i));
  return out;
}

SimplicialComplex SimplicialComplex::from_simplices(
    const std::vector<std::vector<Vertex>>& simplices, std::optional<int> max_dim) {
  std::unordered_map<Simplex, SimplexId, SimplexHash> seen;
  std::vector<Simplex> all;
  std::vector<Simplex> stack;
  for (const auto& raw : simplices) {
    stack.emplace_back(raw);
    while (!stack.empty()) {
      Simplex s = std::move(stack.back());
      stack.pop_back();
      if (max_dim && s.dimension() > *max_dim) {
        for (std::size_t i = 0; i < s.size(); ++i) stack.push_back(s.facet(i));
        continue;
      }
      if (seen.contains(s)) continue;
      seen.emplace(s, 0);
      if (s.dimension() > 0)
        for (std::size_t i = 0; i < s.size(); ++i) stack.push_back(s.facet(i));
      all.push_back(std::move(s));
    }
  }
  std::sort(all.begin(), all.end());
  SimplicialComplex k;
  k.simplices_ = std::move(all);
  k.index_faces();
  return k;
}

SimplicialComplex SimplicialComplex::complete(int num_vertices, int max_dim) {
  if (num_vertices < 1) throw std::invalid_argument("complete complex needs a vertex");
  max_dim = std::min(max_dim, num_vertices - 1);
  SimplicialComplex k;
  for (int p = 0; p <= max_dim; ++p) {
    // lexicographic enumeration of (p+1)-subsets
    std::vector<Vertex> c(p + 1);
    std::iota(c.begin(), c.end(), 0);
    while (true) {
      k.simplices_.push_back(Simplex(c, Simplex::Unchecked{}));
      int i = p;
      while (i >= 0 && c[i] == num_vertices - (p + 1) + i) --i;
      if (i < 0) break;
      ++c[i];
      for (int j = i + 1; j <= p; ++j) c[j] = c[j - 1] + 1;
    }
  }
  k.index_faces();
  return k;
}

void SimplicialComplex::index_faces() {
  const auto n = static_cast<SimplexId>(simplices_.size());
  index_.clear();
  index_.reserve(simplices_.size());
  dim_offsets_.clear();
  for (SimplexId i = 0; i < n; ++i) {
    index_.emplace(simplices_[i], i);
    while (static_cast<int>(dim_offsets_.size()) <= simplices_[i].dimension())
      dim_offsets_.push_back(i);
  }
  dim_offsets_.push_back(n);

  facet_offsets_.assign(n + 1, 0);
  facet_ids_.clear();
  std::vector<SimplexId> cofacet_count(n, 0);
  for (SimplexId i = 0; i < n; ++i) {
    const Simplex& s = simplices_[i];
    if (s.dimension() > 0) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        auto it = index_.find(s.facet(j));
        if (it == index_.end()) throw std::logic_error("complex is not closed under faces");
        facet_ids_.push_back(it->second);
        ++cofacet_count[it->second];
      }
      // stored in ascending id order
      std::sort(facet_ids_.end() - static_cast<std::ptrdiff_t>(s.size()), facet_ids_.end());
    }
    facet_offsets_[i + 1] = static_cast<SimplexId>(facet_ids_.size());
  }
  cofacet_offsets_.assign(n + 1, 0);
  for (SimplexId i = 0; i < n; ++i) cofacet_offsets_[i + 1] = cofacet_offsets_[i] + cofacet_count[i];
  cofacet_ids_.assign(cofacet_offsets_[n], 0);
  std::vector<SimplexId> fill(cofacet_offsets_.begin(), cofacet_offsets_.end() - 1);
  for (SimplexId i = 0; i < n; ++i)
    for (SimplexId f : facets(i)) cofacet_ids_[fill[f]++] = i;
}

int SimplicialComplex::count(int dim) const {
  if (dim < 0 || dim > dimension()) return 0;
  return dim_offsets_[dim + 1] - dim_offsets_[dim];
}

SimplexId SimplicialComplex::first_of_dim(int dim) const {
  if (dim < 0) return 0;
  if (dim > dimension()) return static_cast<SimplexId>(size());
  return dim_offsets_[dim];
}

SimplexId SimplicialComplex::end_of_dim(int dim) const {
  if (dim < 0) return 0;
  if (dim > dimension()) return static_cast<SimplexId>(size());
  return dim_offsets_[dim + 1];
}

std::span<const SimplexId> SimplicialComplex::facets(SimplexId id) const {
  return {facet_ids_.data() + facet_offsets_[id],
          static_cast<std::size_t>(facet_offsets_[id + 1] - facet_offsets_[id])};
}

std::span<const SimplexId> SimplicialComplex::cofacets(SimplexId id) const {
  return {cofacet_ids_.data() + cofacet_offsets_[id],
          static_cast<std::size_t>(cofacet_offsets_[id + 1] - cofacet_offsets_[id])};
}

std::optional<SimplexId> SimplicialComplex::find(const Simplex& s) const {
  auto it = index_.find(s);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SimplexId SimplicialComplex::id_of(const Simplex& s) const {
  auto id = find(s);
  if (!id) throw std::out_of_range("simplex not in complex");
  return *id;
}

Filtration::Filtration(std::shared_ptr<const SimplicialComplex> complex, std::vector<double> values)
    : complex_(std::move(complex)), values_(std::move(values)) {
  if (!complex_) throw std::invalid_argument("null complex");
  if (values_.size() != complex_->size())
    throw std::invalid_argument("one filtration value per simplex required");
  for (double v : values_)
    if (!std::isfinite(v)) throw std::invalid_argument("filtration values must be finite");
  if (!is_monotone(*complex_, values_))
    throw std::invalid_argument("filtration values are not monotone under face inclusion");
}

bool Filtration::is_monotone(const SimplicialComplex& complex, std::span<const double> values) {
  for (SimplexId i = 0; i < static_cast<SimplexId>(complex.size()); ++i)
    for (SimplexId f : complex.facets(i))
      if (values[f] > values[i]) return false;
  return true;
}

OrderingSignature total_order(const Filtration& f) {
  const auto& k = f.complex();
  const auto n = static_cast<SimplexId>(k.size());
  OrderingSignature sig;
  // ids are already sorted by (dimension, lexicographic), so the id breaks
  // ties; sorting (value, id) pairs in place keeps the comparisons local
  const auto values = f.values();
  std::vector<std::pair<double, SimplexId>> keyed(n);
  for (SimplexId i = 0; i < n; ++i) keyed[i] = {values[i], i};
  std::sort(keyed.begin(), keyed.end());
  sig.order.resize(n);
  sig.position.resize(n);
  for (SimplexId p = 0; p < n; ++p) {
    sig.order[p] = keyed[p].second;
    sig.position[keyed[p].second] = p;
  }
  return sig;
}

void write_complex(std::ostream& out, const SimplicialComplex& complex,
                   std::span<const double> values) {
  const auto old_precision = out.precision(17);
  for (SimplexId i = 0; i < static_cast<SimplexId>(complex.size()); ++i) {
    const auto vs = complex.simplex(i).vertices();
    for (std::size_t j = 0; j < vs.size(); ++j) out << (j ? " " : "") << vs[j];
    if (!values.empty()) out << ' ' << values[i];
    out << '\n';
  }
  out.precision(old_precision);
}

ParsedComplex read_complex(std::istream& in, bool has_values) {
  std::vector<std::vector<Vertex>> lists;
  std::vector<double> raw_values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> tokens;
    for (std::string tok; ls >> tok;) tokens.push_back(tok);
    if (has_values) {
      if (tokens.size() < 2)
        throw std::runtime_error("line " + std::to_string(line_no) + ": missing value column");
      raw_values.push_back(std::stod(tokens.back()));
      tokens.pop_back();
    }
    std::vector<Vertex> vs;
    for (const auto& t : tokens) vs.push_back(static_cast<Vertex>(std::stol(t)));
    lists.push_back(std::move(vs));
  }
  auto complex = std::make_shared<SimplicialComplex>(SimplicialComplex::from_simplices(lists));
  ParsedComplex out{complex, std::nullopt};
  if (has_values) {
    if (complex->size() != lists.size())
      throw std::runtime_error("valued complex file must list every simplex exactly once");
    std::vector<double> values(complex->size());
    for (std::size_t i = 0; i < lists.size(); ++i)
      values[complex->id_of(Simplex(lists[i]))] = raw_values[i];
    out.values = std::move(values);
  }
  return out;
}

}  // namespace topo
