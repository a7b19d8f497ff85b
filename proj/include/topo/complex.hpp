#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace topo {

using Vertex = std::int32_t;
using SimplexId = std::int32_t;

/// A simplex stored in canonical form: strictly increasing vertex ids.
class Simplex {
 public:
  Simplex() = default;
  /// Sorts and validates; throws std::invalid_argument on empty input,
  /// negative ids or duplicates.
  explicit Simplex(std::vector<Vertex> vertices);
  Simplex(std::initializer_list<Vertex> vertices);

  int dimension() const { return static_cast<int>(vertices_.size()) - 1; }
  std::span<const Vertex> vertices() const { return vertices_; }
  Vertex operator[](std::size_t i) const { return vertices_[i]; }
  std::size_t size() const { return vertices_.size(); }

  /// The facet obtained by dropping the i-th vertex.
  Simplex facet(std::size_t i) const;

  bool contains(const Simplex& other) const;

  friend bool operator==(const Simplex&, const Simplex&) = default;
  friend auto operator<=>(const Simplex& a, const Simplex& b) {
    if (a.size() != b.size()) return a.size() <=> b.size();
    return a.vertices_ <=> b.vertices_;
  }

 private:
  struct Unchecked {};
  Simplex(std::vector<Vertex> sorted, Unchecked) : vertices_(std::move(sorted)) {}
  friend class SimplicialComplex;

  std::vector<Vertex> vertices_;
};

struct SimplexHash {
  std::size_t operator()(const Simplex& s) const noexcept;
};

/// Codimension-1 faces of a simplex; empty for vertices. Coefficients are
/// implicit (two-element field).
std::vector<Simplex> boundary(const Simplex& s);

/// Finite simplicial complex closed under faces. Simplices are stored sorted
/// by (dimension, lexicographic vertices); a SimplexId is the index in that
/// order. Immutable after construction.
class SimplicialComplex {
 public:
  SimplicialComplex() = default;

  /// Face closure of the given vertex lists, truncated at max_dim when set.
  static SimplicialComplex from_simplices(const std::vector<std::vector<Vertex>>& simplices,
                                          std::optional<int> max_dim = std::nullopt);
  /// Every subset of {0..n-1} with at most max_dim+1 elements.
  static SimplicialComplex complete(int num_vertices, int max_dim);

  std::size_t size() const { return simplices_.size(); }
  int dimension() const { return static_cast<int>(dim_offsets_.size()) - 2; }
  int num_vertices() const { return count(0); }
  int count(int dim) const;

  const Simplex& simplex(SimplexId id) const { return simplices_[id]; }
  int dimension(SimplexId id) const { return simplices_[id].dimension(); }
  std::span<const Simplex> simplices() const { return simplices_; }

  /// Ids of the p-simplices, a contiguous range.
  SimplexId first_of_dim(int dim) const;
  SimplexId end_of_dim(int dim) const;

  std::span<const SimplexId> facets(SimplexId id) const;
  std::span<const SimplexId> cofacets(SimplexId id) const;

  std::optional<SimplexId> find(const Simplex& s) const;
  SimplexId id_of(const Simplex& s) const;

  friend bool operator==(const SimplicialComplex& a, const SimplicialComplex& b) {
    return a.simplices_ == b.simplices_;
  }

 private:
  void index_faces();

  std::vector<Simplex> simplices_;
  std::vector<SimplexId> dim_offsets_;
  std::vector<SimplexId> facet_offsets_, facet_ids_;
  std::vector<SimplexId> cofacet_offsets_, cofacet_ids_;
  std::unordered_map<Simplex, SimplexId, SimplexHash> index_;
};

/// Inverse relation of a total order: order[k] is the simplex at position k.
struct OrderingSignature {
  std::vector<SimplexId> order;
  std::vector<SimplexId> position;
  /// Set by parametrized families when distinct parameter atoms share a
  /// value, i.e. the parameter lies on a stratum boundary.
  bool on_boundary = false;

  friend bool operator==(const OrderingSignature& a, const OrderingSignature& b) {
    return a.order == b.order;
  }
};

/// A complex with one finite value per simplex, monotone under inclusion.
class Filtration {
 public:
  Filtration(std::shared_ptr<const SimplicialComplex> complex, std::vector<double> values);

  const SimplicialComplex& complex() const { return *complex_; }
  const std::shared_ptr<const SimplicialComplex>& complex_ptr() const { return complex_; }
  std::span<const double> values() const { return values_; }
  double value(SimplexId id) const { return values_[id]; }

  /// True when every facet value is <= the value of its coface.
  static bool is_monotone(const SimplicialComplex& complex, std::span<const double> values);

 private:
  std::shared_ptr<const SimplicialComplex> complex_;
  std::vector<double> values_;
};

/// Ascending value, then ascending dimension, then lexicographic vertices.
OrderingSignature total_order(const Filtration& f);

/// Line-based text form: one simplex per line as space-separated vertex ids,
/// with the filtration value appended as a last column when present.
void write_complex(std::ostream& out, const SimplicialComplex& complex,
                   std::span<const double> values = {});
struct ParsedComplex {
  std::shared_ptr<const SimplicialComplex> complex;
  std::optional<std::vector<double>> values;
};
/// Reads the text form; with has_values the last column of each line is the
/// filtration value. Blank lines and lines starting with '#' are skipped.
ParsedComplex read_complex(std::istream& in, bool has_values);

}  // namespace topo
