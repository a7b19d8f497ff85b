#include "topo/moving_set.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace topo {

const char* to_string(MovingCase c) {
  switch (c) {
    case MovingCase::death_earlier: return "death_earlier";
    case MovingCase::death_later: return "death_later";
    case MovingCase::birth_earlier: return "birth_earlier";
    case MovingCase::birth_later: return "birth_later";
  }
  return "?";
}

MovingCase classify_move(const Filtration& f, const OrderingSignature& order, SimplexId tau,
                         SimplexId sigma, double t) {
  const auto& k = f.complex();
  const int p = k.dimension(tau);
  const bool death = k.dimension(sigma) == p - 1;
  if (!death && k.dimension(sigma) != p + 1)
    throw std::invalid_argument("moving set: sigma and tau are not in adjacent dimensions");
  if (death != (order.position[sigma] < order.position[tau]))
    throw std::invalid_argument("moving set: pair is in the wrong order");
  const bool earlier = t < f.value(tau);
  return death ? (earlier ? MovingCase::death_earlier : MovingCase::death_later)
               : (earlier ? MovingCase::birth_earlier : MovingCase::birth_later);
}

double clip_target(const Filtration& f, SimplexId tau, SimplexId sigma, double t) {
  const auto& k = f.complex();
  const bool death = k.dimension(sigma) < k.dimension(tau);
  double clipped = t;
  if (t < f.value(tau)) {
    double lo = death ? f.value(sigma) : -std::numeric_limits<double>::infinity();
    for (SimplexId face : k.facets(tau)) lo = std::max(lo, f.value(face));
    clipped = std::max(t, lo);
  } else {
    double hi = death ? std::numeric_limits<double>::infinity() : f.value(sigma);
    for (SimplexId c : k.cofacets(tau)) hi = std::min(hi, f.value(c));
    clipped = std::min(t, hi);
  }
  if (clipped != t) spdlog::warn("moving set target {} clipped to {}", t, clipped);
  return clipped;
}

BlockMatrix block_matrix(const Filtration& f, const OrderingSignature& order, int col_dim,
                         bool coboundary) {
  const auto& k = f.complex();
  const auto& pos = order.position;
  BlockMatrix b;
  b.coboundary = coboundary;
  b.col_dim = col_dim;
  b.row_dim = coboundary ? col_dim + 1 : col_dim - 1;

  auto sorted_ids = [&](int dim) {
    std::vector<SimplexId> ids;
    if (dim < 0 || dim > k.dimension()) return ids;
    for (SimplexId s = k.first_of_dim(dim); s < k.end_of_dim(dim); ++s) ids.push_back(s);
    if (coboundary)
      std::sort(ids.begin(), ids.end(), [&](SimplexId a, SimplexId c) { return pos[a] > pos[c]; });
    else
      std::sort(ids.begin(), ids.end(), [&](SimplexId a, SimplexId c) { return pos[a] < pos[c]; });
    return ids;
  };
  b.col_labels = sorted_ids(b.col_dim);
  b.row_labels = sorted_ids(b.row_dim);
  b.col_base = b.col_dim <= k.dimension() ? k.first_of_dim(b.col_dim) : 0;
  b.row_base = b.row_dim >= 0 && b.row_dim <= k.dimension() ? k.first_of_dim(b.row_dim) : 0;
  b.col_index.assign(b.col_labels.size(), -1);
  b.row_index.assign(b.row_labels.size(), -1);
  for (std::size_t i = 0; i < b.col_labels.size(); ++i) b.col_index[b.col_labels[i] - b.col_base] = i;
  for (std::size_t i = 0; i < b.row_labels.size(); ++i) b.row_index[b.row_labels[i] - b.row_base] = i;

  b.columns.resize(b.col_labels.size());
  for (std::size_t j = 0; j < b.col_labels.size(); ++j) {
    const SimplexId s = b.col_labels[j];
    auto& col = b.columns[j];
    for (SimplexId r : coboundary ? k.cofacets(s) : k.facets(s)) col.push_back(b.row_of(r));
    std::sort(col.begin(), col.end());
  }
  return b;
}

Move locate_move(const BlockMatrix& b, const Filtration& f, const OrderingSignature& order,
                 SimplexId tau, SimplexId sigma, double t) {
  Move m;
  m.which = classify_move(f, order, tau, sigma, t);
  const bool death = m.which == MovingCase::death_earlier || m.which == MovingCase::death_later;
  if (death == b.coboundary || f.complex().dimension(tau) != b.col_dim)
    throw std::invalid_argument("moving set: block does not match the pair");
  const bool earlier = m.which == MovingCase::death_earlier || m.which == MovingCase::birth_earlier;
  m.target = clip_target(f, tau, sigma, t);
  // coboundary blocks run in reverse filtration order
  m.later = death ? !earlier : earlier;
  m.tau_col = b.col_of(tau);
  m.partner_row = b.row_of(sigma);

  const int n = static_cast<int>(b.columns.size());
  const int step = m.later ? 1 : -1;
  for (int j = m.tau_col + step; j >= 0 && j < n; j += step) {
    const double v = f.value(b.col_labels[j]);
    if (earlier ? !(v > m.target) : !(v < m.target)) break;
    m.window.push_back(j);
  }
  return m;
}

namespace {

/// Column whose low is the partner row when columns are taken in `ord`.
int partner_column(const BlockMatrix& b, const Move& m, const std::vector<int>& ord) {
  std::vector<Column> cols;
  cols.reserve(ord.size());
  for (int j : ord) cols.push_back(b.columns[j]);
  auto dec = F2Decomposition::reduce(std::move(cols), static_cast<int>(b.row_labels.size()), false);
  const int c = dec.column_with_low(m.partner_row);
  return c < 0 ? -1 : ord[c];
}

MovingSet assemble(const BlockMatrix& b, const Move& m, const std::vector<int>& members) {
  MovingSet out;
  out.which = m.which;
  out.target = m.target;
  out.simplices.push_back(b.col_labels[m.tau_col]);
  for (int j : members)
    if (j != m.tau_col) out.simplices.push_back(b.col_labels[j]);
  return out;
}

}  // namespace

MovingSet moving_set_naive(const Filtration& f, const OrderingSignature& order, SimplexId tau,
                           SimplexId sigma, double t, NaiveRule rule, bool* preserved) {
  const bool death = f.complex().dimension(sigma) < f.complex().dimension(tau);
  const BlockMatrix b = block_matrix(f, order, f.complex().dimension(tau), !death);
  const Move mv = locate_move(b, f, order, tau, sigma, t);
  const int n = static_cast<int>(b.columns.size());
  std::vector<int> ord(n);
  for (int j = 0; j < n; ++j) ord[j] = j;

  // The members of X sit contiguously at ord[xs..xe].
  int xs = mv.tau_col, xe = mv.tau_col;
  std::vector<int> members;
  for (int w : mv.window) {
    std::vector<int> trial = ord;
    int nxs = xs, nxe = xe;
    if (mv.later) {
      // w sits right after the block; the block jumps past it
      std::rotate(trial.begin() + xs, trial.begin() + xe + 1, trial.begin() + xe + 2);
      nxs = xs + 1;
      nxe = xe + 1;
    } else {
      std::rotate(trial.begin() + xs - 1, trial.begin() + xs, trial.begin() + xe + 1);
      nxs = xs - 1;
      nxe = xe - 1;
    }
    const int partner = partner_column(b, mv, trial);
    const bool joins = rule == NaiveRule::partner_joins ? partner == w : partner != mv.tau_col;
    if (joins) {
      members.push_back(w);
      if (mv.later)
        ++xe;
      else
        --xs;
    } else {
      ord = std::move(trial);
      xs = nxs;
      xe = nxe;
    }
  }
  if (preserved) *preserved = partner_column(b, mv, ord) == mv.tau_col;
  return assemble(b, mv, members);
}

MovingSet moving_set_fast(const Filtration& f, const OrderingSignature& order, SimplexId tau,
                          SimplexId sigma, double t) {
  const bool death = f.complex().dimension(sigma) < f.complex().dimension(tau);
  const BlockMatrix b = block_matrix(f, order, f.complex().dimension(tau), !death);
  const Move mv = locate_move(b, f, order, tau, sigma, t);
  auto dec = F2Decomposition::reduce(b.columns, static_cast<int>(b.row_labels.size()), mv.later);
  const Column& line = mv.later ? dec.u_row(mv.tau_col) : dec.v(mv.tau_col);
  std::unordered_set<int> in_window(mv.window.begin(), mv.window.end());
  std::vector<int> members;
  for (int j : line)
    if (in_window.count(j)) members.push_back(j);
  return assemble(b, mv, members);
}

MovingSet moving_set_naive(const ReducedDecomposition& dec, SimplexId tau, SimplexId sigma,
                           double t) {
  return moving_set_naive(dec.filtration(), dec.order(), tau, sigma, t);
}

MovingSet moving_set_fast(const ReducedDecomposition& dec, SimplexId tau, SimplexId sigma, double t) {
  return moving_set_fast(dec.filtration(), dec.order(), tau, sigma, t);
}

LazyBlockReduction::LazyBlockReduction(const std::vector<Column>* columns, std::vector<int> owner)
    : columns_(columns), owner_(std::move(owner)), cache_(columns->size()) {}

void LazyBlockReduction::reduce(int j) {
  if (cache_[j].done) return;
  if (pool_.size() <= depth_) {
    auto acc = std::make_unique<Accumulator>();
    acc->r.assign(owner_.size() / 64 + 1, 0);
    acc->v.assign(cache_.size() / 64 + 1, 0);
    pool_.push_back(std::move(acc));
  }
  Accumulator& a = *pool_[depth_];
  auto flip = [](std::vector<std::uint64_t>& bits, int i) { bits[i >> 6] ^= 1ULL << (i & 63); };

  int top = -1;  // highest word of r that may be nonzero
  for (int r : (*columns_)[j]) {
    flip(a.r, r);
    top = std::max(top, r >> 6);
  }
  flip(a.v, j);
  int v_lo = j >> 6, v_hi = j >> 6;

  while (true) {
    while (top >= 0 && a.r[top] == 0) --top;
    if (top < 0) break;
    const int l = top * 64 + 63 - std::countl_zero(a.r[top]);
    const int o = owner_[l];
    if (o == j) break;
    if (o < 0 || o > j) {
      // leave the accumulator clean for later use
      std::fill(a.r.begin(), a.r.begin() + top + 1, 0);
      std::fill(a.v.begin() + v_lo, a.v.begin() + v_hi + 1, 0);
      throw std::logic_error("lazy reduction: pairing does not match the block");
    }
    if (!cache_[o].done) {
      ++depth_;
      try {
        reduce(o);
      } catch (...) {
        --depth_;
        std::fill(a.r.begin(), a.r.begin() + top + 1, 0);
        std::fill(a.v.begin() + v_lo, a.v.begin() + v_hi + 1, 0);
        throw;
      }
      --depth_;
    }
    for (int r : cache_[o].r) flip(a.r, r);
    for (int c : cache_[o].v) flip(a.v, c);
    if (!cache_[o].v.empty()) {
      v_lo = std::min(v_lo, cache_[o].v.front() >> 6);
      v_hi = std::max(v_hi, cache_[o].v.back() >> 6);
    }
  }

  auto drain = [](std::vector<std::uint64_t>& bits, int lo, int hi, Column& out) {
    for (int w = lo; w <= hi; ++w) {
      std::uint64_t word = bits[w];
      while (word) {
        out.push_back(w * 64 + std::countr_zero(word));
        word &= word - 1;
      }
      bits[w] = 0;
    }
  };
  Entry& e = cache_[j];
  drain(a.r, 0, top, e.r);
  drain(a.v, v_lo, v_hi, e.v);
  e.done = true;
  ++reduced_;
}

const Column& LazyBlockReduction::v_column(int j) {
  reduce(j);
  return cache_[j].v;
}

Column LazyBlockReduction::u_row(int i, int end) {
  // u_j = sum over k in [i, j) of u_k V[k, j], with u_i = 1
  const int n = static_cast<int>(cache_.size());
  end = std::min(end, n);
  std::vector<char> u(std::max(end - i, 0), 0);
  Column out;
  if (end <= i) return out;
  u[0] = 1;
  out.push_back(i);
  for (int j = i + 1; j < end; ++j) {
    const Column& v = v_column(j);
    char bit = 0;
    for (int r : v)
      if (r >= i && r < j) bit ^= u[r - i];
    if (bit) {
      u[j - i] = 1;
      out.push_back(j);
    }
  }
  return out;
}

std::vector<int> block_owners(const BlockMatrix& b, const PersistencePairing& pairing) {
  std::vector<int> owner(b.row_labels.size(), -1);
  const int dim = b.coboundary ? b.col_dim : b.row_dim;
  if (dim < 0 || dim >= static_cast<int>(pairing.pairs.size()))
    throw std::invalid_argument("block_owners: pairing lacks the block's dimension");
  for (const auto& pr : pairing.pairs[dim]) {
    const SimplexId c = b.coboundary ? pr.birth : pr.death;
    const SimplexId r = b.coboundary ? pr.death : pr.birth;
    owner[b.row_of(r)] = b.col_of(c);
  }
  return owner;
}

MovingSet moving_set_lazy(const BlockMatrix& b, const Move& m, LazyBlockReduction& lazy) {
  std::vector<int> members;
  if (m.later) {
    // the window is exactly the columns right after tau
    const int end = m.tau_col + static_cast<int>(m.window.size()) + 1;
    for (int j : lazy.u_row(m.tau_col, end))
      if (j != m.tau_col) members.push_back(j);
  } else {
    const int lo = m.tau_col - static_cast<int>(m.window.size());
    for (int j : lazy.v_column(m.tau_col))
      if (j >= lo && j < m.tau_col) members.push_back(j);
  }
  return assemble(b, m, members);
}

}  // namespace topo
