#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <unordered_map>
#include <vector>

#include "mgeo/errors.hpp"
#include "mgeo/topology.hpp"

// Vietoris-Rips persistence via persistent cohomology: dimension 0 by
// union-find, dimensions 1 and 2 by reducing implicit coboundary columns in
// reverse filtration order. Only the positive simplices of the previous
// dimension become columns (clearing), cofacets are enumerated on the fly
// from the distance matrix, and the unreduced-pivot fast path resolves the
// bulk of the columns without touching a heap. Simplices are identified by
// their combinatorial index; the filtration order is (diameter, index).

namespace mgeo {

namespace {

using std::size_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr u32 kNone = UINT32_MAX;

struct Simplex {
  double diam;
  u64 combi;
  bool operator<(const Simplex& o) const {
    return diam < o.diam || (diam == o.diam && combi < o.combi);
  }
  bool operator==(const Simplex& o) const { return combi == o.combi && diam == o.diam; }
};

inline u64 c2(u64 v) { return v * (v - 1) / 2; }
inline u64 c3(u64 v) { return v * (v - 1) * (v - 2) / 6; }
inline u64 c4(u64 v) { return v * (v - 1) * (v - 2) * (v - 3) / 24; }

template <typename F>
u32 search_max_vertex(F table, u64 rem, u32 hi) {
  u32 lo = 0;
  while (lo < hi) {
    const u32 mid = (lo + hi + 1) / 2;
    if (table(mid) <= rem) lo = mid;
    else hi = mid - 1;
  }
  return lo;
}

struct DistanceMatrix {
  size_t n = 0;
  std::vector<double> d;
  double operator()(size_t i, size_t j) const { return d[i * n + j]; }
};

class UnionFind {
 public:
  explicit UnionFind(size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  size_t find(size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(size_t a, size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<size_t> parent_;
};

struct EdgeCofacets {
  const DistanceMatrix& dist;
  double cap;

  void decode(u64 combi, u32& a, u32& b) const {
    a = search_max_vertex(c2, combi, static_cast<u32>(dist.n - 1));
    b = static_cast<u32>(combi - c2(a));
  }
  template <typename Fn>
  void for_each(const Simplex& edge, Fn&& fn) const {
    u32 a, b;
    decode(edge.combi, a, b);
    for (u32 k = 0; k < dist.n; ++k) {
      if (k == a || k == b) continue;
      const double diam = std::max({edge.diam, dist(k, a), dist(k, b)});
      if (diam > cap) continue;
      u32 v[3] = {a, b, k};
      std::sort(v, v + 3);
      fn(Simplex{diam, c3(v[2]) + c2(v[1]) + v[0]});
    }
  }
};

struct TriangleCofacets {
  const DistanceMatrix& dist;
  double cap;

  void decode(u64 combi, u32& a, u32& b, u32& c) const {
    a = search_max_vertex(c3, combi, static_cast<u32>(dist.n - 1));
    u64 rem = combi - c3(a);
    b = search_max_vertex(c2, rem, a - 1);
    c = static_cast<u32>(rem - c2(b));
  }
  template <typename Fn>
  void for_each(const Simplex& tri, Fn&& fn) const {
    u32 a, b, c;
    decode(tri.combi, a, b, c);
    for (u32 k = 0; k < dist.n; ++k) {
      if (k == a || k == b || k == c) continue;
      const double diam = std::max({tri.diam, dist(k, a), dist(k, b), dist(k, c)});
      if (diam > cap) continue;
      u32 v[4] = {a, b, c, k};
      std::sort(v, v + 4);
      fn(Simplex{diam, c4(v[3]) + c3(v[2]) + c2(v[1]) + v[0]});
    }
  }
};

/// One cohomology reduction pass over the anti-transposed boundary matrix:
/// `columns` are the positive p-simplices in reverse filtration order,
/// `cofacets` enumerates their (p+1)-cofacets below the scale cap. Columns
/// are kept sorted ascending in filtration order, so the pivot (the row
/// maximal in anti-transpose order) sits at the front; a symmetric
/// difference against the stored column of a claimed pivot moves the pivot
/// strictly later, which guarantees termination.
// Reverse-filtration max-heap: top() is the simplex earliest in filtration.
struct LaterInFiltration {
  bool operator()(const Simplex& a, const Simplex& b) const { return b < a; }
};
using CofacetHeap = std::priority_queue<Simplex, std::vector<Simplex>, LaterInFiltration>;

// Z/2 pivot of a lazy heap column: duplicate pairs cancel off the top; the
// surviving front entry is the pivot (left in the heap).
bool heap_pivot(CofacetHeap& heap, Simplex& out) {
  while (!heap.empty()) {
    const Simplex top = heap.top();
    heap.pop();
    if (!heap.empty() && heap.top().combi == top.combi) {
      heap.pop();
      continue;
    }
    heap.push(top);
    out = top;
    return true;
  }
  return false;
}

template <typename CofacetRange>
void reduce_dimension(const std::vector<Simplex>& columns, const CofacetRange& cofacets,
                      std::unordered_map<u64, u32>& claims,
                      std::vector<PersistencePair>& bars_out,
                      std::vector<Simplex>* essential) {
  // A claim either references the raw coboundary of a column (rebuilt on
  // demand; the common fast-path case costs no storage) or an explicitly
  // reduced column parked in the arena after a cascade.
  constexpr u32 kArenaBit = 1u << 31;
  std::vector<std::vector<Simplex>> arena;
  std::vector<Simplex> raw;

  auto raw_column = [&](u32 col, std::vector<Simplex>& out) {
    out.clear();
    cofacets.for_each(columns[col], [&](const Simplex& cf) { out.push_back(cf); });
    std::sort(out.begin(), out.end());
  };

  CofacetHeap heap;
  for (u32 col = 0; col < columns.size(); ++col) {
    const Simplex& base = columns[col];
    raw_column(col, raw);
    if (raw.empty()) {
      if (essential) essential->push_back(base);
      continue;
    }
    // Fast path: unclaimed unreduced pivot pairs immediately, no heap work.
    {
      const Simplex pivot = raw.front();
      if (claims.find(pivot.combi) == claims.end()) {
        if (pivot.diam > base.diam) bars_out.push_back({base.diam, pivot.diam});
        claims.emplace(pivot.combi, col);
        continue;
      }
    }
    // Cascade: lazy heap accumulation. Adding a claimed column cancels the
    // shared front pivot, so the pivot moves strictly later each round.
    heap = CofacetHeap(LaterInFiltration(), std::move(raw));
    raw = {};
    for (;;) {
      Simplex pivot{0, 0};
      if (!heap_pivot(heap, pivot)) {
        if (essential) essential->push_back(base);
        break;
      }
      const auto it = claims.find(pivot.combi);
      if (it == claims.end()) {
        if (pivot.diam > base.diam) bars_out.push_back({base.diam, pivot.diam});
        // Compact the heap into the arena (pops ascending; pairs cancel).
        std::vector<Simplex> column;
        while (!heap.empty()) {
          const Simplex top = heap.top();
          heap.pop();
          if (!heap.empty() && heap.top().combi == top.combi) heap.pop();
          else column.push_back(top);
        }
        claims[pivot.combi] = kArenaBit | static_cast<u32>(arena.size());
        arena.push_back(std::move(column));
        break;
      }
      if (it->second & kArenaBit) {
        for (const Simplex& s : arena[it->second & ~kArenaBit]) heap.push(s);
      } else {
        cofacets.for_each(columns[it->second], [&](const Simplex& cf) { heap.push(cf); });
      }
    }
  }
}

void sort_bars(std::vector<PersistencePair>& bars) {
  std::sort(bars.begin(), bars.end(), [](const PersistencePair& x, const PersistencePair& y) {
    return x.birth < y.birth || (x.birth == y.birth && x.death < y.death);
  });
}

// Calibrated long-bar threshold. Genuine surface loops live at a fixed
// fraction of the cloud size (second torus loop: >= 0.20 x enclosing radius
// across seeds and window choices), while sampling/path-fuzz loops stay
// under 0.16 x enclosing and under ~2x the nearest-neighbour scale. The
// threshold sits between the two regimes.
double compute_auto_epsilon(const DistanceMatrix& dist, double enclosing) {
  const size_t n = dist.n;
  std::vector<double> nn(n, kInf);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if (i != j) nn[i] = std::min(nn[i], dist(i, j));
  std::sort(nn.begin(), nn.end());
  const double q90 = nn[static_cast<size_t>(0.9 * static_cast<double>(n - 1))];
  return std::max(0.175 * enclosing, 1.9 * q90);
}

}  // namespace

std::vector<std::size_t> maxmin_landmarks(const Cloud& cloud, std::size_t count) {
  const size_t n = cloud.size();
  if (count >= n) {
    std::vector<size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(cloud.front().size());
  for (const auto& p : cloud) centroid += p;
  centroid /= static_cast<double>(n);

  auto lex_less = [&](size_t a, size_t b) {
    for (Eigen::Index k = 0; k < cloud[a].size(); ++k)
      if (cloud[a][k] != cloud[b][k]) return cloud[a][k] < cloud[b][k];
    return false;
  };
  size_t seed = 0;
  double best = -1.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = (cloud[i] - centroid).norm();
    if (d > best || (d == best && lex_less(i, seed))) {
      best = d;
      seed = i;
    }
  }
  std::vector<size_t> chosen{seed};
  std::vector<double> mind(n);
  for (size_t i = 0; i < n; ++i) mind[i] = (cloud[i] - cloud[seed]).norm();
  while (chosen.size() < count) {
    size_t next = 0;
    double far = -1.0;
    for (size_t i = 0; i < n; ++i) {
      if (mind[i] > far || (mind[i] == far && lex_less(i, next))) {
        far = mind[i];
        next = i;
      }
    }
    chosen.push_back(next);
    for (size_t i = 0; i < n; ++i) mind[i] = std::min(mind[i], (cloud[i] - cloud[next]).norm());
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

PersistenceDiagram vietoris_rips(const Cloud& cloud, const RipsParams& params) {
  if (cloud.size() < 3)
    throw Error(ErrorCode::InvalidInput, "vietoris_rips needs at least 3 points");
  for (const auto& p : cloud)
    if (!p.allFinite()) throw Error(ErrorCode::InvalidInput, "non-finite point in cloud");

  const Cloud* pts = &cloud;
  Cloud landmarks;
  if (cloud.size() > params.max_points) {
    for (size_t idx : maxmin_landmarks(cloud, params.max_points))
      landmarks.push_back(cloud[idx]);
    pts = &landmarks;
  }
  const size_t n = pts->size();

  DistanceMatrix dist;
  dist.n = n;
  dist.d.assign(n * n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      dist.d[i * n + j] = dist.d[j * n + i] = ((*pts)[i] - (*pts)[j]).norm();

  double enclosing = kInf;
  for (size_t i = 0; i < n; ++i) {
    double row_max = 0.0;
    for (size_t j = 0; j < n; ++j) row_max = std::max(row_max, dist(i, j));
    enclosing = std::min(enclosing, row_max);
  }
  const bool explicit_scale = params.max_scale > 0.0;
  const double scale1 = explicit_scale ? params.max_scale : enclosing;

  PersistenceDiagram out;
  out.n_points = n;
  out.max_scale = scale1;
  out.auto_epsilon = compute_auto_epsilon(dist, enclosing);

  // --- Dimension 0: union-find over edges in filtration order --------------
  std::vector<Simplex> edges;
  for (size_t j = 1; j < n; ++j)
    for (size_t i = 0; i < j; ++i)
      if (dist(i, j) <= scale1) edges.push_back({dist(i, j), c2(j) + i});
  if (edges.size() > params.simplex_guard)
    throw Error(ErrorCode::ScaleCapExceeded, "edge count exceeds the guard");
  std::sort(edges.begin(), edges.end());

  UnionFind uf(n);
  std::vector<Simplex> positive_edges;
  size_t components = n;
  for (const Simplex& e : edges) {
    u32 a, b;
    a = search_max_vertex(c2, e.combi, static_cast<u32>(n - 1));
    b = static_cast<u32>(e.combi - c2(a));
    if (uf.unite(a, b)) {
      out.bars[0].push_back({0.0, e.diam});
      --components;
    } else {
      positive_edges.push_back(e);
    }
  }
  for (size_t c = 0; c < components; ++c) out.bars[0].push_back({0.0, kInf});
  sort_bars(out.bars[0]);
  if (params.max_dim < 1) return out;

  // --- Dimension 1 ----------------------------------------------------------
  // Columns: positive edges in reverse filtration order.
  std::reverse(positive_edges.begin(), positive_edges.end());
  std::unordered_map<u64, u32> tri_claims;
  tri_claims.reserve(positive_edges.size() * 2);
  std::vector<Simplex> essential_h1;
  {
    EdgeCofacets cofacets{dist, scale1};
    reduce_dimension(positive_edges, cofacets, tri_claims, out.bars[1], &essential_h1);
    for (const Simplex& e : essential_h1) out.bars[1].push_back({e.diam, kInf});
  }
  sort_bars(out.bars[1]);
  if (params.max_dim < 2) return out;

  // --- Dimension 2 ----------------------------------------------------------
  // Cofacet enumeration costs O(n) per column, so cap the scale to keep the
  // triangle-column count within the guard budget.
  const size_t column_budget =
      std::max<size_t>(200'000, params.simplex_guard / 16);
  double h2_scale = scale1;
  auto count_triangles = [&](double s) {
    size_t count = 0;
    std::vector<std::vector<u32>> nbr(n);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        if (dist(i, j) <= s) nbr[i].push_back(static_cast<u32>(j));
    for (size_t i = 0; i < n; ++i)
      for (size_t p = 0; p < nbr[i].size(); ++p)
        for (size_t q = p + 1; q < nbr[i].size(); ++q)
          if (dist(nbr[i][p], nbr[i][q]) <= s && ++count > column_budget) return count;
    return count;
  };
  if (explicit_scale) {
    if (count_triangles(h2_scale) > column_budget)
      throw Error(ErrorCode::ScaleCapExceeded,
                  "triangle-column count exceeds the guard; lower max_scale or max_points");
  } else {
    while (h2_scale > 0 && count_triangles(h2_scale) > column_budget) h2_scale *= 0.85;
  }
  out.h2_scale = h2_scale;

  std::vector<Simplex> tri_columns;
  {
    std::vector<std::vector<u32>> nbr(n);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        if (dist(i, j) <= h2_scale) nbr[i].push_back(static_cast<u32>(j));
    for (size_t i = 0; i < n; ++i)
      for (size_t p = 0; p < nbr[i].size(); ++p)
        for (size_t q = p + 1; q < nbr[i].size(); ++q) {
          const u32 j = nbr[i][p], k = nbr[i][q];
          const double djk = dist(j, k);
          if (djk > h2_scale) continue;
          const Simplex tri{std::max({dist(i, j), dist(i, k), djk}), c3(k) + c2(j) + i};
          if (tri_claims.find(tri.combi) == tri_claims.end())  // clearing
            tri_columns.push_back(tri);
        }
  }
  std::sort(tri_columns.begin(), tri_columns.end(),
            [](const Simplex& a, const Simplex& b) { return b < a; });
  {
    std::unordered_map<u64, u32> tet_claims;
    tet_claims.reserve(tri_columns.size());
    std::vector<Simplex> essential_h2;
    TriangleCofacets cofacets{dist, h2_scale};
    reduce_dimension(tri_columns, cofacets, tet_claims, out.bars[2], &essential_h2);
    for (const Simplex& t : essential_h2) out.bars[2].push_back({t.diam, kInf});
  }
  sort_bars(out.bars[2]);
  return out;
}

std::vector<double> PersistenceDiagram::lifetimes(int dim) const {
  std::vector<double> out;
  const double cap = dim == 2 && h2_scale > 0 ? h2_scale : max_scale;
  for (const auto& b : bars[static_cast<size_t>(dim)]) {
    if (dim == 0 && !b.finite()) continue;  // the essential component
    out.push_back(b.lifetime(cap));
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace mgeo
