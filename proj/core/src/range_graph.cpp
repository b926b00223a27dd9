#include "rangewalk/range_graph.hpp"

#include <algorithm>
#include <cstring>
#include <ostream>
#include <string>

#include "rangewalk/errors.hpp"
#include "rangewalk/rng.hpp"

namespace rangewalk {

std::optional<std::uint32_t> RangeGraph::find_vertex(const std::int32_t* p) const {
  const std::uint32_t* id = index_.find(p);
  if (id == nullptr) return std::nullopt;
  return *id;
}

std::uint32_t RangeGraph::vertex_of_path_index(const WalkPath& path,
                                               std::int64_t n) const {
  std::int32_t rel[kMaxDim];
  const std::int32_t* p = path.position(n);
  const std::int32_t* base = path.position(rebase_);
  for (int i = 0; i < d_; ++i) rel[i] = p[i] - base[i];
  const std::uint32_t* id = index_.find(rel);
  if (id == nullptr) throw Error("path index outside the built graph window");
  return *id;
}

RangeGraph build_graph(const WalkPath& path, std::int64_t from, std::int64_t to,
                       std::int64_t rebase) {
  if (from < path.lo() || to > path.hi() || from > to) {
    throw ConfigError("graph window outside generated path");
  }
  const int d = path.dim();
  const std::int64_t n_points = to - from + 1;
  if (n_points > 0x7fffffff) throw CapacityError("graph exceeds 2^31 vertices");

  RangeGraph g;
  g.d_ = d;
  g.from_ = from;
  g.to_ = to;
  g.rebase_ = rebase;
  g.index_ = PointMap<std::uint32_t>(path.codec(from, to, rebase),
                                     static_cast<std::size_t>(n_points));

  // Pass 1: assign vertex ids in first-visit order.
  const std::int32_t* base = path.position(rebase);
  std::vector<std::uint32_t> vertex_at;  // path offset -> vertex id
  vertex_at.resize(static_cast<std::size_t>(n_points));
  std::uint32_t next_id = 0;
  std::int32_t rel[kMaxDim];
  for (std::int64_t n = from; n <= to; ++n) {
    const std::int32_t* p = path.position(n);
    for (int i = 0; i < d; ++i) rel[i] = p[i] - base[i];
    std::uint32_t& id = g.index_.find_or_insert(rel, next_id);
    if (id == next_id) {
      g.coords_.insert(g.coords_.end(), rel, rel + d);
      ++next_id;
    }
    vertex_at[static_cast<std::size_t>(n - from)] = id;
  }
  const std::uint32_t n_vertices = next_id;

  // Pass 2: adjacency with dedup into a fixed-stride scratch (degree <= 2d).
  const std::size_t stride = static_cast<std::size_t>(2 * d);
  std::vector<std::uint32_t> scratch(stride * n_vertices);
  std::vector<std::uint8_t> counts(n_vertices, 0);
  const auto add_arc = [&](std::uint32_t u, std::uint32_t v) {
    std::uint32_t* row = scratch.data() + stride * u;
    const int c = counts[u];
    for (int i = 0; i < c; ++i) {
      if (row[i] == v) return;
    }
    row[c] = v;
    ++counts[u];
  };
  for (std::int64_t n = from; n < to; ++n) {
    const std::uint32_t u = vertex_at[static_cast<std::size_t>(n - from)];
    const std::uint32_t v = vertex_at[static_cast<std::size_t>(n - from + 1)];
    add_arc(u, v);
    add_arc(v, u);
  }

  // Compact to CSR.
  g.adj_offset_.resize(n_vertices + 1);
  g.adj_offset_[0] = 0;
  for (std::uint32_t v = 0; v < n_vertices; ++v) {
    g.adj_offset_[v + 1] = g.adj_offset_[v] + counts[v];
  }
  g.adj_.resize(g.adj_offset_[n_vertices]);
  for (std::uint32_t v = 0; v < n_vertices; ++v) {
    std::memcpy(g.adj_.data() + g.adj_offset_[v], scratch.data() + stride * v,
                sizeof(std::uint32_t) * counts[v]);
  }

  g.root_ = vertex_at[static_cast<std::size_t>(rebase - from)];
  return g;
}

std::vector<std::uint32_t> graph_distance(const RangeGraph& g, std::uint32_t from) {
  if (from >= g.vertex_count()) throw ConfigError("invalid vertex id");
  std::vector<std::uint32_t> dist(g.vertex_count(), kUnreached);
  std::vector<std::uint32_t> queue;
  queue.reserve(g.vertex_count());
  dist[from] = 0;
  queue.push_back(from);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::uint32_t u = queue[head];
    const std::uint32_t du = dist[u];
    for (std::uint32_t v : g.neighbors(u)) {
      if (dist[v] == kUnreached) {
        dist[v] = du + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::vector<std::uint32_t> ball(const RangeGraph& g, std::uint32_t center,
                                std::uint32_t r) {
  if (center >= g.vertex_count()) throw ConfigError("invalid vertex id");
  std::vector<std::uint32_t> dist(g.vertex_count(), kUnreached);
  std::vector<std::uint32_t> queue;
  dist[center] = 0;
  queue.push_back(center);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::uint32_t u = queue[head];
    if (dist[u] == r) continue;
    for (std::uint32_t v : g.neighbors(u)) {
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  std::sort(queue.begin(), queue.end());
  return queue;
}

std::uint64_t volume(const RangeGraph& g, std::span<const std::uint32_t> set) {
  std::uint64_t total = 0;
  for (auto v : set) total += g.degree(v);
  return total;
}

std::uint32_t EdgeMultiplicity::of(const RangeGraph& g, std::uint32_t u,
                                   std::uint32_t v) const {
  const auto nbrs = g.neighbors(u);
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    if (nbrs[i] == v) return per_slot[g.slot_begin(u) + i];
  }
  throw Error("edge not present");
}

EdgeMultiplicity edge_multiplicities(const WalkPath& path, const RangeGraph& g) {
  EdgeMultiplicity mult;
  mult.per_slot.assign(g.slot_count(), 0);
  mult.per_vertex.assign(g.vertex_count(), 0);

  const auto bump = [&](std::uint32_t u, std::uint32_t v) {
    const auto nbrs = g.neighbors(u);
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      if (nbrs[i] == v) {
        ++mult.per_slot[g.slot_begin(u) + i];
        return;
      }
    }
  };
  for (std::int64_t n = g.built_from(); n < g.built_to(); ++n) {
    const std::uint32_t u = g.vertex_of_path_index(path, n);
    const std::uint32_t v = g.vertex_of_path_index(path, n + 1);
    bump(u, v);
    bump(v, u);
  }
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    std::uint64_t s = 0;
    const std::uint32_t begin = g.slot_begin(v);
    for (std::uint32_t i = 0; i < g.degree(v); ++i) s += mult.per_slot[begin + i];
    mult.per_vertex[v] = s;
    mult.total += s;
  }
  return mult;
}

std::vector<Block> block_decompose(const WalkPath& path, const CutTimeSet& cuts) {
  if (path.sided() != Sided::kTwo) {
    throw ConfigError("block decomposition requires a two-sided path");
  }
  const std::vector<std::int64_t> exact = cuts.exact_indices();
  if (exact.size() < 2) {
    throw InsufficientCutsError(
        "need at least two exact cut-times; found " + std::to_string(exact.size()));
  }
  std::vector<Block> blocks;
  blocks.reserve(exact.size() - 1);
  for (std::size_t i = 0; i + 1 < exact.size(); ++i) {
    const std::int64_t t0 = exact[i];
    const std::int64_t t1 = exact[i + 1];
    Block b{build_graph(path, t0, t1, t0), Point{}, t1 - t0, t0};
    const std::int32_t* c0 = path.position(t0);
    const std::int32_t* c1 = path.position(t1);
    b.displacement.d = path.dim();
    for (int k = 0; k < path.dim(); ++k) b.displacement.c[k] = c1[k] - c0[k];
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::uint64_t block_shape_hash(const Block& block) {
  const RangeGraph& g = block.graph;
  const int d = g.dim();

  // Canonical form: vertex coordinate rows and edge endpoint pairs, sorted.
  std::vector<std::uint64_t> items;
  items.reserve(g.vertex_count() + g.edge_count());
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int i = 0; i < d; ++i) {
      h = hash_mix(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(g.coords(v)[i])));
    }
    items.push_back(h);
  }
  std::sort(items.begin(), items.end());
  std::uint64_t acc = hash_mix(static_cast<std::uint64_t>(g.vertex_count()));
  for (auto h : items) acc = hash_mix(acc ^ h);

  std::vector<std::uint64_t> edges;
  edges.reserve(g.edge_count());
  const auto coord_hash = [&](std::uint32_t v) {
    std::uint64_t h = 0x2545f4914f6cdd1dULL;
    for (int i = 0; i < d; ++i) {
      h = hash_mix(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(g.coords(v)[i])));
    }
    return h;
  };
  for (std::uint32_t u = 0; u < g.vertex_count(); ++u) {
    for (std::uint32_t v : g.neighbors(u)) {
      if (u < v) {
        const std::uint64_t a = coord_hash(u), b = coord_hash(v);
        edges.push_back(hash_mix(std::min(a, b)) ^ hash_mix(std::max(a, b) + 1));
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  for (auto h : edges) acc = hash_mix(acc ^ h);
  return acc;
}

void dump_graph_text(const RangeGraph& g, std::ostream& out) {
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    out << v;
    for (int i = 0; i < g.dim(); ++i) out << ' ' << g.coords(v)[i];
    out << ' ' << g.degree(v);
    for (std::uint32_t n : g.neighbors(v)) out << ' ' << n;
    out << '\n';
  }
  if (!out) throw IoError("failed to write graph dump");
}

}  // namespace rangewalk
