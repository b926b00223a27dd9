#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rangewalk/cut_times.hpp"
#include "rangewalk/lattice.hpp"
#include "rangewalk/point_index.hpp"
#include "rangewalk/walk.hpp"

namespace rangewalk {

inline constexpr std::uint32_t kUnreached = 0xffffffffu;

// The range of a walk as a graph: vertices are the visited points, edges the
// traversed steps, deduplicated. Immutable after construction; adjacency in
// CSR form. Degrees are bounded by 2d, there are no self-loops, and the graph
// is connected by construction.
class RangeGraph {
 public:
  std::uint32_t vertex_count() const { return static_cast<std::uint32_t>(adj_offset_.size() - 1); }
  std::uint64_t edge_count() const { return adj_.size() / 2; }
  int dim() const { return d_; }
  std::uint32_t root() const { return root_; }

  const std::int32_t* coords(std::uint32_t v) const { return coords_.data() + static_cast<std::size_t>(v) * d_; }
  Point point(std::uint32_t v) const { return point_from({coords(v), static_cast<std::size_t>(d_)}); }

  std::span<const std::uint32_t> neighbors(std::uint32_t v) const {
    return {adj_.data() + adj_offset_[v], adj_.data() + adj_offset_[v + 1]};
  }
  std::uint32_t degree(std::uint32_t v) const { return adj_offset_[v + 1] - adj_offset_[v]; }
  std::uint32_t slot_begin(std::uint32_t v) const { return adj_offset_[v]; }
  std::size_t slot_count() const { return adj_.size(); }

  std::optional<std::uint32_t> find_vertex(const std::int32_t* p) const;

  // Path window this graph was built from (inclusive) and the index whose
  // position was translated to the lattice origin.
  std::int64_t built_from() const { return from_; }
  std::int64_t built_to() const { return to_; }
  std::int64_t rebase_index() const { return rebase_; }

  // Vertex of path index n; `path` must be the path the graph was built from
  // and n must lie in the built window.
  std::uint32_t vertex_of_path_index(const WalkPath& path, std::int64_t n) const;

  friend RangeGraph build_graph(const WalkPath&, std::int64_t, std::int64_t, std::int64_t);

 private:
  int d_ = 0;
  std::int64_t from_ = 0, to_ = 0, rebase_ = 0;
  std::uint32_t root_ = 0;
  std::vector<std::int32_t> coords_;
  std::vector<std::uint32_t> adj_offset_;
  std::vector<std::uint32_t> adj_;
  PointMap<std::uint32_t> index_;
};

// Builds the graph of path positions from..to (inclusive), with coordinates
// translated by -position(rebase). The rebase vertex becomes the root.
RangeGraph build_graph(const WalkPath& path, std::int64_t from, std::int64_t to,
                       std::int64_t rebase);

inline RangeGraph build_graph(const WalkPath& path) {
  return build_graph(path, path.lo(), path.hi(), 0);
}

// BFS distances from a vertex; every vertex is reachable.
std::vector<std::uint32_t> graph_distance(const RangeGraph& g, std::uint32_t from);

// Exact metric ball B_G(center, r) as a sorted vertex id list.
std::vector<std::uint32_t> ball(const RangeGraph& g, std::uint32_t center, std::uint32_t r);

// mu_G(set) = sum of degrees over the set.
std::uint64_t volume(const RangeGraph& g, std::span<const std::uint32_t> set);

// Crossing counts per edge, aligned with the graph's CSR slots.
struct EdgeMultiplicity {
  std::vector<std::uint32_t> per_slot;   // mu_xy at each adjacency slot
  std::vector<std::uint64_t> per_vertex; // mu_x
  std::uint64_t total = 0;               // == 2 * steps in the window

  std::uint32_t of(const RangeGraph& g, std::uint32_t u, std::uint32_t v) const;
};

EdgeMultiplicity edge_multiplicities(const WalkPath& path, const RangeGraph& g);

// One cut-time block: the graph generated between consecutive exact cut-times,
// translated to its left cut-point.
struct Block {
  RangeGraph graph;
  Point displacement;       // C_{n+1} - C_n
  std::int64_t duration;    // T_{n+1} - T_n
  std::int64_t left_cut;    // T_n
};

// Blocks between consecutive exact cut-times of a two-sided path. Throws
// InsufficientCutsError when fewer than two exact cut-times exist (the
// expected outcome for d=4 two-sided inputs).
std::vector<Block> block_decompose(const WalkPath& path, const CutTimeSet& cuts);

// Hash of the block's shape (vertex set and edge set relative to the left
// cut-point); identical shapes hash equal for deduplication statistics.
std::uint64_t block_shape_hash(const Block& block);

// Text dump, one line per vertex: "id x1 ... xd deg n1 n2 ...".
void dump_graph_text(const RangeGraph& g, std::ostream& out);

}  // namespace rangewalk
