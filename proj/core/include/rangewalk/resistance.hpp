#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rangewalk/cut_times.hpp"
#include "rangewalk/range_graph.hpp"

namespace rangewalk {

enum class ConductanceMode { kUnit, kCrossings };

// A range graph viewed as an electrical network: unit resistors on every edge,
// or conductances equal to the walk's crossing counts.
class ConductanceNetwork {
 public:
  static ConductanceNetwork unit(const RangeGraph& g);
  static ConductanceNetwork crossings(const RangeGraph& g, const EdgeMultiplicity& mult);

  // Convenience: build per mode, computing multiplicities from the path when
  // needed (the graph must have been built from that path window).
  static ConductanceNetwork make(const RangeGraph& g, const WalkPath& path,
                                 ConductanceMode mode);

  const RangeGraph& graph() const { return *g_; }
  ConductanceMode mode() const { return mode_; }

  double slot_conductance(std::size_t slot) const { return slot_c_[slot]; }
  // Total conductance at a vertex (the degree in unit mode, mu_x otherwise);
  // also the stationary weight of the walk.
  double vertex_weight(std::uint32_t v) const { return vertex_c_[v]; }
  double total_weight() const { return total_; }

 private:
  const RangeGraph* g_ = nullptr;
  ConductanceMode mode_ = ConductanceMode::kUnit;
  std::vector<double> slot_c_;
  std::vector<double> vertex_c_;
  double total_ = 0.0;
};

enum class SolveMethod { kAuto, kCg, kDense };

// Solves the Dirichlet problem L phi = rhs on `free_verts` with phi = 0 on
// every other vertex, where L is the weighted graph Laplacian. Returns phi
// aligned with free_verts. kAuto uses a dense Cholesky factorization below
// 2000 unknowns and preconditioned conjugate gradients above.
std::vector<double> solve_grounded(const ConductanceNetwork& net,
                                   std::span<const std::uint32_t> free_verts,
                                   std::span<const double> rhs,
                                   SolveMethod method = SolveMethod::kAuto,
                                   double rtol = 1e-10);

// Effective resistance between a and the set b (collapsed to one node):
// potential 1 at a, 0 on b, R = 1 / current out of a.
double effective_resistance(const ConductanceNetwork& net, std::uint32_t a,
                            std::span<const std::uint32_t> b_set,
                            SolveMethod method = SolveMethod::kAuto);
double effective_resistance(const ConductanceNetwork& net, std::uint32_t a,
                            std::uint32_t b, SolveMethod method = SolveMethod::kAuto);

// R_G(root, B_G(root, r)^c). The complement is grounded in place (supernode);
// throws BallCoversGraphError when the ball covers the whole graph.
double resistance_to_ball_complement(const ConductanceNetwork& net, std::uint32_t root,
                                     std::uint32_t r,
                                     SolveMethod method = SolveMethod::kAuto);

// R(start, C_n) for n = 1..max_n along the given cut-time sequence, computed
// per block and combined by the series law (cut-points are articulation
// points, so block resistances add exactly).
std::vector<double> cutpoint_resistance_profile(const WalkPath& path,
                                                std::span<const std::int64_t> cut_indices,
                                                std::int64_t start_index,
                                                ConductanceMode mode,
                                                std::size_t max_n);

}  // namespace rangewalk
