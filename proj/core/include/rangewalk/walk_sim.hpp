#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "rangewalk/resistance.hpp"
#include "rangewalk/rng.hpp"

namespace rangewalk {

// A sampled trajectory of the secondary walk. censored is set when the walk
// first visits a vertex of the censor set (the truncation guard); the visit
// itself is recorded and the trajectory stops there.
struct Trajectory {
  std::vector<std::uint32_t> vertices;  // X_0 .. X_m
  bool censored = false;

  std::int64_t steps() const { return static_cast<std::int64_t>(vertices.size()) - 1; }
};

// Simulates n_steps of the walk with kernel P(x,y) = c_xy / c_x (the uniform
// kernel in unit mode, the crossing-weighted kernel otherwise).
Trajectory simulate(const ConductanceNetwork& net, std::uint32_t start,
                    std::int64_t n_steps, Rng& rng,
                    std::span<const std::uint32_t> censor_set = {});

// Exact return-probability series by sparse kernel-vector products on the
// ball of radius n_max around start: p[t] = P_start(X_t = start), t <= n_max.
// When guard is given, throws HorizonError unless d(start, guard) > n_max.
struct ReturnSeries {
  std::vector<double> p;
};
ReturnSeries evolve_distribution(const ConductanceNetwork& net, std::uint32_t start,
                                 std::int64_t n_max,
                                 std::optional<std::uint32_t> guard = std::nullopt);

// The walk observed on the cut-point set: H_n are the successive visit times,
// J_n = pi^{-1}(X_{H_n}) the visited cut indices (offset by index_base).
struct CutChainRecord {
  std::vector<std::int64_t> H;
  std::vector<std::int64_t> J;
};

CutChainRecord cut_chain(const Trajectory& traj,
                         std::span<const std::uint32_t> cut_vertices,
                         std::int64_t index_base);

// Z_n = J_{H^{-1}_n} with H^{-1}_n = min{m : H_m > n}; defined for
// n < H_last, so the returned series has length min(n_max+1, H_last).
std::vector<std::int64_t> coarse_process(const CutChainRecord& rec, std::int64_t n_max);

// Closed-form one-step law of the cut-point jump chain at an interior
// cut-point (array position pos within cut_indices, needing pos-1 and pos+1):
//   p_stay = 1 - R(C_-, C_+) / (D * R(C_-, C) * R(C, C_+))
//   p_up/p_down = 1 / (D * R(C, C_+-))
// with D the vertex weight of the cut-point and R computed per mode.
struct JumpLaw {
  double p_stay, p_up, p_down;
};
JumpLaw jump_chain_law(const WalkPath& path, std::span<const std::int64_t> cut_indices,
                       std::size_t pos, ConductanceMode mode);

// Brute-force counterpart of jump_chain_law: absorption probabilities of the
// walk started at the cut-point, solved as linear systems on the two adjacent
// blocks. Independent of the resistance solver path.
JumpLaw jump_chain_absorption(const WalkPath& path,
                              std::span<const std::int64_t> cut_indices,
                              std::size_t pos, ConductanceMode mode);

// E_0 H_1: expected first return time to the cut-point set {C_-, C_0, C_+}
// for the walk started at the middle cut-point (array position pos).
double expected_h1(const WalkPath& path, std::span<const std::int64_t> cut_indices,
                   std::size_t pos, ConductanceMode mode);

// Exit time tau(root, r) = first step leaving B(root, r).
struct ExitSample {
  std::int64_t time = 0;
  bool censored = false;
};
ExitSample sample_exit_time(const ConductanceNetwork& net, std::uint32_t root,
                            std::uint32_t r, Rng& rng,
                            std::span<const std::uint32_t> censor_set = {});

// Exact E_root tau(root, r) via a linear solve on the ball.
double expected_exit_time(const ConductanceNetwork& net, std::uint32_t root,
                          std::uint32_t r, SolveMethod method = SolveMethod::kAuto);

// Occupation density g_B of the walk killed on exiting B (B given as a vertex
// set containing root), normalized so that E_root tau = sum_x g_B(x) mu(x).
std::vector<double> occupation_density(const ConductanceNetwork& net, std::uint32_t root,
                                       std::span<const std::uint32_t> b_set,
                                       SolveMethod method = SolveMethod::kAuto);

// True when every cycle of the graph is even (2-colorable); the return mass
// at odd times is then exactly zero.
bool is_bipartite(const RangeGraph& g);

// Text trajectory dump: one vertex id per line.
void dump_trajectory_text(const Trajectory& traj, std::ostream& out);

}  // namespace rangewalk
