#include "rangewalk/walk_sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "rangewalk/errors.hpp"
#include "rangewalk/flat_map.hpp"

namespace rangewalk {

namespace {

bool in_set(std::span<const std::uint32_t> set, std::uint32_t v) {
  for (auto s : set) {
    if (s == v) return true;
  }
  return false;
}

std::uint32_t step_from(const ConductanceNetwork& net, std::uint32_t v, Rng& rng) {
  const RangeGraph& g = net.graph();
  const auto nbrs = g.neighbors(v);
  if (net.mode() == ConductanceMode::kUnit) {
    return nbrs[rng.next_below(nbrs.size())];
  }
  // Crossing-weighted kernel: linear scan of the (<= 2d) slots.
  const double u = rng.next_unit() * net.vertex_weight(v);
  double acc = 0.0;
  const std::uint32_t begin = g.slot_begin(v);
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    acc += net.slot_conductance(begin + k);
    if (u < acc) return nbrs[k];
  }
  return nbrs[nbrs.size() - 1];
}

}  // namespace

Trajectory simulate(const ConductanceNetwork& net, std::uint32_t start,
                    std::int64_t n_steps, Rng& rng,
                    std::span<const std::uint32_t> censor_set) {
  Trajectory traj;
  traj.vertices.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.vertices.push_back(start);
  std::uint32_t v = start;
  for (std::int64_t i = 0; i < n_steps; ++i) {
    v = step_from(net, v, rng);
    traj.vertices.push_back(v);
    if (in_set(censor_set, v)) {
      traj.censored = true;
      break;
    }
  }
  return traj;
}

ReturnSeries evolve_distribution(const ConductanceNetwork& net, std::uint32_t start,
                                 std::int64_t n_max,
                                 std::optional<std::uint32_t> guard) {
  const RangeGraph& g = net.graph();

  // Restrict to the ball that the mass can reach. The guard cut-point must lie
  // strictly outside it, otherwise the truncated environment is not exact.
  std::vector<std::uint32_t> dist(g.vertex_count(), kUnreached);
  std::vector<std::uint32_t> local2global;
  dist[start] = 0;
  local2global.push_back(start);
  for (std::size_t head = 0; head < local2global.size(); ++head) {
    const std::uint32_t u = local2global[head];
    if (dist[u] >= static_cast<std::uint32_t>(n_max)) continue;
    for (std::uint32_t v : g.neighbors(u)) {
      if (dist[v] == kUnreached) {
        dist[v] = dist[u] + 1;
        local2global.push_back(v);
      }
    }
  }
  if (guard.has_value() && dist[*guard] != kUnreached) {
    throw HorizonError("guard cut-point within evolution radius " +
                       std::to_string(n_max) + "; safe region too small");
  }

  const std::size_t n = local2global.size();
  std::vector<std::uint32_t> global2local(g.vertex_count(), kUnreached);
  for (std::size_t i = 0; i < n; ++i) global2local[local2global[i]] = static_cast<std::uint32_t>(i);

  // Gather-form kernel: p'(i) = sum_j p(j) P(j, i). Rows are closed so that
  // incoming probabilities of every vertex' outgoing row sum to exactly 1,
  // which keeps total mass conserved to rounding noise.
  std::vector<std::uint32_t> offset(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    offset[i + 1] = offset[i] + g.degree(local2global[i]);
  }
  std::vector<std::uint32_t> src(offset.back());
  std::vector<double> w(offset.back());
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t v = local2global[i];
    const auto nbrs = g.neighbors(v);
    // Outgoing probabilities of v, with the last slot closing the row.
    double row_acc = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      double p;
      if (k + 1 == nbrs.size()) {
        p = 1.0 - row_acc;
      } else {
        p = net.slot_conductance(g.slot_begin(v) + k) / net.vertex_weight(v);
        row_acc += p;
      }
      // Store at the *neighbor's* gather row when the neighbor is local.
      const std::uint32_t j = nbrs[k];
      if (global2local[j] != kUnreached) {
        const std::uint32_t jl = global2local[j];
        // Find v in j's slot list (same position as j's adjacency order).
        const auto jn = g.neighbors(j);
        for (std::size_t m = 0; m < jn.size(); ++m) {
          if (jn[m] == v) {
            src[offset[jl] + m] = static_cast<std::uint32_t>(i);
            w[offset[jl] + m] = p;
            break;
          }
        }
      }
    }
  }

  std::vector<double> p(n, 0.0), p_next(n, 0.0);
  p[0] = 1.0;  // start is local index 0
  ReturnSeries series;
  series.p.reserve(static_cast<std::size_t>(n_max) + 1);
  series.p.push_back(1.0);

  for (std::int64_t t = 1; t <= n_max; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::uint32_t k = offset[i]; k < offset[i + 1]; ++k) {
        acc += w[k] * p[src[k]];
      }
      p_next[i] = acc;
    }
    p.swap(p_next);
    series.p.push_back(p[0]);

    if ((t & 63) == 0 || t == n_max) {
      // Compensated mass check.
      double sum = 0.0, comp = 0.0;
      for (double x : p) {
        const double y = x - comp;
        const double s = sum + y;
        comp = (s - sum) - y;
        sum = s;
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        throw InvariantError("mass conservation violated: |sum-1| = " +
                             std::to_string(std::abs(sum - 1.0)));
      }
    }
  }
  return series;
}

CutChainRecord cut_chain(const Trajectory& traj,
                         std::span<const std::uint32_t> cut_vertices,
                         std::int64_t index_base) {
  FlatMap<std::uint64_t, std::int64_t> index_of(cut_vertices.size());
  for (std::size_t i = 0; i < cut_vertices.size(); ++i) {
    index_of.find_or_insert(cut_vertices[i], index_base + static_cast<std::int64_t>(i));
  }
  CutChainRecord rec;
  for (std::size_t t = 0; t < traj.vertices.size(); ++t) {
    const std::int64_t* idx = index_of.find(traj.vertices[t]);
    if (idx != nullptr) {
      rec.H.push_back(static_cast<std::int64_t>(t));
      rec.J.push_back(*idx);
    }
  }
  return rec;
}

std::vector<std::int64_t> coarse_process(const CutChainRecord& rec, std::int64_t n_max) {
  std::vector<std::int64_t> z;
  if (rec.H.empty()) return z;
  const std::int64_t limit = std::min(n_max + 1, rec.H.back());
  z.reserve(static_cast<std::size_t>(std::max<std::int64_t>(limit, 0)));
  std::size_t m = 0;
  for (std::int64_t t = 0; t < limit; ++t) {
    while (rec.H[m] <= t) ++m;  // H^{-1}_t = min{m : H_m > t}; exists since t < H_last
    z.push_back(rec.J[m]);
  }
  return z;
}

namespace {

// The two blocks around an interior cut-point (array position pos), each
// rebased at its anchor, plus their union rebased at the cut-point itself.
struct CutGraphs {
  RangeGraph left, right, both;
  std::int64_t tm, t0, tp;
};

CutGraphs cut_graphs(const WalkPath& path, std::span<const std::int64_t> cut_indices,
                     std::size_t pos) {
  if (pos == 0 || pos + 1 >= cut_indices.size()) {
    throw ConfigError("interior cut position required (needs both neighbours)");
  }
  CutGraphs cg;
  cg.tm = cut_indices[pos - 1];
  cg.t0 = cut_indices[pos];
  cg.tp = cut_indices[pos + 1];
  cg.left = build_graph(path, cg.tm, cg.t0, cg.tm);
  cg.right = build_graph(path, cg.t0, cg.tp, cg.t0);
  cg.both = build_graph(path, cg.tm, cg.tp, cg.t0);
  return cg;
}

}  // namespace

JumpLaw jump_chain_law(const WalkPath& path, std::span<const std::int64_t> cut_indices,
                       std::size_t pos, ConductanceMode mode) {
  const CutGraphs cg = cut_graphs(path, cut_indices, pos);
  const ConductanceNetwork net_left = ConductanceNetwork::make(cg.left, path, mode);
  const ConductanceNetwork net_right = ConductanceNetwork::make(cg.right, path, mode);
  const ConductanceNetwork net_both = ConductanceNetwork::make(cg.both, path, mode);

  const double r_left =
      effective_resistance(net_left, cg.left.vertex_of_path_index(path, cg.tm),
                           cg.left.vertex_of_path_index(path, cg.t0));
  const double r_right =
      effective_resistance(net_right, cg.right.vertex_of_path_index(path, cg.t0),
                           cg.right.vertex_of_path_index(path, cg.tp));
  // Solved on the joined blocks rather than assumed in series, so the closed
  // forms below summing to 1 is a real consistency check.
  const double r_through =
      effective_resistance(net_both, cg.both.vertex_of_path_index(path, cg.tm),
                           cg.both.vertex_of_path_index(path, cg.tp));
  const double weight = net_both.vertex_weight(cg.both.root());

  JumpLaw law;
  law.p_stay = 1.0 - r_through / (weight * r_left * r_right);
  law.p_up = 1.0 / (weight * r_right);
  law.p_down = 1.0 / (weight * r_left);
  return law;
}

JumpLaw jump_chain_absorption(const WalkPath& path,
                              std::span<const std::int64_t> cut_indices,
                              std::size_t pos, ConductanceMode mode) {
  const CutGraphs cg = cut_graphs(path, cut_indices, pos);
  const RangeGraph& g = cg.both;
  const ConductanceNetwork net = ConductanceNetwork::make(g, path, mode);
  const std::uint32_t c_minus = g.vertex_of_path_index(path, cg.tm);
  const std::uint32_t c_zero = g.root();
  const std::uint32_t c_plus = g.vertex_of_path_index(path, cg.tp);

  // Kernel-form absorption system (I - P_FF) h = P_F,target, solved densely.
  std::vector<std::uint32_t> free_verts;
  std::vector<std::uint32_t> local(g.vertex_count(), kUnreached);
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    if (v != c_minus && v != c_zero && v != c_plus) {
      local[v] = static_cast<std::uint32_t>(free_verts.size());
      free_verts.push_back(v);
    }
  }
  const auto n = static_cast<Eigen::Index>(free_verts.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 3);  // targets: c_minus, c_zero, c_plus
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::uint32_t v = free_verts[static_cast<std::size_t>(i)];
    const auto nbrs = g.neighbors(v);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const double pvk = net.slot_conductance(g.slot_begin(v) + k) / net.vertex_weight(v);
      const std::uint32_t y = nbrs[k];
      if (y == c_minus) {
        rhs(i, 0) += pvk;
      } else if (y == c_zero) {
        rhs(i, 1) += pvk;
      } else if (y == c_plus) {
        rhs(i, 2) += pvk;
      } else {
        m(i, local[y]) -= pvk;
      }
    }
  }
  Eigen::MatrixXd h;
  if (n > 0) {
    h = Eigen::PartialPivLU<Eigen::MatrixXd>(m).solve(rhs);
  }

  // One explicit step from the cut-point, then absorb.
  double p[3] = {0.0, 0.0, 0.0};
  const auto nbrs = g.neighbors(c_zero);
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const double pk = net.slot_conductance(g.slot_begin(c_zero) + k) / net.vertex_weight(c_zero);
    const std::uint32_t y = nbrs[k];
    if (y == c_minus) {
      p[0] += pk;
    } else if (y == c_zero) {
      p[1] += pk;
    } else if (y == c_plus) {
      p[2] += pk;
    } else {
      for (int t = 0; t < 3; ++t) p[t] += pk * h(local[y], t);
    }
  }
  return JumpLaw{p[1], p[2], p[0]};
}

double expected_h1(const WalkPath& path, std::span<const std::int64_t> cut_indices,
                   std::size_t pos, ConductanceMode mode) {
  const CutGraphs cg = cut_graphs(path, cut_indices, pos);
  const RangeGraph& g = cg.both;
  const ConductanceNetwork net = ConductanceNetwork::make(g, path, mode);
  const std::uint32_t c_minus = g.vertex_of_path_index(path, cg.tm);
  const std::uint32_t c_zero = g.root();
  const std::uint32_t c_plus = g.vertex_of_path_index(path, cg.tp);

  // Expected hitting time of {C_-, C_0, C_+} from every non-cut vertex:
  // (D - A) t = mu on the free set, grounded on the cut set.
  std::vector<std::uint32_t> free_verts;
  std::vector<double> rhs;
  std::vector<double> t_of(g.vertex_count(), 0.0);
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    if (v != c_minus && v != c_zero && v != c_plus) {
      free_verts.push_back(v);
      rhs.push_back(net.vertex_weight(v));
    }
  }
  const std::vector<double> t = solve_grounded(net, free_verts, rhs);
  for (std::size_t i = 0; i < free_verts.size(); ++i) t_of[free_verts[i]] = t[i];

  // H_1 counts the first return to the set, conditioning on the first step.
  double eh = 0.0;
  const auto nbrs = g.neighbors(c_zero);
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const double pk = net.slot_conductance(g.slot_begin(c_zero) + k) / net.vertex_weight(c_zero);
    eh += pk * t_of[nbrs[k]];
  }
  return 1.0 + eh;
}

ExitSample sample_exit_time(const ConductanceNetwork& net, std::uint32_t root,
                            std::uint32_t r, Rng& rng,
                            std::span<const std::uint32_t> censor_set) {
  const RangeGraph& g = net.graph();
  // Bounded BFS: vertices left unreached are outside B(root, r).
  std::vector<std::uint32_t> dist(g.vertex_count(), kUnreached);
  std::vector<std::uint32_t> queue;
  dist[root] = 0;
  queue.push_back(root);
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
  if (queue.size() == g.vertex_count()) {
    throw BallCoversGraphError("exit-time ball covers the graph");
  }

  ExitSample sample;
  std::uint32_t v = root;
  while (true) {
    v = step_from(net, v, rng);
    ++sample.time;
    if (dist[v] == kUnreached) return sample;  // exited the ball
    if (in_set(censor_set, v)) {
      sample.censored = true;
      return sample;
    }
  }
}

double expected_exit_time(const ConductanceNetwork& net, std::uint32_t root,
                          std::uint32_t r, SolveMethod method) {
  const RangeGraph& g = net.graph();
  const std::vector<std::uint32_t> b = ball(g, root, r);
  if (b.size() == g.vertex_count()) {
    throw BallCoversGraphError("exit-time ball covers the graph");
  }
  std::vector<double> rhs(b.size());
  std::size_t root_pos = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    rhs[i] = net.vertex_weight(b[i]);
    if (b[i] == root) root_pos = i;
  }
  const std::vector<double> t = solve_grounded(net, b, rhs, method);
  return t[root_pos];
}

std::vector<double> occupation_density(const ConductanceNetwork& net, std::uint32_t root,
                                       std::span<const std::uint32_t> b_set,
                                       SolveMethod method) {
  std::vector<double> rhs(b_set.size(), 0.0);
  bool found = false;
  for (std::size_t i = 0; i < b_set.size(); ++i) {
    if (b_set[i] == root) {
      rhs[i] = 1.0;
      found = true;
    }
  }
  if (!found) throw ConfigError("occupation density requires root inside the set");
  return solve_grounded(net, b_set, rhs, method);
}

bool is_bipartite(const RangeGraph& g) {
  std::vector<std::uint8_t> color(g.vertex_count(), 2);
  std::vector<std::uint32_t> queue;
  color[0] = 0;
  queue.push_back(0);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::uint32_t u = queue[head];
    for (std::uint32_t v : g.neighbors(u)) {
      if (color[v] == 2) {
        color[v] = color[u] ^ 1;
        queue.push_back(v);
      } else if (color[v] == color[u]) {
        return false;
      }
    }
  }
  return true;
}

void dump_trajectory_text(const Trajectory& traj, std::ostream& out) {
  for (auto v : traj.vertices) out << v << '\n';
  if (!out) throw IoError("failed to write trajectory dump");
}

}  // namespace rangewalk
