#include "rangewalk/resistance.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "rangewalk/errors.hpp"

namespace rangewalk {

ConductanceNetwork ConductanceNetwork::unit(const RangeGraph& g) {
  ConductanceNetwork net;
  net.g_ = &g;
  net.mode_ = ConductanceMode::kUnit;
  net.slot_c_.assign(g.slot_count(), 1.0);
  net.vertex_c_.resize(g.vertex_count());
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    net.vertex_c_[v] = static_cast<double>(g.degree(v));
    net.total_ += net.vertex_c_[v];
  }
  return net;
}

ConductanceNetwork ConductanceNetwork::crossings(const RangeGraph& g,
                                                 const EdgeMultiplicity& mult) {
  ConductanceNetwork net;
  net.g_ = &g;
  net.mode_ = ConductanceMode::kCrossings;
  net.slot_c_.resize(g.slot_count());
  for (std::size_t s = 0; s < net.slot_c_.size(); ++s) {
    net.slot_c_[s] = static_cast<double>(mult.per_slot[s]);
  }
  net.vertex_c_.resize(g.vertex_count());
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    net.vertex_c_[v] = static_cast<double>(mult.per_vertex[v]);
    net.total_ += net.vertex_c_[v];
  }
  return net;
}

ConductanceNetwork ConductanceNetwork::make(const RangeGraph& g, const WalkPath& path,
                                            ConductanceMode mode) {
  if (mode == ConductanceMode::kUnit) return unit(g);
  return crossings(g, edge_multiplicities(path, g));
}

namespace {

// Reduced system on the free vertices; everything else is grounded.
struct LocalSystem {
  std::vector<std::uint32_t> verts;       // ascending global ids
  std::vector<std::uint32_t> offset;      // CSR over free-to-free couplings
  std::vector<std::uint32_t> nbr_local;
  std::vector<double> weight;
  std::vector<double> diag;               // full vertex conductance
};

LocalSystem reduce(const ConductanceNetwork& net,
                   std::span<const std::uint32_t> free_verts,
                   std::vector<std::uint32_t>& global2local) {
  const RangeGraph& g = net.graph();
  LocalSystem sys;
  sys.verts.assign(free_verts.begin(), free_verts.end());
  std::sort(sys.verts.begin(), sys.verts.end());

  global2local.assign(g.vertex_count(), kUnreached);
  for (std::size_t i = 0; i < sys.verts.size(); ++i) {
    global2local[sys.verts[i]] = static_cast<std::uint32_t>(i);
  }

  sys.offset.resize(sys.verts.size() + 1);
  sys.offset[0] = 0;
  sys.diag.resize(sys.verts.size());
  for (std::size_t i = 0; i < sys.verts.size(); ++i) {
    const std::uint32_t v = sys.verts[i];
    sys.diag[i] = net.vertex_weight(v);
    std::uint32_t n_free = 0;
    const auto nbrs = g.neighbors(v);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (global2local[nbrs[k]] != kUnreached) ++n_free;
    }
    sys.offset[i + 1] = sys.offset[i] + n_free;
  }
  sys.nbr_local.resize(sys.offset.back());
  sys.weight.resize(sys.offset.back());
  for (std::size_t i = 0; i < sys.verts.size(); ++i) {
    const std::uint32_t v = sys.verts[i];
    const auto nbrs = g.neighbors(v);
    std::uint32_t w = sys.offset[i];
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const std::uint32_t l = global2local[nbrs[k]];
      if (l != kUnreached) {
        sys.nbr_local[w] = l;
        sys.weight[w] = net.slot_conductance(g.slot_begin(v) + k);
        ++w;
      }
    }
  }
  return sys;
}

void apply(const LocalSystem& sys, std::span<const double> x, std::span<double> y) {
  const std::size_t n = sys.verts.size();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = sys.diag[i] * x[i];
    for (std::uint32_t k = sys.offset[i]; k < sys.offset[i + 1]; ++k) {
      acc -= sys.weight[k] * x[sys.nbr_local[k]];
    }
    y[i] = acc;
  }
}

// Jacobi-preconditioned CG. The iteration cap scales with the system size:
// these networks are quasi one-dimensional, so the Krylov dimension needed is
// proportional to the diameter, not sqrt(n).
std::vector<double> solve_cg(const LocalSystem& sys, std::span<const double> rhs,
                             double rtol) {
  const std::size_t n = sys.verts.size();
  std::vector<double> x(n, 0.0), r(rhs.begin(), rhs.end()), z(n), p(n), ap(n);

  double b_norm2 = 0.0;
  for (auto v : rhs) b_norm2 += v * v;
  if (b_norm2 == 0.0) return x;
  const double tol2 = rtol * rtol * b_norm2;

  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / sys.diag[i];
  p = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];

  const std::int64_t cap =
      static_cast<std::int64_t>(20.0 * std::sqrt(static_cast<double>(n))) +
      2 * static_cast<std::int64_t>(n) + 10;
  for (std::int64_t it = 0; it < cap; ++it) {
    apply(sys, p, ap);
    double pap = 0.0;
    for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (pap <= 0.0) throw SolverError("CG breakdown: non-positive curvature");
    const double alpha = rz / pap;
    double r_norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      r_norm2 += r[i] * r[i];
    }
    if (r_norm2 <= tol2) return x;
    double rz_next = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = r[i] / sys.diag[i];
      rz_next += r[i] * z[i];
    }
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("CG did not converge within iteration cap");
}

std::vector<double> solve_dense(const LocalSystem& sys, std::span<const double> rhs) {
  const auto n = static_cast<Eigen::Index>(sys.verts.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = sys.diag[i];
    for (std::uint32_t k = sys.offset[i]; k < sys.offset[i + 1]; ++k) {
      m(i, sys.nbr_local[k]) -= sys.weight[k];
    }
  }
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) b(i) = rhs[i];
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw SolverError("dense Cholesky failed (system not SPD?)");
  }
  const Eigen::VectorXd sol = llt.solve(b);
  return std::vector<double>(sol.data(), sol.data() + n);
}

constexpr std::size_t kDenseThreshold = 2000;

}  // namespace

std::vector<double> solve_grounded(const ConductanceNetwork& net,
                                   std::span<const std::uint32_t> free_verts,
                                   std::span<const double> rhs, SolveMethod method,
                                   double rtol) {
  if (free_verts.empty()) return {};
  std::vector<std::uint32_t> global2local;
  LocalSystem sys = reduce(net, free_verts, global2local);

  // reduce() sorts vertices; realign the rhs with the sorted order.
  std::vector<double> b(sys.verts.size());
  for (std::size_t i = 0; i < free_verts.size(); ++i) {
    b[global2local[free_verts[i]]] = rhs[i];
  }

  std::vector<double> x;
  if (method == SolveMethod::kDense ||
      (method == SolveMethod::kAuto && sys.verts.size() < kDenseThreshold)) {
    x = solve_dense(sys, b);
  } else {
    x = solve_cg(sys, b, rtol);
  }

  std::vector<double> out(free_verts.size());
  for (std::size_t i = 0; i < free_verts.size(); ++i) {
    out[i] = x[global2local[free_verts[i]]];
  }
  return out;
}

namespace {

// Shared implementation: potential 1 at a, 0 on the grounded set. free_verts
// must be every vertex that is neither a nor grounded.
double resistance_from_potential(const ConductanceNetwork& net, std::uint32_t a,
                                 std::span<const std::uint32_t> free_verts,
                                 SolveMethod method) {
  const RangeGraph& g = net.graph();

  // Assemble the rhs: contributions c_{x,a} * 1 for free x adjacent to a.
  std::vector<double> rhs(free_verts.size(), 0.0);
  std::vector<std::uint32_t> pos(g.vertex_count(), kUnreached);
  for (std::size_t i = 0; i < free_verts.size(); ++i) pos[free_verts[i]] = static_cast<std::uint32_t>(i);
  {
    const auto nbrs = g.neighbors(a);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const std::uint32_t y = nbrs[k];
      if (pos[y] != kUnreached) {
        rhs[pos[y]] += net.slot_conductance(g.slot_begin(a) + k);
      }
    }
  }

  const std::vector<double> phi = solve_grounded(net, free_verts, rhs, method);

  // Current out of a at unit potential; grounded neighbours contribute fully.
  double current = 0.0;
  const auto nbrs = g.neighbors(a);
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const std::uint32_t y = nbrs[k];
    const double phi_y = pos[y] != kUnreached ? phi[pos[y]] : 0.0;
    current += net.slot_conductance(g.slot_begin(a) + k) * (1.0 - phi_y);
  }
  if (current <= 0.0) throw SolverError("no current out of source vertex");
  return 1.0 / current;
}

}  // namespace

double effective_resistance(const ConductanceNetwork& net, std::uint32_t a,
                            std::span<const std::uint32_t> b_set, SolveMethod method) {
  const RangeGraph& g = net.graph();
  if (b_set.empty()) throw ConfigError("effective resistance needs a nonempty target");
  std::vector<std::uint8_t> excluded(g.vertex_count(), 0);
  excluded[a] = 1;
  for (auto b : b_set) {
    if (b == a) throw ConfigError("source belongs to the target set");
    excluded[b] = 1;
  }
  std::vector<std::uint32_t> free_verts;
  free_verts.reserve(g.vertex_count());
  for (std::uint32_t v = 0; v < g.vertex_count(); ++v) {
    if (!excluded[v]) free_verts.push_back(v);
  }
  return resistance_from_potential(net, a, free_verts, method);
}

double effective_resistance(const ConductanceNetwork& net, std::uint32_t a,
                            std::uint32_t b, SolveMethod method) {
  const std::uint32_t set[1] = {b};
  return effective_resistance(net, a, {set, 1}, method);
}

double resistance_to_ball_complement(const ConductanceNetwork& net, std::uint32_t root,
                                     std::uint32_t r, SolveMethod method) {
  const RangeGraph& g = net.graph();
  const std::vector<std::uint32_t> b = ball(g, root, r);
  if (b.size() == g.vertex_count()) {
    throw BallCoversGraphError("ball of radius " + std::to_string(r) +
                               " covers the graph; horizon too short");
  }
  // Ground the complement implicitly: free vertices are the ball minus root.
  std::vector<std::uint32_t> free_verts;
  free_verts.reserve(b.size());
  for (auto v : b) {
    if (v != root) free_verts.push_back(v);
  }
  return resistance_from_potential(net, root, free_verts, method);
}

std::vector<double> cutpoint_resistance_profile(const WalkPath& path,
                                                std::span<const std::int64_t> cut_indices,
                                                std::int64_t start_index,
                                                ConductanceMode mode,
                                                std::size_t max_n) {
  std::vector<double> out;
  const std::size_t n = std::min(max_n, cut_indices.size());
  out.reserve(n);
  double acc = 0.0;
  std::int64_t left = start_index;
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t right = cut_indices[i];
    if (right <= left) throw ConfigError("cut indices must increase past the start");
    const RangeGraph seg = build_graph(path, left, right, left);
    const ConductanceNetwork net = ConductanceNetwork::make(seg, path, mode);
    acc += effective_resistance(net, seg.root(), seg.vertex_of_path_index(path, right));
    out.push_back(acc);
    left = right;
  }
  return out;
}

}  // namespace rangewalk
