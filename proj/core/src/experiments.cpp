#include "rangewalk/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include "rangewalk/errors.hpp"
#include "rangewalk/estimators.hpp"
#include "rangewalk/loop_erase.hpp"
#include "rangewalk/version.hpp"
#include "rangewalk/walk_sim.hpp"

namespace rangewalk {

namespace {

using json = nlohmann::ordered_json;

// Phase ids namespace the seed streams of the different experiment stages so
// no two stages ever share a random stream.
enum Phase : std::uint64_t {
  kPhaseConstants = 1,
  kPhaseHeatkernel = 2,
  kPhaseDisplacement = 3,
  kPhaseExitTimes = 4,
  kPhaseVolume = 5,
  kPhaseScalingWalk = 6,
  kPhaseCutTimes = 7,
  kPhaseD4Windows = 8,
  kPhaseReference = 100,
};

std::uint64_t env_seed(std::uint64_t master, std::uint64_t phase, std::uint64_t k) {
  return derive_stream(derive_stream(master, phase), k);
}

int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n) on a worker pool. Exceptions are re-thrown in
// task order, so failures are deterministic too.
template <class Fn>
void parallel_for(std::int64_t n, int workers, Fn&& fn) {
  workers = std::min<std::int64_t>(std::max(workers, 1), n);
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::mutex err_mutex;
  std::int64_t err_index = -1;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (err_index < 0 || i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::vector<std::int64_t> dyadic_grid(std::int64_t from, std::int64_t to) {
  std::vector<std::int64_t> out;
  for (std::int64_t n = from; n <= to; n *= 2) out.push_back(n);
  return out;
}

json value_error(const ValueWithError& v) {
  return json{{"value", v.value}, {"stderr", v.stderr_}};
}

json value_error(double value, double stderr_) {
  return json{{"value", value}, {"stderr", stderr_}};
}

// --- one-sided environments -------------------------------------------------

struct OneSidedEnv {
  WalkPath path;
  CutTimeSet cuts;
  RangeGraph graph;
  std::vector<std::uint32_t> root_dist;
  std::uint32_t guard_vertex = 0;
  std::int64_t guard_cut = 0;    // path index of the last exact cut-time
  std::uint32_t guard_dist = 0;  // d_G(0, guard)
  std::int64_t horizon = 0;      // horizon actually generated
};

// Generates a one-sided environment whose guard cut-point is strictly farther
// than min_safe_radius from the root. Extending the horizon reproduces the
// same path prefix, so the retry loop is deterministic.
OneSidedEnv make_one_sided_env(int d, std::int64_t horizon, std::uint64_t seed,
                               double guard_fraction, std::uint32_t min_safe_radius) {
  for (int attempt = 0; attempt < 5; ++attempt, horizon *= 2) {
    WalkPath path = gen_path(d, horizon, seed, Sided::kOne);
    CutTimeSet cuts = cut_times(path, Sided::kOne, guard_fraction);
    const std::vector<std::int64_t> exact = cuts.exact_indices();
    if (exact.empty()) continue;
    RangeGraph graph = build_graph(path);
    std::vector<std::uint32_t> root_dist = graph_distance(graph, graph.root());
    const std::int64_t guard_cut = exact.back();
    const std::uint32_t guard_vertex = graph.vertex_of_path_index(path, guard_cut);
    const std::uint32_t guard_dist = root_dist[guard_vertex];
    if (guard_dist > min_safe_radius) {
      return OneSidedEnv{std::move(path),        std::move(cuts), std::move(graph),
                         std::move(root_dist),   guard_vertex,    guard_cut,
                         guard_dist,             horizon};
    }
  }
  throw HorizonError("could not reach safe radius " + std::to_string(min_safe_radius) +
                     " after horizon extensions; raise --horizon");
}

// Per-checkpoint batch statistics with environments as batches.
struct SeriesAccumulator {
  std::vector<RunningStat> stats;
  explicit SeriesAccumulator(std::size_t n) : stats(n) {}
  void add_env(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) stats[i].add(values[i]);
  }
};

void append_window_rows(CsvTable& table, const WindowCheck& w) {
  for (std::size_t i = 0; i < w.lambdas.size(); ++i) {
    table.add_row({static_cast<std::int64_t>(w.n), w.quantity, w.lambdas[i],
                   w.coverages[i]});
  }
}

json window_json(const WindowCheck& w, double target) {
  return json{{"quantity", w.quantity},
              {"n", w.n},
              {"best_lambda", w.best_lambda},
              {"best_coverage", w.best_coverage},
              {"target", target},
              {"passed", w.best_lambda > 0.0}};
}

// --- constants ---------------------------------------------------------------

RunOutput run_constants(const ExperimentConfig& cfg) {
  BlockSamplingParams params;
  params.d = cfg.d;
  params.n_envs = cfg.n_envs;
  params.horizon_per_side = cfg.horizon;
  params.master_seed = derive_stream(cfg.master_seed, kPhaseConstants);
  params.max_anchors_per_env = cfg.trials;
  params.mode = cfg.mode;
  params.guard_fraction = cfg.guard_fraction;

  std::vector<std::vector<BlockSample>> env_samples(static_cast<std::size_t>(cfg.n_envs));
  parallel_for(cfg.n_envs, resolve_workers(cfg.workers), [&](std::int64_t e) {
    env_samples[static_cast<std::size_t>(e)] = sample_blocks_env(params, e);
  });

  const ConstantEstimates est = reduce_block_samples(env_samples);
  // Stability diagnostic: how much the estimates move when only the first
  // half of the environments is used.
  const std::size_t half = env_samples.size() / 2;
  json stability = json::object();
  if (half >= 2) {
    const ConstantEstimates est_half = reduce_block_samples(
        std::span<const std::vector<BlockSample>>(env_samples.data(), half));
    const auto rel = [](double full, double part) {
      return full != 0.0 ? std::abs(part / full - 1.0) : 0.0;
    };
    stability = json{{"half_envs", half},
                     {"tau_rel_change", rel(est.tau.value, est_half.tau.value)},
                     {"delta_rel_change", rel(est.delta.value, est_half.delta.value)},
                     {"rho_rel_change", rel(est.rho.value, est_half.rho.value)},
                     {"nu_rel_change", rel(est.nu.value, est_half.nu.value)},
                     {"eta_rel_change", rel(est.eta.value, est_half.eta.value)}};
  }

  RunOutput out;
  // Provable orderings, asserted with 3 sigma slack.
  const auto slack = [](const ValueWithError& v) { return 3.0 * v.stderr_; };
  const auto check = [&](bool ok, const std::string& what) {
    if (!ok) out.warnings.push_back("ordering violated: " + what);
  };
  check(est.rho.value >= 1.0 - slack(est.rho), "1 <= rho");
  check(est.rho.value <= est.delta.value + slack(est.rho) + slack(est.delta), "rho <= delta");
  check(est.delta.value <= est.tau.value + slack(est.delta) + slack(est.tau), "delta <= tau");
  check(est.nu.value >= 1.0 - slack(est.nu), "1 <= nu");
  check(est.nu.value <= est.tau.value + slack(est.nu) + slack(est.tau), "nu <= tau");
  check(est.eta.value >= 1.0 - slack(est.eta), "1 <= eta");
  check(est.eta.value <=
            1.0 + 4.0 * cfg.d * est.tau.value / est.nu.value + slack(est.eta),
        "eta <= 1 + 4 d tau / nu");
  if (!out.warnings.empty()) out.exit_code = 1;

  out.summary = json{{"experiment", "constants"},
                     {"config", echo_config(cfg)},
                     {"results",
                      json{{"tau", value_error(est.tau)},
                           {"delta", value_error(est.delta)},
                           {"rho", value_error(est.rho)},
                           {"nu", value_error(est.nu)},
                           {"eta", value_error(est.eta)},
                           {"kappa1", value_error(est.kappa1)},
                           {"kappa2", value_error(est.kappa2)}}},
                     {"n_blocks", est.n_blocks},
                     {"stability", stability},
                     {"warnings", out.warnings},
                     {"version", kVersion}};

  CsvTable per_env;
  per_env.columns = {"env", "blocks", "tau", "delta", "rho", "nu", "eta"};
  for (std::size_t e = 0; e < env_samples.size(); ++e) {
    const auto& samples = env_samples[e];
    KahanSum t1, dist, resist, weight, wh1;
    for (const auto& s : samples) {
      t1.add(s.t1);
      dist.add(s.dist);
      resist.add(s.resist);
      weight.add(s.weight);
      wh1.add(s.weight * s.exp_h1);
    }
    const double inv = samples.empty() ? 0.0 : 1.0 / static_cast<double>(samples.size());
    per_env.add_row({static_cast<std::int64_t>(e),
                     static_cast<std::int64_t>(samples.size()), t1.value() * inv,
                     dist.value() * inv, resist.value() * inv,
                     0.5 * weight.value() * inv,
                     weight.value() > 0.0 ? wh1.value() / weight.value() : 0.0});
  }
  out.series.emplace_back("constants_env", std::move(per_env));
  return out;
}

// --- heatkernel ----------------------------------------------------------------

RunOutput run_heatkernel(const ExperimentConfig& cfg) {
  const std::int64_t nmax = cfg.nmax;
  const std::vector<std::int64_t> fit_grid =
      dyadic_grid(64, std::max<std::int64_t>(64, nmax));

  std::vector<std::vector<double>> env_series(static_cast<std::size_t>(cfg.n_envs));
  parallel_for(cfg.n_envs, resolve_workers(cfg.workers), [&](std::int64_t e) {
    const OneSidedEnv env =
        make_one_sided_env(cfg.d, cfg.horizon, env_seed(cfg.master_seed, kPhaseHeatkernel, e),
                           cfg.guard_fraction, static_cast<std::uint32_t>(2 * nmax));
    const ConductanceNetwork net = ConductanceNetwork::make(env.graph, env.path, cfg.mode);
    const ReturnSeries series =
        evolve_distribution(net, env.graph.root(), 2 * nmax, env.guard_vertex);
    std::vector<double>& p2n = env_series[static_cast<std::size_t>(e)];
    p2n.resize(static_cast<std::size_t>(nmax));
    for (std::int64_t n = 1; n <= nmax; ++n) {
      p2n[static_cast<std::size_t>(n - 1)] = series.p[static_cast<std::size_t>(2 * n)];
    }
  });

  // Pooled (annealed) series with environment batches.
  SeriesAccumulator acc(static_cast<std::size_t>(nmax));
  for (const auto& s : env_series) acc.add_env(s);

  CsvTable series_table;
  series_table.columns = {"n", "p_return", "stderr"};
  std::vector<double> grid_n, grid_p;
  for (std::int64_t n = 1; n <= nmax; ++n) {
    const auto& st = acc.stats[static_cast<std::size_t>(n - 1)];
    series_table.add_row({n, st.mean(), st.stderr_mean()});
  }
  for (const std::int64_t n : fit_grid) {
    grid_n.push_back(static_cast<double>(n));
    grid_p.push_back(acc.stats[static_cast<std::size_t>(n - 1)].mean());
  }

  const SeriesFit plain = dimension_fit(grid_n, grid_p, FitModel::kPlain);
  const ValueWithError ds = spectral_dimension(plain);
  const SeriesFit logfit = dimension_fit(grid_n, grid_p, FitModel::kLogCorrected, -0.5);

  // Quenched flatness: per-environment max/min of sqrt(n) P(X_2n = 0) over the
  // dyadic grid.
  CsvTable flat_table;
  flat_table.columns = {"env", "flatness_ratio"};
  std::int64_t n_flat = 0;
  for (std::size_t e = 0; e < env_series.size(); ++e) {
    double lo = 0.0, hi = 0.0;
    for (const std::int64_t n : fit_grid) {
      const double v = std::sqrt(static_cast<double>(n)) *
                       env_series[e][static_cast<std::size_t>(n - 1)];
      if (lo == 0.0 || v < lo) lo = v;
      if (v > hi) hi = v;
    }
    const double ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    flat_table.add_row({static_cast<std::int64_t>(e), ratio});
    if (ratio <= 3.0) ++n_flat;
  }

  RunOutput out;
  out.summary =
      json{{"experiment", "heatkernel"},
           {"config", echo_config(cfg)},
           {"results",
            json{{"spectral_dimension", value_error(ds)},
                 {"gamma", value_error(logfit.gamma, logfit.gamma_stderr)},
                 {"fit_grid", json{{"from", fit_grid.front()}, {"to", fit_grid.back()}}},
                 {"flatness_frac_le_3",
                  static_cast<double>(n_flat) / static_cast<double>(cfg.n_envs)}}},
           {"warnings", out.warnings},
           {"version", kVersion}};
  out.series.emplace_back("heatkernel_return", std::move(series_table));
  out.series.emplace_back("heatkernel_flatness", std::move(flat_table));
  return out;
}

// --- displacement ---------------------------------------------------------------

RunOutput run_displacement(const ExperimentConfig& cfg) {
  const std::int64_t nmax = cfg.nmax;
  const std::vector<std::int64_t> checkpoints = dyadic_grid(4, nmax);
  const auto n_cp = checkpoints.size();
  const auto safe_radius =
      static_cast<std::uint32_t>(6.0 * std::sqrt(static_cast<double>(nmax)) + 16.0);

  struct EnvResult {
    std::vector<double> sq_disp, graph_dist, sq_graph_dist;
    std::vector<double> max_disp;  // per uncensored trial, at nmax
    std::int64_t censored = 0;
    std::int64_t trials = 0;
  };
  std::vector<EnvResult> results(static_cast<std::size_t>(cfg.n_envs));

  parallel_for(cfg.n_envs, resolve_workers(cfg.workers), [&](std::int64_t e) {
    const std::uint64_t seed = env_seed(cfg.master_seed, kPhaseDisplacement, e);
    const OneSidedEnv env =
        make_one_sided_env(cfg.d, cfg.horizon, seed, cfg.guard_fraction, safe_radius);
    const ConductanceNetwork net = ConductanceNetwork::make(env.graph, env.path, cfg.mode);
    EnvResult& res = results[static_cast<std::size_t>(e)];
    res.sq_disp.assign(n_cp, 0.0);
    res.graph_dist.assign(n_cp, 0.0);
    res.sq_graph_dist.assign(n_cp, 0.0);
    const std::uint32_t censor[1] = {env.guard_vertex};

    std::int64_t kept = 0;
    for (std::int64_t t = 0; t < cfg.trials; ++t) {
      Rng rng(derive_stream(seed, 2 + static_cast<std::uint64_t>(t)));
      const Trajectory traj = simulate(net, env.graph.root(), nmax, rng, {censor, 1});
      ++res.trials;
      if (traj.censored) {
        ++res.censored;
        continue;
      }
      ++kept;
      double running_max_sq = 0.0;
      std::size_t cp = 0;
      for (std::int64_t m = 0; m <= nmax; ++m) {
        const std::uint32_t v = traj.vertices[static_cast<std::size_t>(m)];
        const double sq = squared_norm({env.graph.coords(v),
                                        static_cast<std::size_t>(cfg.d)});
        if (sq > running_max_sq) running_max_sq = sq;
        if (cp < n_cp && m == checkpoints[cp]) {
          const double gd = static_cast<double>(env.root_dist[v]);
          res.sq_disp[cp] += sq;
          res.graph_dist[cp] += gd;
          res.sq_graph_dist[cp] += gd * gd;
          ++cp;
        }
      }
      res.max_disp.push_back(std::sqrt(running_max_sq));
    }
    if (kept > 0) {
      for (std::size_t i = 0; i < n_cp; ++i) {
        res.sq_disp[i] /= static_cast<double>(kept);
        res.graph_dist[i] /= static_cast<double>(kept);
        res.sq_graph_dist[i] /= static_cast<double>(kept);
      }
    }
  });

  std::int64_t censored = 0, total_trials = 0;
  SeriesAccumulator sq(n_cp), gd(n_cp), gd2(n_cp);
  std::vector<double> max_samples;
  for (const auto& res : results) {
    censored += res.censored;
    total_trials += res.trials;
    if (res.censored < res.trials) {
      sq.add_env(res.sq_disp);
      gd.add_env(res.graph_dist);
      gd2.add_env(res.sq_graph_dist);
    }
    max_samples.insert(max_samples.end(), res.max_disp.begin(), res.max_disp.end());
  }
  if (censored * 100 > total_trials) {
    throw InvariantError("censoring exceeded 1% (" + std::to_string(censored) + "/" +
                         std::to_string(total_trials) + "); raise --horizon");
  }

  CsvTable table;
  table.columns = {"n", "mean_sq_disp", "mean_graph_dist", "stderr_sq", "stderr_gd"};
  std::vector<double> fit_n, fit_sq, fit_gd2;
  for (std::size_t i = 0; i < n_cp; ++i) {
    table.add_row({checkpoints[i], sq.stats[i].mean(), gd.stats[i].mean(),
                   sq.stats[i].stderr_mean(), gd.stats[i].stderr_mean()});
    if (checkpoints[i] >= 64) {
      fit_n.push_back(static_cast<double>(checkpoints[i]));
      fit_sq.push_back(sq.stats[i].mean());
      fit_gd2.push_back(gd2.stats[i].mean());
    }
  }

  const SeriesFit fit_euclid = dimension_fit(fit_n, fit_sq, FitModel::kPlain);
  const SeriesFit fit_graph = dimension_fit(fit_n, fit_gd2, FitModel::kPlain);
  const ValueWithError dw_euclid = walk_dimension(fit_euclid);
  const ValueWithError dw_graph = walk_dimension(fit_graph);

  RunOutput out;
  json results_json{{"walk_dimension_euclidean", value_error(dw_euclid)},
                    {"walk_dimension_graph", value_error(dw_graph)},
                    {"censored", censored},
                    {"trials", total_trials}};

  CsvTable windows;
  windows.columns = {"n", "quantity", "lambda", "coverage"};
  if (cfg.d == 4) {
    const double n = static_cast<double>(nmax);
    const double ln = std::log(n);
    const WindowCheck w = window_check(
        "max_displacement", n, max_samples,
        std::pow(n, 0.25) * std::pow(ln, 1.0 / 24.0),
        std::pow(n, 0.25) * std::pow(ln, 7.0 / 12.0), cfg.lambda_grid);
    append_window_rows(windows, w);
    results_json["max_displacement_window"] = window_json(w, 0.95);
  }

  out.summary = json{{"experiment", "displacement"},
                     {"config", echo_config(cfg)},
                     {"results", results_json},
                     {"warnings", out.warnings},
                     {"version", kVersion}};
  out.series.emplace_back("displacement_series", std::move(table));
  if (cfg.d == 4) out.series.emplace_back("displacement_windows", std::move(windows));
  return out;
}

// --- exit times -------------------------------------------------------------

RunOutput run_exit_times(const ExperimentConfig& cfg) {
  const std::int64_t nmax = cfg.nmax;
  const std::vector<std::int64_t> radii = dyadic_grid(4, nmax);
  const auto n_cp = radii.size();

  std::vector<std::vector<double>> env_values(static_cast<std::size_t>(cfg.n_envs));
  parallel_for(cfg.n_envs, resolve_workers(cfg.workers), [&](std::int64_t e) {
    const OneSidedEnv env = make_one_sided_env(
        cfg.d, cfg.horizon, env_seed(cfg.master_seed, kPhaseExitTimes, e),
        cfg.guard_fraction, static_cast<std::uint32_t>(nmax + 1));
    const ConductanceNetwork net = ConductanceNetwork::make(env.graph, env.path, cfg.mode);
    std::vector<double>& values = env_values[static_cast<std::size_t>(e)];
    values.reserve(n_cp);
    for (const std::int64_t r : radii) {
      values.push_back(
          expected_exit_time(net, env.graph.root(), static_cast<std::uint32_t>(r)));
    }
  });

  SeriesAccumulator acc(n_cp);
  for (const auto& v : env_values) acc.add_env(v);

  CsvTable table;
  table.columns = {"n", "expected_exit", "stderr"};
  std::vector<double> fit_n, fit_v;
  for (std::size_t i = 0; i < n_cp; ++i) {
    table.add_row({radii[i], acc.stats[i].mean(), acc.stats[i].stderr_mean()});
    if (radii[i] >= 16) {
      fit_n.push_back(static_cast<double>(radii[i]));
      fit_v.push_back(acc.stats[i].mean());
    }
  }
  const SeriesFit fit = dimension_fit(fit_n, fit_v, FitModel::kPlain);

  RunOutput out;
  json results_json{{"exponent", value_error(fit.exponent, fit.exponent_stderr)}};

  CsvTable windows;
  windows.columns = {"n", "quantity", "lambda", "coverage"};
  if (cfg.d == 4) {
    std::vector<double> samples;
    for (const auto& v : env_values) samples.push_back(v.back());
    const double n = static_cast<double>(nmax);
    const WindowCheck w = window_check("expected_exit_time", n, samples, n * n,
                                       n * n * std::sqrt(std::log(n)), cfg.lambda_grid);
    append_window_rows(windows, w);
    results_json["exit_time_window"] = window_json(w, 0.95);
  }

  out.summary = json{{"experiment", "exit-times"},
                     {"config", echo_config(cfg)},
                     {"results", results_json},
                     {"warnings", out.warnings},
                     {"version", kVersion}};
  out.series.emplace_back("exit_times", std::move(table));
  if (cfg.d == 4) out.series.emplace_back("exit_time_windows", std::move(windows));
  return out;
}

// --- volume -------------------------------------------------------------------

RunOutput run_volume(const ExperimentConfig& cfg) {
  const std::int64_t nmax = cfg.nmax;
  const std::vector<std::int64_t> radii = dyadic_grid(4, nmax);
  const auto n_cp = radii.size();

  std::vector<std::vector<double>> env_values(static_cast<std::size_t>(cfg.n_envs));
  parallel_for(cfg.n_envs, resolve_workers(cfg.workers), [&](std::int64_t e) {
    const OneSidedEnv env = make_one_sided_env(
        cfg.d, cfg.horizon, env_seed(cfg.master_seed, kPhaseVolume, e),
        cfg.guard_fraction, static_cast<std::uint32_t>(nmax + 1));
    // Degree sums bucketed by distance give mu(B(0, r)) for every r at once.
    std::vector<double> by_dist(static_cast<std::size_t>(nmax) + 1, 0.0);
    for (std::uint32_t v = 0; v < env.graph.vertex_count(); ++v) {
      const std::uint32_t dv = env.root_dist[v];
      if (dv <= nmax) by_dist[dv] += static_cast<double>(env.graph.degree(v));
    }
    std::vector<double>& values = env_values[static_cast<std::size_t>(e)];
    values.reserve(n_cp);
    double acc = 0.0;
    std::size_t cp = 0;
    for (std::int64_t r = 0; r <= nmax; ++r) {
      acc += by_dist[static_cast<std::size_t>(r)];
      if (cp < n_cp && r == radii[cp]) {
        values.push_back(acc);
        ++cp;
      }
    }
  });

  SeriesAccumulator acc(n_cp);
  for (const auto& v : env_values) acc.add_env(v);

  CsvTable table;
  table.columns = {"n", "volume", "stderr"};
  std::vector<double> fit_n, fit_v;
  for (std::size_t i = 0; i < n_cp; ++i) {
    table.add_row({radii[i], acc.stats[i].mean(), acc.stats[i].stderr_mean()});
    if (radii[i] >= 16) {
      fit_n.push_back(static_cast<double>(radii[i]));
      fit_v.push_back(acc.stats[i].mean());
    }
  }
  // Control diagnostic: with the exponent pinned to 1, gamma measures any
  // residual logarithmic drift of mu(B(0, n)) / n.
  const SeriesFit logfit = dimension_fit(fit_n, fit_v, FitModel::kLogCorrected, 1.0);

  RunOutput out;
  json results_json{{"gamma", value_error(logfit.gamma, logfit.gamma_stderr)}};

  CsvTable windows;
  windows.columns = {"n", "quantity", "lambda", "coverage"};
  if (cfg.d == 4) {
    std::vector<double> samples;
    for (const auto& v : env_values) samples.push_back(v.back());
    const double n = static_cast<double>(nmax);
    const double ln = std::log(n);
    const WindowCheck w =
        window_check("volume", n, samples, n * std::pow(ln, 1.0 / 3.0),
                     n * std::sqrt(ln), cfg.lambda_grid);
    append_window_rows(windows, w);
    results_json["volume_window"] = window_json(w, 0.95);
  }

  out.summary = json{{"experiment", "volume"},
                     {"config", echo_config(cfg)},
                     {"results", results_json},
                     {"warnings", out.warnings},
                     {"version", kVersion}};
  out.series.emplace_back("volume", std::move(table));
  if (cfg.d == 4) out.series.emplace_back("volume_windows", std::move(windows));
  return out;
}

// --- scaling test -------------------------------------------------------------

RunOutput run_scaling_test(const ExperimentConfig& cfg) {
  // Phase A: ergodic constants on their own environments.
  ExperimentConfig const_cfg = cfg;
  const_cfg.subcommand = "constants";
  const_cfg.n_envs = cfg.const_envs;
  const_cfg.horizon = 0;
  const_cfg.trials = 0;
  const_cfg.nmax = 1;
  apply_defaults(const_cfg);
  const RunOutput const_out = run_constants(const_cfg);
  const double kappa1 = const_out.summary["results"]["kappa1"]["value"].get<double>();
  const double kappa2 = const_out.summary["results"]["kappa2"]["value"].get<double>();

  // Phase B: one walker per environment on one-sided graphs.
  const std::int64_t nmax = cfg.nmax;
  const auto safe_radius =
      static_cast<std::uint32_t>(6.0 * std::sqrt(kappa1 * static_cast<double>(nmax)) + 16.0);
  struct WalkResult {
    double sample_q = 0.0;
    double sample_a = 0.0;
    bool censored = false;
  };
  std::vector<WalkResult> walks(static_cast<std::size_t>(cfg.n_envs));
  parallel_for(cfg.n_envs, resolve_workers(cfg.workers), [&](std::int64_t e) {
    const std::uint64_t seed = env_seed(cfg.master_seed, kPhaseScalingWalk, e);
    const OneSidedEnv env =
        make_one_sided_env(cfg.d, cfg.horizon, seed, cfg.guard_fraction, safe_radius);
    const ConductanceNetwork net = ConductanceNetwork::make(env.graph, env.path, cfg.mode);
    Rng rng(derive_stream(seed, 2));
    const std::uint32_t censor[1] = {env.guard_vertex};
    const Trajectory traj = simulate(net, env.graph.root(), nmax, rng, {censor, 1});
    WalkResult& res = walks[static_cast<std::size_t>(e)];
    if (traj.censored) {
      res.censored = true;
      return;
    }
    const std::uint32_t last = traj.vertices.back();
    res.sample_q = static_cast<double>(env.root_dist[last]) /
                   std::sqrt(static_cast<double>(nmax));
    res.sample_a = static_cast<double>(env.graph.coords(last)[0]) /
                   std::pow(static_cast<double>(nmax), 0.25);
  });

  std::vector<double> samples_q, samples_a;
  std::int64_t censored = 0;
  CsvTable samples_table;
  samples_table.columns = {"env", "sample_q", "sample_a"};
  for (std::size_t e = 0; e < walks.size(); ++e) {
    if (walks[e].censored) {
      ++censored;
      continue;
    }
    samples_q.push_back(walks[e].sample_q);
    samples_a.push_back(walks[e].sample_a);
    samples_table.add_row({static_cast<std::int64_t>(e), walks[e].sample_q,
                           walks[e].sample_a});
  }
  if (censored * 100 > cfg.n_envs) {
    throw InvariantError("censoring exceeded 1% (" + std::to_string(censored) + "/" +
                         std::to_string(cfg.n_envs) + "); raise --horizon");
  }

  // Simulated reference laws; the reference stream is fixed and recorded.
  const std::uint64_t ref_seed = derive_stream(cfg.master_seed, kPhaseReference);
  Rng ref_rng(ref_seed);
  const std::int64_t n_ref = 100000;
  const KsResult ks_q = ks_two_sample(samples_q, sample_half_normal(kappa1, n_ref, ref_rng));
  const KsResult ks_a =
      ks_two_sample(samples_a, sample_mixture_coordinate(kappa2, n_ref, ref_rng));

  // Moment diagnostics for the finite-n bias report.
  RunningStat mq, ma;
  for (double v : samples_q) mq.add(v);
  for (double v : samples_a) ma.add(v);

  RunOutput out;
  out.summary = json{
      {"experiment", "scaling-test"},
      {"config", echo_config(cfg)},
      {"results",
       json{{"kappa1", const_out.summary["results"]["kappa1"]},
            {"kappa2", const_out.summary["results"]["kappa2"]},
            {"ks_quenched", json{{"statistic", ks_q.statistic}, {"p_value", ks_q.p_value}}},
            {"ks_annealed", json{{"statistic", ks_a.statistic}, {"p_value", ks_a.p_value}}},
            {"quenched_sample_mean", mq.mean()},
            {"quenched_theory_mean", std::sqrt(2.0 * kappa1 / 3.14159265358979323846)},
            {"annealed_sample_var", ma.var_sample()},
            {"censored", censored},
            {"reference_seed", ref_seed},
            {"reference_draws", n_ref}}},
      {"warnings", out.warnings},
      {"version", kVersion}};
  out.series.emplace_back("scaling_samples", std::move(samples_table));
  return out;
}

// --- cut-time growth ------------------------------------------------------------

RunOutput run_cuttimes(const ExperimentConfig& cfg) {
  const std::int64_t target = cfg.nmax;  // cut-index target
  const std::vector<std::int64_t> grid = dyadic_grid(4, target);
  const auto n_cp = grid.size();

  std::vector<std::vector<double>> env_t(static_cast<std::size_t>(cfg.n_envs));
  parallel_for(cfg.n_envs, resolve_workers(cfg.workers), [&](std::int64_t e) {
    const std::uint64_t seed = env_seed(cfg.master_seed, kPhaseCutTimes, e);
    std::int64_t horizon = cfg.horizon;
    for (int attempt = 0;; ++attempt, horizon *= 2) {
      const WalkPath path = gen_path(cfg.d, horizon, seed, Sided::kOne);
      const CutTimeSet cuts = cut_times(path, Sided::kOne, cfg.guard_fraction);
      const std::vector<std::int64_t> exact = cuts.exact_indices();
      if (static_cast<std::int64_t>(exact.size()) >= target) {
        std::vector<double>& t = env_t[static_cast<std::size_t>(e)];
        t.reserve(n_cp);
        for (const std::int64_t k : grid) {
          t.push_back(static_cast<double>(exact[static_cast<std::size_t>(k - 1)]));
        }
        return;
      }
      if (attempt >= 4) {
        throw HorizonError("cut-index target " + std::to_string(target) +
                           " unreachable; raise --horizon");
      }
    }
  });

  SeriesAccumulator t_acc(n_cp), plain_acc(n_cp), log_acc(n_cp);
  for (const auto& t : env_t) {
    std::vector<double> plain(n_cp), logc(n_cp);
    for (std::size_t i = 0; i < n_cp; ++i) {
      const auto k = static_cast<double>(grid[i]);
      plain[i] = t[i] / k;
      logc[i] = t[i] / (k * std::sqrt(std::log(std::max(k, 2.0))));
    }
    t_acc.add_env(t);
    plain_acc.add_env(plain);
    log_acc.add_env(logc);
  }

  CsvTable table;
  table.columns = {"n", "t_mean", "t_stderr", "ratio_plain", "ratio_log"};
  for (std::size_t i = 0; i < n_cp; ++i) {
    table.add_row({grid[i], t_acc.stats[i].mean(), t_acc.stats[i].stderr_mean(),
                   plain_acc.stats[i].mean(), log_acc.stats[i].mean()});
  }

  // Relative drift across the top two dyadic levels.
  const auto drift = [&](const SeriesAccumulator& acc) {
    const double top = acc.stats[n_cp - 1].mean();
    const double prev = acc.stats[n_cp - 2].mean();
    return std::abs(top / prev - 1.0);
  };
  RunOutput out;
  out.summary = json{{"experiment", "cuttimes"},
                     {"config", echo_config(cfg)},
                     {"results",
                      json{{"drift_plain", drift(plain_acc)},
                           {"drift_log", drift(log_acc)},
                           {"top_ratio_plain", plain_acc.stats[n_cp - 1].mean()},
                           {"top_ratio_log", log_acc.stats[n_cp - 1].mean()}}},
                     {"warnings", out.warnings},
                     {"version", kVersion}};
  out.series.emplace_back("cuttimes", std::move(table));
  return out;
}

// --- d4 diagnostics --------------------------------------------------------------

RunOutput run_d4_diagnostics(const ExperimentConfig& cfg) {
  const std::int64_t n = cfg.nmax;

  // Window samples: volume and expected exit time at radius n, plus the
  // Euclidean max displacement of an n-step walker.
  struct EnvResult {
    double volume = 0.0;
    double exit_time = 0.0;
    double max_disp = 0.0;
    bool censored = false;
  };
  std::vector<EnvResult> results(static_cast<std::size_t>(cfg.n_envs));
  parallel_for(cfg.n_envs, resolve_workers(cfg.workers), [&](std::int64_t e) {
    const std::uint64_t seed = env_seed(cfg.master_seed, kPhaseD4Windows, e);
    const OneSidedEnv env = make_one_sided_env(cfg.d, cfg.horizon, seed,
                                               cfg.guard_fraction,
                                               static_cast<std::uint32_t>(n + 1));
    const ConductanceNetwork net = ConductanceNetwork::make(env.graph, env.path, cfg.mode);
    EnvResult& res = results[static_cast<std::size_t>(e)];

    double vol = 0.0;
    for (std::uint32_t v = 0; v < env.graph.vertex_count(); ++v) {
      if (env.root_dist[v] <= n) vol += static_cast<double>(env.graph.degree(v));
    }
    res.volume = vol;
    res.exit_time = expected_exit_time(net, env.graph.root(), static_cast<std::uint32_t>(n));

    Rng rng(derive_stream(seed, 2));
    const std::uint32_t censor[1] = {env.guard_vertex};
    const Trajectory traj = simulate(net, env.graph.root(), n, rng, {censor, 1});
    if (traj.censored) {
      res.censored = true;
      return;
    }
    double max_sq = 0.0;
    for (const std::uint32_t v : traj.vertices) {
      max_sq = std::max(max_sq, squared_norm({env.graph.coords(v),
                                              static_cast<std::size_t>(cfg.d)}));
    }
    res.max_disp = std::sqrt(max_sq);
  });

  std::vector<double> vol_samples, exit_samples, disp_samples;
  std::int64_t censored = 0;
  for (const auto& r : results) {
    vol_samples.push_back(r.volume);
    exit_samples.push_back(r.exit_time);
    if (r.censored) {
      ++censored;
    } else {
      disp_samples.push_back(r.max_disp);
    }
  }
  if (censored * 100 > cfg.n_envs) {
    throw InvariantError("censoring exceeded 1%; raise --horizon");
  }

  const double nn = static_cast<double>(n);
  const double ln = std::log(nn);
  const WindowCheck w_vol =
      window_check("volume", nn, vol_samples, nn * std::pow(ln, 1.0 / 3.0),
                   nn * std::sqrt(ln), cfg.lambda_grid);
  const WindowCheck w_exit = window_check("expected_exit_time", nn, exit_samples,
                                          nn * nn, nn * nn * std::sqrt(ln), cfg.lambda_grid);
  const WindowCheck w_disp = window_check(
      "max_displacement", nn, disp_samples, std::pow(nn, 0.25) * std::pow(ln, 1.0 / 24.0),
      std::pow(nn, 0.25) * std::pow(ln, 7.0 / 12.0), cfg.lambda_grid);

  CsvTable windows;
  windows.columns = {"n", "quantity", "lambda", "coverage"};
  append_window_rows(windows, w_vol);
  append_window_rows(windows, w_exit);
  append_window_rows(windows, w_disp);

  // Lighter companion diagnostics: cut-time growth and the return-probability
  // log correction, on their own (smaller) environment sets.
  ExperimentConfig ct_cfg = cfg;
  ct_cfg.subcommand = "cuttimes";
  ct_cfg.n_envs = std::min<std::int64_t>(cfg.n_envs, 6);
  ct_cfg.nmax = 1 << 14;
  ct_cfg.horizon = 0;
  ct_cfg.trials = 1;
  apply_defaults(ct_cfg);
  const RunOutput ct_out = run_cuttimes(ct_cfg);

  ExperimentConfig hk_cfg = cfg;
  hk_cfg.subcommand = "heatkernel";
  hk_cfg.n_envs = std::min<std::int64_t>(cfg.n_envs, 60);
  hk_cfg.nmax = 1024;
  hk_cfg.horizon = 0;
  hk_cfg.trials = 1;
  apply_defaults(hk_cfg);
  const RunOutput hk_out = run_heatkernel(hk_cfg);

  RunOutput out;
  out.summary = json{{"experiment", "d4-diagnostics"},
                     {"config", echo_config(cfg)},
                     {"results",
                      json{{"volume_window", window_json(w_vol, 0.95)},
                           {"exit_time_window", window_json(w_exit, 0.95)},
                           {"max_displacement_window", window_json(w_disp, 0.95)},
                           {"censored", censored},
                           {"cut_growth", ct_out.summary["results"]},
                           {"heatkernel", hk_out.summary["results"]}}},
                     {"warnings", out.warnings},
                     {"version", kVersion}};
  out.series.emplace_back("d4_windows", std::move(windows));
  for (const auto& [name, table] : ct_out.series) out.series.emplace_back(name, table);
  for (const auto& [name, table] : hk_out.series) out.series.emplace_back(name, table);
  return out;
}

}  // namespace

json echo_config(const ExperimentConfig& cfg) {
  json lambda = json::array();
  for (double l : cfg.lambda_grid) lambda.push_back(l);
  return json{{"subcommand", cfg.subcommand},
              {"dim", cfg.d},
              {"horizon", cfg.horizon},
              {"envs", cfg.n_envs},
              {"nmax", cfg.nmax},
              {"trials", cfg.trials},
              {"const_envs", cfg.const_envs},
              {"seed", cfg.master_seed},
              {"mode", mode_name(cfg.mode)},
              {"lambda_grid", lambda},
              {"guard", cfg.guard_fraction},
              {"version", kVersion}};
}

RunOutput run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  apply_defaults(cfg);
  validate(cfg);
  if (cfg.subcommand == "constants") return run_constants(cfg);
  if (cfg.subcommand == "heatkernel") return run_heatkernel(cfg);
  if (cfg.subcommand == "displacement") return run_displacement(cfg);
  if (cfg.subcommand == "exit-times") return run_exit_times(cfg);
  if (cfg.subcommand == "volume") return run_volume(cfg);
  if (cfg.subcommand == "scaling-test") return run_scaling_test(cfg);
  if (cfg.subcommand == "cuttimes") return run_cuttimes(cfg);
  if (cfg.subcommand == "d4-diagnostics") return run_d4_diagnostics(cfg);
  throw ConfigError("unknown subcommand '" + cfg.subcommand + "'");
}

int run_and_write(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  try {
    apply_defaults(cfg);
    validate(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  RunOutput out;
  try {
    out = run_experiment(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  std::string prefix = cfg.subcommand;
  std::replace(prefix.begin(), prefix.end(), '-', '_');
  try {
    ensure_directory(cfg.out_dir);
    const std::filesystem::path dir(cfg.out_dir);
    write_text_file((dir / (prefix + "_summary.json")).string(), render_json(out.summary));
    for (const auto& [name, table] : out.series) {
      write_text_file((dir / (name + ".csv")).string(), render_csv(table));
    }
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 3;
  }

  // Wall-clock and execution details go to stderr only; the persisted outputs
  // stay byte-identical across reruns and worker counts.
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "%s: wrote %zu series to %s in %.1fs (workers=%d)\n",
               cfg.subcommand.c_str(), out.series.size(), cfg.out_dir.c_str(), secs,
               resolve_workers(cfg.workers));
  for (const auto& w : out.warnings) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  return out.exit_code;
}

}  // namespace rangewalk
