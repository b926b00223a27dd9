#include "rangewalk/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rangewalk/errors.hpp"
#include "rangewalk/walk_sim.hpp"

namespace rangewalk {

// --- stats.hpp implementations -------------------------------------------

double ks_asymptotic_pvalue(double statistic, std::int64_t m, std::int64_t n) {
  const double en = std::sqrt(static_cast<double>(m) * static_cast<double>(n) /
                              static_cast<double>(m + n));
  // Stephens' small-sample correction to the Kolmogorov limit law.
  const double lambda = (en + 0.12 + 0.11 / en) * statistic;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("KS test needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double inv_a = 1.0 / static_cast<double>(a.size());
  const double inv_b = 1.0 / static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) {
      fa += inv_a;
      ++i;
    }
    while (j < b.size() && b[j] <= x) {
      fb += inv_b;
      ++j;
    }
    d = std::max(d, std::abs(fa - fb));
  }
  KsResult r;
  r.statistic = d;
  r.p_value = ks_asymptotic_pvalue(d, static_cast<std::int64_t>(a.size()),
                                   static_cast<std::int64_t>(b.size()));
  return r;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw FitError("need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw FitError("degenerate abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
  }
  const double sigma2 = n > 2 ? ssr / static_cast<double>(n - 2) : 0.0;
  fit.slope_stderr = std::sqrt(sigma2 / sxx);
  fit.intercept_stderr =
      std::sqrt(sigma2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
  return fit;
}

// --- block sampling -------------------------------------------------------

std::vector<BlockSample> sample_blocks_env(const BlockSamplingParams& params,
                                           std::int64_t env_index) {
  const std::uint64_t seed = derive_stream(params.master_seed, static_cast<std::uint64_t>(env_index));

  std::int64_t horizon = params.horizon_per_side;
  for (int attempt = 0;; ++attempt) {
    const WalkPath path = gen_path(params.d, horizon, seed, Sided::kTwo);
    const CutTimeSet cuts = cut_times(path, Sided::kTwo, params.guard_fraction);
    const std::vector<std::int64_t> exact = cuts.exact_indices();

    if (exact.size() < 3) {
      if (attempt >= 2) {
        throw InsufficientCutsError(
            "no usable two-sided cut-times at horizon " + std::to_string(horizon) +
            " (d=" + std::to_string(params.d) +
            "; for d=4 the two-sided cut-time set is empty)");
      }
      horizon *= 2;  // deterministic: the longer path extends the same streams
      continue;
    }

    // Interior anchors, evenly subsampled when capped.
    std::vector<std::size_t> anchors;
    const std::size_t n_interior = exact.size() - 2;
    const std::size_t want =
        params.max_anchors_per_env > 0
            ? std::min<std::size_t>(n_interior, static_cast<std::size_t>(params.max_anchors_per_env))
            : n_interior;
    anchors.reserve(want);
    for (std::size_t k = 0; k < want; ++k) {
      anchors.push_back(1 + (k * n_interior) / want);
    }

    std::vector<BlockSample> samples;
    samples.reserve(anchors.size());
    for (const std::size_t pos : anchors) {
      BlockSample s;
      s.t1 = static_cast<double>(exact[pos + 1] - exact[pos]);

      const RangeGraph right = build_graph(path, exact[pos], exact[pos + 1], exact[pos]);
      const std::vector<std::uint32_t> dist = graph_distance(right, right.root());
      s.dist = static_cast<double>(dist[right.vertex_of_path_index(path, exact[pos + 1])]);
      const ConductanceNetwork net_right = ConductanceNetwork::make(right, path, params.mode);
      s.resist = effective_resistance(net_right, right.root(),
                                      right.vertex_of_path_index(path, exact[pos + 1]));

      const RangeGraph both = build_graph(path, exact[pos - 1], exact[pos + 1], exact[pos]);
      const ConductanceNetwork net_both = ConductanceNetwork::make(both, path, params.mode);
      s.weight = net_both.vertex_weight(both.root());

      s.exp_h1 = expected_h1(path, exact, pos, params.mode);
      samples.push_back(s);
    }
    return samples;
  }
}

ConstantEstimates reduce_block_samples(
    std::span<const std::vector<BlockSample>> env_samples) {
  struct EnvMeans {
    double tau, delta, rho, nu, eta;
  };
  std::vector<EnvMeans> envs;
  std::int64_t n_blocks = 0;
  for (const auto& samples : env_samples) {
    if (samples.empty()) continue;
    KahanSum t1, dist, resist, weight, wh1;
    for (const auto& s : samples) {
      t1.add(s.t1);
      dist.add(s.dist);
      resist.add(s.resist);
      weight.add(s.weight);
      wh1.add(s.weight * s.exp_h1);
    }
    const double inv = 1.0 / static_cast<double>(samples.size());
    envs.push_back(EnvMeans{t1.value() * inv, dist.value() * inv, resist.value() * inv,
                            0.5 * weight.value() * inv, wh1.value() / weight.value()});
    n_blocks += static_cast<std::int64_t>(samples.size());
  }
  if (envs.empty()) throw InsufficientCutsError("no environments with block samples");

  const auto n = static_cast<double>(envs.size());
  double mean[5] = {};
  for (const auto& e : envs) {
    const double v[5] = {e.tau, e.delta, e.rho, e.nu, e.eta};
    for (int i = 0; i < 5; ++i) mean[i] += v[i];
  }
  for (double& m : mean) m /= n;

  // Between-environment covariance of the batch means.
  double cov[5][5] = {};
  for (const auto& e : envs) {
    const double v[5] = {e.tau - mean[0], e.delta - mean[1], e.rho - mean[2],
                         e.nu - mean[3], e.eta - mean[4]};
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) cov[i][j] += v[i] * v[j];
    }
  }
  const double denom = envs.size() > 1 ? (n - 1.0) * n : 1.0;  // Cov of the mean
  for (auto& row : cov) {
    for (double& c : row) c /= denom;
  }

  ConstantEstimates est;
  est.n_envs = static_cast<std::int64_t>(envs.size());
  est.n_blocks = n_blocks;
  const auto with_err = [&](int i) {
    return ValueWithError{mean[i], std::sqrt(cov[i][i])};
  };
  est.tau = with_err(0);
  est.delta = with_err(1);
  est.rho = with_err(2);
  est.nu = with_err(3);
  est.eta = with_err(4);

  const auto [k1, k2] = kappa_values(mean[0], mean[1], mean[2], mean[3], mean[4]);
  // First-order error propagation through the plug-in formulas, with the
  // full between-environment covariance. Gradient order: tau, delta, rho, nu, eta.
  const auto propagate = [&](double value, const double grad[5]) {
    double var = 0.0;
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) var += grad[i] * cov[i][j] * grad[j];
    }
    return ValueWithError{value, std::sqrt(std::max(var, 0.0))};
  };
  const double g1[5] = {0.0, 2.0 * k1 / mean[1], -k1 / mean[2], -k1 / mean[3], -k1 / mean[4]};
  const double g2[5] = {2.0 * k2 / mean[0], 0.0, -k2 / mean[2], -k2 / mean[3], -k2 / mean[4]};
  est.kappa1 = propagate(k1, g1);
  est.kappa2 = propagate(k2, g2);
  return est;
}

std::pair<double, double> kappa_values(double tau, double delta, double rho,
                                       double nu, double eta) {
  const double denom = nu * rho * eta;
  return {delta * delta / denom, tau * tau / denom};
}

// --- series fits ----------------------------------------------------------

SeriesFit dimension_fit(std::span<const double> n_values,
                        std::span<const double> y_values, FitModel model,
                        double fixed_exponent) {
  if (n_values.size() < 5) throw FitError("dimension fit needs at least 5 points");
  if (n_values.size() != y_values.size()) throw FitError("mismatched series");
  std::vector<double> x(n_values.size()), y(n_values.size());
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] <= 1.0 || y_values[i] <= 0.0) {
      throw FitError("dimension fit needs n > 1 and positive values");
    }
  }

  SeriesFit out;
  out.model = model;
  out.n_points = static_cast<int>(n_values.size());
  if (model == FitModel::kPlain) {
    for (std::size_t i = 0; i < n_values.size(); ++i) {
      x[i] = std::log(n_values[i]);
      y[i] = std::log(y_values[i]);
    }
    const LineFit fit = fit_line(x, y);
    out.exponent = fit.slope;
    out.exponent_stderr = fit.slope_stderr;
    out.log_amplitude = fit.intercept;
  } else {
    for (std::size_t i = 0; i < n_values.size(); ++i) {
      x[i] = std::log(std::log(n_values[i]));
      y[i] = std::log(y_values[i]) - fixed_exponent * std::log(n_values[i]);
    }
    const LineFit fit = fit_line(x, y);
    out.exponent = fixed_exponent;
    out.gamma = fit.slope;
    out.gamma_stderr = fit.slope_stderr;
    out.log_amplitude = fit.intercept;
  }
  return out;
}

ValueWithError spectral_dimension(const SeriesFit& fit) {
  return {-2.0 * fit.exponent, 2.0 * fit.exponent_stderr};
}

ValueWithError walk_dimension(const SeriesFit& fit) {
  if (fit.exponent == 0.0) throw FitError("walk dimension needs a nonzero exponent");
  return {2.0 / fit.exponent,
          2.0 * fit.exponent_stderr / (fit.exponent * fit.exponent)};
}

// --- scaling-limit references ---------------------------------------------

std::vector<double> sample_half_normal(double kappa, std::int64_t count, Rng& rng) {
  std::vector<double> out(static_cast<std::size_t>(count));
  const double scale = std::sqrt(kappa);
  for (auto& v : out) v = std::abs(scale * rng.next_normal());
  return out;
}

std::vector<double> sample_mixture_coordinate(double kappa2, std::int64_t count, Rng& rng) {
  std::vector<double> out(static_cast<std::size_t>(count));
  const double scale = std::sqrt(kappa2);
  for (auto& v : out) {
    const double b = std::abs(scale * rng.next_normal());
    v = std::sqrt(b) * rng.next_normal();
  }
  return out;
}

// --- window coverage --------------------------------------------------------

WindowCheck window_check(const std::string& quantity, double n,
                         std::span<const double> samples, double lower, double upper,
                         std::span<const double> lambda_grid, double target) {
  WindowCheck w;
  w.quantity = quantity;
  w.n = n;
  for (const double lambda : lambda_grid) {
    std::int64_t inside = 0;
    for (const double s : samples) {
      if (s >= lower / lambda && s <= upper * lambda) ++inside;
    }
    const double coverage =
        samples.empty() ? 0.0
                        : static_cast<double>(inside) / static_cast<double>(samples.size());
    w.lambdas.push_back(lambda);
    w.coverages.push_back(coverage);
    if (w.best_lambda == 0.0 && coverage >= target) {
      w.best_lambda = lambda;
      w.best_coverage = coverage;
    }
  }
  return w;
}

}  // namespace rangewalk
