#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rangewalk/resistance.hpp"
#include "rangewalk/rng.hpp"
#include "rangewalk/stats.hpp"

namespace rangewalk {

// Statistics of one cut-time block of a two-sided environment conditioned to
// have a cut-time at its anchor: duration T_1, graph distance and resistance
// to the next cut-point, the anchor's weight (degree, or mu in crossing
// mode), and the expected first return time to the cut-point set.
struct BlockSample {
  double t1 = 0.0;
  double dist = 0.0;
  double resist = 0.0;
  double weight = 0.0;
  double exp_h1 = 0.0;
};

struct BlockSamplingParams {
  int d = 5;
  std::int64_t n_envs = 100;
  std::int64_t horizon_per_side = 20000;
  std::uint64_t master_seed = 1;
  std::int64_t max_anchors_per_env = 64;  // 0 = all interior anchors
  ConductanceMode mode = ConductanceMode::kUnit;
  double guard_fraction = 0.1;
};

// Block samples of one environment: an unconditioned two-sided path is
// generated and every interior exact cut-time acts as a block anchor, which
// realizes the cut-time-conditioned law directly (anchors are subsampled
// evenly when max_anchors_per_env caps them). Throws InsufficientCutsError
// when fewer than three exact cut-times exist after retries with doubled
// horizons; d = 4 two-sided input reliably ends up there.
std::vector<BlockSample> sample_blocks_env(const BlockSamplingParams& params,
                                           std::int64_t env_index);

struct ValueWithError {
  double value = 0.0;
  double stderr_ = 0.0;
};

struct ConstantEstimates {
  ValueWithError tau, delta, rho, nu, eta, kappa1, kappa2;
  std::int64_t n_envs = 0;
  std::int64_t n_blocks = 0;
};

// Pools per-environment block samples into the ergodic constants and the
// derived diffusion constants. Environments are the batches for standard
// errors; kappa errors are first-order propagation with the empirical
// between-environment covariance.
ConstantEstimates reduce_block_samples(
    std::span<const std::vector<BlockSample>> env_samples);

// kappa_1 = delta^2 / (nu rho eta), kappa_2 = tau^2 / (nu rho eta).
std::pair<double, double> kappa_values(double tau, double delta, double rho,
                                       double nu, double eta);

enum class FitModel { kPlain, kLogCorrected };

// Least squares on log-transformed series over the given n grid. The plain
// model fits y = a * n^p. The log-corrected model fixes p and fits
// y = a * n^p * (ln n)^gamma. Requires >= 5 points.
struct SeriesFit {
  FitModel model = FitModel::kPlain;
  double exponent = 0.0;         // p (fitted or fixed)
  double exponent_stderr = 0.0;  // 0 when fixed
  double gamma = 0.0;
  double gamma_stderr = 0.0;
  double log_amplitude = 0.0;
  int n_points = 0;
};
SeriesFit dimension_fit(std::span<const double> n_values,
                        std::span<const double> y_values, FitModel model,
                        double fixed_exponent = 0.0);

// Spectral dimension from a return-probability series: P(X_2n = 0) ~ n^{-dS/2}.
ValueWithError spectral_dimension(const SeriesFit& fit);
// Walk dimension from E|X_n|^2 ~ n^{2/dW}.
ValueWithError walk_dimension(const SeriesFit& fit);

// Reference draws for the scaling-limit tests.
// Half-normal: |B_kappa| = |sqrt(kappa) Z|.
std::vector<double> sample_half_normal(double kappa, std::int64_t count, Rng& rng);
// Coordinate of W^{(d)} at the independent time |B_kappa2|: sqrt(|B|) * Z.
std::vector<double> sample_mixture_coordinate(double kappa2, std::int64_t count, Rng& rng);

// Coverage of a window [lower/lambda, upper*lambda]: fraction of samples
// inside, and the smallest grid lambda achieving the target.
struct WindowCheck {
  std::string quantity;
  double n = 0.0;
  std::vector<double> lambdas;
  std::vector<double> coverages;       // aligned with lambdas
  double best_lambda = 0.0;            // smallest lambda with coverage >= target, 0 if none
  double best_coverage = 0.0;
};
WindowCheck window_check(const std::string& quantity, double n,
                         std::span<const double> samples, double lower, double upper,
                         std::span<const double> lambda_grid, double target = 0.95);

}  // namespace rangewalk
