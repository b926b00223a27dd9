#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace rangewalk {

// Welford mean/variance accumulator.
class RunningStat {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double var_sample() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stderr_mean() const {
    return n_ > 0 ? std::sqrt(var_sample() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Compensated accumulator for order-independent-to-rounding reductions that
// are nevertheless always run in task-index order.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

// Asymptotic Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2}.
double ks_asymptotic_pvalue(double statistic, std::int64_t m, std::int64_t n);

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Ordinary least squares for y = a + b x.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace rangewalk
