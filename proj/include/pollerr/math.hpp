#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pollerr {

inline constexpr double log_2pi = 1.8378770664093454836;

// Phi^{-1}(0.75); median of a half-normal is scale * this.
inline constexpr double half_normal_median_factor = 0.6744897501960817;

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double normal_lpdf_var(double x, double mean, double var) {
  if (!(var > 0.0)) return neg_inf;
  const double d = x - mean;
  return -0.5 * (log_2pi + std::log(var) + d * d / var);
}

inline double normal_lpdf(double x, double mean, double sd) {
  if (!(sd > 0.0)) return neg_inf;
  return normal_lpdf_var(x, mean, sd * sd);
}

// Density of |Z|, Z ~ N(0, scale^2); zero mass below 0.
inline double half_normal_lpdf(double x, double scale) {
  if (x < 0.0 || !(scale > 0.0)) return neg_inf;
  return std::log(2.0) + normal_lpdf(x, 0.0, scale);
}

// CDF of a half-normal with the given scale.
inline double half_normal_cdf(double x, double scale) {
  if (x <= 0.0) return 0.0;
  return std::erf(x / (scale * std::sqrt(2.0)));
}

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * (1.0 + std::erf((x - mean) / (sd * std::sqrt(2.0))));
}

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("logit: argument must lie in (0,1)");
  return std::log(p / (1.0 - p));
}

inline double inv_logit(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double clamp01(double x) { return std::min(std::max(0.0, x), 1.0); }

// As clamp01, but counts activations (used for the sampler diagnostic).
inline double clamp01_counted(double x, long& hits) {
  if (x < 0.0 || x > 1.0) {
    ++hits;
    return x < 0.0 ? 0.0 : 1.0;
  }
  return x;
}

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_variance(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(n - 1);
}

inline double sample_sd(const std::vector<double>& xs) {
  return std::sqrt(sample_variance(xs));
}

// Linear-interpolation quantile (R type 7) on an already sorted vector.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (sorted.size() == 1) return sorted[0];
  const double h = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile_of(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  return quantile_sorted(xs, p);
}

}  // namespace pollerr
