// Copyright 2026 The abmetrics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef ABMETRICS_STATCORE_HPP_
#define ABMETRICS_STATCORE_HPP_

// Standard-normal numerics and the two-sample z statistic.
//
// All functions are pure and thread-safe. phi and inv_phi are templates over
// the floating-point type; the double overloads are what the rest of the
// library uses.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "abmetrics/error.hpp"

namespace abmetrics {

// Smallest p-value ever reported; keeps downstream log-scales finite.
inline constexpr double kMinPValue = 1e-300;

class ZScore {
 public:
  constexpr ZScore() = default;
  explicit ZScore(double value) : value_(value) {
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::kDomain, "z-score must be finite");
    }
  }

  constexpr double value() const noexcept { return value_; }
  ZScore operator-() const { return ZScore(-value_); }
  friend constexpr bool operator==(ZScore, ZScore) = default;

 private:
  double value_ = 0.0;
};

class PValue {
 public:
  explicit PValue(double value) : value_(value) {
    if (!(value > 0.0 && value <= 1.0)) {
      throw Error(ErrorKind::kDomain,
                  "p-value must lie in (0, 1], got " + std::to_string(value));
    }
  }

  constexpr double value() const noexcept { return value_; }
  friend constexpr bool operator==(PValue, PValue) = default;

 private:
  double value_;
};

// Aggregated statistics of one metric on one variant. variance_of_mean is the
// variance of the sample mean (sample variance / n), not a standard deviation.
struct MetricStats {
  double mean = 0.0;
  double variance_of_mean = 0.0;
  std::optional<std::size_t> n;

  friend bool operator==(const MetricStats&, const MetricStats&) = default;
};

namespace detail {

template <std::floating_point T>
T normal_pdf(T x) {
  return std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi_v<T>);
}

// Acklam's rational approximation, lower half p <= 0.5. Relative error of
// roughly 1.15e-9 before refinement.
template <std::floating_point T>
T acklam_lower(T p) {
  constexpr T a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                     -2.759285104469687e+02, 1.383577518672690e+02,
                     -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr T b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                     -1.556989798598866e+02, 6.680131188771972e+01,
                     -1.328068155288572e+01};
  constexpr T c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                     -2.400758277161838e+00, -2.549732539343734e+00,
                     4.374664141464968e+00,  2.938163982698783e+00};
  constexpr T d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                     2.445134137142996e+00, 3.754408661907416e+00};
  constexpr T p_low = 0.02425;

  if (p < p_low) {
    const T q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const T q = p - T(0.5);
  const T r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

// Quantile for p <= 0.5, refined with one Halley step. The residual is taken
// in lower-tail space where erfc keeps full relative precision.
template <std::floating_point T>
T inv_phi_lower(T p) {
  T x = acklam_lower(p);
  const T lower_tail = std::erfc(-x / std::numbers::sqrt2_v<T>) / 2;
  const T e = lower_tail - p;
  const T u = e / normal_pdf(x);
  x -= u / (1 + x * u / 2);
  return x;
}

}  // namespace detail

// Standard normal CDF, P(Z <= x).
template <std::floating_point T>
T phi(T x) {
  if (!std::isfinite(x)) {
    throw Error(ErrorKind::kDomain, "phi requires a finite argument");
  }
  return std::erfc(-x / std::numbers::sqrt2_v<T>) / 2;
}

inline double phi(double x) { return phi<double>(x); }

// Standard normal quantile, the inverse of phi on (0, 1).
template <std::floating_point T>
T inv_phi(T p) {
  if (!(p > 0 && p < 1)) {
    throw Error(ErrorKind::kDomain, "inv_phi requires 0 < p < 1");
  }
  if (p == T(0.5)) return 0;
  // For p > 0.5, 1 - p is exact (Sterbenz), so reflect into the lower tail.
  if (p > T(0.5)) return -detail::inv_phi_lower(T(1) - p);
  return detail::inv_phi_lower(p);
}

inline double inv_phi(double p) { return inv_phi<double>(p); }

// Two-sided p-value 2 * (1 - phi(|z|)), evaluated as erfc(|z| / sqrt 2) to
// avoid cancellation, clamped into [kMinPValue, 1].
inline PValue two_sided_p(ZScore z) {
  double p = std::erfc(std::abs(z.value()) / std::numbers::sqrt2);
  if (p < kMinPValue) p = kMinPValue;
  if (p > 1.0) p = 1.0;
  return PValue(p);
}

// Per-test two-sided critical value under a Bonferroni split of alpha over k
// tests. k == 1 is the uncorrected threshold.
inline double critical_value(double alpha, std::size_t k) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kDomain, "alpha must lie in (0, 1)");
  }
  if (k == 0) {
    throw Error(ErrorKind::kDomain, "number of tests k must be positive");
  }
  return inv_phi(1.0 - alpha / (2.0 * static_cast<double>(k)));
}

// (mean_a - mean_b) / sqrt(var_a + var_b), with variances of the mean.
inline ZScore z_score(const MetricStats& a, const MetricStats& b) {
  if (!std::isfinite(a.mean) || !std::isfinite(b.mean)) {
    throw Error(ErrorKind::kDomain, "means must be finite");
  }
  if (!(a.variance_of_mean >= 0.0) || !(b.variance_of_mean >= 0.0) ||
      !std::isfinite(a.variance_of_mean) ||
      !std::isfinite(b.variance_of_mean)) {
    throw Error(ErrorKind::kDomain,
                "variances of the mean must be finite and non-negative");
  }
  const double denom = a.variance_of_mean + b.variance_of_mean;
  const double diff = a.mean - b.mean;
  if (denom == 0.0) {
    if (diff == 0.0) return ZScore(0.0);
    throw Error(ErrorKind::kDegenerate,
                "both variances are zero but the means differ");
  }
  return ZScore(diff / std::sqrt(denom));
}

}  // namespace abmetrics

#endif  // ABMETRICS_STATCORE_HPP_
