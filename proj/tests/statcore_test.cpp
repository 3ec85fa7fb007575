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
#include "abmetrics/statcore.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace abmetrics {
namespace {

using testing::oracle_phi;
using testing::oracle_quantile;

// Reference values computed with mpmath at 40 significant digits.
constexpr double kPhiAt19599640 = 0.975000000903557595697504894747364;
constexpr double kQuantile975 = 1.959963984540053855604430649826643;
constexpr double kBonferroniK3 = 2.393979799818509464759370711059352;
constexpr double kBonferroniK2 = 2.241402727604946747493186075410000;
constexpr double kBonferroniK4 = 2.497705474412374104800731789870000;
constexpr double kQuantile1em12 = -7.034483825301131932614176004484283;
constexpr double kPAt19599640 = 0.049999998192884808604990210505272;

TEST(PhiTest, Examples) {
  EXPECT_EQ(phi(0.0), 0.5);
  EXPECT_NEAR(phi(1.9599640), kPhiAt19599640, 1e-12);
  EXPECT_NEAR(phi(-1.0), 1.0 - phi(1.0), 1e-15);
}

TEST(PhiTest, MatchesSeriesOracleOnGrid) {
  for (int i = -1000; i <= 1000; ++i) {
    const double x = i / 100.0;
    EXPECT_NEAR(phi(x), static_cast<double>(oracle_phi(x)), 1e-12) << x;
  }
}

TEST(PhiTest, Monotone) {
  double prev = 0.0;
  for (int i = -4000; i <= 4000; ++i) {
    const double v = phi(i / 400.0);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(PhiTest, RejectsNonFinite) {
  EXPECT_THROW(phi(std::numeric_limits<double>::quiet_NaN()), Error);
  EXPECT_THROW(phi(std::numeric_limits<double>::infinity()), Error);
  try {
    phi(-std::numeric_limits<double>::infinity());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomain);
  }
}

TEST(InvPhiTest, Examples) {
  EXPECT_EQ(inv_phi(0.5), 0.0);
  EXPECT_NEAR(inv_phi(0.975), kQuantile975, 1e-9);
  EXPECT_NEAR(inv_phi(1.0 - 0.05 / 6.0), kBonferroniK3, 1e-9);
  EXPECT_NEAR(inv_phi(1e-12), kQuantile1em12, 1e-9);
}

TEST(InvPhiTest, MatchesBisectionOracleAcrossRange) {
  // Log-spaced in both tails from 1e-12 to 1/2.
  for (int i = 0; i <= 600; ++i) {
    const double lower = std::pow(10.0, -12.0 + 12.0 * i / 600.0) / 2.0;
    if (lower < 1e-12) continue;
    const double upper = 1.0 - lower;
    EXPECT_NEAR(inv_phi(lower), static_cast<double>(oracle_quantile(lower)), 1e-9)
        << lower;
    EXPECT_NEAR(inv_phi(upper), static_cast<double>(oracle_quantile(upper)), 1e-9)
        << upper;
  }
}

TEST(InvPhiTest, RoundTripOnGrid) {
  for (int i = 0; i <= 1200; ++i) {
    const double x = -6.0 + 12.0 * i / 1200.0;
    EXPECT_LT(std::abs(inv_phi(phi(x)) - x), 1e-8) << x;
  }
}

TEST(InvPhiTest, ExtendedPrecisionRoundTrip) {
  for (int i = 0; i <= 1200; ++i) {
    const long double x = -6.0L + 12.0L * i / 1200.0L;
    EXPECT_LT(std::abs(inv_phi(phi(x)) - x), 1e-10L);
  }
}

TEST(InvPhiTest, DomainErrors) {
  EXPECT_THROW(inv_phi(0.0), Error);
  EXPECT_THROW(inv_phi(1.0), Error);
  EXPECT_THROW(inv_phi(-0.2), Error);
  EXPECT_THROW(inv_phi(std::numeric_limits<double>::quiet_NaN()), Error);
}

TEST(TwoSidedPTest, Examples) {
  EXPECT_EQ(two_sided_p(ZScore(0.0)).value(), 1.0);
  EXPECT_NEAR(two_sided_p(ZScore(1.9599640)).value(), kPAt19599640, 1e-12);
  EXPECT_EQ(two_sided_p(ZScore(2.5)).value(), two_sided_p(ZScore(-2.5)).value());
}

TEST(TwoSidedPTest, ClampedAwayFromZero) {
  EXPECT_EQ(two_sided_p(ZScore(60.0)).value(), kMinPValue);
  EXPECT_GT(two_sided_p(ZScore(-1e6)).value(), 0.0);
}

TEST(TwoSidedPTest, ThresholdConsistency) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> z_dist(-5.0, 5.0);
  std::uniform_real_distribution<double> a_dist(1e-4, 0.5);
  for (int i = 0; i < 20000; ++i) {
    const double z = z_dist(rng);
    const double alpha = a_dist(rng);
    const double c = critical_value(alpha, 1);
    if (std::abs(std::abs(z) - c) < 1e-9) continue;
    EXPECT_EQ(std::abs(z) > c, two_sided_p(ZScore(z)).value() < alpha)
        << "z=" << z << " alpha=" << alpha;
  }
}

TEST(CriticalValueTest, Examples) {
  EXPECT_NEAR(critical_value(0.05, 1), kQuantile975, 1e-9);
  EXPECT_NEAR(critical_value(0.05, 3), kBonferroniK3, 1e-9);
  EXPECT_NEAR(critical_value(0.05, 2), kBonferroniK2, 1e-9);
  EXPECT_NEAR(critical_value(0.05, 4), kBonferroniK4, 1e-9);
  for (double a : {0.001, 0.01, 0.05, 0.1, 0.3, 0.9}) {
    EXPECT_EQ(critical_value(a, 1), inv_phi(1.0 - a / 2.0));
  }
}

TEST(CriticalValueTest, StrictlyMonotone) {
  for (double a : {0.01, 0.05, 0.2}) {
    double prev = 0.0;
    for (std::size_t k = 1; k <= 200; ++k) {
      const double c = critical_value(a, k);
      EXPECT_GT(c, prev) << "k=" << k;
      prev = c;
    }
  }
  EXPECT_GT(critical_value(0.01, 2), critical_value(0.05, 2));
  EXPECT_GT(critical_value(0.05, 2), critical_value(0.10, 2));
}

TEST(CriticalValueTest, DomainErrors) {
  EXPECT_THROW(critical_value(0.0, 1), Error);
  EXPECT_THROW(critical_value(1.0, 1), Error);
  EXPECT_THROW(critical_value(1.5, 1), Error);
  EXPECT_THROW(critical_value(0.05, 0), Error);
}

TEST(ZScoreTest, Examples) {
  const MetricStats a{1.2, 0.005, std::nullopt};
  const MetricStats b{1.0, 0.005, std::nullopt};
  EXPECT_NEAR(z_score(a, b).value(), 2.0, 1e-12);
  EXPECT_EQ(z_score(a, a).value(), 0.0);
  EXPECT_NEAR(z_score(b, a).value(), -2.0, 1e-12);
}

TEST(ZScoreTest, DegenerateDenominator) {
  const MetricStats a{1.0, 0.0, std::nullopt};
  const MetricStats b{2.0, 0.0, std::nullopt};
  EXPECT_EQ(z_score(a, a).value(), 0.0);
  try {
    z_score(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(ZScoreTest, RejectsNegativeVariance) {
  EXPECT_THROW(z_score({1.0, -0.1, std::nullopt}, {1.0, 0.1, std::nullopt}), Error);
}

TEST(ZScoreTest, RejectsNonFiniteConstruction) {
  EXPECT_THROW(ZScore(std::numeric_limits<double>::infinity()), Error);
  EXPECT_THROW(ZScore(std::numeric_limits<double>::quiet_NaN()), Error);
  EXPECT_THROW(PValue(0.0), Error);
  EXPECT_THROW(PValue(1.5), Error);
}

TEST(ZScoreTest, AntisymmetryAndScaleInvariance) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> mean(0.0, 10.0);
  std::uniform_real_distribution<double> var(1e-6, 5.0);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int i = 0; i < 5000; ++i) {
    const MetricStats a{mean(rng), var(rng), std::nullopt};
    const MetricStats b{mean(rng), var(rng), std::nullopt};
    const double z = z_score(a, b).value();
    EXPECT_EQ(z, -z_score(b, a).value());

    const double c = scale(rng);
    const MetricStats sa{c * a.mean, c * c * a.variance_of_mean, std::nullopt};
    const MetricStats sb{c * b.mean, c * c * b.variance_of_mean, std::nullopt};
    const double zs = z_score(sa, sb).value();
    EXPECT_LE(std::abs(zs - z), 1e-12 * std::max(1.0, std::abs(z)));
  }
}

}  // namespace
}  // namespace abmetrics
