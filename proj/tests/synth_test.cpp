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
#include "abmetrics/synth.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "abmetrics/evaluation.hpp"
#include "gtest/gtest.h"
#include "test_util.hpp"

namespace abmetrics {
namespace {

using testing::increasing;

const MetricId kM("m");

TEST(SynthAaParametricTest, EmptyAndDeterministic) {
  const VariantStats stats = {{kM, MetricStats{3.0, 0.2, std::nullopt}}};
  EXPECT_TRUE(synth_aa_parametric(stats, 0, 1).empty());
  EXPECT_EQ(synth_aa_parametric(stats, 50, 8), synth_aa_parametric(stats, 50, 8));
  EXPECT_NE(synth_aa_parametric(stats, 50, 8), synth_aa_parametric(stats, 50, 9));
  const auto records = synth_aa_parametric(stats, 3, 8);
  EXPECT_EQ(records[0].variant_a.at(kM).variance_of_mean, 0.4);
  EXPECT_EQ(records[2].experiment_id, "aa-000002");
  EXPECT_EQ(records[2].label, Label::kAa);
}

TEST(SynthAaParametricTest, NullZIsStandardNormal) {
  const VariantStats stats = {{kM, MetricStats{-2.0, 0.03, std::nullopt}}};
  const auto records = synth_aa_parametric(stats, 20000, 77);
  const DirectionMap dirs = {{kM, Direction::kIncrease}};
  double sum = 0.0, sq = 0.0;
  for (const auto& r : records) {
    const double z = oriented_z(r, kM, dirs).value();
    sum += z;
    sq += z * z;
  }
  const double n = static_cast<double>(records.size());
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(n));
  EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(SynthAaParametricTest, ZeroVarianceRejected) {
  const VariantStats stats = {{kM, MetricStats{1.0, 0.0, std::nullopt}}};
  try {
    synth_aa_parametric(stats, 5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

UserTable table_of(const std::vector<double>& values) {
  UserTable t;
  t.metrics = {kM};
  t.columns.resize(1);
  for (std::size_t i = 0; i < values.size(); ++i) {
    t.user_ids.push_back("u" + std::to_string(i));
    t.columns[0].push_back(values[i]);
  }
  return t;
}

TEST(SynthAaFromEventsTest, TwoUsersRejected) {
  try {
    synth_aa_from_events(table_of({1.0, 2.0}), 1, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
  EXPECT_THROW(synth_aa_from_events(table_of({1.0}), 1, 3), Error);
  EXPECT_THROW(synth_aa_from_events(table_of({1.0, 2.0, 3.0}), 1, 3), Error);
}

TEST(SynthAaFromEventsTest, IdenticalUsersGiveZeroZ) {
  const auto records = synth_aa_from_events(table_of({5.0, 5.0, 5.0, 5.0}), 10, 4);
  ASSERT_EQ(records.size(), 10u);
  const DirectionMap dirs = {{kM, Direction::kIncrease}};
  for (const auto& r : records) EXPECT_EQ(oriented_z(r, kM, dirs).value(), 0.0);
}

TEST(SynthAaFromEventsTest, HandComputedAggregation) {
  // Values 1, 3, 5, 9. For each possible pair (mean, var of mean) by hand:
  // var of mean = ((x - m)^2 + (y - m)^2) / (2 - 1) / 2.
  const std::map<std::set<double>, std::pair<double, double>> expected = {
      {{1, 3}, {2, 1}}, {{1, 5}, {3, 4}}, {{1, 9}, {5, 16}},
      {{3, 5}, {4, 1}}, {{3, 9}, {6, 9}}, {{5, 9}, {7, 4}}};
  const std::vector<double> values = {1, 3, 5, 9};
  const UserTable t = table_of(values);
  const auto records = synth_aa_from_events(t, 20, 12);
  for (std::size_t s = 0; s < records.size(); ++s) {
    const Split halves = split_users(4, 12, s);
    for (const auto& [half, stats] :
         {std::pair{halves.first, records[s].variant_a.at(kM)},
          std::pair{halves.second, records[s].variant_b.at(kM)}}) {
      std::set<double> members;
      for (std::size_t u : half) members.insert(values[u]);
      const auto [mean, var] = expected.at(members);
      EXPECT_EQ(stats.mean, mean);
      EXPECT_EQ(stats.variance_of_mean, var);
      EXPECT_EQ(stats.n, 2u);
    }
  }
}

TEST(SplitUsersTest, ExactPartition) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> size(2, 501);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = size(rng);
    const Split s = split_users(n, 99, static_cast<std::size_t>(trial));
    EXPECT_EQ(s.first.size(), (n + 1) / 2);
    EXPECT_EQ(s.second.size(), n / 2);
    std::vector<int> seen(n, 0);
    for (std::size_t u : s.first) ++seen[u];
    for (std::size_t u : s.second) ++seen[u];
    for (int c : seen) EXPECT_EQ(c, 1);
  }
  EXPECT_NE(split_users(100, 1, 0).first, split_users(100, 1, 1).first);
}

TEST(SynthAaFromEventsTest, TypeICalibrationOnGaussianUsers) {
  std::mt19937_64 rng(314);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> values(100000);
  for (double& v : values) v = n01(rng);
  const Corpus c(increasing({"m"}), synth_aa_from_events(table_of(values), 1000, 5));
  const double rate = *type_i_error(c, kM, 0.05).rate();
  EXPECT_NEAR(rate, 0.05, 3 * std::sqrt(0.05 * 0.95 / 1000));
}

TEST(ParseUserTableTest, ParsesAndReportsRows) {
  const UserTable t = parse_user_table("user_id,DAU,Skips\nu1,1,0.5\n\"u,2\",0,-1e-3\n");
  ASSERT_EQ(t.users(), 2u);
  EXPECT_EQ(t.user_ids[1], "u,2");
  EXPECT_EQ(t.columns[1][1], -1e-3);

  try {
    parse_user_table("user_id,DAU\nu1,1\nu2,abc\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse_user_table("id,DAU\nu1,1\n"), Error);
  EXPECT_THROW(parse_user_table("user_id,DAU\nu1,1,2\n"), Error);
  EXPECT_THROW(parse_user_table("user_id,DAU\nu1,1 \n"), Error);
  EXPECT_THROW(parse_user_table("user_id,DAU\nu1,1,000\n"), Error);
  EXPECT_THROW(parse_user_table(""), Error);
}

SynthConfig basic_config(Label label, double effect, std::size_t users) {
  SynthConfig c;
  c.n_experiments = 200;
  c.users_per_variant = users;
  c.label = label;
  c.metrics = {{MetricId("DAU"), Direction::kIncrease, 1.0, 2.0, effect},
               {MetricId("Skips"), Direction::kDecrease, 4.0, 1.0, -effect}};
  return c;
}

TEST(SynthCorpusTest, DeterministicAndThreadIndependent) {
  const SynthConfig cfg = basic_config(Label::kKnown, 0.1, 300);
  const std::string a = serialize_corpus(synth_corpus(cfg, 42).corpus);
  const std::string b = serialize_corpus(synth_corpus(cfg, 42).corpus);
  const std::string threaded = serialize_corpus(synth_corpus(cfg, 42, 7).corpus);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, threaded);
  EXPECT_NE(a, serialize_corpus(synth_corpus(cfg, 43).corpus));
}

TEST(SynthCorpusTest, ExperimentsUseIndependentStreams) {
  // The record at global index i does not depend on how many records come
  // before it in other cohorts.
  SynthConfig first = basic_config(Label::kAa, 0.0, 50);
  first.n_experiments = 3;
  SynthConfig second = basic_config(Label::kKnown, 0.2, 50);
  second.n_experiments = 2;
  const auto merged = synth_corpus(std::vector{first, second}, 5);
  SynthConfig five = basic_config(Label::kKnown, 0.2, 50);
  five.n_experiments = 5;
  const auto alone = synth_corpus(five, 5);
  EXPECT_EQ(merged.corpus.experiments()[4], alone.corpus.experiments()[4]);
  EXPECT_EQ(merged.manifest[0].true_effect[0].second, 0.0);
  EXPECT_EQ(merged.manifest[4].true_effect[0].second, 0.2);
}

TEST(SynthCorpusTest, AggregatesMatchConfig) {
  SynthConfig cfg = basic_config(Label::kKnown, 0.5, 4000);
  cfg.n_experiments = 1;
  const auto res = synth_corpus(cfg, 11);
  const auto& r = res.corpus.experiments()[0];
  EXPECT_EQ(r.preferred_variant, Variant::kA);
  const auto& a = r.variant_a.at(MetricId("DAU"));
  const auto& b = r.variant_b.at(MetricId("DAU"));
  EXPECT_EQ(a.n, 4000u);
  // Sample variance / n should be close to std^2 / n = 4 / 4000.
  EXPECT_NEAR(a.variance_of_mean, 1e-3, 1e-4);
  EXPECT_NEAR(a.mean - b.mean, 0.5, 5 * std::sqrt(2e-3));
}

TEST(SynthCorpusTest, NullCorpusTypeICalibrated) {
  SynthConfig cfg = basic_config(Label::kAa, 0.0, 200);
  cfg.n_experiments = 4000;
  const Corpus c = synth_corpus(cfg, 3, 4).corpus;
  const double rate = *type_i_error(c, MetricId("DAU"), 0.05).rate();
  EXPECT_NEAR(rate, 0.05, 3 * std::sqrt(0.05 * 0.95 / 4000));
}

TEST(SynthCorpusTest, DoublingUsersDoublesMedianSquaredZ) {
  SynthConfig small = basic_config(Label::kKnown, 0.2, 1000);  // delta = 0.1 std
  small.n_experiments = 1000;
  SynthConfig big = small;
  big.users_per_variant = 2000;
  const double ratio = median_squared_z(synth_corpus(big, 8, 4).corpus, MetricId("DAU")) /
                       median_squared_z(synth_corpus(small, 8, 4).corpus, MetricId("DAU"));
  EXPECT_NEAR(ratio, 2.0, 0.2);
}

TEST(SynthCorpusTest, CorrelationLowersBonferroniTypeI) {
  auto rate = [](double rho) {
    SynthConfig cfg;
    cfg.n_experiments = 12000;
    cfg.users_per_variant = 40;
    cfg.label = Label::kAa;
    cfg.correlation = rho;
    cfg.metrics = {{MetricId("a"), Direction::kIncrease, 0.0, 1.0, 0.0},
                   {MetricId("b"), Direction::kIncrease, 0.0, 1.0, 0.0},
                   {MetricId("c"), Direction::kIncrease, 0.0, 1.0, 0.0}};
    const Corpus corpus = synth_corpus(cfg, 21, 4).corpus;
    return *evaluate_rule(corpus, DecisionRule({MetricId("a"), MetricId("b"), MetricId("c")},
                                               0.05, Correction::kBonferroni))
                .type_i.rate();
  };
  EXPECT_LT(rate(0.9), rate(0.0));
}

TEST(SynthCorpusTest, AllClassesValidateClean) {
  SynthConfig inconclusive = basic_config(Label::kInconclusive, 0.05, 100);
  inconclusive.id_prefix = "inc";
  const auto res = synth_corpus(
      std::vector{basic_config(Label::kAa, 0.0, 100), basic_config(Label::kKnown, 0.1, 100),
                  inconclusive},
      17);
  EXPECT_TRUE(validate(res.corpus).empty());
  EXPECT_EQ(res.corpus.experiments().size(), 600u);
  EXPECT_EQ(res.corpus.experiments()[599].experiment_id, "inc-000599");
  EXPECT_EQ(res.manifest.size(), 600u);
}

TEST(SynthConfigTest, RejectsInvalid) {
  SynthConfig c = basic_config(Label::kAa, 0.0, 10);
  c.correlation = 1.0;
  EXPECT_THROW(check_config(c), Error);
  c = basic_config(Label::kAa, 0.0, 10);
  c.metrics[0].std_dev = 0.0;
  EXPECT_THROW(check_config(c), Error);
  c = basic_config(Label::kAa, 0.0, 1);
  EXPECT_THROW(check_config(c), Error);
  c = basic_config(Label::kAa, 0.0, 10);
  c.n_experiments = 0;
  EXPECT_THROW(check_config(c), Error);

  SynthConfig other = basic_config(Label::kKnown, 0.0, 10);
  other.metrics[1].direction = Direction::kIncrease;
  EXPECT_THROW(synth_corpus(std::vector{basic_config(Label::kAa, 0.0, 10), other}, 1), Error);
}

TEST(SynthConfigTest, ParsesDocumentShapes) {
  const auto single = nlohmann::json::parse(R"({
    "n_experiments": 3, "users_per_variant": 10, "label": "known",
    "metrics": [{"name": "DAU", "std": 1.5, "effect": 0.2}]})");
  const auto cohorts = parse_synth_config(single);
  ASSERT_EQ(cohorts.size(), 1u);
  EXPECT_EQ(cohorts[0].metrics[0].std_dev, 1.5);
  EXPECT_EQ(cohorts[0].metrics[0].direction, Direction::kIncrease);
  EXPECT_EQ(cohorts[0].id_prefix, "exp");

  const auto wrapped = nlohmann::json::parse(R"({"cohorts": [
    {"n_experiments": 1, "users_per_variant": 5, "label": "aa", "metrics": [{"name": "m", "std": 1}]},
    {"n_experiments": 1, "users_per_variant": 5, "label": "inconclusive", "material": false,
     "metrics": [{"name": "m", "std": 1}]}]})");
  EXPECT_EQ(parse_synth_config(wrapped).size(), 2u);

  for (const char* bad : {
           R"({"n_experiments": 3, "users_per_variant": 10, "label": "known", "metrics": [{"name": "m"}]})",
           R"({"n_experiments": -3, "users_per_variant": 10, "label": "known", "metrics": [{"name": "m", "std": 1}]})",
           R"({"n_experiments": 3, "users_per_variant": 10, "label": "hmm", "metrics": [{"name": "m", "std": 1}]})",
           R"({"n_experiments": 3, "users_per_variant": 10, "label": "aa", "extra": 1, "metrics": [{"name": "m", "std": 1}]})",
           R"({"cohorts": []})"}) {
    EXPECT_THROW(parse_synth_config(nlohmann::json::parse(bad)), Error) << bad;
  }
}

TEST(ManifestTest, OneLinePerExperiment) {
  SynthConfig cfg = basic_config(Label::kKnown, 0.25, 10);
  cfg.n_experiments = 2;
  std::ostringstream out;
  write_manifest(synth_corpus(cfg, 1).manifest, out);
  EXPECT_EQ(out.str(),
            "{\"experiment_id\":\"exp-000000\",\"true_effect\":{\"DAU\":0.25,\"Skips\":-0.25}}\n"
            "{\"experiment_id\":\"exp-000001\",\"true_effect\":{\"DAU\":0.25,\"Skips\":-0.25}}\n");
}

}  // namespace
}  // namespace abmetrics
