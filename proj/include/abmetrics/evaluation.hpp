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
#ifndef ABMETRICS_EVALUATION_HPP_
#define ABMETRICS_EVALUATION_HPP_

// Error-rate estimators, metric-set decision rules and power comparison.
//
// Experiment classes:
//   aa                      -> type-I denominator
//   known + material incl.  -> type-II denominator
//   known                   -> type-III denominator
// All comparisons against the critical value are strict, so a statistic
// exactly on the threshold is neither a hit nor a miss.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abmetrics/corpus.hpp"
#include "abmetrics/error.hpp"
#include "abmetrics/statcore.hpp"
#include "json.hpp"

namespace abmetrics {

enum class Correction { kNone, kBonferroni };
enum class Decision { kPositive, kNegative, kNone };

inline std::string_view to_string(Correction c) {
  return c == Correction::kNone ? "none" : "bonferroni";
}

inline std::optional<Correction> parse_correction(std::string_view s) {
  if (s == "none") return Correction::kNone;
  if (s == "bonferroni") return Correction::kBonferroni;
  return std::nullopt;
}

inline std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::kPositive: return "positive";
    case Decision::kNegative: return "negative";
    case Decision::kNone: return "none";
  }
  return "";
}

// Declares an experiment positive when any metric in the set is significant
// at the (optionally Bonferroni-corrected) per-metric threshold.
class DecisionRule {
 public:
  DecisionRule(std::vector<MetricId> metrics, double alpha,
               Correction correction)
      : metrics_(std::move(metrics)), alpha_(alpha), correction_(correction) {
    if (metrics_.empty()) {
      throw Error(ErrorKind::kArity, "a decision rule needs at least one metric");
    }
    for (std::size_t i = 0; i < metrics_.size(); ++i) {
      for (std::size_t j = i + 1; j < metrics_.size(); ++j) {
        if (metrics_[i] == metrics_[j]) {
          throw Error(ErrorKind::kDuplicateId,
                      "metric '" + metrics_[i].str() + "' listed twice in rule");
        }
      }
    }
    critical_ = critical_value(alpha_, tests());
  }

  static DecisionRule single(MetricId metric, double alpha) {
    return DecisionRule({std::move(metric)}, alpha, Correction::kNone);
  }

  const std::vector<MetricId>& metrics() const noexcept { return metrics_; }
  double alpha() const noexcept { return alpha_; }
  Correction correction() const noexcept { return correction_; }

  // Number of tests the significance level is split over.
  std::size_t tests() const noexcept {
    return correction_ == Correction::kBonferroni ? metrics_.size() : 1;
  }
  double critical() const noexcept { return critical_; }

  std::string label() const {
    std::string out;
    for (const auto& m : metrics_) {
      if (!out.empty()) out += '+';
      out += m.str();
    }
    return out;
  }

 private:
  std::vector<MetricId> metrics_;
  double alpha_;
  Correction correction_;
  double critical_;
};

struct RateEstimate {
  std::size_t numerator = 0;
  std::size_t denominator = 0;

  bool estimable() const noexcept { return denominator > 0; }
  std::optional<double> rate() const {
    if (!estimable()) return std::nullopt;
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  friend bool operator==(const RateEstimate&, const RateEstimate&) = default;
};

struct ExperimentRow {
  std::string experiment_id;
  Label label;
  bool material;
  std::vector<double> z;  // oriented, one per rule metric
  std::vector<double> p;  // uncorrected two-sided
  Decision decision;
};

struct ErrorReport {
  DecisionRule rule;
  RateEstimate type_i;
  RateEstimate type_ii;
  RateEstimate type_iii;
  std::vector<ExperimentRow> rows;
};

struct PowerComparison {
  std::string target;
  MetricId baseline;
  std::vector<std::pair<std::string, double>> ratios;  // (experiment_id, ratio)
  double median_relative_squared_z = 0.0;
  std::size_t excluded_count = 0;
};

inline constexpr double kBaselineDegeneracyEpsilon = 1e-12;

namespace detail {

inline bool in_type_i(const ExperimentRecord& r) { return r.label == Label::kAa; }
inline bool in_type_ii(const ExperimentRecord& r) {
  return r.label == Label::kKnown ||
         (r.label == Label::kInconclusive && r.material);
}
inline bool in_type_iii(const ExperimentRecord& r) {
  return r.label == Label::kKnown;
}

inline void require_metric(const Corpus& corpus, const MetricId& m) {
  if (!corpus.has_metric(m)) {
    std::string available;
    for (const auto& info : corpus.metrics()) {
      if (!available.empty()) available += ", ";
      available += info.name.str();
    }
    throw Error(ErrorKind::kMissingMetric, "unknown metric '" + m.str() +
                                               "'; available: " + available);
  }
}

inline double median(std::vector<double> values) {
  const std::size_t n = values.size();
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return lower + (upper - lower) / 2;
}

template <class InClass, class Hit>
RateEstimate count_rate(const Corpus& corpus, const MetricId& metric,
                        InClass in_class, Hit hit) {
  require_metric(corpus, metric);
  RateEstimate out;
  for (const auto& r : corpus.experiments()) {
    if (!in_class(r)) continue;
    ++out.denominator;
    if (hit(oriented_z(r, metric, corpus.directions()).value())) {
      ++out.numerator;
    }
  }
  return out;
}

inline RateEstimate require_estimable(RateEstimate r, std::string_view what) {
  if (!r.estimable()) {
    throw Error(ErrorKind::kInestimable,
                std::string(what) + ": the experiment class is empty");
  }
  return r;
}

}  // namespace detail

// Share of aa records with |z| above the uncorrected threshold.
inline RateEstimate type_i_error(const Corpus& corpus, const MetricId& metric,
                                 double alpha) {
  const double c = critical_value(alpha, 1);
  return detail::require_estimable(
      detail::count_rate(corpus, metric, detail::in_type_i,
                         [c](double z) { return std::abs(z) > c; }),
      "type-I error");
}

// Share of material known/inconclusive records with |z| below the threshold.
inline RateEstimate type_ii_error(const Corpus& corpus, const MetricId& metric,
                                  double alpha) {
  const double c = critical_value(alpha, 1);
  return detail::require_estimable(
      detail::count_rate(corpus, metric, detail::in_type_ii,
                         [c](double z) { return std::abs(z) < c; }),
      "type-II error");
}

// Share of known records where the metric is significant in the wrong
// direction.
inline RateEstimate type_iii_error(const Corpus& corpus,
                                   const MetricId& metric, double alpha) {
  const double c = critical_value(alpha, 1);
  return detail::require_estimable(
      detail::count_rate(corpus, metric, detail::in_type_iii,
                         [c](double z) { return z < -c; }),
      "type-III error");
}

inline Decision decide(std::span<const double> z, const DecisionRule& rule) {
  if (z.size() != rule.metrics().size()) {
    throw Error(ErrorKind::kArity,
                "rule has " + std::to_string(rule.metrics().size()) +
                    " metrics but " + std::to_string(z.size()) +
                    " z-scores were given");
  }
  const double c = rule.critical();
  bool negative = false;
  for (double v : z) {
    if (v > c) return Decision::kPositive;
    if (v < -c) negative = true;
  }
  return negative ? Decision::kNegative : Decision::kNone;
}

// max|z| rescaled by critical(alpha, 1) / critical(alpha, k), so a set pays
// its correction inside the score. Equals |z| when k == 1.
inline double normalized_set_z(std::span<const double> z, double alpha,
                               std::size_t k) {
  if (z.empty()) {
    throw Error(ErrorKind::kArity, "normalized_set_z needs at least one z");
  }
  double max_abs = 0.0;
  for (double v : z) max_abs = std::max(max_abs, std::abs(v));
  const double scale = critical_value(alpha, 1) / critical_value(alpha, k);
  return max_abs * scale;
}

inline ErrorReport evaluate_rule(const Corpus& corpus,
                                 const DecisionRule& rule) {
  for (const auto& m : rule.metrics()) detail::require_metric(corpus, m);
  ErrorReport report{rule, {}, {}, {}, {}};
  report.rows.reserve(corpus.experiments().size());
  const double c = rule.critical();

  for (const auto& r : corpus.experiments()) {
    ExperimentRow row{r.experiment_id, r.label, r.material, {}, {}, {}};
    row.z.reserve(rule.metrics().size());
    for (const auto& m : rule.metrics()) {
      const ZScore z = oriented_z(r, m, corpus.directions());
      row.z.push_back(z.value());
      row.p.push_back(two_sided_p(z).value());
    }
    row.decision = decide(row.z, rule);
    const bool all_below = std::all_of(row.z.begin(), row.z.end(),
                                       [c](double v) { return std::abs(v) < c; });

    if (detail::in_type_i(r)) {
      ++report.type_i.denominator;
      if (row.decision != Decision::kNone) ++report.type_i.numerator;
    }
    if (detail::in_type_ii(r)) {
      ++report.type_ii.denominator;
      if (all_below) ++report.type_ii.numerator;
    }
    if (detail::in_type_iii(r)) {
      ++report.type_iii.denominator;
      if (row.decision == Decision::kNegative) ++report.type_iii.numerator;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

// Median over material known/inconclusive records of (target / baseline)^2
// in |z|. Under z^2 proportional to n this is the sample-size factor the
// target saves relative to the baseline at equal power.
inline PowerComparison power_comparison(const Corpus& corpus,
                                        const DecisionRule& target,
                                        const MetricId& baseline) {
  detail::require_metric(corpus, baseline);
  for (const auto& m : target.metrics()) detail::require_metric(corpus, m);

  PowerComparison out{target.label(), baseline, {}, 0.0, 0};
  std::vector<double> z;
  std::vector<double> values;
  for (const auto& r : corpus.experiments()) {
    if (!detail::in_type_ii(r)) continue;
    const double base =
        std::abs(oriented_z(r, baseline, corpus.directions()).value());
    if (base < kBaselineDegeneracyEpsilon) {
      ++out.excluded_count;
      continue;
    }
    z.clear();
    for (const auto& m : target.metrics()) {
      z.push_back(oriented_z(r, m, corpus.directions()).value());
    }
    const double score = normalized_set_z(z, target.alpha(), target.tests());
    const double ratio = (score / base) * (score / base);
    out.ratios.emplace_back(r.experiment_id, ratio);
    values.push_back(ratio);
  }
  if (values.empty()) {
    throw Error(ErrorKind::kInestimable,
                "power comparison against '" + baseline.str() +
                    "': no material known/inconclusive record with a "
                    "non-degenerate baseline");
  }
  out.median_relative_squared_z = detail::median(std::move(values));
  return out;
}

inline PowerComparison power_comparison(const Corpus& corpus,
                                        const MetricId& target,
                                        const MetricId& baseline,
                                        double alpha) {
  return power_comparison(corpus, DecisionRule::single(target, alpha), baseline);
}

// Median z^2 of one metric over material known/inconclusive records. Used to
// compare the same metric across corpora of different sizes.
inline double median_squared_z(const Corpus& corpus, const MetricId& metric) {
  detail::require_metric(corpus, metric);
  std::vector<double> values;
  for (const auto& r : corpus.experiments()) {
    if (!detail::in_type_ii(r)) continue;
    const double z = oriented_z(r, metric, corpus.directions()).value();
    values.push_back(z * z);
  }
  if (values.empty()) {
    throw Error(ErrorKind::kInestimable,
                "median z^2: no material known/inconclusive records");
  }
  return detail::median(std::move(values));
}

// ---------------------------------------------------------------------------
// Evaluation-result document (schema_version 1).

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kSetScoreName =
    "max_abs_z_scaled_by_uncorrected_over_corrected_critical_value";

struct TargetResult {
  std::string kind;  // "metric" or "rule"
  ErrorReport report;
  std::optional<PowerComparison> power;
  std::string power_error;  // set when power is absent
};

struct Evaluation {
  double alpha;
  MetricId baseline;
  std::vector<TargetResult> targets;

  bool partial() const {
    return std::any_of(targets.begin(), targets.end(), [](const TargetResult& t) {
      return !t.power || !t.report.type_i.estimable() ||
             !t.report.type_ii.estimable() || !t.report.type_iii.estimable();
    });
  }
};

inline TargetResult evaluate_target(const Corpus& corpus,
                                    const DecisionRule& rule,
                                    const MetricId& baseline) {
  TargetResult t{rule.metrics().size() == 1 ? "metric" : "rule",
                 evaluate_rule(corpus, rule), std::nullopt, {}};
  try {
    t.power = power_comparison(corpus, rule, baseline);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kInestimable) throw;
    t.power_error = e.what();
  }
  return t;
}

// One single-metric target per metric, then the whole set as one rule when
// more than one metric is given.
inline Evaluation evaluate(const Corpus& corpus,
                           const std::vector<MetricId>& metrics, double alpha,
                           Correction correction, const MetricId& baseline) {
  if (metrics.empty()) {
    throw Error(ErrorKind::kArity, "at least one metric is required");
  }
  critical_value(alpha, 1);  // validates alpha
  detail::require_metric(corpus, baseline);
  Evaluation out{alpha, baseline, {}};
  for (const auto& m : metrics) {
    out.targets.push_back(
        evaluate_target(corpus, DecisionRule::single(m, alpha), baseline));
  }
  if (metrics.size() > 1) {
    out.targets.push_back(evaluate_target(
        corpus, DecisionRule(metrics, alpha, correction), baseline));
  }
  return out;
}

namespace detail {

inline nlohmann::ordered_json rate_json(const RateEstimate& r) {
  nlohmann::ordered_json j;
  j["numerator"] = r.numerator;
  j["denominator"] = r.denominator;
  if (auto rate = r.rate()) {
    j["rate"] = *rate;
  } else {
    j["rate"] = nullptr;
  }
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const Evaluation& ev) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["alpha"] = ev.alpha;
  doc["baseline"] = ev.baseline.str();
  doc["set_score"] = kSetScoreName;
  doc["targets"] = ordered_json::array();
  for (const auto& t : ev.targets) {
    const DecisionRule& rule = t.report.rule;
    ordered_json j;
    j["label"] = rule.label();
    j["kind"] = t.kind;
    j["metrics"] = ordered_json::array();
    for (const auto& m : rule.metrics()) j["metrics"].push_back(m.str());
    j["correction"] = to_string(rule.correction());
    j["tests"] = rule.tests();
    j["critical_value"] = rule.critical();
    j["type_i"] = detail::rate_json(t.report.type_i);
    j["type_ii"] = detail::rate_json(t.report.type_ii);
    j["type_iii"] = detail::rate_json(t.report.type_iii);

    ordered_json power;
    power["baseline"] = ev.baseline.str();
    if (t.power) {
      power["median_relative_squared_z"] = t.power->median_relative_squared_z;
      power["included"] = t.power->ratios.size();
      power["excluded"] = t.power->excluded_count;
      power["ratios"] = ordered_json::array();
      for (const auto& [id, ratio] : t.power->ratios) {
        ordered_json r;
        r["experiment_id"] = id;
        r["ratio"] = ratio;
        power["ratios"].push_back(std::move(r));
      }
    } else {
      power["median_relative_squared_z"] = nullptr;
      power["included"] = 0;
      power["excluded"] = 0;
      power["error"] = t.power_error;
    }
    j["power"] = std::move(power);

    j["per_experiment"] = ordered_json::array();
    for (const auto& row : t.report.rows) {
      ordered_json r;
      r["experiment_id"] = row.experiment_id;
      r["label"] = to_string(row.label);
      r["material"] = row.material;
      ordered_json z = ordered_json::object();
      ordered_json p = ordered_json::object();
      for (std::size_t i = 0; i < rule.metrics().size(); ++i) {
        z[rule.metrics()[i].str()] = row.z[i];
        p[rule.metrics()[i].str()] = row.p[i];
      }
      r["z"] = std::move(z);
      r["p"] = std::move(p);
      r["decision"] = to_string(row.decision);
      j["per_experiment"].push_back(std::move(r));
    }
    doc["targets"].push_back(std::move(j));
  }
  return doc;
}

}  // namespace abmetrics

#endif  // ABMETRICS_EVALUATION_HPP_
