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
#ifndef ABMETRICS_SYNTH_HPP_
#define ABMETRICS_SYNTH_HPP_

// Synthetic experiments with known ground truth.
//
// Three generators:
//   synth_aa_parametric   null records drawn from given aggregate statistics
//   synth_aa_from_events  null records from random 50/50 splits of real users
//   synth_corpus          user-level Gaussian simulation of whole corpora
// Experiment i always draws from its own stream (seed, purpose, i), so
// output is identical whether experiments are generated serially or in
// parallel.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>
#include <vector>

#include "abmetrics/corpus.hpp"
#include "abmetrics/csv.hpp"
#include "abmetrics/error.hpp"
#include "abmetrics/random.hpp"
#include "abmetrics/statcore.hpp"
#include "json.hpp"

namespace abmetrics {

namespace detail {

inline std::string indexed_id(const std::string& prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return prefix + "-" + buf;
}

// Runs body(i) for i in [0, count) over `threads` workers with a static
// partition. Results must be written by index.
template <class Body>
void for_each_index(std::size_t count, unsigned threads, Body body) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> workers;
  const std::size_t chunk = (count + threads - 1) / threads;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parametric A/A.

// Each record draws both halves' means independently from
// Normal(mean, 2 * variance_of_mean) and reports 2 * variance_of_mean as each
// half's variance of the mean, so the null z is exactly standard normal.
inline std::vector<ExperimentRecord> synth_aa_parametric(
    const VariantStats& stats, std::size_t count, std::uint64_t seed,
    const std::string& id_prefix = "aa") {
  for (const auto& [metric, s] : stats) {
    if (!(s.variance_of_mean > 0.0) || !std::isfinite(s.variance_of_mean) ||
        !std::isfinite(s.mean)) {
      throw Error(ErrorKind::kDegenerate,
                  "parametric A/A needs a positive finite variance_of_mean for '" +
                      metric.str() + "'");
    }
  }
  if (count > 0 && stats.empty()) {
    throw Error(ErrorKind::kDegenerate, "parametric A/A needs at least one metric");
  }
  std::vector<ExperimentRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng(seed, StreamPurpose::kParametricAa, i);
    ExperimentRecord r;
    r.experiment_id = detail::indexed_id(id_prefix, i);
    r.label = Label::kAa;
    for (const auto& [metric, s] : stats) {
      const double half_var = 2.0 * s.variance_of_mean;
      const double sd = std::sqrt(half_var);
      r.variant_a.emplace(metric, MetricStats{s.mean + sd * rng.normal(), half_var, std::nullopt});
      r.variant_b.emplace(metric, MetricStats{s.mean + sd * rng.normal(), half_var, std::nullopt});
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Split-resampling A/A from a user-level table.

struct UserTable {
  std::vector<MetricId> metrics;
  std::vector<std::string> user_ids;
  std::vector<std::vector<double>> columns;  // columns[m][user]

  std::size_t users() const noexcept { return user_ids.size(); }
};

// CSV with header `user_id,<metric1>,...`. Row numbers in errors are
// 1-based file lines.
inline UserTable parse_user_table(std::istream& in) {
  UserTable table;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = csv::split(line);
    if (!fields) {
      throw Error(ErrorKind::kParse, "unterminated quoted field", line_no);
    }
    if (header) {
      if (fields->size() < 2 || (*fields)[0] != "user_id") {
        throw Error(ErrorKind::kParse,
                    "header must be user_id followed by at least one metric",
                    line_no);
      }
      std::set<std::string> seen;
      for (std::size_t i = 1; i < fields->size(); ++i) {
        if (!seen.insert((*fields)[i]).second) {
          throw Error(ErrorKind::kParse,
                      "duplicate metric column '" + (*fields)[i] + "'", line_no);
        }
        table.metrics.emplace_back((*fields)[i]);
      }
      table.columns.resize(table.metrics.size());
      header = false;
      continue;
    }
    if (fields->size() != table.metrics.size() + 1) {
      throw Error(ErrorKind::kParse,
                  "expected " + std::to_string(table.metrics.size() + 1) +
                      " fields, got " + std::to_string(fields->size()),
                  line_no);
    }
    table.user_ids.push_back((*fields)[0]);
    for (std::size_t m = 0; m < table.metrics.size(); ++m) {
      const std::string& cell = (*fields)[m + 1];
      double value = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (cell.empty() || ec != std::errc() || ptr != last ||
          !std::isfinite(value)) {
        throw Error(ErrorKind::kParse,
                    "non-numeric value '" + cell + "' in column '" +
                        table.metrics[m].str() + "'",
                    line_no);
      }
      table.columns[m].push_back(value);
    }
  }
  if (header) throw Error(ErrorKind::kParse, "user table is empty", 1);
  return table;
}

inline UserTable parse_user_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_user_table(in);
}

struct Split {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

// Seeded Fisher-Yates permutation cut into halves; with an odd count the
// extra user goes to the first half.
inline Split split_users(std::size_t users, std::uint64_t seed,
                         std::size_t split_index) {
  std::vector<std::size_t> perm(users);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RandomStream rng(seed, StreamPurpose::kSplitAa, split_index);
  for (std::size_t i = users; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  const std::size_t cut = (users + 1) / 2;
  Split s;
  s.first.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cut));
  s.second.assign(perm.begin() + static_cast<std::ptrdiff_t>(cut), perm.end());
  return s;
}

// Mean and variance of the mean (sample variance / size) of a subset.
inline MetricStats aggregate(const std::vector<double>& column,
                             const std::vector<std::size_t>& rows) {
  const auto n = static_cast<double>(rows.size());
  double sum = 0.0;
  for (std::size_t r : rows) sum += column[r];
  const double mean = sum / n;
  double ss = 0.0;
  for (std::size_t r : rows) {
    const double d = column[r] - mean;
    ss += d * d;
  }
  return MetricStats{mean, ss / (n - 1.0) / n, rows.size()};
}

inline std::vector<ExperimentRecord> synth_aa_from_events(
    const UserTable& table, std::size_t splits, std::uint64_t seed,
    const std::string& id_prefix = "aa") {
  if (table.users() < 2) {
    throw Error(ErrorKind::kDegenerate, "split resampling needs at least 2 users");
  }
  if (table.users() / 2 < 2) {
    throw Error(ErrorKind::kDegenerate,
                "each half needs at least 2 users for a sample variance; got " +
                    std::to_string(table.users()) + " users");
  }
  std::vector<ExperimentRecord> out;
  out.reserve(splits);
  for (std::size_t s = 0; s < splits; ++s) {
    const Split halves = split_users(table.users(), seed, s);
    ExperimentRecord r;
    r.experiment_id = detail::indexed_id(id_prefix, s);
    r.label = Label::kAa;
    for (std::size_t m = 0; m < table.metrics.size(); ++m) {
      r.variant_a.emplace(table.metrics[m], aggregate(table.columns[m], halves.first));
      r.variant_b.emplace(table.metrics[m], aggregate(table.columns[m], halves.second));
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ground-truth corpora.

struct SynthMetric {
  MetricId name;
  Direction direction = Direction::kIncrease;
  double mean = 0.0;     // per-user mean in control
  double std_dev = 1.0;  // per-user standard deviation
  double effect = 0.0;   // absolute shift of the treatment per-user mean
};

// One cohort of experiments sharing a label and effect model. The treatment
// is always variant A; known records prefer A.
struct SynthConfig {
  std::size_t n_experiments = 0;
  std::size_t users_per_variant = 0;
  std::vector<SynthMetric> metrics;
  Label label = Label::kKnown;
  bool material = true;
  double correlation = 0.0;  // equicorrelation through one shared factor
  std::string id_prefix = "exp";
};

struct ManifestEntry {
  std::string experiment_id;
  std::vector<std::pair<MetricId, double>> true_effect;
};

struct SynthResult {
  Corpus corpus;
  std::vector<ManifestEntry> manifest;
};

namespace detail {

[[noreturn]] inline void config_domain_error(const std::string& msg) {
  throw Error(ErrorKind::kDomain, "synth config: " + msg);
}

[[noreturn]] inline void config_schema_error(const std::string& msg) {
  throw Error(ErrorKind::kSchema, "synth config: " + msg);
}

}  // namespace detail

inline void check_config(const SynthConfig& c) {
  if (c.n_experiments == 0) detail::config_domain_error("n_experiments must be positive");
  if (c.users_per_variant < 2) detail::config_domain_error("users_per_variant must be at least 2");
  if (c.metrics.empty()) detail::config_domain_error("at least one metric is required");
  if (!(c.correlation >= 0.0 && c.correlation < 1.0)) {
    detail::config_domain_error("correlation must lie in [0, 1)");
  }
  if (c.label != Label::kInconclusive && !c.material) {
    detail::config_domain_error("material=false is only allowed with label 'inconclusive'");
  }
  std::set<MetricId> names;
  for (const auto& m : c.metrics) {
    if (!names.insert(m.name).second) detail::config_domain_error("metric '" + m.name.str() + "' listed twice");
    if (!(m.std_dev > 0.0) || !std::isfinite(m.std_dev)) {
      detail::config_domain_error("std of '" + m.name.str() + "' must be positive");
    }
    if (!std::isfinite(m.mean) || !std::isfinite(m.effect)) {
      detail::config_domain_error("mean and effect of '" + m.name.str() + "' must be finite");
    }
  }
}

namespace detail {

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  MetricStats stats() const {
    const auto nn = static_cast<double>(n);
    return MetricStats{mean, m2 / (nn - 1.0) / nn, n};
  }
};

inline ExperimentRecord simulate_experiment(const SynthConfig& c,
                                            std::uint64_t seed,
                                            std::size_t index) {
  RandomStream rng(seed, StreamPurpose::kSynthCorpus, index);
  const double shared = std::sqrt(c.correlation);
  const double own = std::sqrt(1.0 - c.correlation);
  const std::size_t k = c.metrics.size();
  std::vector<Welford> acc(k);

  ExperimentRecord r;
  r.experiment_id = indexed_id(c.id_prefix, index);
  r.label = c.label;
  r.material = c.material;
  if (c.label == Label::kKnown) r.preferred_variant = Variant::kA;

  for (int variant = 0; variant < 2; ++variant) {
    const bool treated = variant == 0;
    std::fill(acc.begin(), acc.end(), Welford{});
    for (std::size_t u = 0; u < c.users_per_variant; ++u) {
      const double factor = c.correlation > 0.0 ? rng.normal() : 0.0;
      for (std::size_t m = 0; m < k; ++m) {
        const SynthMetric& metric = c.metrics[m];
        const double noise = shared * factor + own * rng.normal();
        acc[m].add(metric.mean + (treated ? metric.effect : 0.0) +
                   metric.std_dev * noise);
      }
    }
    VariantStats& target = treated ? r.variant_a : r.variant_b;
    for (std::size_t m = 0; m < k; ++m) {
      target.emplace(c.metrics[m].name, acc[m].stats());
    }
  }
  return r;
}

}  // namespace detail

// Cohorts are concatenated in order; experiment indices (and so streams and
// ids) run globally across cohorts. All cohorts must declare the same metric
// names and directions.
inline SynthResult synth_corpus(const std::vector<SynthConfig>& cohorts,
                                std::uint64_t seed, unsigned threads = 1) {
  if (cohorts.empty()) {
    throw Error(ErrorKind::kDomain, "synth config: no cohorts");
  }
  for (const auto& c : cohorts) check_config(c);
  std::vector<MetricInfo> metrics;
  for (const auto& m : cohorts.front().metrics) metrics.push_back({m.name, m.direction});
  for (const auto& c : cohorts) {
    std::vector<MetricInfo> mine;
    for (const auto& m : c.metrics) mine.push_back({m.name, m.direction});
    if (mine != metrics) {
      throw Error(ErrorKind::kDomain,
                  "synth config: all cohorts must declare the same metrics in "
                  "the same order with the same directions");
    }
  }

  std::vector<std::pair<const SynthConfig*, std::size_t>> plan;
  for (const auto& c : cohorts) {
    for (std::size_t i = 0; i < c.n_experiments; ++i) plan.emplace_back(&c, plan.size());
  }
  std::vector<ExperimentRecord> records(plan.size());
  detail::for_each_index(plan.size(), threads, [&](std::size_t i) {
    records[i] = detail::simulate_experiment(*plan[i].first, seed, plan[i].second);
  });

  std::vector<ManifestEntry> manifest;
  manifest.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    ManifestEntry e{records[i].experiment_id, {}};
    for (const auto& m : plan[i].first->metrics) e.true_effect.emplace_back(m.name, m.effect);
    manifest.push_back(std::move(e));
  }
  return SynthResult{Corpus(std::move(metrics), std::move(records)),
                     std::move(manifest)};
}

inline SynthResult synth_corpus(const SynthConfig& config, std::uint64_t seed,
                                unsigned threads = 1) {
  return synth_corpus(std::vector<SynthConfig>{config}, seed, threads);
}

// Config document: either one cohort object or {"cohorts":[...]} / a bare
// array of cohort objects. Cohort fields:
//   n_experiments, users_per_variant, label, material?, correlation?,
//   id_prefix?, metrics: [{name, direction?, mean?, std, effect?}]
inline std::vector<SynthConfig> parse_synth_config(const nlohmann::json& doc) {
  using nlohmann::json;
  auto cohort = [&](const json& j) {
    if (!j.is_object()) detail::config_schema_error("each cohort must be an object");
    for (const auto& [key, _] : j.items()) {
      static const std::set<std::string> allowed = {
          "n_experiments", "users_per_variant", "metrics", "label",
          "material", "correlation", "id_prefix"};
      if (!allowed.contains(key)) detail::config_schema_error("unknown field '" + key + "'");
    }
    SynthConfig c;
    auto positive = [&](const char* key) -> std::size_t {
      auto it = j.find(key);
      if (it == j.end() || !it->is_number_unsigned()) {
        detail::config_schema_error(std::string(key) + " must be a positive integer");
      }
      return it->get<std::size_t>();
    };
    c.n_experiments = positive("n_experiments");
    c.users_per_variant = positive("users_per_variant");
    auto label_it = j.find("label");
    if (label_it == j.end() || !label_it->is_string()) detail::config_schema_error("label is required");
    auto label = parse_label(label_it->get<std::string>());
    if (!label) detail::config_schema_error("unknown label '" + label_it->get<std::string>() + "'");
    c.label = *label;
    if (auto it = j.find("material"); it != j.end()) {
      if (!it->is_boolean()) detail::config_schema_error("material must be a boolean");
      c.material = it->get<bool>();
    }
    if (auto it = j.find("correlation"); it != j.end()) {
      if (!it->is_number()) detail::config_schema_error("correlation must be a number");
      c.correlation = it->get<double>();
    }
    if (auto it = j.find("id_prefix"); it != j.end()) {
      if (!it->is_string() || it->get<std::string>().empty()) {
        detail::config_schema_error("id_prefix must be a non-empty string");
      }
      c.id_prefix = it->get<std::string>();
    }
    auto metrics_it = j.find("metrics");
    if (metrics_it == j.end() || !metrics_it->is_array()) detail::config_schema_error("metrics must be an array");
    for (const auto& m : *metrics_it) {
      if (!m.is_object()) detail::config_schema_error("metric entries must be objects");
      for (const auto& [key, _] : m.items()) {
        static const std::set<std::string> allowed = {"name", "direction", "mean",
                                                      "std", "effect"};
        if (!allowed.contains(key)) detail::config_schema_error("unknown metric field '" + key + "'");
      }
      auto name = m.find("name");
      if (name == m.end() || !name->is_string()) detail::config_schema_error("metric name is required");
      SynthMetric sm{MetricId(name->get<std::string>())};
      if (auto it = m.find("direction"); it != m.end()) {
        auto d = it->is_string() ? parse_direction(it->get<std::string>()) : std::nullopt;
        if (!d) detail::config_schema_error("direction must be 'increase' or 'decrease'");
        sm.direction = *d;
      }
      auto number = [&](const char* key, double fallback, bool required) {
        auto it = m.find(key);
        if (it == m.end()) {
          if (required) detail::config_schema_error(std::string("metric field '") + key + "' is required");
          return fallback;
        }
        if (!it->is_number()) detail::config_schema_error(std::string("metric field '") + key + "' must be a number");
        return it->get<double>();
      };
      sm.mean = number("mean", 0.0, false);
      sm.std_dev = number("std", 1.0, true);
      sm.effect = number("effect", 0.0, false);
      c.metrics.push_back(std::move(sm));
    }
    check_config(c);
    return c;
  };

  std::vector<SynthConfig> out;
  if (doc.is_array()) {
    for (const auto& j : doc) out.push_back(cohort(j));
  } else if (doc.is_object() && doc.contains("cohorts")) {
    if (doc.size() != 1 || !doc["cohorts"].is_array()) {
      detail::config_schema_error("'cohorts' must be the only field and must be an array");
    }
    for (const auto& j : doc["cohorts"]) out.push_back(cohort(j));
  } else {
    out.push_back(cohort(doc));
  }
  if (out.empty()) detail::config_schema_error("no cohorts");
  return out;
}

inline void write_manifest(const std::vector<ManifestEntry>& manifest,
                           std::ostream& out) {
  for (const auto& e : manifest) {
    nlohmann::ordered_json j;
    j["experiment_id"] = e.experiment_id;
    nlohmann::ordered_json effects = nlohmann::ordered_json::object();
    for (const auto& [m, delta] : e.true_effect) effects[m.str()] = delta;
    j["true_effect"] = std::move(effects);
    out << j.dump() << '\n';
  }
}

}  // namespace abmetrics

#endif  // ABMETRICS_SYNTH_HPP_
