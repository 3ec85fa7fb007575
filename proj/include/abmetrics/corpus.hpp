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
#ifndef ABMETRICS_CORPUS_HPP_
#define ABMETRICS_CORPUS_HPP_

// Labeled historical experiments: data model, JSON-Lines I/O and validation.
//
// File layout, one JSON object per line:
//   {"type":"meta","metrics":[{"name":"DAU","direction":"increase"}, ...]}
//   {"type":"experiment","experiment_id":"exp-001","label":"known",
//    "preferred_variant":"A","material":true,
//    "variant_a":{"DAU":{"mean":1.2,"variance_of_mean":0.005,"n":100000}},
//    "variant_b":{...}}

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "abmetrics/error.hpp"
#include "abmetrics/statcore.hpp"
#include "json.hpp"

namespace abmetrics {

class MetricId {
 public:
  explicit MetricId(std::string name) : name_(std::move(name)) {
    const bool blank = std::all_of(name_.begin(), name_.end(), [](char c) {
      return std::isspace(static_cast<unsigned char>(c)) != 0;
    });
    if (blank) {
      throw Error(ErrorKind::kSchema, "metric name must not be empty");
    }
  }

  const std::string& str() const noexcept { return name_; }
  friend auto operator<=>(const MetricId&, const MetricId&) = default;

 private:
  std::string name_;
};

enum class Direction { kIncrease, kDecrease };
enum class Label { kKnown, kInconclusive, kAa };
enum class Variant { kA, kB };

inline std::string_view to_string(Direction d) {
  return d == Direction::kIncrease ? "increase" : "decrease";
}

inline std::string_view to_string(Label label) {
  switch (label) {
    case Label::kKnown: return "known";
    case Label::kInconclusive: return "inconclusive";
    case Label::kAa: return "aa";
  }
  return "";
}

inline std::string_view to_string(Variant v) {
  return v == Variant::kA ? "A" : "B";
}

inline std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "increase") return Direction::kIncrease;
  if (s == "decrease") return Direction::kDecrease;
  return std::nullopt;
}

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "known") return Label::kKnown;
  if (s == "inconclusive") return Label::kInconclusive;
  if (s == "aa") return Label::kAa;
  return std::nullopt;
}

inline std::optional<Variant> parse_variant(std::string_view s) {
  if (s == "A") return Variant::kA;
  if (s == "B") return Variant::kB;
  return std::nullopt;
}

using VariantStats = std::map<MetricId, MetricStats>;
using DirectionMap = std::map<MetricId, Direction>;

struct MetricInfo {
  MetricId name;
  Direction direction;

  friend bool operator==(const MetricInfo&, const MetricInfo&) = default;
};

struct ExperimentRecord {
  std::string experiment_id;
  Label label = Label::kAa;
  std::optional<Variant> preferred_variant;
  VariantStats variant_a;
  VariantStats variant_b;
  // Only meaningful for inconclusive records: false marks a change too small
  // to count as a genuine false negative.
  bool material = true;

  friend bool operator==(const ExperimentRecord&,
                         const ExperimentRecord&) = default;
};

namespace detail {

inline void check_record(const ExperimentRecord& r, const DirectionMap& dirs,
                         std::optional<std::size_t> line) {
  const std::string& id = r.experiment_id;
  if (id.empty()) {
    throw Error(ErrorKind::kSchema, "experiment_id must be non-empty", line);
  }
  if (r.label == Label::kKnown && !r.preferred_variant) {
    throw Error(ErrorKind::kSchema,
                "experiment " + id + ": label 'known' requires preferred_variant",
                line);
  }
  if (r.label != Label::kKnown && r.preferred_variant) {
    throw Error(ErrorKind::kSchema,
                "experiment " + id + ": preferred_variant is only allowed on "
                "'known' records",
                line);
  }
  if (r.label != Label::kInconclusive && !r.material) {
    throw Error(ErrorKind::kSchema,
                "experiment " + id +
                    ": material=false is only allowed on 'inconclusive' records",
                line);
  }
  if (r.variant_a.empty()) {
    throw Error(ErrorKind::kSchema,
                "experiment " + id + ": variants carry no metrics", line);
  }
  auto key_set = [](const VariantStats& v) {
    std::set<MetricId> keys;
    for (const auto& [k, _] : v) keys.insert(k);
    return keys;
  };
  if (key_set(r.variant_a) != key_set(r.variant_b)) {
    throw Error(ErrorKind::kSchema,
                "experiment " + id +
                    ": variant_a and variant_b have different metric keys",
                line);
  }
  for (const auto* variant : {&r.variant_a, &r.variant_b}) {
    for (const auto& [metric, stats] : *variant) {
      if (!dirs.contains(metric)) {
        throw Error(ErrorKind::kMissingMetric,
                    "experiment " + id + ": metric '" + metric.str() +
                        "' is not declared in the meta record",
                    line);
      }
      if (stats.variance_of_mean < 0.0) {
        throw Error(ErrorKind::kSchema,
                    "experiment " + id + ": negative variance_of_mean for '" +
                        metric.str() + "'",
                    line);
      }
      if (!std::isfinite(stats.mean) ||
          !std::isfinite(stats.variance_of_mean)) {
        throw Error(ErrorKind::kSchema,
                    "experiment " + id + ": non-finite statistic for '" +
                        metric.str() + "'",
                    line);
      }
      if (stats.n && *stats.n == 0) {
        throw Error(ErrorKind::kSchema,
                    "experiment " + id + ": n must be positive for '" +
                        metric.str() + "'",
                    line);
      }
    }
  }
}

}  // namespace detail

// Immutable after construction. Construction validates every invariant.
class Corpus {
 public:
  Corpus(std::vector<MetricInfo> metrics,
         std::vector<ExperimentRecord> experiments)
      : Corpus(std::move(metrics), std::move(experiments), {}) {}

  const std::vector<MetricInfo>& metrics() const noexcept { return metrics_; }
  const std::vector<ExperimentRecord>& experiments() const noexcept {
    return experiments_;
  }
  const DirectionMap& directions() const noexcept { return directions_; }

  bool has_metric(const MetricId& m) const { return directions_.contains(m); }

  Direction direction(const MetricId& m) const {
    auto it = directions_.find(m);
    if (it == directions_.end()) {
      throw Error(ErrorKind::kMissingMetric,
                  "metric '" + m.str() + "' is not in the corpus");
    }
    return it->second;
  }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.metrics_ == b.metrics_ && a.experiments_ == b.experiments_;
  }

 private:
  friend Corpus parse_corpus(std::istream&, bool);

  // lines[i], when given, is the input line of experiments[i].
  Corpus(std::vector<MetricInfo> metrics,
         std::vector<ExperimentRecord> experiments,
         const std::vector<std::size_t>& lines)
      : metrics_(std::move(metrics)), experiments_(std::move(experiments)) {
    for (const auto& info : metrics_) {
      if (!directions_.emplace(info.name, info.direction).second) {
        throw Error(ErrorKind::kDuplicateId,
                    "metric '" + info.name.str() + "' declared twice",
                    lines.empty() ? std::nullopt
                                  : std::optional<std::size_t>(1));
      }
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < experiments_.size(); ++i) {
      std::optional<std::size_t> line;
      if (i < lines.size()) line = lines[i];
      detail::check_record(experiments_[i], directions_, line);
      if (!ids.insert(experiments_[i].experiment_id).second) {
        throw Error(ErrorKind::kDuplicateId,
                    "duplicate experiment_id '" +
                        experiments_[i].experiment_id + "'",
                    line);
      }
    }
  }

  std::vector<MetricInfo> metrics_;
  std::vector<ExperimentRecord> experiments_;
  DirectionMap directions_;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                       std::string_view what, std::size_t line, bool lenient) {
  if (lenient) return;
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::kSchema,
                  "unknown field '" + key + "' in " + std::string(what), line);
    }
  }
}

inline const json& require(const json& obj, const char* key,
                           std::string_view what, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorKind::kSchema,
                std::string(what) + " is missing required field '" + key + "'",
                line);
  }
  return *it;
}

inline std::string require_string(const json& obj, const char* key,
                                  std::string_view what, std::size_t line) {
  const json& v = require(obj, key, what, line);
  if (!v.is_string()) {
    throw Error(ErrorKind::kSchema,
                "field '" + std::string(key) + "' must be a string", line);
  }
  return v.get<std::string>();
}

inline MetricStats parse_stats(const json& j, const std::string& metric,
                               std::size_t line, bool lenient) {
  const std::string what = "statistics of '" + metric + "'";
  if (!j.is_object()) {
    throw Error(ErrorKind::kSchema, what + " must be an object", line);
  }
  check_keys(j, {"mean", "variance_of_mean", "n"}, what, line, lenient);
  const json& mean = require(j, "mean", what, line);
  const json& var = require(j, "variance_of_mean", what, line);
  if (!mean.is_number() || !var.is_number()) {
    throw Error(ErrorKind::kSchema, what + ": mean and variance_of_mean must "
                "be numbers", line);
  }
  MetricStats stats{mean.get<double>(), var.get<double>(), std::nullopt};
  if (stats.variance_of_mean < 0.0) {
    throw Error(ErrorKind::kSchema,
                "negative variance_of_mean for '" + metric + "'", line);
  }
  if (auto it = j.find("n"); it != j.end() && !it->is_null()) {
    if (!it->is_number_unsigned() || it->get<std::uint64_t>() == 0) {
      throw Error(ErrorKind::kSchema,
                  what + ": n must be a positive integer", line);
    }
    stats.n = it->get<std::size_t>();
  }
  return stats;
}

inline VariantStats parse_variant_stats(const json& j, std::string_view which,
                                        std::size_t line, bool lenient) {
  if (!j.is_object()) {
    throw Error(ErrorKind::kSchema, std::string(which) + " must be an object",
                line);
  }
  VariantStats out;
  for (const auto& [name, stats] : j.items()) {
    out.emplace(MetricId(name), parse_stats(stats, name, line, lenient));
  }
  return out;
}

inline std::vector<MetricInfo> parse_meta(const json& j, std::size_t line,
                                          bool lenient) {
  check_keys(j, {"type", "metrics"}, "meta record", line, lenient);
  const json& metrics = require(j, "metrics", "meta record", line);
  if (!metrics.is_array()) {
    throw Error(ErrorKind::kSchema, "meta 'metrics' must be an array", line);
  }
  std::vector<MetricInfo> out;
  for (const auto& m : metrics) {
    if (!m.is_object()) {
      throw Error(ErrorKind::kSchema, "meta metric entries must be objects",
                  line);
    }
    check_keys(m, {"name", "direction"}, "meta metric entry", line, lenient);
    const std::string name = require_string(m, "name", "meta metric", line);
    const std::string dir = require_string(m, "direction", "meta metric", line);
    auto direction = parse_direction(dir);
    if (!direction) {
      throw Error(ErrorKind::kSchema,
                  "metric '" + name + "': unknown direction '" + dir + "'",
                  line);
    }
    out.push_back({MetricId(name), *direction});
  }
  return out;
}

inline ExperimentRecord parse_experiment(const json& j, std::size_t line,
                                         bool lenient) {
  check_keys(j,
             {"type", "experiment_id", "label", "preferred_variant",
              "material", "variant_a", "variant_b"},
             "experiment record", line, lenient);
  ExperimentRecord r;
  r.experiment_id =
      require_string(j, "experiment_id", "experiment record", line);
  const std::string what = "experiment " + r.experiment_id;
  const std::string label = require_string(j, "label", what, line);
  auto parsed_label = parse_label(label);
  if (!parsed_label) {
    throw Error(ErrorKind::kSchema,
                what + ": unknown label kind '" + label + "'", line);
  }
  r.label = *parsed_label;
  if (auto it = j.find("preferred_variant"); it != j.end() && !it->is_null()) {
    auto v = it->is_string() ? parse_variant(it->get<std::string>())
                             : std::nullopt;
    if (!v) {
      throw Error(ErrorKind::kSchema,
                  what + ": preferred_variant must be \"A\" or \"B\"", line);
    }
    r.preferred_variant = v;
  }
  if (auto it = j.find("material"); it != j.end()) {
    if (!it->is_boolean()) {
      throw Error(ErrorKind::kSchema, what + ": material must be a boolean",
                  line);
    }
    r.material = it->get<bool>();
  }
  r.variant_a = parse_variant_stats(require(j, "variant_a", what, line),
                                    "variant_a", line, lenient);
  r.variant_b = parse_variant_stats(require(j, "variant_b", what, line),
                                    "variant_b", line, lenient);
  return r;
}

}  // namespace detail

// Reads a JSON-Lines corpus. Blank lines are ignored. Unknown fields are
// rejected unless `lenient` is set. Experiment order is preserved.
inline Corpus parse_corpus(std::istream& in, bool lenient = false) {
  using detail::json;
  std::string text;
  std::size_t line_no = 0;
  std::optional<std::vector<MetricInfo>> meta;
  std::vector<ExperimentRecord> experiments;
  std::vector<std::size_t> lines;

  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (std::all_of(text.begin(), text.end(), [](char c) {
          return std::isspace(static_cast<unsigned char>(c)) != 0;
        })) {
      continue;
    }
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::kParse, std::string("malformed JSON: ") + e.what(),
                  line_no);
    }
    if (!j.is_object()) {
      throw Error(ErrorKind::kParse, "each line must be a JSON object",
                  line_no);
    }
    auto type_it = j.find("type");
    const std::string type = (type_it != j.end() && type_it->is_string())
                                 ? type_it->get<std::string>()
                                 : std::string();
    if (!meta) {
      if (type != "meta") {
        throw Error(ErrorKind::kSchema, "meta record required on line 1",
                    line_no);
      }
      meta = detail::parse_meta(j, line_no, lenient);
      continue;
    }
    if (type == "meta") {
      throw Error(ErrorKind::kSchema, "only one meta record is allowed",
                  line_no);
    }
    if (type != "experiment") {
      throw Error(ErrorKind::kSchema, "unknown record type '" + type + "'",
                  line_no);
    }
    experiments.push_back(detail::parse_experiment(j, line_no, lenient));
    lines.push_back(line_no);
  }
  if (!meta) {
    throw Error(ErrorKind::kSchema, "meta record required on line 1", 1);
  }
  return Corpus(std::move(*meta), std::move(experiments), lines);
}

inline Corpus parse_corpus(std::string_view text, bool lenient = false) {
  std::istringstream in{std::string(text)};
  return parse_corpus(in, lenient);
}

namespace detail {

inline nlohmann::ordered_json stats_json(const MetricStats& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["variance_of_mean"] = s.variance_of_mean;
  if (s.n) j["n"] = *s.n;
  return j;
}

inline nlohmann::ordered_json variant_json(
    const VariantStats& v, const std::vector<MetricInfo>& order) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& info : order) {
    if (auto it = v.find(info.name); it != v.end()) {
      j[info.name.str()] = stats_json(it->second);
    }
  }
  return j;
}

}  // namespace detail

inline void serialize_record(const ExperimentRecord& r,
                             const std::vector<MetricInfo>& metric_order,
                             std::ostream& out) {
  nlohmann::ordered_json j;
  j["type"] = "experiment";
  j["experiment_id"] = r.experiment_id;
  j["label"] = to_string(r.label);
  if (r.preferred_variant) j["preferred_variant"] = to_string(*r.preferred_variant);
  j["material"] = r.material;
  j["variant_a"] = detail::variant_json(r.variant_a, metric_order);
  j["variant_b"] = detail::variant_json(r.variant_b, metric_order);
  out << j.dump() << '\n';
}

inline void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  nlohmann::ordered_json meta;
  meta["type"] = "meta";
  meta["metrics"] = nlohmann::ordered_json::array();
  for (const auto& m : corpus.metrics()) {
    nlohmann::ordered_json entry;
    entry["name"] = m.name.str();
    entry["direction"] = to_string(m.direction);
    meta["metrics"].push_back(std::move(entry));
  }
  out << meta.dump() << '\n';
  for (const auto& r : corpus.experiments()) {
    serialize_record(r, corpus.metrics(), out);
  }
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::ostringstream out;
  serialize_corpus(corpus, out);
  return out.str();
}

struct Finding {
  std::string code;
  std::string message;
};

// Non-fatal observations about a parsed corpus.
inline std::vector<Finding> validate(const Corpus& corpus) {
  std::vector<Finding> findings;
  std::size_t aa = 0, known = 0, material_ab = 0;
  std::set<MetricId> used;
  for (const auto& r : corpus.experiments()) {
    switch (r.label) {
      case Label::kAa: ++aa; break;
      case Label::kKnown: ++known; ++material_ab; break;
      case Label::kInconclusive:
        if (r.material) {
          ++material_ab;
        } else {
          findings.push_back(
              {"non-material",
               "experiment " + r.experiment_id +
                   ": inconclusive record with material=false is excluded "
                   "from type-II denominators"});
        }
        break;
    }
    for (const auto& [m, _] : r.variant_a) used.insert(m);
  }
  if (aa == 0) {
    findings.push_back(
        {"empty-aa", "no aa records: type-I error is inestimable"});
  }
  if (material_ab == 0) {
    findings.push_back({"empty-ab",
                        "no material known or inconclusive records: type-II "
                        "error is inestimable"});
  }
  if (known == 0) {
    findings.push_back(
        {"empty-known", "no known records: type-III error is inestimable"});
  }
  for (const auto& m : corpus.metrics()) {
    if (!used.contains(m.name)) {
      findings.push_back({"unused-metric", "metric '" + m.name.str() +
                                               "' is declared but never used"});
    }
  }
  return findings;
}

// z for one metric, oriented so that positive means "improvement of the
// preferred (or first) variant": decrease-metrics are negated, and known
// records preferring B are negated so the statistic reads preferred vs other.
inline ZScore oriented_z(const ExperimentRecord& record, const MetricId& metric,
                         const DirectionMap& directions) {
  auto a = record.variant_a.find(metric);
  auto b = record.variant_b.find(metric);
  if (a == record.variant_a.end() || b == record.variant_b.end()) {
    throw Error(ErrorKind::kMissingMetric,
                "experiment " + record.experiment_id + " has no metric '" +
                    metric.str() + "'");
  }
  auto dir = directions.find(metric);
  if (dir == directions.end()) {
    throw Error(ErrorKind::kMissingMetric,
                "metric '" + metric.str() + "' has no declared direction");
  }
  double z = z_score(a->second, b->second).value();
  if (dir->second == Direction::kDecrease) z = -z;
  if (record.label == Label::kKnown &&
      record.preferred_variant == Variant::kB) {
    z = -z;
  }
  return ZScore(z);
}

}  // namespace abmetrics

#endif  // ABMETRICS_CORPUS_HPP_
