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
#ifndef ABMETRICS_REPORT_HPP_
#define ABMETRICS_REPORT_HPP_

// Renderers over the evaluation-result document. They only read fields of
// the document and never recompute statistics.

#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "abmetrics/csv.hpp"
#include "abmetrics/error.hpp"
#include "abmetrics/evaluation.hpp"
#include "json.hpp"

namespace abmetrics {

using Document = nlohmann::ordered_json;

inline constexpr std::string_view kNotAvailable = "n/a (empty class)";

// Shortest representation that round-trips, always with a decimal point or
// exponent ("1.0", not "1").
inline std::string exact_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

namespace detail {

inline void check_document(const Document& doc) {
  if (!doc.is_object() || !doc.contains("schema_version") ||
      doc["schema_version"] != kSchemaVersion) {
    throw Error(ErrorKind::kSchema,
                "not an evaluation document with schema_version 1");
  }
  if (!doc.contains("targets") || !doc["targets"].is_array() ||
      doc["targets"].empty()) {
    throw Error(ErrorKind::kSchema, "evaluation document has no targets");
  }
}

inline std::string human_rate(const Document& rate) {
  const auto& r = rate["rate"];
  if (r.is_null()) return std::string(kNotAvailable);
  return fixed4(r.get<double>());
}

inline std::string human_power(const Document& power) {
  const auto& m = power["median_relative_squared_z"];
  if (m.is_null()) return "n/a";
  return fixed4(m.get<double>());
}

inline std::string counts(const Document& rate) {
  return std::to_string(rate["numerator"].get<std::size_t>()) + "/" +
         std::to_string(rate["denominator"].get<std::size_t>());
}

}  // namespace detail

inline std::string render_markdown(const Document& doc) {
  detail::check_document(doc);
  std::ostringstream out;
  out << "alpha = " << exact_number(doc["alpha"].get<double>())
      << ", baseline = " << doc["baseline"].get<std::string>() << "\n\n";
  out << "| target | correction | tests | critical | type I | type II | "
         "type III | median rel. z^2 | excluded |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& t : doc["targets"]) {
    out << "| " << t["label"].get<std::string>() << " | "
        << t["correction"].get<std::string>() << " | "
        << t["tests"].get<std::size_t>() << " | "
        << fixed4(t["critical_value"].get<double>()) << " | "
        << detail::human_rate(t["type_i"]) << " (" << detail::counts(t["type_i"]) << ") | "
        << detail::human_rate(t["type_ii"]) << " (" << detail::counts(t["type_ii"]) << ") | "
        << detail::human_rate(t["type_iii"]) << " (" << detail::counts(t["type_iii"]) << ") | "
        << detail::human_power(t["power"]) << " | "
        << t["power"]["excluded"].get<std::size_t>() << " |\n";
  }
  return out.str();
}

inline std::string render_csv(const Document& doc) {
  detail::check_document(doc);
  std::ostringstream out;
  out << "label,kind,correction,tests,critical_value,"
         "type_i_error,type_i_numerator,type_i_denominator,"
         "type_ii_error,type_ii_numerator,type_ii_denominator,"
         "type_iii_error,type_iii_numerator,type_iii_denominator,"
         "baseline,median_relative_squared_z,excluded\n";
  for (const auto& t : doc["targets"]) {
    out << csv::quote(t["label"].get<std::string>()) << ','
        << t["kind"].get<std::string>() << ','
        << t["correction"].get<std::string>() << ','
        << t["tests"].get<std::size_t>() << ','
        << fixed4(t["critical_value"].get<double>());
    for (const char* key : {"type_i", "type_ii", "type_iii"}) {
      out << ',' << csv::quote(detail::human_rate(t[key])) << ','
          << t[key]["numerator"].get<std::size_t>() << ','
          << t[key]["denominator"].get<std::size_t>();
    }
    out << ',' << csv::quote(t["power"]["baseline"].get<std::string>()) << ','
        << detail::human_power(t["power"]) << ','
        << t["power"]["excluded"].get<std::size_t>() << '\n';
  }
  return out.str();
}

struct FigureRow {
  std::string label;
  std::optional<double> type_ii_error;
  std::optional<double> median_relative_squared_z;
  std::size_t excluded = 0;
};

using FigureData = std::vector<FigureRow>;

// One row per target in evaluation order. All targets must share a baseline.
inline FigureData figure_data(const Document& doc) {
  detail::check_document(doc);
  FigureData rows;
  std::optional<std::string> baseline;
  for (const auto& t : doc["targets"]) {
    const auto& power = t["power"];
    const std::string b = power["baseline"].get<std::string>();
    if (baseline && *baseline != b) {
      throw Error(ErrorKind::kSchema,
                  "figure data needs one common baseline; found '" + *baseline +
                      "' and '" + b + "'");
    }
    baseline = b;
    FigureRow row{t["label"].get<std::string>(), std::nullopt, std::nullopt,
                  power["excluded"].get<std::size_t>()};
    if (!t["type_ii"]["rate"].is_null()) {
      row.type_ii_error = t["type_ii"]["rate"].get<double>();
    }
    if (!power["median_relative_squared_z"].is_null()) {
      row.median_relative_squared_z =
          power["median_relative_squared_z"].get<double>();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Plot-ready CSV. Inestimable values are empty fields.
inline std::string render_figure_data(const Document& doc) {
  std::ostringstream out;
  out << "label,type_ii_error,median_relative_squared_z,excluded\n";
  for (const auto& row : figure_data(doc)) {
    out << csv::quote(row.label) << ','
        << (row.type_ii_error ? exact_number(*row.type_ii_error) : "") << ','
        << (row.median_relative_squared_z
                ? exact_number(*row.median_relative_squared_z)
                : "")
        << ',' << row.excluded << '\n';
  }
  return out.str();
}

}  // namespace abmetrics

#endif  // ABMETRICS_REPORT_HPP_
