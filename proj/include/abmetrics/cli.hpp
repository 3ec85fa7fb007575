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
#ifndef ABMETRICS_CLI_HPP_
#define ABMETRICS_CLI_HPP_

// Command dispatch for the abmetrics tool.
//
// Exit codes: 0 success, 1 results written but some rates inestimable,
// 2 usage, schema or domain errors.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "abmetrics/corpus.hpp"
#include "abmetrics/error.hpp"
#include "abmetrics/evaluation.hpp"
#include "abmetrics/report.hpp"
#include "abmetrics/synth.hpp"
#include "json.hpp"

namespace abmetrics::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read '" + path + "'");
  return in;
}

inline void write_output(const std::string& path, const std::string& text,
                         std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  file << text;
  if (!file) throw Error(ErrorKind::kIo, "failed writing '" + path + "'");
}

inline Corpus load_corpus(const std::string& path, bool lenient) {
  auto in = open_input(path);
  return parse_corpus(in, lenient);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string corpus_text(const std::vector<MetricInfo>& metrics,
                               std::vector<ExperimentRecord> records) {
  return serialize_corpus(Corpus(metrics, std::move(records)));
}

}  // namespace detail

struct ValidateArgs {
  std::string corpus;
  bool lenient = false;
};

inline int cmd_validate(const ValidateArgs& a, std::ostream& out,
                        std::ostream& err) {
  try {
    const Corpus corpus = detail::load_corpus(a.corpus, a.lenient);
    const auto findings = validate(corpus);
    for (const auto& f : findings) {
      out << "warning: " << f.code << ": " << f.message << '\n';
    }
    out << corpus.experiments().size() << " experiments, "
        << findings.size() << " warnings, 0 errors\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

struct EvaluateArgs {
  std::string corpus;
  double alpha = 0.05;
  std::string metrics;
  std::string correction = "bonferroni";
  std::string baseline;
  std::string output = "-";
  std::string format = "json";
  bool lenient = false;
};

inline int cmd_evaluate(const EvaluateArgs& a, std::ostream& out,
                        std::ostream& err) {
  try {
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) {
      throw Error(ErrorKind::kDomain, "--alpha must lie in (0, 1)");
    }
    auto correction = parse_correction(a.correction);
    if (!correction) {
      throw Error(ErrorKind::kDomain, "--correction must be none or bonferroni");
    }
    if (a.format != "json" && a.format != "md" && a.format != "csv") {
      throw Error(ErrorKind::kDomain, "--format must be json, md or csv");
    }
    const Corpus corpus = detail::load_corpus(a.corpus, a.lenient);
    std::vector<MetricId> metrics;
    for (const auto& name : detail::split_list(a.metrics)) metrics.emplace_back(name);
    if (metrics.empty()) throw Error(ErrorKind::kArity, "--metrics is empty");
    const MetricId baseline(a.baseline.empty() ? metrics.front().str() : a.baseline);

    const Evaluation ev = evaluate(corpus, metrics, a.alpha, *correction, baseline);
    const Document doc = to_json(ev);
    std::string text;
    if (a.format == "json") {
      text = doc.dump(2) + "\n";
    } else if (a.format == "md") {
      text = render_markdown(doc);
    } else {
      text = render_csv(doc);
    }
    detail::write_output(a.output, text, out);
    if (ev.partial()) {
      err << "warning: some rates are inestimable (empty class)\n";
      return kExitPartial;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

struct SynthAaArgs {
  std::uint64_t seed = 0;
  std::string events;
  std::size_t splits = 0;
  std::string stats;
  std::size_t count = 0;
  std::string decrease;
  std::string output;
};

// Parametric statistics file:
//   {"metrics":[{"name":"DAU","direction":"increase","mean":1.0,
//                "variance_of_mean":0.001}, ...]}
inline std::pair<std::vector<MetricInfo>, VariantStats> parse_aa_stats(
    const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("metrics") || !doc["metrics"].is_array()) {
    throw Error(ErrorKind::kSchema, "stats file needs a 'metrics' array");
  }
  std::vector<MetricInfo> info;
  VariantStats stats;
  for (const auto& m : doc["metrics"]) {
    if (!m.is_object() || !m.contains("name") || !m["name"].is_string() ||
        !m.contains("mean") || !m["mean"].is_number() ||
        !m.contains("variance_of_mean") || !m["variance_of_mean"].is_number()) {
      throw Error(ErrorKind::kSchema,
                  "stats entries need name, mean and variance_of_mean");
    }
    Direction dir = Direction::kIncrease;
    if (m.contains("direction")) {
      auto d = m["direction"].is_string()
                   ? parse_direction(m["direction"].get<std::string>())
                   : std::nullopt;
      if (!d) throw Error(ErrorKind::kSchema, "direction must be increase or decrease");
      dir = *d;
    }
    MetricId id(m["name"].get<std::string>());
    info.push_back({id, dir});
    stats.emplace(id, MetricStats{m["mean"].get<double>(),
                                  m["variance_of_mean"].get<double>(), std::nullopt});
  }
  return {info, stats};
}

inline int cmd_synth_aa(const SynthAaArgs& a, std::ostream& out,
                        std::ostream& err) {
  try {
    const bool from_events = !a.events.empty();
    if (from_events == !a.stats.empty()) {
      throw Error(ErrorKind::kDomain, "give exactly one of --events or --stats");
    }
    std::vector<MetricInfo> metrics;
    std::vector<ExperimentRecord> records;
    if (from_events) {
      auto in = detail::open_input(a.events);
      const UserTable table = parse_user_table(in);
      const auto decrease = detail::split_list(a.decrease);
      for (const auto& m : table.metrics) {
        const bool dec = std::find(decrease.begin(), decrease.end(), m.str()) != decrease.end();
        metrics.push_back({m, dec ? Direction::kDecrease : Direction::kIncrease});
      }
      for (const auto& d : decrease) {
        if (std::none_of(table.metrics.begin(), table.metrics.end(),
                         [&](const MetricId& m) { return m.str() == d; })) {
          throw Error(ErrorKind::kMissingMetric, "--decrease names unknown metric '" + d + "'");
        }
      }
      records = synth_aa_from_events(table, a.splits, a.seed);
    } else {
      auto in = detail::open_input(a.stats);
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::kParse, e.what());
      }
      auto [info, stats] = parse_aa_stats(doc);
      metrics = std::move(info);
      records = synth_aa_parametric(stats, a.count, a.seed);
    }
    const std::size_t n = records.size();
    detail::write_output(a.output, detail::corpus_text(metrics, std::move(records)), out);
    out << "seed: " << a.seed << '\n'
        << "wrote " << n << " aa records to " << a.output << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

struct SynthCorpusArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::string output;
  std::string manifest;
  unsigned threads = 1;
};

inline std::string default_manifest_path(const std::string& output) {
  std::filesystem::path p(output);
  p.replace_extension(".manifest.jsonl");
  return p.string();
}

inline int cmd_synth_corpus(const SynthCorpusArgs& a, std::ostream& out,
                            std::ostream& err) {
  try {
    auto in = detail::open_input(a.config);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse, e.what());
    }
    const auto cohorts = parse_synth_config(doc);
    const SynthResult result = synth_corpus(cohorts, a.seed, a.threads);
    const std::string manifest =
        a.manifest.empty() ? default_manifest_path(a.output) : a.manifest;
    detail::write_output(a.output, serialize_corpus(result.corpus), out);
    std::ostringstream m;
    write_manifest(result.manifest, m);
    detail::write_output(manifest, m.str(), out);
    out << "seed: " << a.seed << '\n'
        << "wrote " << result.corpus.experiments().size()
        << " experiments to " << a.output << " (manifest " << manifest << ")\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

struct FigureArgs {
  std::string input;
  std::string output = "-";
};

inline int cmd_figure(const FigureArgs& a, std::ostream& out, std::ostream& err) {
  try {
    auto in = detail::open_input(a.input);
    Document doc;
    try {
      doc = Document::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kParse, e.what());
    }
    detail::write_output(a.output, render_figure_data(doc), out);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed evaluation document: " << e.what() << '\n';
    return kExitUsage;
  }
}

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Evaluate A/B-test metrics against a corpus of past experiments"};
  app.name("abmetrics");
  app.require_subcommand(1);

  ValidateArgs validate_args;
  auto* validate_cmd = app.add_subcommand("validate", "Check a corpus file");
  validate_cmd->add_option("corpus", validate_args.corpus, "Corpus JSON-Lines file")->required();
  validate_cmd->add_flag("--lenient", validate_args.lenient, "Accept unknown fields");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Error rates and power per metric and metric set");
  eval_cmd->add_option("--corpus", eval_args.corpus, "Corpus JSON-Lines file")->required();
  eval_cmd->add_option("--alpha", eval_args.alpha, "Significance level")->capture_default_str();
  eval_cmd->add_option("--metrics", eval_args.metrics, "Comma-separated metric list")->required();
  eval_cmd->add_option("--correction", eval_args.correction, "none or bonferroni")->capture_default_str();
  eval_cmd->add_option("--baseline", eval_args.baseline, "Baseline metric (default: first metric)");
  eval_cmd->add_option("--output", eval_args.output, "Output path, - for stdout")->capture_default_str();
  eval_cmd->add_option("--format", eval_args.format, "json, md or csv")->capture_default_str();
  eval_cmd->add_flag("--lenient", eval_args.lenient, "Accept unknown corpus fields");

  SynthAaArgs aa_args;
  auto* aa_cmd = app.add_subcommand("synth-aa", "Generate synthetic A/A records");
  aa_cmd->add_option("--seed", aa_args.seed, "Random seed")->required();
  aa_cmd->add_option("--events", aa_args.events, "User-level CSV (split resampling)");
  aa_cmd->add_option("--splits", aa_args.splits, "Number of random splits");
  aa_cmd->add_option("--stats", aa_args.stats, "Per-metric statistics JSON (parametric)");
  aa_cmd->add_option("--count", aa_args.count, "Number of parametric records");
  aa_cmd->add_option("--decrease", aa_args.decrease, "Metrics where lower is better");
  aa_cmd->add_option("--output", aa_args.output, "Output corpus path")->required();

  SynthCorpusArgs corpus_args;
  auto* corpus_cmd = app.add_subcommand("synth-corpus", "Generate a ground-truth corpus");
  corpus_cmd->add_option("--config", corpus_args.config, "Synth config JSON")->required();
  corpus_cmd->add_option("--seed", corpus_args.seed, "Random seed")->required();
  corpus_cmd->add_option("--output", corpus_args.output, "Output corpus path")->required();
  corpus_cmd->add_option("--manifest", corpus_args.manifest, "Ground-truth manifest path");
  corpus_cmd->add_option("--threads", corpus_args.threads, "Worker threads")
      ->check(CLI::PositiveNumber)->capture_default_str();

  FigureArgs fig_args;
  auto* fig_cmd = app.add_subcommand("figure", "Plot-ready CSV from an evaluation document");
  fig_cmd->add_option("--input", fig_args.input, "Evaluation JSON document")->required();
  fig_cmd->add_option("--output", fig_args.output, "Output path, - for stdout")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kExitUsage;
  }

  if (*validate_cmd) return cmd_validate(validate_args, out, err);
  if (*eval_cmd) return cmd_evaluate(eval_args, out, err);
  if (*aa_cmd) return cmd_synth_aa(aa_args, out, err);
  if (*corpus_cmd) return cmd_synth_corpus(corpus_args, out, err);
  if (*fig_cmd) return cmd_figure(fig_args, out, err);
  return kExitUsage;
}

}  // namespace abmetrics::cli

#endif  // ABMETRICS_CLI_HPP_
