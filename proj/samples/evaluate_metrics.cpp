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
// Evaluates three metrics and their Bonferroni-corrected union on a
// generated corpus and prints the markdown summary.

#include <iostream>

#include "abmetrics/abmetrics.hpp"

int main() {
  using namespace abmetrics;

  std::vector<SynthMetric> null_metrics = {
      {MetricId("DAU"), Direction::kIncrease, 1.0, 1.0, 0.0},
      {MetricId("Engagers"), Direction::kIncrease, 0.5, 0.6, 0.0},
      {MetricId("TimeSpent"), Direction::kIncrease, 30.0, 20.0, 0.0}};
  std::vector<SynthMetric> effects = null_metrics;
  effects[0].effect = 0.06;
  effects[1].effect = 0.05;
  effects[2].effect = 1.5;

  SynthConfig aa{500, 2000, null_metrics, Label::kAa, true, 0.0, "aa"};
  SynthConfig known{300, 2000, effects, Label::kKnown, true, 0.3, "known"};

  const SynthResult synth = synth_corpus(std::vector{aa, known}, 7, 4);
  const Evaluation ev = evaluate(
      synth.corpus, {MetricId("DAU"), MetricId("Engagers"), MetricId("TimeSpent")}, 0.05,
      Correction::kBonferroni, MetricId("DAU"));
  std::cout << render_markdown(to_json(ev));
  return 0;
}
