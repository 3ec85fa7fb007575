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
#ifndef ABMETRICS_ABMETRICS_HPP_
#define ABMETRICS_ABMETRICS_HPP_

#include "abmetrics/corpus.hpp"
#include "abmetrics/error.hpp"
#include "abmetrics/evaluation.hpp"
#include "abmetrics/report.hpp"
#include "abmetrics/statcore.hpp"
#include "abmetrics/synth.hpp"

#endif  // ABMETRICS_ABMETRICS_HPP_
