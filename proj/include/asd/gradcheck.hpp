/*
 * Copyright 2026 The asdfuse Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <asd/optim.hpp>

#include <functional>
#include <string>
#include <vector>

namespace asd {

/// Scalar-valued deterministic computation over a parameter store. When
/// `gradients` is non-null the call must also fill analytic gradients.
using ScalarComputation =
    std::function<double(const ParameterStore&, GradientMap*)>;

struct GradCheckConfig {
  double step = 1e-5;
  double rel_tol = 1e-4;
  double abs_tol = 1e-8;
};

struct GradCheckEntry {
  std::string parameter;
  Index worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
  double abs_diff = 0.0;
  double rel_err = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;  // one per parameter tensor
  double max_rel_err = 0.0;
  double max_abs_diff = 0.0;
  bool pass = true;

  std::string summary() const;
};

/// Central-difference verification of analytic gradients. Every entry of every
/// parameter is perturbed by +/-step; an entry passes when
/// |analytic - numeric| <= abs_tol + rel_tol * max(|analytic|, |numeric|).
GradCheckReport check_gradients(const ScalarComputation& computation,
                                ParameterStore& parameters,
                                const GradCheckConfig& config = {});

}  // namespace asd
