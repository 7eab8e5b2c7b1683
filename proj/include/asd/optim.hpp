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

#include <asd/tensor.hpp>

#include <map>
#include <string>

namespace asd {

using GradientMap = std::map<std::string, Tensor>;

struct AdagradConfig {
  double learning_rate = 0.015;
  double epsilon = 1e-10;
  double initial_accumulator = 0.0;
};

/// Named parameters plus their Adagrad accumulators. std::map keeps iteration
/// order deterministic, which checkpointing and training reproducibility rely on.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Tensor init,
              double initial_accumulator = 0.0);

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  Tensor& accumulator(const std::string& name);
  const Tensor& accumulator(const std::string& name) const;

  std::map<std::string, Tensor>& params() { return params_; }
  const std::map<std::string, Tensor>& params() const { return params_; }
  const std::map<std::string, Tensor>& accumulators() const { return accum_; }

  Index total_size() const;

  /// Zero-filled gradient map with one entry per parameter.
  GradientMap zero_gradients() const;

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> accum_;
};

/// accumulator += g^2; param -= lr * g / (sqrt(accumulator) + eps).
void adagrad_step(ParameterStore& store, const GradientMap& gradients,
                  const AdagradConfig& config);

}  // namespace asd
