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

#include <asd/optim.hpp>

#include <stdexcept>

namespace asd {

Tensor& ParameterStore::add(const std::string& name, Tensor init,
                            double initial_accumulator) {
  if (params_.count(name)) {
    throw std::invalid_argument("parameter already registered: " + name);
  }
  accum_[name] = Tensor::constant(init.shape(), initial_accumulator);
  auto [it, ok] = params_.emplace(name, std::move(init));
  (void)ok;
  return it->second;
}

Tensor& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

Tensor& ParameterStore::accumulator(const std::string& name) {
  auto it = accum_.find(name);
  if (it == accum_.end()) throw std::out_of_range("unknown accumulator: " + name);
  return it->second;
}

const Tensor& ParameterStore::accumulator(const std::string& name) const {
  auto it = accum_.find(name);
  if (it == accum_.end()) throw std::out_of_range("unknown accumulator: " + name);
  return it->second;
}

Index ParameterStore::total_size() const {
  Index n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

GradientMap ParameterStore::zero_gradients() const {
  GradientMap g;
  for (const auto& [name, t] : params_) g.emplace(name, Tensor::zeros(t.shape()));
  return g;
}

void adagrad_step(ParameterStore& store, const GradientMap& gradients,
                  const AdagradConfig& config) {
  if (config.learning_rate <= 0.0) {
    throw std::invalid_argument("adagrad: learning_rate must be positive");
  }
  if (config.epsilon <= 0.0) {
    throw std::invalid_argument("adagrad: epsilon must be positive");
  }
  for (const auto& [name, g] : gradients) {
    Tensor& p = store.at(name);
    Tensor& acc = store.accumulator(name);
    if (!p.same_shape(g)) {
      throw std::invalid_argument("adagrad: gradient shape mismatch for " + name +
                                  " (" + g.shape_string() + " vs " +
                                  p.shape_string() + ")");
    }
    acc.vec().array() += g.vec().array().square();
    p.vec().array() -= config.learning_rate * g.vec().array() /
                       (acc.vec().array().sqrt() + config.epsilon);
  }
}

}  // namespace asd
