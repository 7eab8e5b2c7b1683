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

#include <asd/gradcheck.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace asd {

std::string GradCheckReport::summary() const {
  std::ostringstream os;
  os << (pass ? "PASS" : "FAIL") << " max_rel_err=" << max_rel_err
     << " max_abs_diff=" << max_abs_diff << " over " << entries.size()
     << " parameter tensors";
  if (!pass) {
    for (const auto& e : entries) {
      if (!e.pass) {
        os << "\n  " << e.parameter << "[" << e.worst_index
           << "] analytic=" << e.analytic << " numeric=" << e.numeric;
      }
    }
  }
  return os.str();
}

GradCheckReport check_gradients(const ScalarComputation& computation,
                                ParameterStore& parameters,
                                const GradCheckConfig& config) {
  GradientMap analytic;
  computation(parameters, &analytic);

  GradCheckReport report;
  for (auto& [name, param] : parameters.params()) {
    GradCheckEntry entry;
    entry.parameter = name;
    const Tensor& a = analytic.at(name);
    for (Index i = 0; i < param.size(); ++i) {
      const double saved = param[i];
      param[i] = saved + config.step;
      const double f_plus = computation(parameters, nullptr);
      param[i] = saved - config.step;
      const double f_minus = computation(parameters, nullptr);
      param[i] = saved;

      const double numeric = (f_plus - f_minus) / (2.0 * config.step);
      const double diff = std::abs(a[i] - numeric);
      const double denom = std::max(std::abs(a[i]), std::abs(numeric));
      const double rel = denom > config.abs_tol ? diff / denom : 0.0;
      const bool ok = diff <= config.abs_tol + config.rel_tol * denom;
      if (diff > entry.abs_diff || !ok) {
        if (!ok || rel >= entry.rel_err) {
          entry.worst_index = i;
          entry.analytic = a[i];
          entry.numeric = numeric;
        }
      }
      entry.abs_diff = std::max(entry.abs_diff, diff);
      entry.rel_err = std::max(entry.rel_err, rel);
      entry.pass = entry.pass && ok;
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.rel_err);
    report.max_abs_diff = std::max(report.max_abs_diff, entry.abs_diff);
    report.pass = report.pass && entry.pass;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace asd
