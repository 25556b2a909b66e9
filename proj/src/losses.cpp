// Copyright 2026 The srnlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "srnlab/losses.hpp"

#include <algorithm>
#include <cmath>

#include "srnlab/errors.hpp"
#include "srnlab/tensor.hpp"

namespace srnlab {

namespace {

constexpr double kProbabilityFloor = 1e-12;
constexpr double kNormFloor = 1e-12;

void check_label(ItemIndex label, std::size_t size) {
  if (label < 1 || static_cast<std::size_t>(label) >= size) {
    throw IndexError("label " + std::to_string(label) + " outside [1, " +
                     std::to_string(size - 1) + "]");
  }
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> onehot(ItemIndex label, std::size_t size) {
  check_label(label, size);
  std::vector<double> v(size, 0.0);
  v[static_cast<std::size_t>(label)] = 1.0;
  return v;
}

LossAndGradient cross_entropy_loss(std::span<const double> probs, ItemIndex label) {
  check_label(label, probs.size());
  LossAndGradient out;
  const double p = probs[static_cast<std::size_t>(label)];
  out.clamped = !(p >= kProbabilityFloor);
  out.loss = -std::log(out.clamped ? kProbabilityFloor : p);
  out.gradient.assign(probs.begin(), probs.end());
  out.gradient[static_cast<std::size_t>(label)] -= 1.0;
  return out;
}

void DistillConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
}

std::vector<double> tempered_softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  Matrix row(1, logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) row(0, i) = logits[i] / temperature;
  const Matrix p = softmax_rows(row);
  return {p.values().begin(), p.values().end()};
}

LossAndGradient distillation_loss(std::span<const double> student_logits, ItemIndex label,
                                  std::span<const double> teacher_probs,
                                  const DistillConfig& config) {
  config.validate();
  if (teacher_probs.size() != student_logits.size()) {
    throw DimensionError("distillation_loss: teacher has " +
                         std::to_string(teacher_probs.size()) + " classes, student " +
                         std::to_string(student_logits.size()));
  }
  Matrix logits(1, student_logits.size());
  std::copy(student_logits.begin(), student_logits.end(), logits.values().begin());
  const Matrix probs = softmax_rows(logits);
  LossAndGradient hard = cross_entropy_loss(probs.row(0), label);

  // Soft term through log-sum-exp of the tempered logits.
  const double t = config.temperature;
  const std::size_t n = student_logits.size();
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = student_logits[i] / t;
  const double mx = *std::max_element(scaled.begin(), scaled.end());
  double total = 0.0;
  for (double v : scaled) total += std::exp(v - mx);
  const double log_total = std::log(total);
  double soft = 0.0;
  std::vector<double> soft_grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double log_p = scaled[i] - mx - log_total;
    if (teacher_probs[i] != 0.0) soft -= teacher_probs[i] * log_p;
    soft_grad[i] = (std::exp(log_p) - teacher_probs[i]) / t;
  }

  const double lambda = config.lambda;
  LossAndGradient out;
  out.clamped = hard.clamped;
  out.loss = (1.0 - lambda) * hard.loss + lambda * soft;
  out.gradient.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.gradient[i] = (1.0 - lambda) * hard.gradient[i] + lambda * soft_grad[i];
  }
  return out;
}

LossAndGradient cosine_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size()) {
    throw DimensionError("cosine_loss: prediction has " + std::to_string(pred.size()) +
                         " dims, target " + std::to_string(target.size()));
  }
  const double target_norm = norm(target);
  if (!(target_norm > 0.0)) throw DataError("cosine_loss: zero-norm target embedding");
  const double pred_norm = norm(pred);
  LossAndGradient out;
  out.gradient.resize(pred.size());
  if (pred_norm < kNormFloor) {
    out.loss = 1.0;
    for (std::size_t i = 0; i < pred.size(); ++i) out.gradient[i] = -target[i] / target_norm;
    return out;
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) dot += pred[i] * target[i];
  const double cos = dot / (pred_norm * target_norm);
  out.loss = 1.0 - cos;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out.gradient[i] =
        -(target[i] / (pred_norm * target_norm) - cos * pred[i] / (pred_norm * pred_norm));
  }
  return out;
}

}  // namespace srnlab
