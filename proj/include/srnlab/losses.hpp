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

#ifndef SRNLAB_LOSSES_HPP_
#define SRNLAB_LOSSES_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "srnlab/dataset.hpp"

namespace srnlab {

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
  // Set when a zero probability had to be clamped at 1e-12.
  bool clamped = false;
};

// Indicator vector of `label` over `size` slots; label must lie in [1, size).
std::vector<double> onehot(ItemIndex label, std::size_t size);

// -ln(probs[label]) and the fused softmax + cross-entropy logit gradient
// probs - onehot(label).
LossAndGradient cross_entropy_loss(std::span<const double> probs, ItemIndex label);

struct DistillConfig {
  double lambda = 0.2;
  double temperature = 1.0;

  void validate() const;
};

// softmax(logits / temperature)
std::vector<double> tempered_softmax(std::span<const double> logits, double temperature);

// (1 - lambda) * CE(softmax(z), label) + lambda * CE(softmax(z / T), teacher)
// where CE(p, q) = -sum q_i ln p_i and teacher_probs is already tempered.
// The gradient is exact with respect to the student logits z.
LossAndGradient distillation_loss(std::span<const double> student_logits, ItemIndex label,
                                  std::span<const double> teacher_probs,
                                  const DistillConfig& config);

// 1 - cos(pred, target) and its gradient with respect to pred. Throws
// DataError on a zero-norm target.
LossAndGradient cosine_loss(std::span<const double> pred, std::span<const double> target);

}  // namespace srnlab

#endif  // SRNLAB_LOSSES_HPP_
