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

// Mini-batch Adam training drivers:
//   train_m1     cross-entropy on augmented prefixes with embedding dropout
//   finetune_m2  re-train a pre-trained model on a recent slice of the data
//   train_m3     teacher on privileged futures, then a distilled student
//   train_m4     embedding head trained with cosine loss against frozen targets
// All drivers hold out the most recent examples for early stopping and
// return the parameters of the best validation epoch.

#ifndef SRNLAB_TRAINING_HPP_
#define SRNLAB_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "srnlab/checkpoint.hpp"
#include "srnlab/dataset.hpp"
#include "srnlab/losses.hpp"
#include "srnlab/model.hpp"

namespace srnlab {

struct TrainConfig {
  std::size_t batch_size = 512;
  std::size_t max_epochs = 20;
  std::size_t early_stop_patience = 2;
  double validation_fraction = 0.1;
  AdamConfig adam;
  std::uint64_t seed = 1;
  // Distillation: precompute teacher soft labels once instead of per batch.
  bool cache_teacher = false;
  // Embedding head: keep the input table fixed at the target embeddings.
  bool freeze_input_embedding = false;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> epoch_seconds;
  std::size_t stopped_epoch = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double wall_seconds = 0.0;
  std::size_t train_examples = 0;
  std::size_t val_examples = 0;

  // Everything except timings, for determinism checks.
  bool same_outcome(const TrainReport& other) const;
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct TrainResult {
  Checkpoint checkpoint;
  TrainReport report;
};

struct DistillResult {
  TrainResult teacher;
  TrainResult student;
};

// Per-batch supervision. Plain cross-entropy on `labels` unless teacher
// distributions (distillation) or target vectors (embedding head) are set.
struct BatchTargets {
  std::vector<ItemIndex> labels;
  // rows x (m+1), already tempered. Rows with has_teacher == 0 fall back to
  // the hard label alone.
  std::optional<Matrix> teacher_probs;
  std::vector<std::uint8_t> has_teacher;
  DistillConfig distill;
  std::optional<Matrix> target_vectors;  // rows x D
};

struct DropoutPlan {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
  // When set, these scales are applied instead of sampling a fresh mask.
  const Matrix* fixed_scales = nullptr;
};

// Mean loss over the batch rows; gradients of that mean are accumulated
// into params (callers zero them first).
double batch_loss(ModelParams& params, const SequenceBlock& inputs, const BatchTargets& targets,
                  const DropoutPlan& dropout);

// Forward-only mean loss, no dropout.
double batch_loss_value(const ModelParams& params, const SequenceBlock& inputs,
                        const BatchTargets& targets);

TrainResult train_m1(const std::vector<TrainingExample>& examples, const ModelConfig& model,
                     const TrainConfig& train, const EpochCallback& on_epoch = {});

TrainResult finetune_m2(const Checkpoint& base, const ModelConfig& model,
                        const std::vector<TrainingExample>& recent_examples,
                        const TrainConfig& train, const EpochCallback& on_epoch = {});

DistillResult train_m3(const std::vector<TrainingExample>& examples, const ModelConfig& model,
                       const TrainConfig& train, const DistillConfig& distill,
                       const EpochCallback& on_epoch = {});

// target_embeddings: (m+1) x D, every real item row non-zero.
TrainResult train_m4(const std::vector<TrainingExample>& examples, const ModelConfig& model,
                     const Matrix& target_embeddings, const TrainConfig& train,
                     const EpochCallback& on_epoch = {});

// Mean cross-entropy (softmax head) or cosine loss (embedding head, needs
// targets) over the examples, no dropout.
double evaluate_loss(const ModelParams& params, const std::vector<TrainingExample>& examples,
                     std::size_t window, std::size_t batch_size,
                     const Matrix* target_embeddings = nullptr);

// Reversed-future teacher inputs: (privileged -> label) for examples with a
// non-empty privileged sequence.
std::vector<TrainingExample> teacher_examples(const std::vector<TrainingExample>& examples);

}  // namespace srnlab

#endif  // SRNLAB_TRAINING_HPP_
