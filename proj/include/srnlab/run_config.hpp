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

#ifndef SRNLAB_RUN_CONFIG_HPP_
#define SRNLAB_RUN_CONFIG_HPP_

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "srnlab/dataset.hpp"
#include "srnlab/evaluation.hpp"
#include "srnlab/losses.hpp"
#include "srnlab/model.hpp"
#include "srnlab/training.hpp"

namespace srnlab {

// Every knob of a run, read from flat key=value files. Unknown keys are
// rejected. Every field except `data` has a default.
struct RunConfig {
  std::string data;
  std::string out = "out";
  std::uint64_t seed = 1;
  std::string fraction = "1";

  // model
  std::size_t embed_dim = 50;
  std::size_t gru_units = 100;
  std::string head = "softmax";
  std::size_t hidden_dense_units = 0;  // 0: 2 * gru_units for the embedding head
  std::size_t window = kDefaultWindow;
  double embed_dropout_rate = 0.25;

  // training
  std::size_t batch_size = 512;
  std::size_t max_epochs = 20;
  std::size_t early_stop_patience = 2;
  double validation_fraction = 0.1;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool cache_teacher = false;
  bool freeze_input_embedding = false;

  // distillation
  double lambda = 0.2;
  double temperature = 1.0;

  // evaluation
  std::size_t k = 20;
  std::size_t eval_batch_size = 512;
  double itemknn_damping = 20.0;
  std::size_t repetitions = 5;
  std::size_t bench_batches = 4;

  // preprocessing
  std::size_t min_session_length = 2;
  std::size_t min_item_support = 5;
  std::string split = "last-day";

  // synthetic data
  std::size_t n_items = 200;
  std::size_t n_sessions = 20000;
  std::size_t days = 30;
  std::size_t fanout = 5;
  double mean_length = 6.0;
  std::string shift_at;  // empty: no distribution shift

  // Throws ConfigError for unknown keys or unparseable values.
  void set(const std::string& key, const std::string& value);
  // key=value lines; '#' starts a comment line.
  void load(std::istream& in);
  void load_file(const std::string& path);
  // Canonical key=value listing of every field.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::string to_text() const;

  ModelConfig model_config(std::size_t vocab_size_with_pad) const;
  TrainConfig train_config() const;
  DistillConfig distill_config() const;
  EvalConfig eval_config() const;
  FilterOptions filter_options() const;
  SynthConfig synth_config() const;
  double fraction_value() const;
};

}  // namespace srnlab

#endif  // SRNLAB_RUN_CONFIG_HPP_
