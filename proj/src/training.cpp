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

#include "srnlab/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "srnlab/errors.hpp"

namespace srnlab {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kDropoutStream = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kTeacherStream = 0xD1B54A32D192ED03ULL;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double batch_loss_impl(const ModelParams& params, ModelParams* sink, const SequenceBlock& inputs,
                       const BatchTargets& targets, const DropoutPlan& dropout) {
  const std::size_t rows = inputs.rows;
  if (targets.labels.size() != rows) {
    throw DimensionError("batch_loss: " + std::to_string(targets.labels.size()) +
                         " labels for " + std::to_string(rows) + " rows");
  }
  EmbeddedSequence embedded = embed_block(params, inputs);
  Matrix sampled;
  const Matrix* scales = nullptr;
  if (dropout.fixed_scales) {
    scales = dropout.fixed_scales;
    for (std::size_t t = 0; t < inputs.window; ++t) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double s = (*scales)(r, t);
        for (double& v : embedded[t].row(r)) v *= s;
      }
    }
  } else if (dropout.rate > 0.0 && dropout.rng) {
    sampled = apply_embedding_dropout(embedded, inputs, dropout.rate, *dropout.rng);
    scales = &sampled;
  }

  GruTrace trace;
  Matrix final_state;
  if (sink) {
    trace = gru_forward(params, embedded, inputs);
    final_state = trace.final_state();
  } else {
    final_state = gru_final_state(params, embedded, inputs);
  }

  const double inv_rows = 1.0 / static_cast<double>(rows);
  double total = 0.0;
  Matrix d_final;
  if (params.head == HeadType::kSoftmax) {
    const Matrix logits = softmax_logits(params, final_state);
    const Matrix probs = softmax_rows(logits);
    Matrix d_logits(rows, logits.cols());
    for (std::size_t r = 0; r < rows; ++r) {
      const bool distill = targets.teacher_probs && targets.has_teacher[r] != 0;
      const LossAndGradient lg =
          distill ? distillation_loss(logits.row(r), targets.labels[r],
                                      targets.teacher_probs->row(r), targets.distill)
                  : cross_entropy_loss(probs.row(r), targets.labels[r]);
      total += lg.loss;
      auto dst = d_logits.row(r);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = lg.gradient[j] * inv_rows;
    }
    if (sink) d_final = softmax_head_backward(*sink, final_state, d_logits);
  } else {
    if (!targets.target_vectors) throw ConfigError("embedding head needs target vectors");
    const EmbeddingHeadTrace head = embedding_head_forward(params, final_state);
    Matrix d_output(rows, head.output.cols());
    for (std::size_t r = 0; r < rows; ++r) {
      const LossAndGradient lg = cosine_loss(head.output.row(r), targets.target_vectors->row(r));
      total += lg.loss;
      auto dst = d_output.row(r);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = lg.gradient[j] * inv_rows;
    }
    if (sink) d_final = embedding_head_backward(*sink, final_state, head, d_output);
  }

  if (sink) {
    const EmbeddedSequence d_embedded = gru_backward(*sink, embedded, inputs, trace, d_final);
    embedding_backward(*sink, inputs, d_embedded, scales);
  }
  return total * inv_rows;
}

BatchTargets hard_targets(const MiniBatch& batch) {
  BatchTargets t;
  t.labels = batch.labels;
  return t;
}

BatchTargets vector_targets(const MiniBatch& batch, const Matrix& target_embeddings) {
  BatchTargets t;
  t.labels = batch.labels;
  Matrix v(batch.size(), target_embeddings.cols());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const auto src = target_embeddings.row(static_cast<std::size_t>(batch.labels[r]));
    std::copy(src.begin(), src.end(), v.row(r).begin());
  }
  t.target_vectors = std::move(v);
  return t;
}

struct LoopSpec {
  std::function<BatchTargets(const MiniBatch&)> targets;
  std::function<double(const ModelParams&)> validation_loss;
  bool with_privileged = false;
  bool update_embedding = true;
};

std::vector<Matrix> snapshot(const ModelParams& params) {
  std::vector<Matrix> out;
  for (const Parameter* p : params.list()) out.push_back(p->value);
  return out;
}

void restore(ModelParams& params, const std::vector<Matrix>& values) {
  auto list = params.list();
  for (std::size_t i = 0; i < list.size(); ++i) list[i]->value = values[i];
}

TrainReport run_training(ModelParams& params, const ModelConfig& model,
                         const std::vector<TrainingExample>& train_set, std::size_t val_count,
                         const TrainConfig& config, const LoopSpec& spec,
                         const EpochCallback& on_epoch) {
  const auto start = Clock::now();
  TrainReport report;
  report.train_examples = train_set.size();
  report.val_examples = val_count;

  std::mt19937_64 shuffle_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ kDropoutStream);
  AdamConfig adam = config.adam;
  adam.step_count = 0;
  const BatchOptions options{config.batch_size, model.window, spec.with_privileged, true};

  double best = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_values = snapshot(params);
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    const auto batches = make_batches(train_set, options, shuffle_rng);
    double weighted = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      params.zero_grad();
      const BatchTargets targets = spec.targets(batch);
      const DropoutPlan dropout{model.embed_dropout_rate, &dropout_rng, nullptr};
      const double loss = batch_loss(params, batch.inputs, targets, dropout);
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(b + 1));
      }
      weighted += loss * static_cast<double>(batch.size());
      ++adam.step_count;
      for (Parameter* p : params.list()) {
        if (!spec.update_embedding && p == &params.embedding) continue;
        adam_step(*p, adam);
      }
    }
    const double train_loss = weighted / static_cast<double>(train_set.size());
    const double val_loss = spec.validation_loss ? spec.validation_loss(params) : train_loss;
    if (!std::isfinite(val_loss)) {
      throw NumericError("training diverged: non-finite validation loss at epoch " +
                         std::to_string(epoch));
    }
    report.train_loss.push_back(train_loss);
    report.val_loss.push_back(val_loss);
    report.epoch_seconds.push_back(seconds_since(epoch_start));
    report.stopped_epoch = epoch;
    if (on_epoch) on_epoch(EpochLog{epoch, train_loss, val_loss, report.epoch_seconds.back()});
    if (val_loss < best) {
      best = val_loss;
      report.best_epoch = epoch;
      best_values = snapshot(params);
    } else if (epoch - report.best_epoch >= config.early_stop_patience) {
      break;
    }
  }
  restore(params, best_values);
  params.zero_grad();
  params.reset_optimizer();
  report.best_val_loss = report.best_epoch > 0
                             ? best
                             : (spec.validation_loss ? spec.validation_loss(params) : 0.0);
  report.wall_seconds = seconds_since(start);
  return report;
}

Checkpoint make_checkpoint(const ModelConfig& model, ModelParams params, const char* kind) {
  Checkpoint c;
  c.config = model;
  c.params = std::move(params);
  c.metadata.emplace_back("kind", kind);
  return c;
}

std::function<double(const ModelParams&)> loss_on(const std::vector<TrainingExample>& examples,
                                                  std::size_t window, std::size_t batch_size,
                                                  const Matrix* targets = nullptr) {
  if (examples.empty()) return {};
  return [&examples, window, batch_size, targets](const ModelParams& p) {
    return evaluate_loss(p, examples, window, batch_size, targets);
  };
}

Matrix teacher_distribution(const ModelParams& teacher, const SequenceBlock& block,
                            double temperature) {
  Matrix logits = forward_logits(teacher, block);
  if (temperature != 1.0) {
    for (double& v : logits.values()) v /= temperature;
  }
  return softmax_rows(logits);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  adam.validate();
}

bool TrainReport::same_outcome(const TrainReport& other) const {
  return train_loss == other.train_loss && val_loss == other.val_loss &&
         stopped_epoch == other.stopped_epoch && best_epoch == other.best_epoch &&
         best_val_loss == other.best_val_loss && train_examples == other.train_examples &&
         val_examples == other.val_examples;
}

double batch_loss(ModelParams& params, const SequenceBlock& inputs, const BatchTargets& targets,
                  const DropoutPlan& dropout) {
  return batch_loss_impl(params, &params, inputs, targets, dropout);
}

double batch_loss_value(const ModelParams& params, const SequenceBlock& inputs,
                        const BatchTargets& targets) {
  return batch_loss_impl(params, nullptr, inputs, targets, DropoutPlan{});
}

double evaluate_loss(const ModelParams& params, const std::vector<TrainingExample>& examples,
                     std::size_t window, std::size_t batch_size,
                     const Matrix* target_embeddings) {
  if (examples.empty()) return 0.0;
  const BatchOptions options{batch_size, window, false, false};
  const auto batches = make_batches(examples, options, std::uint64_t{0});
  double weighted = 0.0;
  for (const auto& batch : batches) {
    const BatchTargets targets =
        target_embeddings ? vector_targets(batch, *target_embeddings) : hard_targets(batch);
    weighted += batch_loss_value(params, batch.inputs, targets) * static_cast<double>(batch.size());
  }
  return weighted / static_cast<double>(examples.size());
}

std::vector<TrainingExample> teacher_examples(const std::vector<TrainingExample>& examples) {
  std::vector<TrainingExample> out;
  for (const auto& ex : examples) {
    if (ex.privileged.empty()) continue;
    TrainingExample t;
    t.prefix = ex.privileged;
    t.label = ex.label;
    t.session_start = ex.session_start;
    out.push_back(std::move(t));
  }
  return out;
}

TrainResult train_m1(const std::vector<TrainingExample>& examples, const ModelConfig& model,
                     const TrainConfig& train, const EpochCallback& on_epoch) {
  model.validate();
  train.validate();
  if (model.head != HeadType::kSoftmax) throw ConfigError("train_m1 needs a softmax head");
  auto [train_set, val_set] = temporal_holdout(examples, train.validation_fraction);
  ModelParams params = init_params(model, train.seed);
  LoopSpec spec;
  spec.targets = hard_targets;
  spec.validation_loss = loss_on(val_set, model.window, train.batch_size);
  TrainReport report = run_training(params, model, train_set, val_set.size(), train, spec, on_epoch);
  return {make_checkpoint(model, std::move(params), "m1"), std::move(report)};
}

TrainResult finetune_m2(const Checkpoint& base, const ModelConfig& model,
                        const std::vector<TrainingExample>& recent_examples,
                        const TrainConfig& train, const EpochCallback& on_epoch) {
  require_compatible(base.config, model);
  train.validate();
  if (model.head != HeadType::kSoftmax) throw ConfigError("finetune_m2 needs a softmax head");
  auto [train_set, val_set] = temporal_holdout(recent_examples, train.validation_fraction);
  ModelParams params = base.params;
  params.zero_grad();
  params.reset_optimizer();
  LoopSpec spec;
  spec.targets = hard_targets;
  spec.validation_loss = loss_on(val_set, model.window, train.batch_size);
  TrainReport report = run_training(params, model, train_set, val_set.size(), train, spec, on_epoch);
  return {make_checkpoint(model, std::move(params), "m2"), std::move(report)};
}

DistillResult train_m3(const std::vector<TrainingExample>& examples, const ModelConfig& model,
                       const TrainConfig& train, const DistillConfig& distill,
                       const EpochCallback& on_epoch) {
  model.validate();
  train.validate();
  distill.validate();
  if (model.head != HeadType::kSoftmax) throw ConfigError("train_m3 needs a softmax head");
  auto [train_set, val_set] = temporal_holdout(examples, train.validation_fraction);

  const auto teacher_train = teacher_examples(train_set);
  const auto teacher_val = teacher_examples(val_set);
  if (teacher_train.empty()) {
    throw DataError("train_m3: no training example carries a privileged sequence");
  }
  TrainConfig teacher_config = train;
  teacher_config.seed = train.seed ^ kTeacherStream;
  ModelParams teacher = init_params(model, teacher_config.seed);
  LoopSpec teacher_spec;
  teacher_spec.targets = hard_targets;
  teacher_spec.validation_loss = loss_on(teacher_val, model.window, train.batch_size);
  TrainReport teacher_report = run_training(teacher, model, teacher_train, teacher_val.size(),
                                            teacher_config, teacher_spec, on_epoch);

  std::optional<Matrix> cache;
  if (train.cache_teacher) {
    cache = Matrix(train_set.size(), model.vocab_size_with_pad);
    const BatchOptions options{train.batch_size, model.window, true, false};
    for (const auto& batch : make_batches(train_set, options, std::uint64_t{0})) {
      const Matrix probs = teacher_distribution(teacher, *batch.privileged, distill.temperature);
      for (std::size_t r = 0; r < batch.size(); ++r) {
        std::copy(probs.row(r).begin(), probs.row(r).end(),
                  cache->row(batch.example_ids[r]).begin());
      }
    }
  }

  ModelParams student = init_params(model, train.seed);
  LoopSpec spec;
  spec.with_privileged = true;
  spec.targets = [&](const MiniBatch& batch) {
    BatchTargets t = hard_targets(batch);
    t.distill = distill;
    t.has_teacher.resize(batch.size());
    for (std::size_t r = 0; r < batch.size(); ++r) {
      t.has_teacher[r] = batch.privileged->real_count(r) > 0 ? 1 : 0;
    }
    if (cache) {
      Matrix probs(batch.size(), cache->cols());
      for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto src = cache->row(batch.example_ids[r]);
        std::copy(src.begin(), src.end(), probs.row(r).begin());
      }
      t.teacher_probs = std::move(probs);
    } else {
      t.teacher_probs = teacher_distribution(teacher, *batch.privileged, distill.temperature);
    }
    return t;
  };
  spec.validation_loss = loss_on(val_set, model.window, train.batch_size);
  TrainReport student_report =
      run_training(student, model, train_set, val_set.size(), train, spec, on_epoch);

  Checkpoint teacher_ckpt = make_checkpoint(model, std::move(teacher), "m3-teacher");
  Checkpoint student_ckpt = make_checkpoint(model, std::move(student), "m3-student");
  student_ckpt.metadata.emplace_back("lambda", format_double(distill.lambda));
  student_ckpt.metadata.emplace_back("temperature", format_double(distill.temperature));
  return {{std::move(teacher_ckpt), std::move(teacher_report)},
          {std::move(student_ckpt), std::move(student_report)}};
}

TrainResult train_m4(const std::vector<TrainingExample>& examples, const ModelConfig& model,
                     const Matrix& target_embeddings, const TrainConfig& train,
                     const EpochCallback& on_epoch) {
  model.validate();
  train.validate();
  if (model.head != HeadType::kEmbedding) throw ConfigError("train_m4 needs an embedding head");
  if (target_embeddings.rows() != model.vocab_size_with_pad ||
      target_embeddings.cols() != model.embed_dim) {
    throw DimensionError("train_m4: target embeddings are " + target_embeddings.shape_string() +
                         ", expected " + std::to_string(model.vocab_size_with_pad) + "x" +
                         std::to_string(model.embed_dim));
  }
  std::string degenerate;
  std::size_t degenerate_count = 0;
  for (std::size_t i = 1; i < target_embeddings.rows(); ++i) {
    double sq = 0.0;
    for (double v : target_embeddings.row(i)) sq += v * v;
    if (!(sq > 0.0) || !std::isfinite(sq)) {
      if (degenerate_count++ < 10) degenerate += (degenerate.empty() ? "" : ", ") + std::to_string(i);
    }
  }
  if (degenerate_count > 0) {
    throw DataError("train_m4: " + std::to_string(degenerate_count) +
                    " degenerate target embedding rows (items " + degenerate +
                    (degenerate_count > 10 ? ", ..." : "") + ")");
  }

  auto [train_set, val_set] = temporal_holdout(examples, train.validation_fraction);
  ModelParams params = init_params(model, train.seed);
  params.embedding.value = target_embeddings;
  for (double& v : params.embedding.value.row(kPaddingIndex)) v = 0.0;

  LoopSpec spec;
  spec.targets = [&](const MiniBatch& batch) { return vector_targets(batch, target_embeddings); };
  spec.validation_loss = loss_on(val_set, model.window, train.batch_size, &target_embeddings);
  spec.update_embedding = !train.freeze_input_embedding;
  TrainReport report = run_training(params, model, train_set, val_set.size(), train, spec, on_epoch);

  Checkpoint c = make_checkpoint(model, std::move(params), "m4");
  c.target_embeddings = target_embeddings;
  return {std::move(c), std::move(report)};
}

}  // namespace srnlab
