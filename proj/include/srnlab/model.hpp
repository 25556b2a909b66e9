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

// Item-embedding GRU network with a softmax head (next-item classification)
// or an embedding head (predicts the next item's embedding vector).
//
// Sequences are left-padded; padded steps are skipped entirely, so the
// hidden state passes through them unchanged and they receive no gradient.

#ifndef SRNLAB_MODEL_HPP_
#define SRNLAB_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "srnlab/dataset.hpp"
#include "srnlab/tensor.hpp"

namespace srnlab {

enum class HeadType { kSoftmax, kEmbedding };

std::string to_string(HeadType head);
HeadType parse_head_type(const std::string& text);

struct ModelConfig {
  std::size_t vocab_size_with_pad = 0;
  std::size_t embed_dim = 50;
  std::size_t gru_units = 100;
  HeadType head = HeadType::kSoftmax;
  // Embedding head only; 0 elsewhere.
  std::size_t hidden_dense_units = 0;
  std::size_t window = kDefaultWindow;
  double embed_dropout_rate = 0.25;

  void validate() const;
  std::size_t item_count() const { return vocab_size_with_pad - 1; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ModelParams {
  HeadType head = HeadType::kSoftmax;

  Parameter embedding;  // (m+1) x D, row 0 is padding and stays zero
  Parameter w_z, w_r, w_h;  // D x H
  Parameter u_z, u_r, u_h;  // H x H
  Parameter b_z, b_r, b_h;  // 1 x H

  Parameter w_out, b_out;  // H x (m+1), 1 x (m+1)

  Parameter w_hid;  // H x hidden
  Parameter w_emb;  // hidden x D
  Parameter b_emb;  // 1 x D

  // Parameters present for this head, in checkpoint order.
  std::vector<Parameter*> list();
  std::vector<const Parameter*> list() const;

  void zero_grad();
  void reset_optimizer();
  std::size_t scalar_count() const;
  std::size_t embed_dim() const { return embedding.value.cols(); }
  std::size_t gru_units() const { return u_z.value.rows(); }
};

// Uniform(-s, s), s = sqrt(6 / (fan_in + fan_out)); zero biases; zero padding row.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

std::size_t count_params(const ModelConfig& config);

// One rows x D matrix per timestep; padded positions are zero.
using EmbeddedSequence = std::vector<Matrix>;

EmbeddedSequence embed_block(const ModelParams& params, const SequenceBlock& block);

// Zeros whole embedding vectors at real positions with probability `rate`
// and rescales survivors by 1/(1-rate). Returns the rows x window scale
// factors applied (1 at padding) so the backward pass can route gradients.
Matrix apply_embedding_dropout(EmbeddedSequence& embedded, const SequenceBlock& block,
                               double rate, std::mt19937_64& rng);

struct GruTrace {
  std::vector<Matrix> update;     // z_t
  std::vector<Matrix> reset;      // r_t
  std::vector<Matrix> candidate;  // h~_t
  std::vector<Matrix> hidden;     // h_0 .. h_T (T + 1 entries)

  const Matrix& final_state() const { return hidden.back(); }
};

GruTrace gru_forward(const ModelParams& params, const EmbeddedSequence& embedded,
                     const SequenceBlock& block);

// Final hidden state only; no trace is kept.
Matrix gru_final_state(const ModelParams& params, const EmbeddedSequence& embedded,
                       const SequenceBlock& block);

// Accumulates GRU parameter gradients and returns the gradient with respect
// to every embedded input (zero at padded steps).
EmbeddedSequence gru_backward(ModelParams& params, const EmbeddedSequence& embedded,
                              const SequenceBlock& block, const GruTrace& trace,
                              const Matrix& d_final);

// Scatters input gradients into embedding rows; `scales` may be null.
void embedding_backward(ModelParams& params, const SequenceBlock& block,
                        const EmbeddedSequence& d_embedded, const Matrix* scales);

Matrix softmax_logits(const ModelParams& params, const Matrix& final_state);
// Accumulates head gradients; returns d final_state.
Matrix softmax_head_backward(ModelParams& params, const Matrix& final_state,
                             const Matrix& d_logits);

struct EmbeddingHeadTrace {
  Matrix pre_activation;
  Matrix hidden;  // relu(pre_activation)
  Matrix output;
};

EmbeddingHeadTrace embedding_head_forward(const ModelParams& params, const Matrix& final_state);
Matrix embedding_head_backward(ModelParams& params, const Matrix& final_state,
                               const EmbeddingHeadTrace& trace, const Matrix& d_output);

// Inference helpers (no dropout).
Matrix forward_logits(const ModelParams& params, const SequenceBlock& block);
Matrix forward_softmax(const ModelParams& params, const SequenceBlock& block);
Matrix forward_embedding_output(const ModelParams& params, const SequenceBlock& block);

}  // namespace srnlab

#endif  // SRNLAB_MODEL_HPP_
