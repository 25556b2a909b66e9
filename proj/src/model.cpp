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

#include "srnlab/model.hpp"

#include <cmath>

#include "srnlab/errors.hpp"

namespace srnlab {

std::string to_string(HeadType head) {
  return head == HeadType::kSoftmax ? "softmax" : "embedding";
}

HeadType parse_head_type(const std::string& text) {
  if (text == "softmax") return HeadType::kSoftmax;
  if (text == "embedding") return HeadType::kEmbedding;
  throw ConfigError("unknown head '" + text + "' (expected softmax or embedding)");
}

void ModelConfig::validate() const {
  if (vocab_size_with_pad < 2) throw ConfigError("vocab_size_with_pad must be at least 2");
  if (embed_dim == 0) throw ConfigError("embed_dim must be positive");
  if (gru_units == 0) throw ConfigError("gru_units must be positive");
  if (window == 0) throw ConfigError("window must be positive");
  if (!(embed_dropout_rate >= 0.0 && embed_dropout_rate < 1.0)) {
    throw ConfigError("embed_dropout_rate must lie in [0, 1)");
  }
  if ((head == HeadType::kEmbedding) != (hidden_dense_units > 0)) {
    throw ConfigError("hidden_dense_units must be set exactly when head == embedding");
  }
}

std::vector<Parameter*> ModelParams::list() {
  std::vector<Parameter*> out{&embedding, &w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h};
  if (head == HeadType::kSoftmax) {
    out.insert(out.end(), {&w_out, &b_out});
  } else {
    out.insert(out.end(), {&w_hid, &w_emb, &b_emb});
  }
  return out;
}

std::vector<const Parameter*> ModelParams::list() const {
  auto mutable_list = const_cast<ModelParams*>(this)->list();
  return {mutable_list.begin(), mutable_list.end()};
}

void ModelParams::zero_grad() {
  for (auto* p : list()) p->zero_grad();
}

void ModelParams::reset_optimizer() {
  for (auto* p : list()) p->reset_optimizer();
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto* p : list()) n += p->value.size();
  return n;
}

std::size_t count_params(const ModelConfig& config) {
  config.validate();
  const std::size_t v = config.vocab_size_with_pad;
  const std::size_t d = config.embed_dim;
  const std::size_t h = config.gru_units;
  const std::size_t gru = 3 * (d * h + h * h + h);
  std::size_t head = 0;
  if (config.head == HeadType::kSoftmax) {
    head = h * v + v;
  } else {
    head = h * config.hidden_dense_units + config.hidden_dense_units * d + d;
  }
  return v * d + gru + head;
}

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-s, s);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::size_t> active_rows(const SequenceBlock& block, std::size_t t) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < block.rows; ++r) {
    if (block.real(r, t)) rows.push_back(r);
  }
  return rows;
}

Matrix gather(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

void scatter(const Matrix& src, const std::vector<std::size_t>& rows, Matrix& dst) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(src.row(i).begin(), src.row(i).end(), dst.row(rows[i]).begin());
  }
}

// x * w + h * u + b
Matrix affine2(const Matrix& x, const Matrix& w, const Matrix& h, const Matrix& u,
               const Matrix& b) {
  Matrix out = matmul(x, w);
  const Matrix rec = matmul(h, u);
  auto o = out.values();
  auto r = rec.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += r[i];
  add_row_vector(out, b);
  return out;
}

struct StepResult {
  Matrix z, r, candidate, h;
};

StepResult gru_step(const ModelParams& p, const Matrix& x, const Matrix& h_prev) {
  StepResult s;
  s.z = affine2(x, p.w_z.value, h_prev, p.u_z.value, p.b_z.value);
  s.r = affine2(x, p.w_r.value, h_prev, p.u_r.value, p.b_r.value);
  for (double& v : s.z.values()) v = sigmoid(v);
  for (double& v : s.r.values()) v = sigmoid(v);
  Matrix gated = h_prev;
  {
    auto g = gated.values();
    auto r = s.r.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= r[i];
  }
  s.candidate = affine2(x, p.w_h.value, gated, p.u_h.value, p.b_h.value);
  for (double& v : s.candidate.values()) v = std::tanh(v);
  s.h = Matrix(h_prev.rows(), h_prev.cols());
  auto h = s.h.values();
  auto hp = h_prev.values();
  auto z = s.z.values();
  auto c = s.candidate.values();
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = (1.0 - z[i]) * hp[i] + z[i] * c[i];
  return s;
}

template <bool kKeepTrace>
Matrix run_gru(const ModelParams& params, const EmbeddedSequence& embedded,
               const SequenceBlock& block, GruTrace* trace) {
  const std::size_t hdim = params.gru_units();
  if (embedded.size() != block.window) {
    throw DimensionError("gru_forward: embedded sequence length " +
                         std::to_string(embedded.size()) + " != window " +
                         std::to_string(block.window));
  }
  Matrix h(block.rows, hdim);
  if constexpr (kKeepTrace) {
    trace->hidden.assign(1, h);
    trace->update.clear();
    trace->reset.clear();
    trace->candidate.clear();
  }
  for (std::size_t t = 0; t < block.window; ++t) {
    const auto rows = active_rows(block, t);
    Matrix z(block.rows, hdim), r(block.rows, hdim), c(block.rows, hdim);
    if (!rows.empty()) {
      const auto step = gru_step(params, gather(embedded[t], rows), gather(h, rows));
      scatter(step.h, rows, h);
      if constexpr (kKeepTrace) {
        scatter(step.z, rows, z);
        scatter(step.r, rows, r);
        scatter(step.candidate, rows, c);
      }
    }
    if constexpr (kKeepTrace) {
      trace->update.push_back(std::move(z));
      trace->reset.push_back(std::move(r));
      trace->candidate.push_back(std::move(c));
      trace->hidden.push_back(h);
    }
  }
  return h;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const std::size_t v = config.vocab_size_with_pad;
  const std::size_t d = config.embed_dim;
  const std::size_t h = config.gru_units;

  ModelParams p;
  p.head = config.head;
  Matrix table = uniform_matrix(v, d, rng);
  for (double& x : table.row(kPaddingIndex)) x = 0.0;
  p.embedding = Parameter("embedding", std::move(table));
  p.w_z = Parameter("gru.w_z", uniform_matrix(d, h, rng));
  p.w_r = Parameter("gru.w_r", uniform_matrix(d, h, rng));
  p.w_h = Parameter("gru.w_h", uniform_matrix(d, h, rng));
  p.u_z = Parameter("gru.u_z", uniform_matrix(h, h, rng));
  p.u_r = Parameter("gru.u_r", uniform_matrix(h, h, rng));
  p.u_h = Parameter("gru.u_h", uniform_matrix(h, h, rng));
  p.b_z = Parameter("gru.b_z", Matrix(1, h));
  p.b_r = Parameter("gru.b_r", Matrix(1, h));
  p.b_h = Parameter("gru.b_h", Matrix(1, h));
  if (config.head == HeadType::kSoftmax) {
    p.w_out = Parameter("head.w_out", uniform_matrix(h, v, rng));
    p.b_out = Parameter("head.b_out", Matrix(1, v));
  } else {
    const std::size_t hd = config.hidden_dense_units;
    p.w_hid = Parameter("head.w_hid", uniform_matrix(h, hd, rng));
    p.w_emb = Parameter("head.w_emb", uniform_matrix(hd, d, rng));
    p.b_emb = Parameter("head.b_emb", Matrix(1, d));
  }
  return p;
}

EmbeddedSequence embed_block(const ModelParams& params, const SequenceBlock& block) {
  const std::size_t d = params.embed_dim();
  const std::size_t vocab = params.embedding.value.rows();
  EmbeddedSequence out(block.window, Matrix(block.rows, d));
  for (std::size_t r = 0; r < block.rows; ++r) {
    for (std::size_t t = 0; t < block.window; ++t) {
      if (!block.real(r, t)) continue;
      const ItemIndex item = block.item(r, t);
      if (item <= 0 || static_cast<std::size_t>(item) >= vocab) {
        throw IndexError("item index " + std::to_string(item) + " outside [1, " +
                         std::to_string(vocab - 1) + "]");
      }
      const auto src = params.embedding.value.row(static_cast<std::size_t>(item));
      std::copy(src.begin(), src.end(), out[t].row(r).begin());
    }
  }
  return out;
}

Matrix apply_embedding_dropout(EmbeddedSequence& embedded, const SequenceBlock& block,
                               double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  Matrix scales(block.rows, block.window, 1.0);
  if (rate == 0.0) return scales;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t r = 0; r < block.rows; ++r) {
    for (std::size_t t = 0; t < block.window; ++t) {
      if (!block.real(r, t)) continue;
      const double s = uniform(rng) < rate ? 0.0 : keep_scale;
      scales(r, t) = s;
      for (double& v : embedded[t].row(r)) v *= s;
    }
  }
  return scales;
}

GruTrace gru_forward(const ModelParams& params, const EmbeddedSequence& embedded,
                     const SequenceBlock& block) {
  GruTrace trace;
  run_gru<true>(params, embedded, block, &trace);
  return trace;
}

Matrix gru_final_state(const ModelParams& params, const EmbeddedSequence& embedded,
                       const SequenceBlock& block) {
  return run_gru<false>(params, embedded, block, nullptr);
}

EmbeddedSequence gru_backward(ModelParams& params, const EmbeddedSequence& embedded,
                              const SequenceBlock& block, const GruTrace& trace,
                              const Matrix& d_final) {
  const std::size_t hdim = params.gru_units();
  EmbeddedSequence d_embedded(block.window, Matrix(block.rows, params.embed_dim()));
  Matrix dh = d_final;
  for (std::size_t step = block.window; step-- > 0;) {
    const auto rows = active_rows(block, step);
    if (rows.empty()) continue;
    const Matrix x = gather(embedded[step], rows);
    const Matrix hp = gather(trace.hidden[step], rows);
    const Matrix z = gather(trace.update[step], rows);
    const Matrix r = gather(trace.reset[step], rows);
    const Matrix c = gather(trace.candidate[step], rows);
    const Matrix g = gather(dh, rows);
    const std::size_t n = rows.size() * hdim;

    Matrix da_z(rows.size(), hdim), da_h(rows.size(), hdim), dhp(rows.size(), hdim);
    {
      auto gz = da_z.values(), gh = da_h.values(), gp = dhp.values();
      auto zv = z.values(), cv = c.values(), hv = hp.values(), gv = g.values();
      for (std::size_t i = 0; i < n; ++i) {
        gz[i] = gv[i] * (cv[i] - hv[i]) * zv[i] * (1.0 - zv[i]);
        gh[i] = gv[i] * zv[i] * (1.0 - cv[i] * cv[i]);
        gp[i] = gv[i] * (1.0 - zv[i]);
      }
    }
    Matrix gated = hp;
    for (std::size_t i = 0; i < n; ++i) gated.values()[i] *= r.values()[i];

    // Candidate path: a_h = x W_h + (r * h_prev) U_h + b_h.
    accumulate_matmul_tn(x, da_h, params.w_h.grad);
    accumulate_matmul_tn(gated, da_h, params.u_h.grad);
    accumulate_column_sums(da_h, params.b_h.grad);
    const Matrix d_gated = matmul_nt(da_h, params.u_h.value);

    Matrix da_r(rows.size(), hdim);
    {
      auto gr = da_r.values(), gp = dhp.values();
      auto dg = d_gated.values(), hv = hp.values(), rv = r.values();
      for (std::size_t i = 0; i < n; ++i) {
        gr[i] = dg[i] * hv[i] * rv[i] * (1.0 - rv[i]);
        gp[i] += dg[i] * rv[i];
      }
    }

    accumulate_matmul_tn(x, da_z, params.w_z.grad);
    accumulate_matmul_tn(hp, da_z, params.u_z.grad);
    accumulate_column_sums(da_z, params.b_z.grad);
    accumulate_matmul_tn(x, da_r, params.w_r.grad);
    accumulate_matmul_tn(hp, da_r, params.u_r.grad);
    accumulate_column_sums(da_r, params.b_r.grad);

    const Matrix from_z = matmul_nt(da_z, params.u_z.value);
    const Matrix from_r = matmul_nt(da_r, params.u_r.value);
    for (std::size_t i = 0; i < n; ++i) {
      dhp.values()[i] += from_z.values()[i] + from_r.values()[i];
    }

    Matrix dx = matmul_nt(da_z, params.w_z.value);
    const Matrix dx_r = matmul_nt(da_r, params.w_r.value);
    const Matrix dx_h = matmul_nt(da_h, params.w_h.value);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx.values()[i] += dx_r.values()[i] + dx_h.values()[i];
    }
    scatter(dx, rows, d_embedded[step]);
    scatter(dhp, rows, dh);
  }
  return d_embedded;
}

void embedding_backward(ModelParams& params, const SequenceBlock& block,
                        const EmbeddedSequence& d_embedded, const Matrix* scales) {
  for (std::size_t t = 0; t < block.window; ++t) {
    for (std::size_t r = 0; r < block.rows; ++r) {
      if (!block.real(r, t)) continue;
      const double s = scales ? (*scales)(r, t) : 1.0;
      if (s == 0.0) continue;
      auto dst = params.embedding.grad.row(static_cast<std::size_t>(block.item(r, t)));
      const auto src = d_embedded[t].row(r);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += s * src[j];
    }
  }
}

Matrix softmax_logits(const ModelParams& params, const Matrix& final_state) {
  Matrix logits = matmul(final_state, params.w_out.value);
  add_row_vector(logits, params.b_out.value);
  return logits;
}

Matrix softmax_head_backward(ModelParams& params, const Matrix& final_state,
                             const Matrix& d_logits) {
  accumulate_matmul_tn(final_state, d_logits, params.w_out.grad);
  accumulate_column_sums(d_logits, params.b_out.grad);
  return matmul_nt(d_logits, params.w_out.value);
}

EmbeddingHeadTrace embedding_head_forward(const ModelParams& params, const Matrix& final_state) {
  EmbeddingHeadTrace trace;
  trace.pre_activation = matmul(final_state, params.w_hid.value);
  trace.hidden = trace.pre_activation;
  for (double& v : trace.hidden.values()) v = v > 0.0 ? v : 0.0;
  trace.output = matmul(trace.hidden, params.w_emb.value);
  add_row_vector(trace.output, params.b_emb.value);
  return trace;
}

Matrix embedding_head_backward(ModelParams& params, const Matrix& final_state,
                               const EmbeddingHeadTrace& trace, const Matrix& d_output) {
  accumulate_matmul_tn(trace.hidden, d_output, params.w_emb.grad);
  accumulate_column_sums(d_output, params.b_emb.grad);
  Matrix d_hidden = matmul_nt(d_output, params.w_emb.value);
  auto pre = trace.pre_activation.values();
  auto dh = d_hidden.values();
  for (std::size_t i = 0; i < dh.size(); ++i) {
    if (!(pre[i] > 0.0)) dh[i] = 0.0;
  }
  accumulate_matmul_tn(final_state, d_hidden, params.w_hid.grad);
  return matmul_nt(d_hidden, params.w_hid.value);
}

Matrix forward_logits(const ModelParams& params, const SequenceBlock& block) {
  if (params.head != HeadType::kSoftmax) throw ConfigError("forward_logits needs a softmax head");
  return softmax_logits(params, gru_final_state(params, embed_block(params, block), block));
}

Matrix forward_softmax(const ModelParams& params, const SequenceBlock& block) {
  return softmax_rows(forward_logits(params, block));
}

Matrix forward_embedding_output(const ModelParams& params, const SequenceBlock& block) {
  if (params.head != HeadType::kEmbedding) {
    throw ConfigError("forward_embedding_output needs an embedding head");
  }
  const Matrix h = gru_final_state(params, embed_block(params, block), block);
  return embedding_head_forward(params, h).output;
}

}  // namespace srnlab
