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

#include "srnlab/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <utility>

#include "srnlab/checkpoint.hpp"
#include "srnlab/errors.hpp"

namespace srnlab {

namespace {

using Clock = std::chrono::steady_clock;

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(xs.size()));
  return out;
}

}  // namespace

void EvalConfig::validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (batch_size < 1) throw ConfigError("evaluation batch size must be >= 1");
}

void write_eval_report(std::ostream& out, const EvalReport& r) {
  out << "recall_at_" << r.k << '=' << format_double(r.recall_at_k) << '\n'
      << "mrr_at_" << r.k << '=' << format_double(r.mrr_at_k) << '\n'
      << "events=" << r.events << '\n'
      << "mean_batch_seconds=" << format_double(r.mean_batch_seconds) << '\n'
      << "std_batch_seconds=" << format_double(r.std_batch_seconds) << '\n'
      << "degenerate_predictions=" << r.degenerate_predictions << '\n';
}

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

void MetricAccumulator::add(std::size_t rank) {
  ++events_;
  if (rank >= 1 && rank < hits_at_rank_.size()) ++hits_at_rank_[rank];
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  if (other.hits_at_rank_.size() != hits_at_rank_.size()) {
    throw DimensionError("cannot merge metric accumulators with different k");
  }
  for (std::size_t i = 0; i < hits_at_rank_.size(); ++i) hits_at_rank_[i] += other.hits_at_rank_[i];
  events_ += other.events_;
}

std::uint64_t MetricAccumulator::hits() const {
  return std::accumulate(hits_at_rank_.begin() + 1, hits_at_rank_.end(), std::uint64_t{0});
}

double MetricAccumulator::recall() const {
  return events_ == 0 ? 0.0 : static_cast<double>(hits()) / static_cast<double>(events_);
}

double MetricAccumulator::mrr() const { return mean_reciprocal_rank(hits_at_rank_, events_); }

double mean_reciprocal_rank(std::span<const std::uint64_t> hits_at_rank, std::uint64_t events) {
  if (events == 0) return 0.0;
  using Wide = unsigned __int128;
  const std::size_t k = hits_at_rank.empty() ? 0 : hits_at_rank.size() - 1;
  // lcm(1..k) stays below 2^64 up to k = 42; leave headroom for the event count.
  Wide lcm = 1;
  bool exact = k <= 40;
  for (std::size_t r = 2; exact && r <= k; ++r) lcm = lcm / std::gcd(static_cast<std::uint64_t>(lcm % r), r) * r;
  if (exact && lcm * events < (Wide{1} << 120)) {
    Wide numerator = 0;
    for (std::size_t r = 1; r <= k; ++r) numerator += Wide{hits_at_rank[r]} * (lcm / r);
    Wide denominator = lcm * events;
    Wide a = numerator, b = denominator;
    while (b != 0) a = std::exchange(b, a % b);
    if (a > 1) {
      numerator /= a;
      denominator /= a;
    }
    // Both sides exact in a double means the quotient is correctly rounded.
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
  long double sum = 0.0L;
  for (std::size_t r = 1; r <= k; ++r) sum += static_cast<long double>(hits_at_rank[r]) / r;
  return static_cast<double>(sum / static_cast<long double>(events));
}

std::vector<ItemIndex> top_k_indices(std::span<const double> scores, std::size_t k) {
  if (scores.size() <= 1 || k == 0) return {};
  auto key = [&](ItemIndex i) {
    const double s = scores[static_cast<std::size_t>(i)];
    return std::isnan(s) ? -std::numeric_limits<double>::infinity() : s;
  };
  std::vector<ItemIndex> idx(scores.size() - 1);
  std::iota(idx.begin(), idx.end(), ItemIndex{1});
  const std::size_t n = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](ItemIndex a, ItemIndex b) {
                      const double ka = key(a), kb = key(b);
                      return ka > kb || (ka == kb && a < b);
                    });
  idx.resize(n);
  return idx;
}

SoftmaxRecommender::SoftmaxRecommender(const ModelParams& params, std::size_t window)
    : params_(params), window_(window) {
  if (params.head != HeadType::kSoftmax) throw ConfigError("SoftmaxRecommender needs a softmax head");
}

std::vector<std::vector<ItemIndex>> SoftmaxRecommender::recommend(
    const std::vector<Prefix>& prefixes, std::size_t k) {
  const Matrix probs = forward_softmax(params_, make_block(prefixes, window_));
  std::vector<std::vector<ItemIndex>> out;
  out.reserve(prefixes.size());
  for (std::size_t r = 0; r < prefixes.size(); ++r) out.push_back(top_k_indices(probs.row(r), k));
  return out;
}

EmbeddingRecommender::EmbeddingRecommender(const ModelParams& params,
                                           const Matrix& item_embeddings, std::size_t window)
    : params_(params), window_(window) {
  if (params.head != HeadType::kEmbedding) {
    throw ConfigError("EmbeddingRecommender needs an embedding head");
  }
  if (item_embeddings.cols() != params.embed_dim()) {
    throw DimensionError("item embeddings are " + item_embeddings.shape_string() +
                         " but the model predicts " + std::to_string(params.embed_dim()) +
                         "-dimensional vectors");
  }
  unit_items_t_ = Matrix(item_embeddings.cols(), item_embeddings.rows());
  for (std::size_t i = 1; i < item_embeddings.rows(); ++i) {
    const auto row = item_embeddings.row(i);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
    for (std::size_t d = 0; d < row.size(); ++d) unit_items_t_(d, i) = row[d] * inv;
  }
}

Matrix EmbeddingRecommender::cosine_scores(const Matrix& outputs) const {
  Matrix scores = matmul(outputs, unit_items_t_);
  for (std::size_t r = 0; r < outputs.rows(); ++r) {
    double sq = 0.0;
    for (double v : outputs.row(r)) sq += v * v;
    const double n = std::sqrt(sq);
    auto row = scores.row(r);
    if (n < 1e-12) {
      std::fill(row.begin(), row.end(), 0.0);
      continue;
    }
    for (double& v : row) v /= n;
  }
  return scores;
}

std::vector<std::vector<ItemIndex>> EmbeddingRecommender::recommend(
    const std::vector<Prefix>& prefixes, std::size_t k) {
  const Matrix outputs = forward_embedding_output(params_, make_block(prefixes, window_));
  const Matrix scores = cosine_scores(outputs);
  std::vector<std::vector<ItemIndex>> out;
  out.reserve(prefixes.size());
  for (std::size_t r = 0; r < prefixes.size(); ++r) {
    double sq = 0.0;
    for (double v : outputs.row(r)) sq += v * v;
    if (std::sqrt(sq) < 1e-12) ++degenerate_;
    out.push_back(top_k_indices(scores.row(r), k));
  }
  return out;
}

std::vector<ItemIndex> rank_topk_softmax(const ModelParams& params, const Prefix& prefix,
                                         std::size_t k, std::size_t window) {
  SoftmaxRecommender rec(params, window);
  return rec.recommend({prefix}, k).front();
}

std::vector<ItemIndex> rank_topk_embedding(const ModelParams& params,
                                           const Matrix& item_embeddings, const Prefix& prefix,
                                           std::size_t k, std::size_t window, bool* degenerate) {
  EmbeddingRecommender rec(params, item_embeddings, window);
  auto out = rec.recommend({prefix}, k).front();
  if (degenerate) *degenerate = rec.degenerate_predictions() > 0;
  return out;
}

EvalReport evaluate(Recommender& recommender, const std::vector<IndexedSession>& test,
                    const EvalConfig& config) {
  config.validate();
  std::vector<Prefix> prefixes;
  std::vector<ItemIndex> truths;
  for (const auto& s : test) {
    for (std::size_t r = 1; r < s.items.size(); ++r) {
      prefixes.emplace_back(s.items.begin(), s.items.begin() + static_cast<std::ptrdiff_t>(r));
      truths.push_back(s.items[r]);
    }
  }

  MetricAccumulator acc(config.k);
  std::vector<double> batch_seconds;
  const std::uint64_t degenerate_before = recommender.degenerate_predictions();
  for (std::size_t start = 0; start < prefixes.size(); start += config.batch_size) {
    const std::size_t n = std::min(config.batch_size, prefixes.size() - start);
    const std::vector<Prefix> batch(prefixes.begin() + static_cast<std::ptrdiff_t>(start),
                                    prefixes.begin() + static_cast<std::ptrdiff_t>(start + n));
    const auto t0 = Clock::now();
    const auto ranked = recommender.recommend(batch, config.k);
    batch_seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& list = ranked[i];
      const auto it = std::find(list.begin(), list.end(), truths[start + i]);
      const auto pos = static_cast<std::size_t>(it - list.begin());
      acc.add(it == list.end() || pos >= config.k ? 0 : pos + 1);
    }
  }

  EvalReport report;
  report.k = config.k;
  report.events = acc.events();
  report.recall_at_k = acc.recall();
  report.mrr_at_k = acc.mrr();
  const auto timing = mean_std(batch_seconds);
  report.mean_batch_seconds = timing.mean;
  report.std_batch_seconds = timing.std;
  report.degenerate_predictions = recommender.degenerate_predictions() - degenerate_before;
  return report;
}

BenchResult bench_prediction(Recommender& recommender,
                             const std::vector<std::vector<Prefix>>& batches,
                             std::size_t repetitions, std::size_t k) {
  if (repetitions == 0) throw ConfigError("bench needs at least one repetition");
  for (const auto& batch : batches) recommender.recommend(batch, k);
  std::vector<double> times;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    const auto t0 = Clock::now();
    for (const auto& batch : batches) recommender.recommend(batch, k);
    times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  const auto stats = mean_std(times);
  return {stats.mean, stats.std, repetitions};
}

}  // namespace srnlab
