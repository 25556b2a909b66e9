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

// Next-item evaluation (Recall@k, MRR@k), top-k ranking for both model heads,
// the S-POP and Item-KNN baselines, and the prediction-time benchmark.

#ifndef SRNLAB_EVALUATION_HPP_
#define SRNLAB_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "srnlab/dataset.hpp"
#include "srnlab/model.hpp"

namespace srnlab {

using Prefix = std::vector<ItemIndex>;

struct EvalConfig {
  std::size_t k = 20;
  std::size_t batch_size = 512;

  void validate() const;
};

struct EvalReport {
  std::size_t k = 20;
  double recall_at_k = 0.0;
  double mrr_at_k = 0.0;
  std::uint64_t events = 0;
  double mean_batch_seconds = 0.0;
  double std_batch_seconds = 0.0;
  // Predictions that carried no ranking signal (zero embedding output).
  std::uint64_t degenerate_predictions = 0;
};

// key=value lines: recall_at_<k>, mrr_at_<k>, events, mean_batch_seconds,
// std_batch_seconds, degenerate_predictions.
void write_eval_report(std::ostream& out, const EvalReport& report);
std::map<std::string, std::string> read_key_values(std::istream& in);

// Order-independent hit histogram. Rank 0, or any rank above k, is a miss.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(std::size_t k) : hits_at_rank_(k + 1, 0) {}

  void add(std::size_t rank);
  void merge(const MetricAccumulator& other);

  std::uint64_t events() const { return events_; }
  std::uint64_t hits() const;
  double recall() const;
  double mrr() const;
  const std::vector<std::uint64_t>& hits_at_rank() const { return hits_at_rank_; }

 private:
  std::vector<std::uint64_t> hits_at_rank_;
  std::uint64_t events_ = 0;
};

// Mean reciprocal rank from the rational sum_r count_r / r over `events`,
// evaluated exactly in integers whenever lcm(1..k) allows it.
double mean_reciprocal_rank(std::span<const std::uint64_t> hits_at_rank, std::uint64_t events);

// Indices 1..n-1 of the k largest scores, best first; ties go to the lower
// index. Index 0 (padding) is never returned.
std::vector<ItemIndex> top_k_indices(std::span<const double> scores, std::size_t k);

class Recommender {
 public:
  virtual ~Recommender() = default;
  // One ranked list (at most k items, no duplicates, no padding) per prefix.
  virtual std::vector<std::vector<ItemIndex>> recommend(const std::vector<Prefix>& prefixes,
                                                        std::size_t k) = 0;
  virtual std::uint64_t degenerate_predictions() const { return 0; }
};

class SoftmaxRecommender : public Recommender {
 public:
  SoftmaxRecommender(const ModelParams& params, std::size_t window);
  std::vector<std::vector<ItemIndex>> recommend(const std::vector<Prefix>& prefixes,
                                                std::size_t k) override;

 private:
  const ModelParams& params_;
  std::size_t window_;
};

class EmbeddingRecommender : public Recommender {
 public:
  // item_embeddings: (m+1) x D; row 0 is ignored.
  EmbeddingRecommender(const ModelParams& params, const Matrix& item_embeddings,
                       std::size_t window);
  std::vector<std::vector<ItemIndex>> recommend(const std::vector<Prefix>& prefixes,
                                                std::size_t k) override;
  std::uint64_t degenerate_predictions() const override { return degenerate_; }

  // Cosine similarity of each output row against every item (column 0 is 0).
  Matrix cosine_scores(const Matrix& outputs) const;

 private:
  const ModelParams& params_;
  std::size_t window_;
  Matrix unit_items_t_;  // D x (m+1), unit-norm item columns
  std::uint64_t degenerate_ = 0;
};

std::vector<ItemIndex> rank_topk_softmax(const ModelParams& params, const Prefix& prefix,
                                         std::size_t k, std::size_t window);
std::vector<ItemIndex> rank_topk_embedding(const ModelParams& params,
                                           const Matrix& item_embeddings, const Prefix& prefix,
                                           std::size_t k, std::size_t window,
                                           bool* degenerate = nullptr);

// Replays every test session item by item and ranks each next click.
EvalReport evaluate(Recommender& recommender, const std::vector<IndexedSession>& test,
                    const EvalConfig& config);

struct BenchResult {
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  std::size_t repetitions = 0;
};

// Wall time of one full pass (forward + top-k) over all batches, after one
// untimed warm-up pass. Population standard deviation over repetitions.
BenchResult bench_prediction(Recommender& recommender,
                             const std::vector<std::vector<Prefix>>& batches,
                             std::size_t repetitions, std::size_t k = 20);

// ---- Baselines -------------------------------------------------------------

struct Popularity {
  std::vector<std::uint64_t> counts;  // per item index, slot 0 unused
  std::vector<ItemIndex> order;       // descending count, ties by lower index
};

Popularity item_popularity(const std::vector<IndexedSession>& sessions,
                           std::size_t vocab_size_with_pad);

// Items of the current session by in-session count, ties by global
// popularity, then the remaining items by global popularity.
std::vector<ItemIndex> spop_rank(const Prefix& prefix, const Popularity& popularity,
                                 std::size_t k);

struct ItemKnnTable {
  // neighbours[i]: (item, similarity) with similarity > 0, best first.
  std::vector<std::vector<std::pair<ItemIndex, double>>> neighbours;
  double damping = 20.0;

  double similarity(ItemIndex a, ItemIndex b) const;
};

// sim(i, j) = co(i, j) / (sqrt(n_i * n_j) + damping), where n_i counts the
// sessions containing i and co(i, j) the sessions containing both.
ItemKnnTable build_itemknn(const std::vector<IndexedSession>& sessions,
                           std::size_t vocab_size_with_pad, double damping = 20.0);

// Neighbours of the last item (self excluded), topped up by popularity.
std::vector<ItemIndex> itemknn_rank(ItemIndex last_item, const ItemKnnTable& table,
                                    const Popularity& popularity, std::size_t k);

class SPopRecommender : public Recommender {
 public:
  explicit SPopRecommender(Popularity popularity) : popularity_(std::move(popularity)) {}
  std::vector<std::vector<ItemIndex>> recommend(const std::vector<Prefix>& prefixes,
                                                std::size_t k) override;

 private:
  Popularity popularity_;
};

class ItemKnnRecommender : public Recommender {
 public:
  ItemKnnRecommender(ItemKnnTable table, Popularity popularity)
      : table_(std::move(table)), popularity_(std::move(popularity)) {}
  std::vector<std::vector<ItemIndex>> recommend(const std::vector<Prefix>& prefixes,
                                                std::size_t k) override;

 private:
  ItemKnnTable table_;
  Popularity popularity_;
};

}  // namespace srnlab

#endif  // SRNLAB_EVALUATION_HPP_
