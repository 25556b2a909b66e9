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

// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Set SRNLAB_RECSYS_CLICKS to the full RecSys Challenge 2015 click file to
// include the paper-scale preprocessing counts in criterion 2.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "srnlab/checkpoint.hpp"
#include "srnlab/cli.hpp"
#include "srnlab/dataset.hpp"
#include "srnlab/evaluation.hpp"
#include "srnlab/losses.hpp"
#include "srnlab/training.hpp"

using namespace srnlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- 1 ---------------------------------------------------------------------

Outcome parameter_counts() {
  ModelConfig c;
  c.vocab_size_with_pad = 37483 + 1;
  c.embed_dim = 50;
  c.gru_units = 100;
  const auto small = count_params(c);
  c.gru_units = 1000;
  const auto large = count_params(c);
  return {small == 5705384 && large == 42548684,
          "H=100 -> " + std::to_string(small) + ", H=1000 -> " + std::to_string(large)};
}

// ---- 2 ---------------------------------------------------------------------

Outcome augmentation() {
  FilterOptions no_split;
  no_split.split_last_day = false;
  no_split.min_item_support = 1;
  const auto split = split_and_filter(parse_clicks_file(SRNLAB_FIXTURES "/four_clicks.csv"), no_split);
  const auto ex = augment_all(index_sessions(split.train, split.vocab));
  bool ok = ex.size() == 3 && ex[0].prefix == std::vector<ItemIndex>{1} && ex[0].label == 2 &&
            ex[0].privileged == std::vector<ItemIndex>{4, 3} &&
            ex[1].privileged == std::vector<ItemIndex>{4} && ex[2].privileged.empty();
  std::string detail = "fixture: " + std::to_string(ex.size()) + " sequences";

  SynthConfig cfg;
  cfg.seed = 12;
  const auto corpus = synth_corpus(cfg);
  const auto s2 = split_and_filter(corpus.sessions, FilterOptions{});
  const auto indexed = index_sessions(s2.train, s2.vocab);
  std::size_t expected = 0;
  for (const auto& s : indexed) expected += s.items.size() - 1;
  const auto n = augment_all(indexed).size();
  ok = ok && n == expected;
  detail += "; synthetic: " + std::to_string(n) + " == sum(n_i - 1) " + std::to_string(expected);

  if (const char* real = std::getenv("SRNLAB_RECSYS_CLICKS")) {
    const auto r = split_and_filter(parse_clicks_file(real), FilterOptions{});
    const auto rn = augment_all(index_sessions(r.train, r.vocab)).size();
    const bool counts = r.train.size() == 7966257 && r.test.size() == 15234 &&
                        r.vocab.size() == 37483 && rn == 23670981;
    ok = ok && counts;
    detail += "; real data: " + std::to_string(r.train.size()) + " / " +
              std::to_string(r.test.size()) + " / " + std::to_string(r.vocab.size()) + " / " +
              std::to_string(rn);
  } else {
    detail += "; real click file not supplied (SRNLAB_RECSYS_CLICKS unset)";
  }
  return {ok, detail};
}

// ---- 3 ---------------------------------------------------------------------

ModelConfig toy_config(HeadType head) {
  ModelConfig c;
  c.vocab_size_with_pad = 11;
  c.embed_dim = 4;
  c.gru_units = 8;
  c.window = 5;
  c.head = head;
  c.hidden_dense_units = head == HeadType::kEmbedding ? 16 : 0;
  return c;
}

double gradient_error(ModelParams& p, const SequenceBlock& inputs, const BatchTargets& targets) {
  const DropoutPlan plan{};
  p.zero_grad();
  (void)batch_loss(p, inputs, targets, plan);
  auto loss = [&] {
    ModelParams scratch = p;
    return batch_loss(scratch, inputs, targets, plan);
  };
  GradientCheckOptions opts;
  opts.eps = 1e-5;
  opts.max_coords_per_param = 1000;
  const auto list = p.list();
  return finite_difference_check(loss, list, opts).max_relative_error;
}

Outcome gradient_suite() {
  const SequenceBlock inputs =
      make_block({{1, 2, 3}, {4}, {5, 6, 7, 8, 9, 10, 2}, {3, 3}, {10, 1}, {7, 7, 7}}, 5);
  const SequenceBlock privileged =
      make_block({{9, 8}, {7, 6, 5}, {}, {1}, {2, 4, 6, 8, 10, 3}, {2}}, 5);
  const std::vector<ItemIndex> labels = {4, 5, 1, 7, 9, 10};
  double worst = 0.0;
  std::ostringstream detail;

  {
    auto p = init_params(toy_config(HeadType::kSoftmax), 101);
    BatchTargets t;
    t.labels = labels;
    const double e = gradient_error(p, inputs, t);
    worst = std::max(worst, e);
    detail << "CE " << e;
  }
  const auto teacher = init_params(toy_config(HeadType::kSoftmax), 102);
  for (double lambda : {0.0, 0.2, 1.0}) {
    auto p = init_params(toy_config(HeadType::kSoftmax), 103);
    BatchTargets t;
    t.labels = labels;
    t.distill = DistillConfig{lambda, 2.0};
    Matrix logits = forward_logits(teacher, privileged);
    for (double& v : logits.values()) v /= 2.0;
    t.teacher_probs = softmax_rows(logits);
    for (std::size_t r = 0; r < labels.size(); ++r) {
      t.has_teacher.push_back(privileged.real_count(r) > 0 ? 1 : 0);
    }
    const double e = gradient_error(p, inputs, t);
    worst = std::max(worst, e);
    detail << ", distill(lambda=" << lambda << ") " << e;
  }
  {
    auto p = init_params(toy_config(HeadType::kEmbedding), 104);
    BatchTargets t;
    t.labels = labels;
    Matrix v(labels.size(), 4);
    for (std::size_t r = 0; r < labels.size(); ++r) {
      const auto row = teacher.embedding.value.row(static_cast<std::size_t>(labels[r]));
      std::copy(row.begin(), row.end(), v.row(r).begin());
    }
    t.target_vectors = v;
    const double e = gradient_error(p, inputs, t);
    worst = std::max(worst, e);
    detail << ", cosine " << e;
  }
  return {worst < 1e-4, "max relative error " + detail.str()};
}

// ---- 4 ---------------------------------------------------------------------

class TableRecommender : public Recommender {
 public:
  explicit TableRecommender(const std::vector<std::vector<double>>& scores) : scores_(scores) {}
  std::vector<std::vector<ItemIndex>> recommend(const std::vector<Prefix>& prefixes,
                                                std::size_t k) override {
    std::vector<std::vector<ItemIndex>> out;
    for (const auto& p : prefixes) {
      // The prefix carries the event number in its first slot.
      out.push_back(top_k_indices(scores_[static_cast<std::size_t>(p.front() - 1)], k));
    }
    return out;
  }

 private:
  const std::vector<std::vector<double>>& scores_;
};

Outcome metric_oracle() {
  const std::size_t events = 1000, vocab = 1201;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<ItemIndex> item(1, static_cast<ItemIndex>(vocab - 1));
  std::vector<std::vector<double>> scores(events, std::vector<double>(vocab));
  std::vector<IndexedSession> test;
  std::vector<ItemIndex> truth;
  for (std::size_t e = 0; e < events; ++e) {
    for (auto& s : scores[e]) s = u(rng);
    // Bias the truth upward so a good share of events land in the top 20.
    const ItemIndex t = item(rng);
    scores[e][static_cast<std::size_t>(t)] = std::pow(u(rng), 0.02);
    truth.push_back(t);
    test.push_back(IndexedSession{{static_cast<ItemIndex>(e + 1), t}, 0});
  }
  TableRecommender rec(scores);
  const auto report = evaluate(rec, test, EvalConfig{20, 128});

  // Brute force: rank = 1 + number of items scoring strictly higher.
  std::size_t hits = 0;
  std::vector<std::size_t> ranks;
  for (std::size_t e = 0; e < events; ++e) {
    const double st = scores[e][static_cast<std::size_t>(truth[e])];
    std::size_t rank = 1;
    for (std::size_t j = 1; j < vocab; ++j) {
      if (static_cast<ItemIndex>(j) != truth[e] && scores[e][j] > st) ++rank;
    }
    if (rank <= 20) {
      ++hits;
      ranks.push_back(rank);
    }
  }
  // Exact reciprocal-rank sum over the common denominator lcm(1..20).
  const std::uint64_t lcm = 232792560ULL;
  std::uint64_t num = 0;
  for (auto r : ranks) num += lcm / r;
  std::uint64_t den = lcm * events;
  std::uint64_t a = num, b = den;
  while (b != 0) a = std::exchange(b, a % b);
  const double mrr = static_cast<double>(num / a) / static_cast<double>(den / a);
  const double recall = static_cast<double>(hits) / static_cast<double>(events);
  const bool ok = report.events == events && report.recall_at_k == recall &&
                  report.mrr_at_k == mrr && report.mrr_at_k <= report.recall_at_k;
  return {ok, "recall " + format_double(report.recall_at_k) + " vs " + format_double(recall) +
                  ", mrr " + format_double(report.mrr_at_k) + " vs " + format_double(mrr)};
}

// ---- 5 ---------------------------------------------------------------------

class RandomRecommender : public Recommender {
 public:
  RandomRecommender(std::size_t vocab, std::uint64_t seed) : vocab_(vocab), rng_(seed) {}
  std::vector<std::vector<ItemIndex>> recommend(const std::vector<Prefix>& prefixes,
                                                std::size_t k) override {
    std::vector<std::vector<ItemIndex>> out;
    std::vector<ItemIndex> items(vocab_ - 1);
    std::iota(items.begin(), items.end(), ItemIndex{1});
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
      std::shuffle(items.begin(), items.end(), rng_);
      out.emplace_back(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(std::min(k, items.size())));
    }
    return out;
  }

 private:
  std::size_t vocab_;
  std::mt19937_64 rng_;
};

struct Prepared {
  SplitResult split;
  std::vector<IndexedSession> train;
  std::vector<IndexedSession> test;
  std::vector<TrainingExample> examples;
};

Prepared prepare(const SynthConfig& cfg) {
  Prepared d;
  d.split = split_and_filter(synth_corpus(cfg).sessions, FilterOptions{});
  d.train = index_sessions(d.split.train, d.split.vocab);
  d.test = index_sessions(d.split.test, d.split.vocab);
  d.examples = augment_all(d.train);
  return d;
}

Outcome desk_scale_learning() {
  const auto start = std::chrono::steady_clock::now();
  SynthConfig cfg;
  cfg.seed = 1;
  cfg.n_items = 200;
  cfg.n_sessions = 20000;
  const auto d = prepare(cfg);
  ModelConfig model;
  model.vocab_size_with_pad = d.split.vocab.size_with_padding();
  model.gru_units = 32;
  TrainConfig train;
  train.max_epochs = 8;
  train.seed = 1;
  const auto m1 = train_m1(d.examples, model, train);
  SoftmaxRecommender gru(m1.checkpoint.params, model.window);
  SPopRecommender spop(item_popularity(d.train, model.vocab_size_with_pad));
  RandomRecommender random(model.vocab_size_with_pad, 5);
  const EvalConfig ec;
  const double r_gru = evaluate(gru, d.test, ec).recall_at_k;
  const double r_spop = evaluate(spop, d.test, ec).recall_at_k;
  const double r_rand = evaluate(random, d.test, ec).recall_at_k;
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  const bool ok = r_gru >= 1.5 * r_spop && r_gru >= 3.0 * r_rand && minutes < 10.0;
  return {ok, "Recall@20 M1 " + fmt(r_gru) + ", S-POP " + fmt(r_spop) + ", random " +
                  fmt(r_rand) + ", " + fmt(minutes, 2) + " min"};
}

// ---- 6 ---------------------------------------------------------------------

Outcome temporal_adaptation() {
  SynthConfig cfg;
  cfg.seed = 2;
  cfg.n_items = 200;
  cfg.n_sessions = 20000;
  cfg.fanout = 10;
  cfg.shift_at = 0.75;
  const auto d = prepare(cfg);
  ModelConfig model;
  model.vocab_size_with_pad = d.split.vocab.size_with_padding();
  model.gru_units = 32;
  TrainConfig train;
  train.max_epochs = 8;
  const auto base = train_m1(d.examples, model, train);
  const auto tuned =
      finetune_m2(base.checkpoint, model, temporal_fraction(d.examples, 0.25), train);
  SoftmaxRecommender before(base.checkpoint.params, model.window);
  SoftmaxRecommender after(tuned.checkpoint.params, model.window);
  const double r_base = evaluate(before, d.test, EvalConfig{}).recall_at_k;
  const double r_tuned = evaluate(after, d.test, EvalConfig{}).recall_at_k;
  return {r_tuned > r_base,
          "final-day Recall@20 base " + fmt(r_base) + ", fine-tuned on last 1/4 " + fmt(r_tuned)};
}

// ---- 7 ---------------------------------------------------------------------

Outcome distillation_reductions() {
  SynthConfig cfg;
  cfg.seed = 3;
  cfg.n_items = 50;
  cfg.n_sessions = 1500;
  const auto d = prepare(cfg);
  ModelConfig model;
  model.vocab_size_with_pad = d.split.vocab.size_with_padding();
  model.gru_units = 16;
  model.embed_dim = 8;
  TrainConfig train;
  train.max_epochs = 3;
  train.batch_size = 128;
  train.seed = 9;
  const auto m1 = train_m1(d.examples, model, train);
  const auto m3 = train_m3(d.examples, model, train, DistillConfig{0.0, 1.0});
  bool identical = m1.report.same_outcome(m3.student.report);
  const auto a = m1.checkpoint.params.list();
  const auto b = m3.student.checkpoint.params.list();
  for (std::size_t i = 0; i < a.size(); ++i) identical = identical && a[i]->value == b[i]->value;

  // T = 1 soft term against the teacher's own output distribution.
  const auto& teacher = m3.teacher.checkpoint.params;
  const auto block = make_block({{1, 2, 3}, {4, 5}, {6}}, model.window);
  const Matrix q = forward_softmax(teacher, block);
  const Matrix z = forward_logits(m1.checkpoint.params, block);
  const Matrix p = softmax_rows(z);
  double worst = 0.0;
  for (std::size_t r = 0; r < block.rows; ++r) {
    double ce = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) ce -= q(r, j) * std::log(p(r, j));
    const auto soft = distillation_loss(z.row(r), 1, q.row(r), DistillConfig{1.0, 1.0});
    worst = std::max(worst, std::abs(soft.loss - ce));
  }
  return {identical && worst < 1e-12,
          std::string("lambda=0 student ") + (identical ? "bit-identical" : "DIFFERS") +
              " to M1; |soft(T=1) - CE(teacher)| max " + format_double(worst)};
}

// ---- 8 ---------------------------------------------------------------------

Outcome benchmark() {
  const std::size_t vocab = 10001, hidden = 100, dim = 50;
  ModelConfig soft;
  soft.vocab_size_with_pad = vocab;
  soft.embed_dim = dim;
  soft.gru_units = hidden;
  ModelConfig emb = soft;
  emb.head = HeadType::kEmbedding;
  emb.hidden_dense_units = 2 * hidden;
  const auto p_soft = init_params(soft, 1);
  const auto p_emb = init_params(emb, 2);
  const Matrix targets = p_soft.embedding.value;

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<ItemIndex> item(1, static_cast<ItemIndex>(vocab - 1));
  std::vector<std::vector<Prefix>> batches(4);
  for (auto& batch : batches) {
    for (int i = 0; i < 512; ++i) {
      Prefix p(1 + rng() % 8);
      for (auto& x : p) x = item(rng);
      batch.push_back(p);
    }
  }
  SoftmaxRecommender r_soft(p_soft, soft.window);
  EmbeddingRecommender r_emb(p_emb, targets, emb.window);
  const auto b_soft = bench_prediction(r_soft, batches, 3);
  const auto b_emb = bench_prediction(r_emb, batches, 3);
  return {b_emb.mean_seconds < b_soft.mean_seconds,
          "H=100, 10000 items, 4x512 prefixes: embedding head " + fmt(b_emb.mean_seconds, 3) +
              " s vs softmax " + fmt(b_soft.mean_seconds, 3) + " s (ratio " +
              fmt(b_emb.mean_seconds / b_soft.mean_seconds, 2) + ")"};
}

// ---- 9 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream sink;
  return run_cli(args, sink, sink);
}

Outcome round_trips() {
  const fs::path root = fs::temp_directory_path() / "srnlab_acceptance";
  fs::remove_all(root);
  bool ok = cli({"gen-data", "--seed", "5", "--n-items", "60", "--n-sessions", "1500", "--days",
                 "6", "--out", (root / "data").string()}) == 0;
  const std::string data = (root / "data" / "clicks.csv").string();
  for (const char* run : {"a", "b"}) {
    const std::string out = (root / run).string();
    ok = ok && cli({"train", "--data", data, "--gru-units", "12", "--embed-dim", "8",
                    "--max-epochs", "2", "--batch-size", "128", "--seed", "21", "--out", out}) == 0;
    ok = ok && cli({"evaluate", "--model", out + "/model.ckpt", "--data", data, "--out", out}) == 0;
  }
  const bool same_ckpt = slurp(root / "a" / "model.ckpt") == slurp(root / "b" / "model.ckpt");
  const bool same_train = slurp(root / "a" / "train_report.txt") == slurp(root / "b" / "train_report.txt");
  std::istringstream ea(slurp(root / "a" / "eval_report.txt"));
  std::istringstream eb(slurp(root / "b" / "eval_report.txt"));
  auto ka = read_key_values(ea), kb = read_key_values(eb);
  const bool same_eval = ka.at("recall_at_20") == kb.at("recall_at_20") &&
                         ka.at("mrr_at_20") == kb.at("mrr_at_20") &&
                         ka.at("events") == kb.at("events");

  const auto first = slurp(root / "a" / "model.ckpt");
  save_checkpoint(load_checkpoint((root / "a" / "model.ckpt").string()),
                  (root / "resaved.ckpt").string());
  const bool byte_identical = first == slurp(root / "resaved.ckpt");
  fs::remove_all(root);
  ok = ok && same_ckpt && same_train && same_eval && byte_identical && !first.empty();
  return {ok, std::string("save/load/save ") + (byte_identical ? "identical" : "DIFFERS") +
                  "; same-seed checkpoints " + (same_ckpt ? "identical" : "DIFFER") +
                  ", train reports " + (same_train ? "identical" : "DIFFER") +
                  ", eval metrics " + (same_eval ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"parameter counts", parameter_counts},
      {"augmentation arithmetic", augmentation},
      {"gradient suite", gradient_suite},
      {"metric oracle", metric_oracle},
      {"desk-scale learning", desk_scale_learning},
      {"temporal adaptation", temporal_adaptation},
      {"distillation reductions", distillation_reductions},
      {"prediction benchmark", benchmark},
      {"round trips", round_trips},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << "criterion " << i + 1 << " [" << criteria[i].first << "]: "
              << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
