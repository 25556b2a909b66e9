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

#include "srnlab/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>

#include "srnlab/checkpoint.hpp"
#include "srnlab/dataset.hpp"
#include "srnlab/errors.hpp"
#include "srnlab/evaluation.hpp"
#include "srnlab/run_config.hpp"
#include "srnlab/training.hpp"

namespace srnlab {

namespace {

namespace fs = std::filesystem;

struct PreparedData {
  SplitResult split;
  std::vector<IndexedSession> train;
  std::vector<IndexedSession> test;
  std::vector<TrainingExample> examples;
};

PreparedData prepare(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("no click log given (use --data or data=...)");
  PreparedData d;
  d.split = split_and_filter(parse_clicks_file(cfg.data), cfg.filter_options());
  d.train = index_sessions(d.split.train, d.split.vocab);
  d.test = index_sessions(d.split.test, d.split.vocab);
  d.examples = augment_all(d.train);
  return d;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out);
  return (fs::path(cfg.out) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

void echo_config(const RunConfig& cfg) { write_text(out_path(cfg, "config.txt"), cfg.to_text()); }

void stamp(Checkpoint& c, const RunConfig& cfg) {
  for (const auto& [k, v] : cfg.entries()) {
    if (k != "out") c.metadata.emplace_back("run." + k, v);
  }
}

EpochCallback epoch_logger(std::ostream& out, const std::string& tag) {
  return [&out, tag](const EpochLog& e) {
    char seconds[32];
    std::snprintf(seconds, sizeof seconds, "%.3f", e.seconds);
    out << tag << " epoch=" << e.epoch << " train_loss=" << format_double(e.train_loss)
        << " val_loss=" << format_double(e.val_loss) << " seconds=" << seconds << std::endl;
  };
}

// Deterministic: no timings and no output location.
std::string report_text(const TrainReport& r, const RunConfig& cfg) {
  std::ostringstream out;
  for (const auto& [k, v] : cfg.entries()) {
    if (k != "out") out << "config." << k << '=' << v << '\n';
  }
  out << "train_examples=" << r.train_examples << '\n'
      << "val_examples=" << r.val_examples << '\n'
      << "stopped_epoch=" << r.stopped_epoch << '\n'
      << "best_epoch=" << r.best_epoch << '\n'
      << "best_val_loss=" << format_double(r.best_val_loss) << '\n';
  for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
    out << "epoch." << e + 1 << ".train_loss=" << format_double(r.train_loss[e]) << '\n'
        << "epoch." << e + 1 << ".val_loss=" << format_double(r.val_loss[e]) << '\n';
  }
  return out.str();
}

void save_result(TrainResult& result, const RunConfig& cfg, const std::string& stem,
                 std::ostream& out) {
  stamp(result.checkpoint, cfg);
  const auto ckpt = out_path(cfg, stem + ".ckpt");
  save_checkpoint(result.checkpoint, ckpt);
  write_text(out_path(cfg, (stem == "model" ? std::string("train") : stem) + "_report.txt"), report_text(result.report, cfg));
  out << "saved " << ckpt << " (best epoch " << result.report.best_epoch
      << ", val_loss=" << format_double(result.report.best_val_loss) << ")\n";
}

std::vector<TrainingExample> recent(const PreparedData& d, const RunConfig& cfg) {
  const double f = cfg.fraction_value();
  return f == 1.0 ? d.examples : temporal_fraction(d.examples, f);
}

void check_vocab(const Checkpoint& c, const PreparedData& d) {
  if (c.config.vocab_size_with_pad != d.split.vocab.size_with_padding()) {
    throw DataError("checkpoint vocabulary has " + std::to_string(c.config.vocab_size_with_pad) +
                    " slots but the data yields " +
                    std::to_string(d.split.vocab.size_with_padding()));
  }
}

std::unique_ptr<Recommender> model_recommender(const Checkpoint& c) {
  if (c.config.head == HeadType::kSoftmax) {
    return std::make_unique<SoftmaxRecommender>(c.params, c.config.window);
  }
  if (!c.target_embeddings) {
    throw CheckpointError("embedding-head checkpoint has no target_embedding tensor");
  }
  return std::make_unique<EmbeddingRecommender>(c.params, *c.target_embeddings, c.config.window);
}

int cmd_gen_data(const RunConfig& cfg, std::ostream& out) {
  const auto corpus = synth_corpus(cfg.synth_config());
  const auto path = out_path(cfg, "clicks.csv");
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write '" + path + "'");
  write_clicks(file, corpus.sessions);
  std::size_t clicks = 0;
  for (const auto& s : corpus.sessions) clicks += s.length();
  out << "wrote " << corpus.sessions.size() << " sessions (" << clicks << " clicks) to " << path
      << '\n';
  return kExitOk;
}

int cmd_prepare(const RunConfig& cfg, std::ostream& out) {
  const auto d = prepare(cfg);
  out << d.split.train.size() << " training sessions\n"
      << d.split.test.size() << " test sessions\n"
      << d.split.vocab.size() << " items\n"
      << d.examples.size() << " training sequences\n";
  std::ofstream dump(out_path(cfg, "train_examples.txt"), std::ios::trunc);
  write_examples(dump, d.examples);
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto d = prepare(cfg);
  auto result = train_m1(recent(d, cfg), cfg.model_config(d.split.vocab.size_with_padding()),
                         cfg.train_config(), epoch_logger(out, "m1"));
  save_result(result, cfg, "model", out);
  return kExitOk;
}

int cmd_finetune(const RunConfig& cfg, const std::string& base_path, std::ostream& out) {
  if (base_path.empty()) throw ConfigError("finetune needs --base-checkpoint");
  const auto d = prepare(cfg);
  const Checkpoint base = load_checkpoint(base_path);
  check_vocab(base, d);
  auto result = finetune_m2(base, cfg.model_config(d.split.vocab.size_with_padding()),
                            recent(d, cfg), cfg.train_config(), epoch_logger(out, "m2"));
  result.checkpoint.metadata.emplace_back("base_checkpoint", base_path);
  save_result(result, cfg, "model", out);
  return kExitOk;
}

int cmd_distill(const RunConfig& cfg, std::ostream& out) {
  const auto d = prepare(cfg);
  auto result = train_m3(recent(d, cfg), cfg.model_config(d.split.vocab.size_with_padding()),
                         cfg.train_config(), cfg.distill_config(), epoch_logger(out, "m3"));
  save_result(result.teacher, cfg, "teacher", out);
  save_result(result.student, cfg, "model", out);
  return kExitOk;
}

int cmd_train_embed(const RunConfig& cfg, const std::string& source_path, std::ostream& out) {
  if (source_path.empty()) throw ConfigError("train-embed needs --embedding-source");
  const auto d = prepare(cfg);
  const Checkpoint source = load_checkpoint(source_path);
  check_vocab(source, d);
  RunConfig embed_cfg = cfg;
  embed_cfg.head = "embedding";
  const ModelConfig model = embed_cfg.model_config(d.split.vocab.size_with_padding());
  if (source.config.embed_dim != model.embed_dim) {
    throw CheckpointError("config mismatch on 'embed_dim': embedding source has " +
                          std::to_string(source.config.embed_dim) + ", requested " +
                          std::to_string(model.embed_dim));
  }
  auto result = train_m4(recent(d, cfg), model, source.params.embedding.value,
                         cfg.train_config(), epoch_logger(out, "m4"));
  result.checkpoint.metadata.emplace_back("embedding_source", source_path);
  save_result(result, embed_cfg, "model", out);
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& model, std::ostream& out) {
  if (model.empty()) throw ConfigError("evaluate needs --model {checkpoint|spop|itemknn}");
  const auto d = prepare(cfg);
  const std::size_t vocab = d.split.vocab.size_with_padding();
  std::unique_ptr<Recommender> rec;
  std::optional<Checkpoint> ckpt;
  if (model == "spop") {
    rec = std::make_unique<SPopRecommender>(item_popularity(d.train, vocab));
  } else if (model == "itemknn") {
    rec = std::make_unique<ItemKnnRecommender>(build_itemknn(d.train, vocab, cfg.itemknn_damping),
                                               item_popularity(d.train, vocab));
  } else {
    ckpt = load_checkpoint(model);
    check_vocab(*ckpt, d);
    rec = model_recommender(*ckpt);
  }
  const EvalReport report = evaluate(*rec, d.test, cfg.eval_config());
  std::ostringstream text;
  write_eval_report(text, report);
  write_text(out_path(cfg, "eval_report.txt"), text.str());
  out << text.str();
  return kExitOk;
}

int cmd_bench(const RunConfig& cfg, const std::string& model, std::ostream& out) {
  if (model.empty()) throw ConfigError("bench needs --model <checkpoint>");
  const auto d = prepare(cfg);
  const Checkpoint ckpt = load_checkpoint(model);
  check_vocab(ckpt, d);
  auto rec = model_recommender(ckpt);

  std::vector<Prefix> pool;
  for (const auto* sessions : {&d.test, &d.train}) {
    for (const auto& s : *sessions) {
      for (std::size_t r = 1; r < s.items.size(); ++r) {
        pool.emplace_back(s.items.begin(), s.items.begin() + static_cast<std::ptrdiff_t>(r));
      }
    }
  }
  if (pool.empty()) throw DataError("no prefixes available to benchmark");
  std::vector<std::vector<Prefix>> batches(cfg.bench_batches);
  std::size_t next = 0;
  for (auto& batch : batches) {
    for (std::size_t i = 0; i < cfg.eval_batch_size; ++i) batch.push_back(pool[next++ % pool.size()]);
  }
  const BenchResult r = bench_prediction(*rec, batches, cfg.repetitions, cfg.k);
  std::ostringstream text;
  text << "head=" << to_string(ckpt.config.head) << '\n'
       << "batches=" << batches.size() << '\n'
       << "batch_size=" << cfg.eval_batch_size << '\n'
       << "repetitions=" << r.repetitions << '\n'
       << "mean_seconds=" << format_double(r.mean_seconds) << '\n'
       << "std_seconds=" << format_double(r.std_seconds) << '\n'
       << "mean_batch_seconds=" << format_double(r.mean_seconds / static_cast<double>(batches.size()))
       << '\n';
  write_text(out_path(cfg, "bench_report.txt"), text.str());
  out << text.str();
  return kExitOk;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  if (path.empty()) throw ConfigError("inspect needs --checkpoint <path>");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const Checkpoint c = deserialize_checkpoint(bytes);
  out << checkpoint_manifest(bytes);
  out << "# parameters=" << c.params.scalar_count() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Session-based recommendation with GRU networks", "srnlab"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--set", sets, "override one config key (key=value)");

  std::vector<std::pair<std::string, std::string>> overrides;
  auto keyed = [&overrides](CLI::App* cmd, const std::string& flag, const std::string& key,
                            const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
  };
  auto data_flags = [&](CLI::App* cmd) {
    keyed(cmd, "--data", "data", "click log (session_id,timestamp,item_id[,category])");
    keyed(cmd, "--split", "split", "last-day or none");
    keyed(cmd, "--min-item-support", "min_item_support", "minimum training clicks per item");
  };
  auto model_flags = [&](CLI::App* cmd) {
    keyed(cmd, "--gru-units", "gru_units", "GRU hidden units");
    keyed(cmd, "--embed-dim", "embed_dim", "item embedding size");
    keyed(cmd, "--max-epochs", "max_epochs", "epoch limit before early stopping");
    keyed(cmd, "--batch-size", "batch_size", "mini-batch size");
    keyed(cmd, "--fraction", "fraction", "most recent share of training sequences (1/256..1)");
  };

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic Markov click log");
  keyed(gen, "--n-items", "n_items", "item count");
  keyed(gen, "--n-sessions", "n_sessions", "session count");
  keyed(gen, "--days", "days", "days spanned");
  keyed(gen, "--fanout", "fanout", "successors per item");
  keyed(gen, "--shift-at", "shift_at", "timeline fraction where transitions switch");

  auto* prep = app.add_subcommand("prepare", "split, filter and augment a click log");
  data_flags(prep);

  auto* train = app.add_subcommand("train", "train M1 (softmax, cross-entropy)");
  data_flags(train);
  model_flags(train);

  std::string base_checkpoint;
  auto* finetune = app.add_subcommand("finetune", "re-tune a checkpoint on recent data (M2)");
  data_flags(finetune);
  model_flags(finetune);
  finetune->add_option("--base-checkpoint", base_checkpoint, "pre-trained checkpoint");

  auto* distill = app.add_subcommand("distill", "teacher on privileged futures + student (M3)");
  data_flags(distill);
  model_flags(distill);
  keyed(distill, "--lambda", "lambda", "soft-label weight");
  keyed(distill, "--temperature", "temperature", "softmax temperature");

  std::string embedding_source;
  auto* embed = app.add_subcommand("train-embed", "train the embedding-output model (M4)");
  data_flags(embed);
  model_flags(embed);
  embed->add_option("--embedding-source", embedding_source, "M1 checkpoint providing targets");

  std::string model;
  auto* eval = app.add_subcommand("evaluate", "Recall@k / MRR@k on the test sessions");
  data_flags(eval);
  eval->add_option("--model", model, "checkpoint path, spop or itemknn");
  keyed(eval, "--k", "k", "cutoff");

  auto* bench = app.add_subcommand("bench", "time batch prediction");
  data_flags(bench);
  bench->add_option("--model", model, "checkpoint path");
  keyed(bench, "--repetitions", "repetitions", "timed passes");
  keyed(bench, "--batches", "bench_batches", "batches per pass");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "print a checkpoint manifest");
  inspect->add_option("--checkpoint", inspect_path, "checkpoint path")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out = out_dir;

    if (*inspect) return cmd_inspect(inspect_path, out);
    echo_config(cfg);
    if (*gen) return cmd_gen_data(cfg, out);
    if (*prep) return cmd_prepare(cfg, out);
    if (*train) return cmd_train(cfg, out);
    if (*finetune) return cmd_finetune(cfg, base_checkpoint, out);
    if (*distill) return cmd_distill(cfg, out);
    if (*embed) return cmd_train_embed(cfg, embedding_source, out);
    if (*eval) return cmd_evaluate(cfg, model, out);
    if (*bench) return cmd_bench(cfg, model, out);
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace srnlab
