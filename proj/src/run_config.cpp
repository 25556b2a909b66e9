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

#include "srnlab/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <type_traits>
#include <variant>

#include "srnlab/checkpoint.hpp"
#include "srnlab/errors.hpp"

namespace srnlab {

namespace {

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seed shares the size_t slot");

using Member = std::variant<std::string RunConfig::*, std::size_t RunConfig::*,
                            double RunConfig::*, bool RunConfig::*>;

struct Field {
  const char* key;
  Member member;
};

// Listing order is the canonical echo order.
const Field kFields[] = {
    {"data", &RunConfig::data},
    {"out", &RunConfig::out},
    {"seed", &RunConfig::seed},
    {"fraction", &RunConfig::fraction},
    {"embed_dim", &RunConfig::embed_dim},
    {"gru_units", &RunConfig::gru_units},
    {"head", &RunConfig::head},
    {"hidden_dense_units", &RunConfig::hidden_dense_units},
    {"window", &RunConfig::window},
    {"embed_dropout_rate", &RunConfig::embed_dropout_rate},
    {"batch_size", &RunConfig::batch_size},
    {"max_epochs", &RunConfig::max_epochs},
    {"early_stop_patience", &RunConfig::early_stop_patience},
    {"validation_fraction", &RunConfig::validation_fraction},
    {"learning_rate", &RunConfig::learning_rate},
    {"beta1", &RunConfig::beta1},
    {"beta2", &RunConfig::beta2},
    {"epsilon", &RunConfig::epsilon},
    {"cache_teacher", &RunConfig::cache_teacher},
    {"freeze_input_embedding", &RunConfig::freeze_input_embedding},
    {"lambda", &RunConfig::lambda},
    {"temperature", &RunConfig::temperature},
    {"k", &RunConfig::k},
    {"eval_batch_size", &RunConfig::eval_batch_size},
    {"itemknn_damping", &RunConfig::itemknn_damping},
    {"repetitions", &RunConfig::repetitions},
    {"bench_batches", &RunConfig::bench_batches},
    {"min_session_length", &RunConfig::min_session_length},
    {"min_item_support", &RunConfig::min_item_support},
    {"split", &RunConfig::split},
    {"n_items", &RunConfig::n_items},
    {"n_sessions", &RunConfig::n_sessions},
    {"days", &RunConfig::days},
    {"fanout", &RunConfig::fanout},
    {"mean_length", &RunConfig::mean_length},
    {"shift_at", &RunConfig::shift_at},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

}  // namespace

void RunConfig::set(const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  for (const auto& f : kFields) {
    if (key != f.key) continue;
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(this->*member)>;
          if constexpr (std::is_same_v<T, std::string>) {
            this->*member = value;
          } else if constexpr (std::is_same_v<T, bool>) {
            this->*member = parse_bool(key, value);
          } else {
            this->*member = parse_number<T>(key, value);
          }
        },
        f.member);
    return;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::load(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    set(t.substr(0, eq), t.substr(eq + 1));
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  load(in);
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : kFields) {
    std::string text = std::visit(
        [&](auto member) -> std::string {
          using T = std::remove_cvref_t<decltype(this->*member)>;
          if constexpr (std::is_same_v<T, std::string>) {
            return this->*member;
          } else if constexpr (std::is_same_v<T, bool>) {
            return this->*member ? "true" : "false";
          } else if constexpr (std::is_same_v<T, double>) {
            return format_double(this->*member);
          } else {
            return std::to_string(this->*member);
          }
        },
        f.member);
    out.emplace_back(f.key, std::move(text));
  }
  return out;
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries()) out << k << '=' << v << '\n';
  return out.str();
}

ModelConfig RunConfig::model_config(std::size_t vocab_size_with_pad) const {
  ModelConfig m;
  m.vocab_size_with_pad = vocab_size_with_pad;
  m.embed_dim = embed_dim;
  m.gru_units = gru_units;
  m.head = parse_head_type(head);
  m.hidden_dense_units =
      m.head == HeadType::kEmbedding ? (hidden_dense_units ? hidden_dense_units : 2 * gru_units) : 0;
  m.window = window;
  m.embed_dropout_rate = embed_dropout_rate;
  m.validate();
  return m;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.batch_size = batch_size;
  t.max_epochs = max_epochs;
  t.early_stop_patience = early_stop_patience;
  t.validation_fraction = validation_fraction;
  t.adam.learning_rate = learning_rate;
  t.adam.beta1 = beta1;
  t.adam.beta2 = beta2;
  t.adam.epsilon = epsilon;
  t.seed = seed;
  t.cache_teacher = cache_teacher;
  t.freeze_input_embedding = freeze_input_embedding;
  t.validate();
  return t;
}

DistillConfig RunConfig::distill_config() const {
  DistillConfig d{lambda, temperature};
  d.validate();
  return d;
}

EvalConfig RunConfig::eval_config() const {
  EvalConfig e{k, eval_batch_size};
  e.validate();
  return e;
}

FilterOptions RunConfig::filter_options() const {
  FilterOptions f;
  f.min_session_length = min_session_length;
  f.min_item_support = min_item_support;
  if (split == "last-day") {
    f.split_last_day = true;
  } else if (split == "none") {
    f.split_last_day = false;
  } else {
    throw ConfigError("split must be 'last-day' or 'none', got '" + split + "'");
  }
  return f;
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig s;
  s.seed = seed;
  s.n_items = n_items;
  s.n_sessions = n_sessions;
  s.day_count = days;
  s.fanout = fanout;
  s.mean_length = mean_length;
  if (!shift_at.empty()) s.shift_at = parse_fraction(shift_at);
  return s;
}

double RunConfig::fraction_value() const { return parse_fraction(fraction); }

}  // namespace srnlab
