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

#include <algorithm>
#include <numeric>
#include <random>

#include "srnlab/dataset.hpp"
#include "srnlab/errors.hpp"

namespace srnlab {

namespace {

constexpr TimestampMs kMsPerDay = 86'400'000;

std::size_t sample_successor(const std::vector<std::pair<std::size_t, double>>& row,
                             std::mt19937_64& rng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (const auto& [item, p] : row) {
    if (u < p) return item;
    u -= p;
  }
  return row.back().first;
}

}  // namespace

std::string synth_item_id(std::size_t item) { return std::to_string(100000 + item); }

TransitionTable make_transition_table(std::uint64_t seed, std::size_t n_items,
                                      std::size_t fanout) {
  if (n_items < 2) throw ConfigError("synthetic corpus needs at least two items");
  fanout = std::clamp<std::size_t>(fanout, 1, n_items - 1);
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> weight(1.0);
  TransitionTable table;
  table.successors.resize(n_items);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n_items; ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < n_items; ++j) {
      if (j != i) candidates.push_back(j);
    }
    std::shuffle(candidates.begin(), candidates.end(), rng);
    auto& row = table.successors[i];
    double total = 0.0;
    for (std::size_t k = 0; k < fanout; ++k) {
      const double w = 0.2 + weight(rng);
      row.emplace_back(candidates[k], w);
      total += w;
    }
    for (auto& entry : row) entry.second /= total;
  }
  return table;
}

SynthCorpus synth_corpus(const SynthConfig& config) {
  if (config.n_items < 2) throw ConfigError("synthetic corpus needs at least two items");
  if (config.day_count == 0) throw ConfigError("day_count must be positive");
  if (config.min_length < 1 || config.max_length < config.min_length) {
    throw ConfigError("invalid synthetic session length bounds");
  }
  if (!(config.mean_length >= 1.0)) throw ConfigError("mean_length must be >= 1");

  SynthCorpus corpus;
  corpus.table = make_transition_table(config.seed * 2 + 1, config.n_items, config.fanout);
  const TimestampMs span = static_cast<TimestampMs>(config.day_count) * kMsPerDay;
  corpus.shift_time = config.origin_ms + span;
  if (config.shift_at) {
    if (!(*config.shift_at >= 0.0 && *config.shift_at <= 1.0)) {
      throw ConfigError("shift_at must lie in [0, 1]");
    }
    corpus.shifted_table =
        make_transition_table(config.seed * 2 + 7, config.n_items, config.fanout);
    corpus.shift_time =
        config.origin_ms + static_cast<TimestampMs>(*config.shift_at * static_cast<double>(span));
  }

  std::mt19937_64 rng(config.seed);
  // Session ends at the first success: length = 1 + failures, mean 1/p.
  std::geometric_distribution<std::size_t> extra(1.0 / config.mean_length);
  std::uniform_int_distribution<TimestampMs> start_dist(0, span - 3'600'000);
  std::uniform_int_distribution<TimestampMs> gap_dist(5'000, 180'000);
  std::uniform_int_distribution<std::size_t> first_item(0, config.n_items - 1);

  std::vector<std::pair<TimestampMs, std::vector<std::size_t>>> drawn;
  drawn.reserve(config.n_sessions);
  for (std::size_t s = 0; s < config.n_sessions; ++s) {
    const TimestampMs start = config.origin_ms + start_dist(rng);
    const auto length =
        std::clamp<std::size_t>(1 + extra(rng), config.min_length, config.max_length);
    const auto& table = (corpus.shifted_table && start >= corpus.shift_time)
                            ? *corpus.shifted_table
                            : corpus.table;
    std::vector<std::size_t> items{first_item(rng)};
    while (items.size() < length) {
      items.push_back(sample_successor(table.successors[items.back()], rng));
    }
    drawn.emplace_back(start, std::move(items));
  }
  std::stable_sort(drawn.begin(), drawn.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  corpus.sessions.reserve(drawn.size());
  for (std::size_t s = 0; s < drawn.size(); ++s) {
    Session session{std::to_string(s + 1), {}};
    TimestampMs t = drawn[s].first;
    for (std::size_t item : drawn[s].second) {
      session.events.push_back(ClickEvent{session.session_id, t, synth_item_id(item)});
      t += gap_dist(rng);
    }
    corpus.sessions.push_back(std::move(session));
  }
  return corpus;
}

std::vector<Session> synth_generate(std::uint64_t seed, std::size_t n_items,
                                    std::size_t n_sessions, std::size_t day_count) {
  SynthConfig config;
  config.seed = seed;
  config.n_items = n_items;
  config.n_sessions = n_sessions;
  config.day_count = day_count;
  return synth_corpus(config).sessions;
}

}  // namespace srnlab
