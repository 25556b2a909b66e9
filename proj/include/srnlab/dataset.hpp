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

// Click-log ingestion, the last-day split with support filtering, prefix
// augmentation with privileged futures, temporal fractions, and batching.

#ifndef SRNLAB_DATASET_HPP_
#define SRNLAB_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace srnlab {

using ItemIndex = std::int32_t;
using TimestampMs = std::int64_t;

inline constexpr ItemIndex kPaddingIndex = 0;
inline constexpr std::size_t kDefaultWindow = 19;

struct ClickEvent {
  std::string session_id;
  TimestampMs timestamp = 0;
  std::string item_id;
};

struct Session {
  std::string session_id;
  std::vector<ClickEvent> events;

  TimestampMs start_time() const;
  std::size_t length() const { return events.size(); }
};

// Parses "YYYY-MM-DDTHH:MM:SS[.mmm]Z" into epoch milliseconds (UTC).
std::optional<TimestampMs> parse_iso8601_ms(std::string_view text);
std::string format_iso8601_ms(TimestampMs ms);
// Days since 1970-01-01 (UTC) containing ms.
std::int64_t utc_day(TimestampMs ms);

// Reads session_id,timestamp,item_id[,category] lines. Sessions come back in
// order of first appearance; events inside a session are stably sorted by
// timestamp. Throws ParseError with the offending line number.
std::vector<Session> parse_clicks(std::istream& in);
std::vector<Session> parse_clicks_file(const std::string& path);
void write_clicks(std::ostream& out, const std::vector<Session>& sessions);

class Vocabulary {
 public:
  // Assigns the next free index (starting at 1) if the item is new.
  ItemIndex add(const std::string& item_id);
  std::optional<ItemIndex> find(const std::string& item_id) const;
  ItemIndex index_of(const std::string& item_id) const;
  const std::string& item_at(ItemIndex index) const;

  // m: the number of real items. The model tables hold m + 1 rows.
  std::size_t size() const { return index_to_item_.size() - 1; }
  std::size_t size_with_padding() const { return index_to_item_.size(); }

 private:
  std::unordered_map<std::string, ItemIndex> item_to_index_;
  std::vector<std::string> index_to_item_{std::string()};
};

struct FilterOptions {
  std::size_t min_session_length = 2;
  std::size_t min_item_support = 5;
  // When false every session is training data and the test list is empty.
  bool split_last_day = true;
};

struct SplitResult {
  std::vector<Session> train;
  std::vector<Session> test;
  Vocabulary vocab;
};

// Test = sessions starting on the final UTC calendar day present in the data.
// Training sessions are filtered iteratively (short sessions, rare items)
// until stable; test clicks on unknown items are dropped, then short test
// sessions. Throws ConfigError when no training session survives.
SplitResult split_and_filter(std::vector<Session> sessions, const FilterOptions& options = {});

struct IndexedSession {
  std::vector<ItemIndex> items;
  TimestampMs start_time = 0;
};

// Throws DataError on items missing from the vocabulary.
std::vector<IndexedSession> index_sessions(const std::vector<Session>& sessions,
                                           const Vocabulary& vocab);

struct TrainingExample {
  std::vector<ItemIndex> prefix;
  ItemIndex label = kPaddingIndex;
  // Reversed future after the label: [x_n, ..., x_{r+2}].
  std::vector<ItemIndex> privileged;
  TimestampMs session_start = 0;

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

// n - 1 examples for a session of length n >= 2.
std::vector<TrainingExample> augment_prefixes(const IndexedSession& session);
std::vector<TrainingExample> augment_all(const std::vector<IndexedSession>& sessions);

// "1/256", "1/4", "1", "0.25" ...
double parse_fraction(const std::string& text);

// Stable sort by session start, then keep the last ceil(fraction * N).
std::vector<TrainingExample> temporal_fraction(std::vector<TrainingExample> examples,
                                               double fraction);

// Stable sort by session start; the last floor(fraction * N) examples (at
// least one when N >= 2) become the validation set.
std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> temporal_holdout(
    std::vector<TrainingExample> examples, double validation_fraction);

// `prefix|label|privileged` with space-separated indices.
void write_examples(std::ostream& out, const std::vector<TrainingExample>& examples);
std::vector<TrainingExample> read_examples(std::istream& in);

// A rows x window block of left-padded item indices.
struct SequenceBlock {
  std::size_t rows = 0;
  std::size_t window = 0;
  std::vector<ItemIndex> items;
  std::vector<std::uint8_t> mask;

  SequenceBlock() = default;
  SequenceBlock(std::size_t rows_in, std::size_t window_in)
      : rows(rows_in), window(window_in), items(rows_in * window_in, kPaddingIndex),
        mask(rows_in * window_in, 0) {}

  ItemIndex item(std::size_t r, std::size_t t) const { return items[r * window + t]; }
  bool real(std::size_t r, std::size_t t) const { return mask[r * window + t] != 0; }
  // Writes pad_truncate(sequence) into row r. Empty sequences stay all padding.
  void set_row(std::size_t r, const std::vector<ItemIndex>& sequence);
  std::size_t real_count(std::size_t r) const;
};

struct PaddedRow {
  std::vector<ItemIndex> inputs;
  std::vector<std::uint8_t> mask;
};

// Keeps the most recent `window` items; shorter inputs are left-padded with 0.
PaddedRow pad_truncate(const std::vector<ItemIndex>& prefix, std::size_t window);

SequenceBlock make_block(const std::vector<std::vector<ItemIndex>>& sequences,
                         std::size_t window);

struct MiniBatch {
  SequenceBlock inputs;
  std::vector<ItemIndex> labels;
  std::optional<SequenceBlock> privileged;
  // Positions of the rows in the source example list.
  std::vector<std::size_t> example_ids;

  std::size_t size() const { return labels.size(); }
};

struct BatchOptions {
  std::size_t batch_size = 512;
  std::size_t window = kDefaultWindow;
  bool with_privileged = false;
  bool shuffle = true;
};

// One epoch of batches; the order is a deterministic function of rng state.
// The final short batch is kept.
std::vector<MiniBatch> make_batches(const std::vector<TrainingExample>& examples,
                                    const BatchOptions& options, std::mt19937_64& rng);
std::vector<MiniBatch> make_batches(const std::vector<TrainingExample>& examples,
                                    const BatchOptions& options, std::uint64_t seed);

// Seeded Markov-chain session generator for desk-scale experiments.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_items = 200;
  std::size_t n_sessions = 20000;
  std::size_t day_count = 30;
  // Successors per item in the sparse transition table.
  std::size_t fanout = 5;
  double mean_length = 6.0;
  std::size_t min_length = 2;
  std::size_t max_length = 19;
  // When set, sessions starting after this fraction of the timeline follow
  // a second, independently drawn transition table.
  std::optional<double> shift_at;
  TimestampMs origin_ms = 1396310400000;  // 2014-04-01T00:00:00Z
};

struct TransitionTable {
  // successors[i] lists (next item, probability) for item i in [0, n_items).
  std::vector<std::vector<std::pair<std::size_t, double>>> successors;
};

TransitionTable make_transition_table(std::uint64_t seed, std::size_t n_items,
                                      std::size_t fanout);

struct SynthCorpus {
  std::vector<Session> sessions;
  TransitionTable table;
  std::optional<TransitionTable> shifted_table;
  TimestampMs shift_time = 0;
};

SynthCorpus synth_corpus(const SynthConfig& config);
std::vector<Session> synth_generate(std::uint64_t seed, std::size_t n_items,
                                    std::size_t n_sessions, std::size_t day_count);
std::string synth_item_id(std::size_t item);

}  // namespace srnlab

#endif  // SRNLAB_DATASET_HPP_
