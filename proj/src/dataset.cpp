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

#include "srnlab/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "srnlab/errors.hpp"

namespace srnlab {

namespace {

constexpr TimestampMs kMsPerDay = 86'400'000;

template <typename T>
bool parse_int(std::string_view text, T& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

TimestampMs Session::start_time() const {
  TimestampMs best = events.empty() ? 0 : events.front().timestamp;
  for (const auto& e : events) best = std::min(best, e.timestamp);
  return best;
}

std::optional<TimestampMs> parse_iso8601_ms(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS
  if (text.size() < 19 || text[4] != '-' || text[7] != '-' ||
      (text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  int year = 0;
  unsigned month = 0, day = 0, hour = 0, minute = 0, second = 0;
  if (!parse_int(text.substr(0, 4), year) || !parse_int(text.substr(5, 2), month) ||
      !parse_int(text.substr(8, 2), day) || !parse_int(text.substr(11, 2), hour) ||
      !parse_int(text.substr(14, 2), minute) || !parse_int(text.substr(17, 2), second)) {
    return std::nullopt;
  }
  if (hour > 23 || minute > 59 || second > 60) return std::nullopt;
  std::string_view rest = text.substr(19);
  TimestampMs millis = 0;
  if (!rest.empty() && rest.front() == '.') {
    rest.remove_prefix(1);
    std::size_t digits = 0;
    while (digits < rest.size() && rest[digits] >= '0' && rest[digits] <= '9') ++digits;
    if (digits == 0) return std::nullopt;
    // Milliseconds from the first three fractional digits.
    for (std::size_t i = 0; i < 3; ++i) {
      millis = millis * 10 + (i < digits ? rest[i] - '0' : 0);
    }
    rest.remove_prefix(digits);
  }
  if (rest == "Z") rest.remove_prefix(1);
  if (!rest.empty()) return std::nullopt;

  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) return std::nullopt;
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return static_cast<TimestampMs>(days) * kMsPerDay +
         ((hour * 60 + minute) * 60 + second) * TimestampMs{1000} + millis;
}

std::int64_t utc_day(TimestampMs ms) {
  return ms >= 0 ? ms / kMsPerDay : -((-ms + kMsPerDay - 1) / kMsPerDay);
}

std::string format_iso8601_ms(TimestampMs ms) {
  const std::int64_t days = utc_day(ms);
  TimestampMs rem = ms - days * kMsPerDay;
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
  const auto millis = rem % 1000;
  rem /= 1000;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60),
                static_cast<int>(millis));
  return buf;
}

std::vector<Session> parse_clicks(std::istream& in) {
  std::vector<Session> sessions;
  std::unordered_map<std::string, std::size_t> slot;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split(view, ',');
    if (fields.size() < 3 || fields.size() > 4) {
      throw ParseError(line_no, "expected session_id,timestamp,item_id[,category]");
    }
    const auto session_id = trim(fields[0]);
    const auto item_id = trim(fields[2]);
    if (session_id.empty()) throw ParseError(line_no, "empty session id");
    if (item_id.empty()) throw ParseError(line_no, "empty item id");
    const auto ts = parse_iso8601_ms(trim(fields[1]));
    if (!ts) throw ParseError(line_no, "unparseable timestamp '" + std::string(fields[1]) + "'");

    auto [it, inserted] = slot.try_emplace(std::string(session_id), sessions.size());
    if (inserted) sessions.push_back(Session{std::string(session_id), {}});
    sessions[it->second].events.push_back(
        ClickEvent{std::string(session_id), *ts, std::string(item_id)});
  }
  for (auto& s : sessions) {
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const ClickEvent& a, const ClickEvent& b) {
                       return a.timestamp < b.timestamp;
                     });
  }
  return sessions;
}

std::vector<Session> parse_clicks_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open click log '" + path + "'");
  return parse_clicks(in);
}

void write_clicks(std::ostream& out, const std::vector<Session>& sessions) {
  for (const auto& s : sessions) {
    for (const auto& e : s.events) {
      out << e.session_id << ',' << format_iso8601_ms(e.timestamp) << ',' << e.item_id << '\n';
    }
  }
}

ItemIndex Vocabulary::add(const std::string& item_id) {
  auto [it, inserted] =
      item_to_index_.try_emplace(item_id, static_cast<ItemIndex>(index_to_item_.size()));
  if (inserted) index_to_item_.push_back(item_id);
  return it->second;
}

std::optional<ItemIndex> Vocabulary::find(const std::string& item_id) const {
  auto it = item_to_index_.find(item_id);
  if (it == item_to_index_.end()) return std::nullopt;
  return it->second;
}

ItemIndex Vocabulary::index_of(const std::string& item_id) const {
  auto found = find(item_id);
  if (!found) throw DataError("item '" + item_id + "' is not in the vocabulary");
  return *found;
}

const std::string& Vocabulary::item_at(ItemIndex index) const {
  if (index <= 0 || static_cast<std::size_t>(index) >= index_to_item_.size()) {
    throw IndexError("item index " + std::to_string(index) + " outside [1, " +
                     std::to_string(size()) + "]");
  }
  return index_to_item_[static_cast<std::size_t>(index)];
}

SplitResult split_and_filter(std::vector<Session> sessions, const FilterOptions& options) {
  SplitResult result;
  std::erase_if(sessions, [](const Session& s) { return s.events.empty(); });
  if (sessions.empty()) throw ConfigError("split_and_filter: no sessions");

  if (options.split_last_day) {
    TimestampMs latest = sessions.front().events.front().timestamp;
    for (const auto& s : sessions) {
      for (const auto& e : s.events) latest = std::max(latest, e.timestamp);
    }
    const auto final_day = utc_day(latest);
    for (auto& s : sessions) {
      (utc_day(s.start_time()) == final_day ? result.test : result.train).push_back(std::move(s));
    }
  } else {
    result.train = std::move(sessions);
  }

  auto& train = result.train;
  while (true) {
    const std::size_t before_sessions = train.size();
    std::erase_if(train, [&](const Session& s) { return s.length() < options.min_session_length; });

    std::unordered_map<std::string, std::size_t> support;
    for (const auto& s : train) {
      for (const auto& e : s.events) ++support[e.item_id];
    }
    std::size_t removed_clicks = 0;
    for (auto& s : train) {
      removed_clicks += std::erase_if(s.events, [&](const ClickEvent& e) {
        return support[e.item_id] < options.min_item_support;
      });
    }
    if (removed_clicks == 0 && before_sessions == train.size()) break;
  }
  if (train.empty()) {
    throw ConfigError("split_and_filter: no training sessions survive the split and filters");
  }

  for (const auto& s : train) {
    for (const auto& e : s.events) result.vocab.add(e.item_id);
  }
  for (auto& s : result.test) {
    std::erase_if(s.events, [&](const ClickEvent& e) { return !result.vocab.find(e.item_id); });
  }
  std::erase_if(result.test,
                [&](const Session& s) { return s.length() < options.min_session_length; });
  return result;
}

std::vector<IndexedSession> index_sessions(const std::vector<Session>& sessions,
                                           const Vocabulary& vocab) {
  std::vector<IndexedSession> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) {
    IndexedSession is;
    is.start_time = s.start_time();
    is.items.reserve(s.length());
    for (const auto& e : s.events) is.items.push_back(vocab.index_of(e.item_id));
    out.push_back(std::move(is));
  }
  return out;
}

std::vector<TrainingExample> augment_prefixes(const IndexedSession& session) {
  std::vector<TrainingExample> out;
  const auto& x = session.items;
  if (x.size() < 2) return out;
  out.reserve(x.size() - 1);
  for (std::size_t r = 1; r < x.size(); ++r) {
    TrainingExample ex;
    ex.prefix.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(r));
    ex.label = x[r];
    ex.privileged.assign(x.rbegin(), x.rend() - static_cast<std::ptrdiff_t>(r + 1));
    ex.session_start = session.start_time;
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<TrainingExample> augment_all(const std::vector<IndexedSession>& sessions) {
  std::vector<TrainingExample> out;
  for (const auto& s : sessions) {
    auto examples = augment_prefixes(s);
    std::move(examples.begin(), examples.end(), std::back_inserter(out));
  }
  return out;
}

double parse_fraction(const std::string& text) {
  const auto view = trim(text);
  const auto slash = view.find('/');
  double value = 0.0;
  try {
    if (slash == std::string_view::npos) {
      std::size_t used = 0;
      value = std::stod(std::string(view), &used);
      if (used != view.size()) throw std::invalid_argument("trailing");
    } else {
      long num = 0, den = 0;
      if (!parse_int(view.substr(0, slash), num) || !parse_int(view.substr(slash + 1), den) ||
          den == 0) {
        throw std::invalid_argument("bad ratio");
      }
      value = static_cast<double>(num) / static_cast<double>(den);
    }
  } catch (const std::exception&) {
    throw ConfigError("cannot parse fraction '" + text + "'");
  }
  if (!(value > 0.0 && value <= 1.0)) {
    throw ConfigError("fraction " + text + " outside (0, 1]");
  }
  return value;
}

namespace {

void sort_by_start(std::vector<TrainingExample>& examples) {
  std::stable_sort(examples.begin(), examples.end(),
                   [](const TrainingExample& a, const TrainingExample& b) {
                     return a.session_start < b.session_start;
                   });
}

}  // namespace

std::vector<TrainingExample> temporal_fraction(std::vector<TrainingExample> examples,
                                               double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("temporal fraction must lie in (0, 1]");
  }
  sort_by_start(examples);
  const auto keep = std::min(
      examples.size(),
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(examples.size()))));
  examples.erase(examples.begin(),
                 examples.begin() + static_cast<std::ptrdiff_t>(examples.size() - keep));
  return examples;
}

std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> temporal_holdout(
    std::vector<TrainingExample> examples, double validation_fraction) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  if (examples.size() < 2) {
    throw DataError("need at least two training examples to hold out a validation set");
  }
  sort_by_start(examples);
  auto n_val = static_cast<std::size_t>(
      std::floor(validation_fraction * static_cast<double>(examples.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, examples.size() - 1);
  const auto cut = examples.begin() + static_cast<std::ptrdiff_t>(examples.size() - n_val);
  std::vector<TrainingExample> val(std::make_move_iterator(cut),
                                   std::make_move_iterator(examples.end()));
  examples.erase(cut, examples.end());
  return {std::move(examples), std::move(val)};
}

namespace {

void write_indices(std::ostream& out, const std::vector<ItemIndex>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out << ' ';
    out << items[i];
  }
}

std::vector<ItemIndex> read_indices(std::string_view text, std::size_t line_no) {
  std::vector<ItemIndex> out;
  for (auto tok : split(trim(text), ' ')) {
    if (tok.empty()) continue;
    ItemIndex v = 0;
    if (!parse_int(tok, v)) throw ParseError(line_no, "bad item index '" + std::string(tok) + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

void write_examples(std::ostream& out, const std::vector<TrainingExample>& examples) {
  for (const auto& ex : examples) {
    write_indices(out, ex.prefix);
    out << '|' << ex.label << '|';
    write_indices(out, ex.privileged);
    out << '\n';
  }
}

std::vector<TrainingExample> read_examples(std::istream& in) {
  std::vector<TrainingExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto parts = split(trim(line), '|');
    if (parts.size() != 3) throw ParseError(line_no, "expected prefix|label|privileged");
    TrainingExample ex;
    ex.prefix = read_indices(parts[0], line_no);
    const auto label = read_indices(parts[1], line_no);
    if (label.size() != 1 || ex.prefix.empty()) throw ParseError(line_no, "bad example");
    ex.label = label.front();
    ex.privileged = read_indices(parts[2], line_no);
    out.push_back(std::move(ex));
  }
  return out;
}

PaddedRow pad_truncate(const std::vector<ItemIndex>& prefix, std::size_t window) {
  PaddedRow row{std::vector<ItemIndex>(window, kPaddingIndex),
                std::vector<std::uint8_t>(window, 0)};
  const std::size_t n = std::min(prefix.size(), window);
  const std::size_t offset = window - n;
  for (std::size_t i = 0; i < n; ++i) {
    row.inputs[offset + i] = prefix[prefix.size() - n + i];
    row.mask[offset + i] = 1;
  }
  return row;
}

void SequenceBlock::set_row(std::size_t r, const std::vector<ItemIndex>& sequence) {
  const std::size_t n = std::min(sequence.size(), window);
  const std::size_t offset = window - n;
  ItemIndex* it = items.data() + r * window;
  std::uint8_t* m = mask.data() + r * window;
  std::fill(it, it + window, kPaddingIndex);
  std::fill(m, m + window, 0);
  for (std::size_t i = 0; i < n; ++i) {
    it[offset + i] = sequence[sequence.size() - n + i];
    m[offset + i] = 1;
  }
}

std::size_t SequenceBlock::real_count(std::size_t r) const {
  return static_cast<std::size_t>(
      std::count(mask.begin() + static_cast<std::ptrdiff_t>(r * window),
                 mask.begin() + static_cast<std::ptrdiff_t>((r + 1) * window), 1));
}

SequenceBlock make_block(const std::vector<std::vector<ItemIndex>>& sequences,
                         std::size_t window) {
  SequenceBlock block(sequences.size(), window);
  for (std::size_t r = 0; r < sequences.size(); ++r) block.set_row(r, sequences[r]);
  return block;
}

std::vector<MiniBatch> make_batches(const std::vector<TrainingExample>& examples,
                                    const BatchOptions& options, std::mt19937_64& rng) {
  if (options.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (options.window == 0) throw ConfigError("window must be positive");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options.shuffle) std::shuffle(order.begin(), order.end(), rng);

  std::vector<MiniBatch> batches;
  for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
    const std::size_t n = std::min(options.batch_size, order.size() - start);
    MiniBatch batch;
    batch.inputs = SequenceBlock(n, options.window);
    if (options.with_privileged) batch.privileged = SequenceBlock(n, options.window);
    batch.labels.reserve(n);
    batch.example_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = order[start + i];
      const auto& ex = examples[id];
      if (ex.prefix.empty()) throw DataError("training example with empty prefix");
      batch.inputs.set_row(i, ex.prefix);
      if (batch.privileged) batch.privileged->set_row(i, ex.privileged);
      batch.labels.push_back(ex.label);
      batch.example_ids.push_back(id);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<MiniBatch> make_batches(const std::vector<TrainingExample>& examples,
                                    const BatchOptions& options, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return make_batches(examples, options, rng);
}

}  // namespace srnlab
