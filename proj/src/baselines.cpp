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
#include <cmath>
#include <unordered_map>

#include "srnlab/errors.hpp"
#include "srnlab/evaluation.hpp"

namespace srnlab {

Popularity item_popularity(const std::vector<IndexedSession>& sessions,
                           std::size_t vocab_size_with_pad) {
  Popularity pop;
  pop.counts.assign(vocab_size_with_pad, 0);
  for (const auto& s : sessions) {
    for (ItemIndex item : s.items) {
      if (item <= 0 || static_cast<std::size_t>(item) >= vocab_size_with_pad) {
        throw IndexError("item index " + std::to_string(item) + " outside the vocabulary");
      }
      ++pop.counts[static_cast<std::size_t>(item)];
    }
  }
  for (std::size_t i = 1; i < vocab_size_with_pad; ++i) pop.order.push_back(static_cast<ItemIndex>(i));
  std::stable_sort(pop.order.begin(), pop.order.end(), [&](ItemIndex a, ItemIndex b) {
    return pop.counts[static_cast<std::size_t>(a)] > pop.counts[static_cast<std::size_t>(b)];
  });
  return pop;
}

namespace {

std::uint64_t count_of(const Popularity& pop, ItemIndex item) {
  const auto i = static_cast<std::size_t>(item);
  return i < pop.counts.size() ? pop.counts[i] : 0;
}

void fill_by_popularity(std::vector<ItemIndex>& out, const Popularity& pop, std::size_t k,
                        ItemIndex exclude) {
  for (ItemIndex item : pop.order) {
    if (out.size() >= k) break;
    if (item == exclude || std::find(out.begin(), out.end(), item) != out.end()) continue;
    out.push_back(item);
  }
}

}  // namespace

std::vector<ItemIndex> spop_rank(const Prefix& prefix, const Popularity& popularity,
                                 std::size_t k) {
  std::unordered_map<ItemIndex, std::size_t> in_session;
  std::vector<ItemIndex> seen;
  for (ItemIndex item : prefix) {
    if (in_session[item]++ == 0) seen.push_back(item);
  }
  std::sort(seen.begin(), seen.end(), [&](ItemIndex a, ItemIndex b) {
    const auto ca = in_session[a], cb = in_session[b];
    if (ca != cb) return ca > cb;
    const auto pa = count_of(popularity, a), pb = count_of(popularity, b);
    if (pa != pb) return pa > pb;
    return a < b;
  });
  if (seen.size() > k) seen.resize(k);
  fill_by_popularity(seen, popularity, k, kPaddingIndex);
  return seen;
}

double ItemKnnTable::similarity(ItemIndex a, ItemIndex b) const {
  const auto i = static_cast<std::size_t>(a);
  if (a <= 0 || i >= neighbours.size()) return 0.0;
  for (const auto& [item, sim] : neighbours[i]) {
    if (item == b) return sim;
  }
  return 0.0;
}

ItemKnnTable build_itemknn(const std::vector<IndexedSession>& sessions,
                           std::size_t vocab_size_with_pad, double damping) {
  if (!(damping >= 0.0)) throw ConfigError("Item-KNN damping must be non-negative");
  std::vector<std::uint64_t> session_count(vocab_size_with_pad, 0);
  std::vector<std::unordered_map<ItemIndex, std::uint64_t>> co(vocab_size_with_pad);
  std::vector<ItemIndex> unique;
  for (const auto& s : sessions) {
    unique.assign(s.items.begin(), s.items.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (ItemIndex a : unique) {
      if (a <= 0 || static_cast<std::size_t>(a) >= vocab_size_with_pad) {
        throw IndexError("item index " + std::to_string(a) + " outside the vocabulary");
      }
      ++session_count[static_cast<std::size_t>(a)];
      for (ItemIndex b : unique) {
        if (a != b) ++co[static_cast<std::size_t>(a)][b];
      }
    }
  }
  ItemKnnTable table;
  table.damping = damping;
  table.neighbours.resize(vocab_size_with_pad);
  for (std::size_t i = 1; i < vocab_size_with_pad; ++i) {
    auto& list = table.neighbours[i];
    for (const auto& [j, c] : co[i]) {
      const double denom =
          std::sqrt(static_cast<double>(session_count[i]) *
                    static_cast<double>(session_count[static_cast<std::size_t>(j)])) +
          damping;
      list.emplace_back(j, static_cast<double>(c) / denom);
    }
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return a.second > b.second || (a.second == b.second && a.first < b.first);
    });
  }
  return table;
}

std::vector<ItemIndex> itemknn_rank(ItemIndex last_item, const ItemKnnTable& table,
                                    const Popularity& popularity, std::size_t k) {
  std::vector<ItemIndex> out;
  const auto i = static_cast<std::size_t>(last_item);
  if (last_item > 0 && i < table.neighbours.size()) {
    for (const auto& [item, sim] : table.neighbours[i]) {
      if (out.size() >= k) break;
      if (item != last_item && sim > 0.0) out.push_back(item);
    }
  }
  fill_by_popularity(out, popularity, k, last_item);
  return out;
}

std::vector<std::vector<ItemIndex>> SPopRecommender::recommend(const std::vector<Prefix>& prefixes,
                                                               std::size_t k) {
  std::vector<std::vector<ItemIndex>> out;
  out.reserve(prefixes.size());
  for (const auto& p : prefixes) out.push_back(spop_rank(p, popularity_, k));
  return out;
}

std::vector<std::vector<ItemIndex>> ItemKnnRecommender::recommend(
    const std::vector<Prefix>& prefixes, std::size_t k) {
  std::vector<std::vector<ItemIndex>> out;
  out.reserve(prefixes.size());
  for (const auto& p : prefixes) {
    out.push_back(itemknn_rank(p.empty() ? kPaddingIndex : p.back(), table_, popularity_, k));
  }
  return out;
}

}  // namespace srnlab
