// Copyright 2026 The turtlesmr Authors
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

// Independent brute-force references used by the tests. Nothing here calls
// the library's algorithms; only its data types.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "turtlesmr/chain.hpp"

namespace oracle {

using turtlesmr::Chain;
using turtlesmr::Command;

// Commands drawn from a tiny alphabet so random chains share prefixes often.
inline Command letter(int i) {
  return Command{{0, static_cast<std::uint32_t>(i)}, std::string(1, static_cast<char>('a' + i))};
}

inline Chain chain_of(const std::vector<int>& letters) {
  std::vector<Command> cmds;
  for (int i : letters) cmds.push_back(letter(i));
  return Chain(std::move(cmds));
}

inline std::vector<Command> to_vector(const Chain& c) { return {c.begin(), c.end()}; }

inline std::size_t lcp(const Chain& a, const Chain& b) {
  const auto va = to_vector(a);
  const auto vb = to_vector(b);
  std::size_t i = 0;
  while (i < va.size() && i < vb.size() && va[i] == vb[i]) ++i;
  return i;
}

inline bool prefix(const Chain& a, const Chain& b) {
  const auto va = to_vector(a);
  const auto vb = to_vector(b);
  if (va.size() > vb.size()) return false;
  return std::equal(va.begin(), va.end(), vb.begin());
}

inline Chain take(const Chain& c, std::size_t len) {
  auto v = to_vector(c);
  v.resize(len);
  return Chain(std::move(v));
}

inline Chain lcp_all(const std::vector<Chain>& cs) {
  Chain acc = cs.front();
  for (const Chain& c : cs) acc = take(acc, lcp(acc, c));
  return acc;
}

template <typename Rng>
Chain random_chain(Rng& rng, std::size_t max_len, int alphabet = 3) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> pick(0, alphabet - 1);
  std::vector<int> v(len(rng));
  for (int& x : v) x = pick(rng);
  return chain_of(v);
}

// Random prefix of `base` followed by random letters.
template <typename Rng>
Chain random_branch(Rng& rng, const Chain& base, std::size_t max_len, int alphabet = 3) {
  std::uniform_int_distribution<std::size_t> cut(0, base.size());
  auto v = to_vector(take(base, cut(rng)));
  std::uniform_int_distribution<int> pick(0, alphabet - 1);
  std::uniform_int_distribution<std::size_t> extra(0, max_len > v.size() ? max_len - v.size() : 0);
  for (std::size_t i = extra(rng); i > 0; --i) v.push_back(letter(pick(rng)));
  return Chain(std::move(v));
}

// Do k subsets of {0..n-1}, each of size >= n - f, always share an element?
// Enumerates every non-decreasing k-tuple of the size-(n-f) subsets.
inline bool k_intersection(int n, int f, int k) {
  std::vector<std::uint64_t> subsets;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << n); ++b)
    if (std::popcount(b) == n - f) subsets.push_back(b);
  std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
  const std::uint64_t all = (std::uint64_t{1} << n) - 1;
  while (true) {
    std::uint64_t acc = all;
    for (std::size_t i : idx) acc &= subsets[i];
    if (acc == 0) return false;
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] + 1 == subsets.size()) --pos;
    if (pos < 0) return true;
    const std::size_t v = idx[static_cast<std::size_t>(pos)] + 1;
    for (int j = pos; j < k; ++j) idx[static_cast<std::size_t>(j)] = v;
  }
}

}  // namespace oracle
