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

// Exhaustive pools of second-round Lower-Bound messages, shared by the unit
// tests and the acceptance suite.

#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "oracles.hpp"
#include "turtlesmr/bft.hpp"
#include "turtlesmr/explore.hpp"

namespace pools {

struct PoolStats {
  std::uint64_t pools{0};
  std::uint64_t valid{0};
  std::uint64_t rejected{0};
  std::uint64_t violations{0};
};

// One instance at n processors with f=1 and k=3. The last processor is
// Byzantine and signs every chain of a small universe. Every round-2
// message any sender could build from a quorum of signed proposals is
// generated, along with tampered variants. Messages that validate must
// carry pairwise agreeing x, each agreeing with the meet w of all valid
// inputs, and x from correct-only proposals must extend w.
inline PoolStats round_two_pool(int n) {
  using namespace turtlesmr;
  auto pid = [](int i) { return ProcessorId{static_cast<std::uint16_t>(i)}; };
  const auto sys = make_threshold(n, 1, 3);
  const auto universe = small_chain_universe();
  const int byz = n - 1;
  PoolStats stats;
  std::vector<std::size_t> idx(static_cast<std::size_t>(n - 1), 0);
  const std::vector<std::size_t> radix(static_cast<std::size_t>(n - 1), universe.size());
  do {
    SignatureLedger ledger;
    auto sign = [&](int p, SignedStage st, const Chain& c) { return ledger.sign(pid(p), signed_statement(st, 1, c)); };
    std::vector<SignedChain> correct;
    for (int p = 0; p < n - 1; ++p) {
      const Chain& c = universe[idx[static_cast<std::size_t>(p)]];
      correct.push_back(SignedChain{pid(p), c, sign(p, SignedStage::kProposal, c)});
    }
    std::vector<SignedChain> byzantine;
    for (const Chain& c : universe) byzantine.push_back(SignedChain{pid(byz), c, sign(byz, SignedStage::kProposal, c)});

    std::vector<Chain> valid_inputs;
    for (const auto& e : correct) valid_inputs.push_back(e.chain);
    for (const auto& e : byzantine) valid_inputs.push_back(e.chain);
    const Chain w = oracle::lcp_all(valid_inputs);

    std::vector<std::pair<RoundTwoMessage, int>> pool;
    for (ProcessorSet q : sys.minimal_quorums()) {
      std::vector<SignedChain> base;
      for (ProcessorId p : q.members())
        if (p.index != byz) base.push_back(correct[p.index]);
      std::vector<std::vector<SignedChain>> bases;
      if (q.contains(pid(byz))) {
        for (const auto& b : byzantine) {
          bases.push_back(base);
          bases.back().push_back(b);
        }
      } else {
        bases.push_back(base);
      }
      for (const auto& basis : bases) {
        std::vector<Chain> cs;
        for (const auto& e : basis) cs.push_back(e.chain);
        const Chain x = oracle::lcp_all(cs);
        const Chain longer = x.extended(std::vector<Command>{oracle::letter(1)});
        for (int sender = 0; sender < n; ++sender) {
          pool.push_back({RoundTwoMessage{x, sign(sender, SignedStage::kRoundTwo, x), basis}, sender});
          pool.push_back({RoundTwoMessage{longer, sign(sender, SignedStage::kRoundTwo, longer), basis}, sender});
          RoundTwoMessage swapped{x, sign(sender, SignedStage::kRoundTwo, x), basis};
          swapped.basis.front().chain = universe[(idx[0] + 1) % universe.size()];
          pool.push_back({swapped, sender});
        }
      }
    }

    std::vector<Chain> xs;
    for (const auto& [m, sender] : pool) {
      if (!validate_bft_lowerbound_message2(m, pid(sender), 1, sys, ledger)) {
        ++stats.rejected;
        continue;
      }
      ++stats.valid;
      std::vector<Chain> cs;
      bool correct_only = sender != byz;
      for (const auto& e : m.basis) {
        cs.push_back(e.chain);
        correct_only = correct_only && e.signer.index != byz;
      }
      if (m.x != oracle::lcp_all(cs) || !agrees(w, m.x) || (correct_only && !is_prefix(w, m.x))) ++stats.violations;
      if (std::find(xs.begin(), xs.end(), m.x) == xs.end()) xs.push_back(m.x);
    }
    for (const Chain& x : xs)
      for (const Chain& y : xs)
        if (!agrees(x, y)) ++stats.violations;
    ++stats.pools;
  } while (detail::next_index(idx, radix));
  return stats;
}

}  // namespace pools
