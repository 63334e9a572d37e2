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

#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "turtlesmr/errors.hpp"

namespace turtlesmr {

struct ProcessorId {
  std::uint16_t index{0};

  auto operator<=>(const ProcessorId&) const = default;
};

inline constexpr int kMaxProcessors = 64;

// A subset of processors 0..n-1 stored as a bitmask.
class ProcessorSet {
 public:
  constexpr ProcessorSet() = default;
  constexpr explicit ProcessorSet(std::uint64_t bits) : bits_(bits) {}

  static constexpr ProcessorSet all(int n) {
    return ProcessorSet(n >= 64 ? ~std::uint64_t{0}
                                : (std::uint64_t{1} << n) - 1);
  }

  constexpr bool contains(ProcessorId p) const {
    return (bits_ >> p.index) & 1U;
  }
  constexpr void insert(ProcessorId p) { bits_ |= std::uint64_t{1} << p.index; }
  constexpr void erase(ProcessorId p) { bits_ &= ~(std::uint64_t{1} << p.index); }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint64_t bits() const { return bits_; }

  constexpr bool is_subset_of(ProcessorSet other) const {
    return (bits_ & ~other.bits_) == 0;
  }

  friend constexpr ProcessorSet operator&(ProcessorSet a, ProcessorSet b) {
    return ProcessorSet(a.bits_ & b.bits_);
  }
  friend constexpr ProcessorSet operator|(ProcessorSet a, ProcessorSet b) {
    return ProcessorSet(a.bits_ | b.bits_);
  }
  constexpr bool operator==(const ProcessorSet&) const = default;

  std::vector<ProcessorId> members() const {
    std::vector<ProcessorId> out;
    for (std::uint64_t b = bits_; b != 0; b &= b - 1)
      out.push_back(ProcessorId{static_cast<std::uint16_t>(std::countr_zero(b))});
    return out;
  }

 private:
  std::uint64_t bits_{0};
};

// Calls fn(ProcessorSet) for every subset of `universe` with exactly `size`
// members, in increasing bitmask order.
template <typename Fn>
void for_each_subset_of_size(ProcessorSet universe, int size, Fn&& fn) {
  const std::vector<ProcessorId> members = universe.members();
  const int m = static_cast<int>(members.size());
  if (size < 0 || size > m) return;
  std::vector<int> idx(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    ProcessorSet s;
    for (int i : idx) s.insert(members[static_cast<std::size_t>(i)]);
    fn(s);
    int i = size - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - size + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < size; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

enum class QuorumKind { kThreshold };

// A quorum system over processors 0..n-1 tolerating f faults with the
// k-intersection guarantee. Only the threshold construction exists today.
class QuorumSystem {
 public:
  virtual ~QuorumSystem() = default;

  virtual QuorumKind kind() const = 0;
  virtual int n() const = 0;
  virtual int f() const = 0;
  virtual int k() const = 0;
  virtual bool is_quorum(ProcessorSet s) const = 0;
  // Inclusion-minimal quorums. Every quorum is a superset of one of these.
  virtual std::vector<ProcessorSet> minimal_quorums() const = 0;
};

// Quorums are all subsets with at least n - f members.
class ThresholdQuorumSystem final : public QuorumSystem {
 public:
  // Skips the n > k*f check. Only for demonstrating what breaks without it.
  static ThresholdQuorumSystem unchecked(int n, int f, int k) {
    return ThresholdQuorumSystem(n, f, k);
  }

  QuorumKind kind() const override { return QuorumKind::kThreshold; }
  int n() const override { return n_; }
  int f() const override { return f_; }
  int k() const override { return k_; }
  int quorum_size() const { return n_ - f_; }

  bool is_quorum(ProcessorSet s) const override {
    if (!s.is_subset_of(ProcessorSet::all(n_)))
      throw UsageError("processor id out of range");
    return s.size() >= n_ - f_;
  }

  std::vector<ProcessorSet> minimal_quorums() const override {
    std::vector<ProcessorSet> out;
    for_each_subset_of_size(ProcessorSet::all(n_), n_ - f_,
                            [&](ProcessorSet s) { out.push_back(s); });
    return out;
  }

 private:
  friend ThresholdQuorumSystem make_threshold(int n, int f, int k);
  ThresholdQuorumSystem(int n, int f, int k) : n_(n), f_(f), k_(k) {}

  int n_;
  int f_;
  int k_;
};

inline ThresholdQuorumSystem make_threshold(int n, int f, int k) {
  if (n < 1 || n > kMaxProcessors)
    throw ConfigError("n must be in [1, " + std::to_string(kMaxProcessors) + "]");
  if (f < 0) throw ConfigError("f must be non-negative");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (n <= k * f)
    throw ConfigError("threshold quorums need n > k*f (n=" + std::to_string(n) +
                      ", k=" + std::to_string(k) + ", f=" + std::to_string(f) +
                      ")");
  return ThresholdQuorumSystem(n, f, k);
}

inline bool is_quorum(const QuorumSystem& system, ProcessorSet s) {
  return system.is_quorum(s);
}

inline constexpr int kMaxEnumerableProcessors = 12;

// Exhaustive check that every k quorums (repetition allowed) share a
// processor. Tracks the set of intersections reachable after j quorums, so
// every k-tuple is covered without materializing the tuples themselves.
inline bool verify_k_intersection(const QuorumSystem& system, int k) {
  if (system.n() > kMaxEnumerableProcessors)
    throw CapacityError("k-intersection enumeration is limited to n <= " +
                        std::to_string(kMaxEnumerableProcessors));
  if (k < 1) throw UsageError("k must be at least 1");
  const std::vector<ProcessorSet> quorums = system.minimal_quorums();
  std::unordered_set<std::uint64_t> reachable{ProcessorSet::all(system.n()).bits()};
  for (int depth = 0; depth < k; ++depth) {
    std::unordered_set<std::uint64_t> next;
    for (std::uint64_t bits : reachable) {
      for (ProcessorSet q : quorums) {
        const std::uint64_t meet = bits & q.bits();
        if (meet == 0) return false;
        next.insert(meet);
      }
    }
    reachable = std::move(next);
  }
  return true;
}

// Worst-case size of the intersection of `count` threshold quorums.
inline int min_intersection_size(const QuorumSystem& system, int count) {
  if (system.kind() != QuorumKind::kThreshold)
    throw UsageError("min_intersection_size is defined for threshold systems");
  const int v = system.n() - count * system.f();
  return v > 0 ? v : 0;
}

// The processors that are correct for a whole run.
class CorrectSet {
 public:
  CorrectSet(const QuorumSystem& system, ProcessorSet correct)
      : correct_(correct), contains_quorum_(system.is_quorum(correct)) {}

  ProcessorSet members() const { return correct_; }
  bool contains(ProcessorId p) const { return correct_.contains(p); }
  // Whether some quorum consists entirely of correct processors.
  bool has_all_correct_quorum() const { return contains_quorum_; }

 private:
  ProcessorSet correct_;
  bool contains_quorum_;
};

}  // namespace turtlesmr
