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

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "turtlesmr/errors.hpp"

namespace turtlesmr {

struct CommandId {
  std::uint32_t issuer{0};
  std::uint32_t seq{0};

  auto operator<=>(const CommandId&) const = default;
};

inline std::string to_string(const CommandId& id) {
  return std::to_string(id.issuer) + "." + std::to_string(id.seq);
}

// An opaque state machine command. Equality is bitwise on (id, payload).
struct Command {
  CommandId id;
  std::string payload;

  bool operator==(const Command&) const = default;
};

// An immutable finite sequence of commands. Copies and prefixes share the
// underlying storage; equality is purely positional.
class Chain {
 public:
  Chain() = default;
  explicit Chain(std::vector<Command> commands)
      : store_(commands.empty() ? nullptr
                                : std::make_shared<const std::vector<Command>>(
                                      std::move(commands))),
        len_(store_ ? store_->size() : 0) {}
  Chain(std::initializer_list<Command> commands)
      : Chain(std::vector<Command>(commands)) {}

  std::size_t size() const { return len_; }
  bool empty() const { return len_ == 0; }
  const Command& operator[](std::size_t i) const { return (*store_)[i]; }

  std::span<const Command> commands() const {
    if (len_ == 0) return {};
    return {store_->data(), len_};
  }
  auto begin() const { return commands().begin(); }
  auto end() const { return commands().end(); }

  // The first `len` commands. Shares storage with *this.
  Chain prefix(std::size_t len) const {
    if (len > len_) throw UsageError("prefix length exceeds chain length");
    Chain out;
    if (len > 0) {
      out.store_ = store_;
      out.len_ = len;
    }
    return out;
  }

  Chain extended(std::span<const Command> suffix) const {
    if (suffix.empty()) return *this;
    std::vector<Command> all;
    all.reserve(len_ + suffix.size());
    all.insert(all.end(), begin(), end());
    all.insert(all.end(), suffix.begin(), suffix.end());
    return Chain(std::move(all));
  }

  bool shares_storage_with(const Chain& other) const {
    return store_ != nullptr && store_ == other.store_;
  }

  friend bool operator==(const Chain& a, const Chain& b) {
    if (a.len_ != b.len_) return false;
    if (a.len_ == 0 || a.store_ == b.store_) return true;
    return std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  std::shared_ptr<const std::vector<Command>> store_;
  std::size_t len_{0};
};

// Length of the longest common prefix of two chains.
inline std::size_t common_prefix_length(const Chain& a, const Chain& b) {
  const std::size_t limit = std::min(a.size(), b.size());
  if (a.shares_storage_with(b)) return limit;
  auto ac = a.commands();
  auto bc = b.commands();
  return static_cast<std::size_t>(
      std::mismatch(ac.begin(), ac.begin() + static_cast<std::ptrdiff_t>(limit),
                    bc.begin())
          .first -
      ac.begin());
}

// True iff `c` is an initial segment of `c2`.
inline bool is_prefix(const Chain& c, const Chain& c2) {
  return c.size() <= c2.size() && common_prefix_length(c, c2) == c.size();
}

// True iff one chain is a prefix of the other.
inline bool agrees(const Chain& c, const Chain& c2) {
  return common_prefix_length(c, c2) == std::min(c.size(), c2.size());
}

// Longest common prefix of a nonempty set of chains.
inline Chain meet(std::span<const Chain> chains) {
  if (chains.empty()) throw UsageError("meet of an empty set of chains");
  std::size_t len = chains.front().size();
  for (const Chain& c : chains.subspan(1))
    len = std::min(len, common_prefix_length(chains.front(), c));
  return chains.front().prefix(len);
}

inline Chain meet(std::initializer_list<Chain> chains) {
  return meet(std::span<const Chain>(chains.begin(), chains.size()));
}

inline Chain meet(const Chain& a, const Chain& b) {
  return a.prefix(common_prefix_length(a, b));
}

namespace detail {

// Index of the shortest or longest element of a pairwise-agreeing set. The
// set agrees iff every element is a prefix of a longest one.
inline std::size_t extremal_agreeing(std::span<const Chain> chains,
                                     bool want_max) {
  if (chains.empty())
    throw UsageError("extremum of an empty set of chains");
  std::size_t longest = 0;
  std::size_t shortest = 0;
  for (std::size_t i = 1; i < chains.size(); ++i) {
    if (chains[i].size() > chains[longest].size()) longest = i;
    if (chains[i].size() < chains[shortest].size()) shortest = i;
  }
  for (const Chain& c : chains) {
    if (!is_prefix(c, chains[longest]))
      throw AgreementViolation("chains in the set do not agree");
  }
  return want_max ? longest : shortest;
}

}  // namespace detail

// The unique maximum of a set of pairwise-agreeing chains.
inline Chain max_agreeing(std::span<const Chain> chains) {
  return chains[detail::extremal_agreeing(chains, true)];
}

inline Chain max_agreeing(std::initializer_list<Chain> chains) {
  return max_agreeing(std::span<const Chain>(chains.begin(), chains.size()));
}

// The unique minimum of a set of pairwise-agreeing chains.
inline Chain min_agreeing(std::span<const Chain> chains) {
  return chains[detail::extremal_agreeing(chains, false)];
}

inline Chain min_agreeing(std::initializer_list<Chain> chains) {
  return min_agreeing(std::span<const Chain>(chains.begin(), chains.size()));
}

// Canonical text form: the list of command ids, "[]" for the empty chain.
inline std::string to_string(const Chain& c) {
  std::string out = "[";
  bool first = true;
  for (const Command& cmd : c) {
    if (!first) out += ",";
    out += to_string(cmd.id);
    first = false;
  }
  out += "]";
  return out;
}

}  // namespace turtlesmr
