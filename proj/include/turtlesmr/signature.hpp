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

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>

#include "turtlesmr/codec.hpp"
#include "turtlesmr/quorum.hpp"

namespace turtlesmr {

// Simulation-grade signature: the signer, a digest of the signed bytes and
// a ledger-issued nonce. Only the ledger can make a signature verify.
struct Signature {
  ProcessorId signer;
  std::uint64_t digest{0};
  std::uint64_t nonce{0};

  bool operator==(const Signature&) const = default;
};

inline void write_signature(ByteWriter& w, const Signature& s) {
  w.u16(s.signer.index);
  w.u64(s.digest);
  w.u64(s.nonce);
}

inline Signature read_signature(ByteReader& r) {
  Signature s;
  s.signer.index = r.u16();
  s.digest = r.u64();
  s.nonce = r.u64();
  return s;
}

// Trusted registry of every signature minted in a run. Thread-safe.
class SignatureLedger {
 public:
  Signature sign(ProcessorId signer, std::span<const std::uint8_t> message) {
    std::lock_guard lock(mu_);
    Signature s{signer, fnv1a(message), ++next_nonce_};
    minted_.emplace(std::make_pair(signer.index, s.nonce), s.digest);
    return s;
  }

  bool verify(ProcessorId signer, std::span<const std::uint8_t> message, const Signature& sig) const {
    if (sig.signer != signer) return false;
    if (sig.digest != fnv1a(message)) return false;
    std::lock_guard lock(mu_);
    auto it = minted_.find(std::make_pair(signer.index, sig.nonce));
    return it != minted_.end() && it->second == sig.digest;
  }

  std::size_t minted() const {
    std::lock_guard lock(mu_);
    return minted_.size();
  }

 private:
  mutable std::mutex mu_;
  std::uint64_t next_nonce_{0};
  std::map<std::pair<std::uint16_t, std::uint64_t>, std::uint64_t> minted_;
};

// A processor's signing key: it can only sign as its own identity.
class Signer {
 public:
  Signer(std::shared_ptr<SignatureLedger> ledger, ProcessorId self)
      : ledger_(std::move(ledger)), self_(self) {}

  Signature sign(std::span<const std::uint8_t> message) const { return ledger_->sign(self_, message); }
  ProcessorId id() const { return self_; }
  const SignatureLedger& ledger() const { return *ledger_; }

 private:
  std::shared_ptr<SignatureLedger> ledger_;
  ProcessorId self_;
};

}  // namespace turtlesmr
