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
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "turtlesmr/chain.hpp"
#include "turtlesmr/errors.hpp"

namespace turtlesmr {

using Bytes = std::vector<std::uint8_t>;

// 64-bit FNV-1a. Used for trace hashes, payload digests and signature
// binding; never for anything adversarial beyond the simulation.
class Fnv1a {
 public:
  void update(std::span<const std::uint8_t> data) {
    for (std::uint8_t b : data) {
      h_ ^= b;
      h_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) {
    update({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }
  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_{0xcbf29ce484222325ULL};
};

inline std::uint64_t fnv1a(std::span<const std::uint8_t> data) {
  Fnv1a h;
  h.update(data);
  return h.digest();
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
  return out;
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void bytes(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void str(std::string_view s) {
    bytes({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  }

  Bytes take() { return std::move(out_); }
  const Bytes& view() const { return out_; }

 private:
  void put_le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes out_;
};

// Bounds-checked little-endian reader. Every short read throws ParseError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  std::span<const std::uint8_t> bytes() {
    const std::uint32_t len = u32();
    need(len);
    auto out = in_.subspan(pos_, len);
    pos_ += len;
    return out;
  }
  std::string str() {
    auto b = bytes();
    return {reinterpret_cast<const char*>(b.data()), b.size()};
  }
  bool done() const { return pos_ == in_.size(); }
  void expect_done() const {
    if (!done()) throw ParseError("trailing bytes after message");
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ParseError("truncated message");
  }
  std::uint64_t get_le(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(in_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_{0};
};

// Chain wire form: u32 count, then per command u32 issuer, u32 seq and a
// length-prefixed payload.
inline void write_commands(ByteWriter& w, std::span<const Command> cmds) {
  w.u32(static_cast<std::uint32_t>(cmds.size()));
  for (const Command& c : cmds) {
    w.u32(c.id.issuer);
    w.u32(c.id.seq);
    w.str(c.payload);
  }
}

inline std::vector<Command> read_commands(ByteReader& r) {
  const std::uint32_t count = r.u32();
  std::vector<Command> out;
  // Each command needs at least 12 bytes, which bounds a hostile count.
  out.reserve(std::min<std::uint32_t>(count, 1U << 16));
  for (std::uint32_t i = 0; i < count; ++i) {
    Command c;
    c.id.issuer = r.u32();
    c.id.seq = r.u32();
    c.payload = r.str();
    out.push_back(std::move(c));
  }
  return out;
}

inline void write_chain(ByteWriter& w, const Chain& c) { write_commands(w, c.commands()); }
inline Chain read_chain(ByteReader& r) { return Chain(read_commands(r)); }

inline Bytes encode_chain(const Chain& c) {
  ByteWriter w;
  write_chain(w, c);
  return w.take();
}

inline Chain decode_chain(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  Chain c = read_chain(r);
  r.expect_done();
  return c;
}

// A chain with a prefix the receiver is expected to know already omitted.
struct RelativeChain {
  std::uint32_t base_length{0};
  std::vector<Command> suffix;

  bool operator==(const RelativeChain&) const = default;
};

// Omits `decided` from `c` when it is a prefix; otherwise sends everything.
inline RelativeChain encode_relative(const Chain& c, const Chain& decided) {
  RelativeChain rc;
  if (is_prefix(decided, c)) rc.base_length = static_cast<std::uint32_t>(decided.size());
  auto cmds = c.commands().subspan(rc.base_length);
  rc.suffix.assign(cmds.begin(), cmds.end());
  return rc;
}

// std::nullopt means the receiver does not know enough yet (defer).
inline std::optional<Chain> decode_relative(const RelativeChain& rc, const Chain& known) {
  if (known.size() < rc.base_length) return std::nullopt;
  return known.prefix(rc.base_length).extended(rc.suffix);
}

inline void write_relative(ByteWriter& w, const RelativeChain& rc) {
  w.u32(rc.base_length);
  write_commands(w, rc.suffix);
}

inline RelativeChain read_relative(ByteReader& r) {
  RelativeChain rc;
  rc.base_length = r.u32();
  rc.suffix = read_commands(r);
  return rc;
}

enum class CodecMode { kRelative, kFull };

// Per-instance codec context: the sender omits its decided prefix, the
// receiver fills it in from the chain it already knows.
struct ChainCodec {
  CodecMode mode{CodecMode::kRelative};
  Chain decided;  // omitted on encode
  Chain known;    // supplied on decode

  void write(ByteWriter& w, const Chain& c) const {
    write_relative(w, encode_relative(c, mode == CodecMode::kRelative ? decided : Chain{}));
  }
  // Throws ParseError on malformed bytes; nullopt when undecodable for now.
  std::optional<Chain> read(ByteReader& r) const { return decode_relative(read_relative(r), known); }
};

// Simulator message envelope. Layout: u64 instance, u8 round_tag,
// u16 sender, u32 payload length, payload.
struct Envelope {
  std::uint64_t instance{0};
  std::uint8_t round_tag{0};
  std::uint16_t sender{0};
  Bytes payload;

  bool operator==(const Envelope&) const = default;
};

inline Bytes encode_envelope(const Envelope& e) {
  ByteWriter w;
  w.u64(e.instance);
  w.u8(e.round_tag);
  w.u16(e.sender);
  w.bytes(e.payload);
  return w.take();
}

inline Envelope decode_envelope(std::span<const std::uint8_t> b) {
  ByteReader r(b);
  Envelope e;
  e.instance = r.u64();
  e.round_tag = r.u8();
  e.sender = r.u16();
  auto p = r.bytes();
  e.payload.assign(p.begin(), p.end());
  r.expect_done();
  return e;
}

}  // namespace turtlesmr
