#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "autostega/error.hpp"

namespace autostega {

using BitGroup = std::vector<uint8_t>;  // values are 0 or 1

// Secret payload as an ordered bit sequence: a 32-bit big-endian length header
// (payload bit count), then payload bits MSB-first per byte. A FIFO of deferred
// groups is consumed ahead of the cursor.
class BitBuffer {
 public:
  static BitBuffer frame(std::span<const uint8_t> secret) {
    if (secret.size() >= (1ull << 29)) {
      throw config_error("secret exceeds 2^32-1 payload bits");
    }
    BitBuffer buf;
    uint64_t nbits = secret.size() * 8ull;
    for (int i = 31; i >= 0; --i) {
      buf.bits_.push_back(static_cast<uint8_t>((nbits >> i) & 1));
    }
    for (uint8_t byte : secret) {
      for (int i = 7; i >= 0; --i) {
        buf.bits_.push_back(static_cast<uint8_t>((byte >> i) & 1));
      }
    }
    buf.payload_bits_ = nbits;
    return buf;
  }

  // Appends extra bits after the framed payload (integrity trailer).
  void append_bits(const BitGroup& bits) {
    bits_.insert(bits_.end(), bits.begin(), bits.end());
  }

  // Pops n bits, deferred groups first, then cursor bits. Pads with zeros if
  // fewer remain and marks the buffer exhausted. Returns nullopt once already
  // exhausted (end-of-message signal).
  std::optional<BitGroup> read_bits(size_t n) {
    if (exhausted()) return std::nullopt;
    BitGroup out;
    out.reserve(n);
    while (out.size() < n) {
      if (!deferred_.empty()) {
        out.push_back(deferred_.front());
        deferred_.pop_front();
      } else if (cursor_ < bits_.size()) {
        out.push_back(bits_[cursor_++]);
      } else {
        out.push_back(0);  // pad; header framing lets the decoder discard these
      }
    }
    return out;
  }

  // Prepends a just-read group back onto the read stream in FIFO order.
  void defer_bits(const BitGroup& group) {
    deferred_.insert(deferred_.end(), group.begin(), group.end());
  }

  bool exhausted() const { return deferred_.empty() && cursor_ >= bits_.size(); }

  size_t cursor() const { return cursor_; }
  size_t total_bits() const { return bits_.size(); }
  uint64_t payload_bits() const { return payload_bits_; }
  const std::vector<uint8_t>& bits() const { return bits_; }

 private:
  std::vector<uint8_t> bits_;
  size_t cursor_ = 0;
  std::deque<uint8_t> deferred_;
  uint64_t payload_bits_ = 0;
};

inline BitGroup bytes_to_bits(std::span<const uint8_t> bytes) {
  BitGroup out;
  out.reserve(bytes.size() * 8);
  for (uint8_t b : bytes) {
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<uint8_t>((b >> i) & 1));
  }
  return out;
}

// Inverse of bytes_to_bits; bit count must be a multiple of 8.
inline std::vector<uint8_t> bits_to_bytes(std::span<const uint8_t> bits) {
  if (bits.size() % 8 != 0) {
    throw data_error("bit count not a multiple of 8");
  }
  std::vector<uint8_t> out(bits.size() / 8, 0);
  for (size_t i = 0; i < bits.size(); ++i) {
    out[i / 8] = static_cast<uint8_t>(out[i / 8] << 1 | (bits[i] & 1));
  }
  return out;
}

inline uint64_t bits_to_uint(std::span<const uint8_t> bits) {
  uint64_t v = 0;
  for (uint8_t b : bits) v = v << 1 | (b & 1);
  return v;
}

inline BitGroup uint_to_bits(uint64_t v, size_t width) {
  BitGroup out(width, 0);
  for (size_t i = 0; i < width; ++i) {
    out[width - 1 - i] = static_cast<uint8_t>((v >> i) & 1);
  }
  return out;
}

}  // namespace autostega
