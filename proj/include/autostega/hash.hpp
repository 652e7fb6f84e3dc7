#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>
#include <vector>

namespace autostega {

inline constexpr uint64_t kFnvOffset64 = 0xcbf29ce484222325ULL;
inline constexpr uint64_t kFnvPrime64 = 0x100000001b3ULL;

inline uint64_t fnv1a64(std::span<const uint8_t> data, uint64_t h = kFnvOffset64) {
  for (uint8_t b : data) {
    h ^= b;
    h *= kFnvPrime64;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s) {
  return fnv1a64(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

inline void put_le64(uint8_t* out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<uint8_t>(v >> (8 * i));
}

// Rolling hash over emitted token ids; seeds the parity channel's context input.
inline uint64_t context_hash_init() { return kFnvOffset64; }

inline uint64_t context_hash_push(uint64_t h, uint32_t token_id) {
  std::array<uint8_t, 8> buf{};
  put_le64(buf.data(), token_id);
  return fnv1a64(buf, h);
}

// CRC-32 (reflected, poly 0xEDB88320), used as the payload integrity trailer.
inline uint32_t crc32(std::span<const uint8_t> data) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = 0xFFFFFFFFu;
  for (uint8_t b : data) c = table[(c ^ b) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

}  // namespace autostega
