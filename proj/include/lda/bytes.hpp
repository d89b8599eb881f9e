#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include "lda/errors.hpp"

// Little-endian scalar packing for the binary interchange formats. Explicit
// byte shuffling (not memcpy) so the on-disk layout is host-independent.

namespace lda::wire {

inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

inline void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline void put_i32(std::vector<uint8_t>& out, int32_t v) {
  put_u32(out, static_cast<uint32_t>(v));
}

inline void put_i64(std::vector<uint8_t>& out, int64_t v) {
  put_u64(out, static_cast<uint64_t>(v));
}

// Bounds-checked little-endian reader. `context` names the payload kind in
// TruncationError messages.
class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t size, std::string context)
      : data_(data), size_(size), context_(std::move(context)) {}

  size_t offset() const { return offset_; }
  size_t remaining() const { return size_ - offset_; }
  bool done() const { return offset_ == size_; }

  uint32_t u32() {
    require(4);
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | data_[offset_ + i];
    offset_ += 4;
    return v;
  }

  uint64_t u64() {
    require(8);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | data_[offset_ + i];
    offset_ += 8;
    return v;
  }

  int32_t i32() { return static_cast<int32_t>(u32()); }
  int64_t i64() { return static_cast<int64_t>(u64()); }

 private:
  void require(size_t n) {
    if (size_ - offset_ < n) {
      throw TruncationError(context_ + " truncated: need " + std::to_string(n) +
                            " byte(s) at offset " + std::to_string(offset_) +
                            ", have " + std::to_string(size_ - offset_));
    }
  }

  const uint8_t* data_;
  size_t size_;
  size_t offset_ = 0;
  std::string context_;
};

}  // namespace lda::wire
