#pragma once

#include <bit>
#include <span>
#include <string>
#include <vector>

#include "hinfer/common.hpp"

namespace hinfer {

static_assert(std::endian::native == std::endian::little, "wire encoding assumes a little-endian host");

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    const auto* b = reinterpret_cast<const u8*>(&v);
    buf_.insert(buf_.end(), b, b + sizeof(T));
  }
  void put_bytes(std::span<const u8> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
  void put_u64s(std::span<const u64> v) {
    const auto* b = reinterpret_cast<const u8*>(v.data());
    buf_.insert(buf_.end(), b, b + v.size() * sizeof(u64));
  }
  void put_block(const Block& b) {
    put(b.lo);
    put(b.hi);
  }
  // u32 length prefix followed by the bytes.
  void put_blob(std::span<const u8> bytes) {
    put(static_cast<u32>(bytes.size()));
    put_bytes(bytes);
  }
  std::size_t size() const { return buf_.size(); }
  std::vector<u8>& bytes() { return buf_; }
  std::vector<u8> take() { return std::move(buf_); }

 private:
  std::vector<u8> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const u8> data) : data_(data) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::span<const u8> get_bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void get_u64s(std::span<u64> out) {
    need(out.size() * sizeof(u64));
    std::memcpy(out.data(), data_.data() + pos_, out.size() * sizeof(u64));
    pos_ += out.size() * sizeof(u64);
  }
  Block get_block() {
    const u64 lo = get<u64>();
    const u64 hi = get<u64>();
    return {lo, hi};
  }
  std::span<const u8> get_blob() {
    const u32 len = get<u32>();
    return get_bytes(len);
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }
  void expect_end() const {
    if (remaining() != 0) throw Error("trailing bytes after message body");
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error("truncated message body");
  }
  std::span<const u8> data_;
  std::size_t pos_ = 0;
};

}  // namespace hinfer
