/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "spherecast/common.hpp"

// Explicit little-endian readers/writers. All on-disk formats in this
// project are little-endian regardless of host order.
namespace spherecast::binio {

static_assert(sizeof(double) == 8 && sizeof(float) == 4);

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot open for writing: " + path);
  }

  void bytes(const void* p, size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }

  void u8(uint8_t v) { bytes(&v, 1); }
  void u32(uint32_t v) { put_le(v); }
  void u64(uint64_t v) { put_le(v); }
  void i64(int64_t v) { put_le(static_cast<uint64_t>(v)); }
  void f32(float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    put_le(u);
  }
  void f64(double v) {
    uint64_t u;
    std::memcpy(&u, &v, 8);
    put_le(u);
  }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void magic(const char (&m)[9]) { bytes(m, 8); }

  bool good() const { return static_cast<bool>(out_); }

 private:
  template <typename U>
  void put_le(U v) {
    unsigned char b[sizeof(U)];
    for (size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, sizeof(U));
  }
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw DataError("cannot open for reading: " + path);
  }

  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) throw DataError("truncated file: " + path_);
  }

  uint8_t u8() {
    uint8_t v;
    bytes(&v, 1);
    return v;
  }
  uint32_t u32() { return get_le<uint32_t>(); }
  uint64_t u64() { return get_le<uint64_t>(); }
  int64_t i64() { return static_cast<int64_t>(get_le<uint64_t>()); }
  float f32() {
    uint32_t u = get_le<uint32_t>();
    float v;
    std::memcpy(&v, &u, 4);
    return v;
  }
  double f64() {
    uint64_t u = get_le<uint64_t>();
    double v;
    std::memcpy(&v, &u, 8);
    return v;
  }
  std::string str(uint32_t max_len = 4096) {
    uint32_t n = u32();
    if (n > max_len) throw DataError("corrupt string length in " + path_);
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  void expect_magic(const char (&m)[9]) {
    char got[8];
    bytes(got, 8);
    if (std::memcmp(got, m, 8) != 0) throw DataError("bad magic in " + path_);
  }

 private:
  template <typename U>
  U get_le() {
    unsigned char b[sizeof(U)];
    bytes(b, sizeof(U));
    U v = 0;
    for (size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }
  std::ifstream in_;
  std::string path_;
};

}  // namespace spherecast::binio
