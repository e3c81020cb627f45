#pragma once

#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "seupred/errors.hpp"

namespace seupred {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& data);

// --- little-endian binary encoding, independent of host byte order ---

inline void append_u32_le(std::string& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.append(b, 4);
}

inline uint32_t read_u32_le(const char* p) {
  return static_cast<uint32_t>(static_cast<unsigned char>(p[0])) |
         (static_cast<uint32_t>(static_cast<unsigned char>(p[1])) << 8) |
         (static_cast<uint32_t>(static_cast<unsigned char>(p[2])) << 16) |
         (static_cast<uint32_t>(static_cast<unsigned char>(p[3])) << 24);
}

inline void append_f32_le(std::string& out, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  append_u32_le(out, v);
}

inline float read_f32_le(const char* p) {
  uint32_t v = read_u32_le(p);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

std::string encode_f32_array(const std::vector<float>& v);
std::vector<float> decode_f32_array(const std::string& bytes);

// --- integrity hashing (FNV-1a 64) ---

inline uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a64(s.data(), s.size(), h);
}

std::string hex64(uint64_t v);

// --- deterministic parallel map ---

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Results must be
/// written into preallocated per-index slots by the caller; the partitioning
/// is by index so output never depends on scheduling. jobs <= 1 runs inline;
/// jobs == 0 uses hardware concurrency.
void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn);

}  // namespace seupred
