#include "seupred/io_util.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace seupred {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed on '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw IoError("write failed on '" + path + "'");
}

std::string encode_f32_array(const std::vector<float>& v) {
  std::string out;
  out.reserve(v.size() * 4);
  for (float f : v) append_f32_le(out, f);
  return out;
}

std::vector<float> decode_f32_array(const std::string& bytes) {
  if (bytes.size() % 4 != 0)
    throw IoError("float array payload length " + std::to_string(bytes.size()) +
                  " is not a multiple of 4");
  std::vector<float> v(bytes.size() / 4);
  for (size_t i = 0; i < v.size(); ++i) v[i] = read_f32_le(bytes.data() + 4 * i);
  return v;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf, 16);
}

void parallel_for(size_t count, int jobs, const std::function<void(size_t)>& fn) {
  if (jobs == 0) {
    unsigned hc = std::thread::hardware_concurrency();
    jobs = hc == 0 ? 1 : static_cast<int>(hc);
  }
  size_t nthreads = static_cast<size_t>(jobs);
  if (nthreads > count) nthreads = count;
  if (nthreads <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  // Contiguous index blocks per thread. Each index is handled by exactly one
  // thread, so as long as fn(i) writes only to slot i the result is
  // independent of the job count.
  std::exception_ptr first_error;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  size_t base = count / nthreads, rem = count % nthreads;
  size_t start = 0;
  for (size_t t = 0; t < nthreads; ++t) {
    size_t len = base + (t < rem ? 1 : 0);
    size_t lo = start, hi = start + len;
    start = hi;
    pool.emplace_back([&, lo, hi] {
      try {
        for (size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace seupred
