// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace ddest {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s, exact
inline constexpr double kPi = 3.141592653589793238462643383279502884;

using Complex = std::complex<double>;

/// Invalid arguments, malformed configuration, out-of-range parameters.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File and stream failures: missing files, short reads, malformed records.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: singular systems, non-finite intermediates,
/// undefined metrics.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SplitMix64 finalizer. Bijective mix over 64-bit words.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives an independent seed for (root, index, stream). Used so each
/// frame and each purpose (noise, phases) draws from its own stream;
/// identical inputs always produce the identical seed.
inline std::uint64_t substream_seed(std::uint64_t root, std::uint64_t index,
                                    std::uint64_t stream) {
  std::uint64_t s = mix64(root + 0x632BE59BD9B4E019ull * (index + 1));
  return mix64(s ^ mix64(stream + 0x9E3779B97F4A7C15ull));
}

/// Deterministic PRNG (splitmix64 sequence). Self-contained so that
/// synthetic data is byte-reproducible across platforms and toolchains,
/// which std::normal_distribution does not guarantee.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double next_double_open() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal pair via Box-Muller.
  std::pair<double, double> next_gaussian_pair() {
    double u1 = next_double_open();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(2.0 * kPi * u2), r * std::sin(2.0 * kPi * u2)};
  }

  /// Unit-mean exponential variate.
  double next_exponential() { return -std::log(next_double_open()); }

 private:
  std::uint64_t state_;
};

/// FNV-1a 64-bit hash of a byte string.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Shortest round-trip decimal form of a double ("%.17g"), with stable
/// spellings for nan and infinities. C locale assumed (never changed here).
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is handed out
/// through a shared counter so the set of executed indices, and therefore
/// any per-index output slot, is independent of the thread count. The first
/// exception thrown by any worker is rethrown on the caller thread.
template <typename F>
void parallel_for_indexed(std::size_t n, int jobs, F&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ddest
