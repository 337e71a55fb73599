#pragma once

#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

namespace pam {

// SplitMix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter-based stream: draws depend only on (seed, stream, counter), so any
// assignment of streams to threads reproduces the same numbers.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix64(seed ^ mix64(stream))), counter_(0) {}

  std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  // Uniform on (0,1); never returns an endpoint.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform()); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

// One uniform per (seed, index); used for site-indexed field sampling so the
// result is independent of traversal order and thread count.
inline double uniform_at(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t w = mix64(mix64(seed ^ 0x6a09e667f3bcc909ull) + index);
  return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

// Pairwise (cascade) summation over a fixed tree: deterministic rounding for a
// given input order, O(log n) error growth.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), x.size());
}

// Mean and standard error of the mean via a deterministic two-pass reduction.
struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& x) {
  MeanStderr r;
  const std::size_t n = x.size();
  if (n == 0) return r;
  r.mean = pairwise_sum(x) / static_cast<double>(n);
  if (n == 1) return r;
  std::vector<double> dev(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = x[i] - r.mean;
    dev[i] = d * d;
  }
  double ss = pairwise_sum(dev);
  r.stderr_ = std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1)));
  return r;
}

// Static partition of [0, n) over at most `threads` workers. Each index is
// processed exactly once; work must write only to its own slot.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nt = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t w = 0; w < nt; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += nt) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace pam
