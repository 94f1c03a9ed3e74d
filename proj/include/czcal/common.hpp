// Copyright 2026 The czcal Authors
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

#ifndef CZCAL_COMMON_HPP_
#define CZCAL_COMMON_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace czcal {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Frequencies are angular (rad/s) everywhere in the library; these helpers
// convert from the "f = omega / 2pi" values people write down.
constexpr double ghz(double f) { return kTwoPi * f * 1e9; }
constexpr double mhz(double f) { return kTwoPi * f * 1e6; }
constexpr double khz(double f) { return kTwoPi * f * 1e3; }
constexpr double ns(double t) { return t * 1e-9; }

// Thrown when a numerical procedure cannot produce a trustworthy answer
// (ambiguous labels, failed fits, non-convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wraps an angle into (-pi, pi].
inline double wrap_phase(double phi) {
  double r = std::remainder(phi, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

// Deterministic seed derivation. Every random stream in the library is
// derived from a root seed and a tuple of indices, so results do not depend
// on evaluation order or thread scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(root);
  for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

using Rng = std::mt19937_64;

// Worker pool handle passed down from the CLI. Work items are indexed so
// output ordering never depends on scheduling.
class Parallelism {
 public:
  explicit Parallelism(unsigned threads = 1) : threads_(std::max(1u, threads)) {}

  unsigned threads() const { return threads_; }

  template <typename Fn>
  void for_each(std::size_t n, Fn&& fn) const {
    if (threads_ == 1 || n < 2) {
      for (std::size_t i = 0; i < n; ++i) fn(i);
      return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::jthread> pool;
    const unsigned count = std::min<std::size_t>(threads_, n);
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    pool.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

 private:
  unsigned threads_;
};

// Linear interpolation on a uniform grid starting at x0 with spacing h.
inline double lerp_uniform(const std::vector<double>& ys, double x0, double h,
                           double x) {
  const double u = (x - x0) / h;
  if (u <= 0.0) return ys.front();
  const auto last = static_cast<double>(ys.size() - 1);
  if (u >= last) return ys.back();
  const auto i = static_cast<std::size_t>(u);
  const double f = u - static_cast<double>(i);
  return ys[i] + f * (ys[i + 1] - ys[i]);
}

}  // namespace czcal

#endif  // CZCAL_COMMON_HPP_
