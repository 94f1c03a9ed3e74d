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

// CMA-ES convergence scaling on noisy analytic benchmark functions.

#ifndef CZCAL_SCALING_STUDY_HPP_
#define CZCAL_SCALING_STUDY_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "czcal/cmaes.hpp"
#include "czcal/common.hpp"
#include "czcal/least_squares.hpp"

namespace czcal {

enum class TestFunctionKind { kSphere, kRastrigin, kRosenbrock, kGriewank, kStyblinskiTang, kPolynomial };

inline constexpr std::string_view test_function_name(TestFunctionKind k) {
  switch (k) {
    case TestFunctionKind::kSphere: return "sphere";
    case TestFunctionKind::kRastrigin: return "rastrigin";
    case TestFunctionKind::kRosenbrock: return "rosenbrock";
    case TestFunctionKind::kGriewank: return "griewank";
    case TestFunctionKind::kStyblinskiTang: return "styblinski-tang";
    case TestFunctionKind::kPolynomial: return "polynomial";
  }
  return "unknown";
}

inline TestFunctionKind parse_test_function(std::string_view name) {
  for (auto k : {TestFunctionKind::kSphere, TestFunctionKind::kRastrigin, TestFunctionKind::kRosenbrock,
                 TestFunctionKind::kGriewank, TestFunctionKind::kStyblinskiTang,
                 TestFunctionKind::kPolynomial})
    if (test_function_name(k) == name) return k;
  throw std::invalid_argument("unknown test function: " + std::string(name));
}

struct TestFunction {
  TestFunctionKind kind = TestFunctionKind::kSphere;
  int dimension = 1;
  double noise_sigma = 0.0;

  // Search box per coordinate.
  std::pair<double, double> domain() const {
    switch (kind) {
      case TestFunctionKind::kRastrigin: return {-5.12, 5.12};
      case TestFunctionKind::kRosenbrock: return {-2.0, 2.0};
      case TestFunctionKind::kGriewank: return {-10.0, 10.0};
      case TestFunctionKind::kStyblinskiTang: return {-5.0, 5.0};
      default: return {-5.0, 5.0};
    }
  }

  VectorXd optimum() const {
    const auto n = static_cast<Eigen::Index>(dimension);
    switch (kind) {
      case TestFunctionKind::kRosenbrock: return VectorXd::Ones(n);
      case TestFunctionKind::kStyblinskiTang: return VectorXd::Constant(n, -2.903534027771178);
      default: return VectorXd::Zero(n);
    }
  }

  double optimum_value() const { return value(optimum()); }

  double value(const VectorXd& x) const {
    if (x.size() != dimension) throw std::invalid_argument("TestFunction: dimension mismatch");
    double s = 0.0;
    switch (kind) {
      case TestFunctionKind::kSphere:
        return x.squaredNorm();
      case TestFunctionKind::kRastrigin:
        s = 10.0 * dimension;
        for (double v : x) s += v * v - 10.0 * std::cos(kTwoPi * v);
        return s;
      case TestFunctionKind::kRosenbrock:
        for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
          s += 100.0 * std::pow(x(i + 1) - x(i) * x(i), 2) + std::pow(1.0 - x(i), 2);
        if (dimension == 1) s = std::pow(1.0 - x(0), 2);
        return s;
      case TestFunctionKind::kGriewank: {
        double p = 1.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          s += x(i) * x(i) / 4000.0;
          p *= std::cos(x(i) / std::sqrt(static_cast<double>(i + 1)));
        }
        return s - p + 1.0;
      }
      case TestFunctionKind::kStyblinskiTang:
        for (double v : x) s += v * v * v * v - 16.0 * v * v + 5.0 * v;
        return 0.5 * s;
      case TestFunctionKind::kPolynomial:
        for (double v : x) s += v * v * v * v + v * v;
        return s;
    }
    return s;
  }

  double evaluate(const VectorXd& x, Rng& rng) const {
    const double v = value(x);
    if (noise_sigma <= 0.0) return v;
    return v + std::normal_distribution<double>(0.0, noise_sigma)(rng);
  }

  VectorXd from_unit(const VectorXd& u) const {
    const auto [lo, hi] = domain();
    return (lo + (hi - lo) * u.array()).matrix();
  }
};

struct ConvergenceConfig {
  int budget = 10000;           // maximum evolutions
  double initial_spread = 0.2;  // unit-cube step size
  int population = 0;           // 0: population_size(D)
};

struct ConvergenceResult {
  int k_max = 0;
  bool censored = false;
  double final_value = 0.0;  // noiseless value at the final mean
};

// First evolution whose candidate-cost variance falls below the noise variance.
inline ConvergenceResult run_until_converged(const TestFunction& f, const ConvergenceConfig& cfg,
                                             Rng& rng) {
  if (f.dimension < 1) throw std::invalid_argument("run_until_converged: dimension must be >= 1");
  std::uniform_real_distribution<double> u(0.2, 0.8);
  VectorXd m0(f.dimension);
  for (auto& v : m0) v = u(rng);
  CmaesOptions opts;
  opts.population = cfg.population;
  Cmaes es(m0, VectorXd::Constant(f.dimension, cfg.initial_spread), opts);
  const double threshold = f.noise_sigma * f.noise_sigma;
  ConvergenceResult r;
  for (int k = 1; k <= cfg.budget; ++k) {
    const auto xs = es.ask(rng);
    std::vector<double> costs;
    costs.reserve(xs.size());
    for (const auto& x : xs) costs.push_back(f.evaluate(f.from_unit(x), rng));
    const auto n = static_cast<double>(costs.size());
    double mean = 0.0;
    for (double c : costs) mean += c;
    mean /= n;
    double var = 0.0;
    for (double c : costs) var += (c - mean) * (c - mean);
    var /= n - 1.0;
    es.tell(xs, costs);
    if (var < threshold) {
      r.k_max = k;
      r.final_value = f.value(f.from_unit(es.mean()));
      return r;
    }
  }
  r.k_max = cfg.budget;
  r.censored = true;
  r.final_value = f.value(f.from_unit(es.mean()));
  return r;
}

struct PowerLawFit {
  double c = 0.0;
  double nu = 0.0;
  double k1 = 0.0;
  double rms = 0.0;
};

// k(D) = c * D^nu + k1, with k1 fixed so the curve passes through the D = 1 point.
inline PowerLawFit fit_power_law(std::span<const double> dims, std::span<const double> kmax) {
  if (dims.size() != kmax.size()) throw std::invalid_argument("fit_power_law: size mismatch");
  std::optional<double> k_one;
  std::vector<double> d, k;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (!(dims[i] >= 1.0)) throw std::invalid_argument("fit_power_law: dimensions must be >= 1");
    if (dims[i] == 1.0) {
      k_one = kmax[i];
    } else {
      d.push_back(dims[i]);
      k.push_back(kmax[i]);
    }
  }
  if (!k_one) throw std::invalid_argument("fit_power_law: a D = 1 point is required");
  if (d.size() < 2) throw std::invalid_argument("fit_power_law: need at least two points with D > 1");

  // Log-log seed on k - k(1) = c (D^nu - 1) ~ c D^nu.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double y = k[i] - *k_one;
    if (y <= 0.0) continue;
    const double lx = std::log(d[i]), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  double nu0 = 1.0, c0 = 1.0;
  if (m >= 2 && m * sxx - sx * sx > 0.0) {
    nu0 = std::clamp((m * sxy - sx * sy) / (m * sxx - sx * sx), 0.05, 5.0);
    c0 = std::exp((sy - nu0 * sx) / m);
  }
  auto residual = [&](const VectorXd& q) {
    VectorXd r(static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i)
      r(static_cast<Eigen::Index>(i)) = q(0) * (std::pow(d[i], q(1)) - 1.0) + *k_one - k[i];
    return r;
  };
  LsqOptions o;
  o.lower = (VectorXd(2) << -1e12, 0.0).finished();
  o.upper = (VectorXd(2) << 1e12, 10.0).finished();
  o.max_iterations = 500;
  const auto res = levenberg_marquardt(residual, (VectorXd(2) << c0, nu0).finished(), o);
  PowerLawFit fit;
  fit.c = res.x(0);
  fit.nu = res.x(1);
  fit.k1 = *k_one - fit.c;
  fit.rms = res.rms();
  return fit;
}

struct ScalingCell {
  TestFunctionKind kind;
  int dimension = 1;
  int seed = 0;
  ConvergenceResult result;
};

struct ScalingSweep {
  std::vector<ScalingCell> cells;
  std::vector<double> dims;
  std::vector<double> median_k;  // per dimension with fewer than half censored
  std::optional<PowerLawFit> fit;
  int censored = 0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty input");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Runs every (D, seed) cell, takes medians per D and fits the power law.
inline ScalingSweep run_scaling_sweep(TestFunctionKind kind, std::span<const int> dims, int seeds,
                                      double noise_sigma, const ConvergenceConfig& cfg,
                                      std::uint64_t root_seed, const Parallelism& par = Parallelism{}) {
  ScalingSweep out;
  for (int d : dims)
    for (int s = 0; s < seeds; ++s) out.cells.push_back({kind, d, s, {}});
  par.for_each(out.cells.size(), [&](std::size_t i) {
    auto& cell = out.cells[i];
    Rng rng(derive_seed(root_seed, {static_cast<std::uint64_t>(kind),
                                    static_cast<std::uint64_t>(cell.dimension),
                                    static_cast<std::uint64_t>(cell.seed)}));
    cell.result = run_until_converged({kind, cell.dimension, noise_sigma}, cfg, rng);
  });
  // Censored cells enter the median at their budget (a lower bound); the
  // median is known only while fewer than half of the cells are censored.
  for (int d : dims) {
    std::vector<double> ks;
    int censored = 0;
    for (const auto& c : out.cells) {
      if (c.dimension != d) continue;
      censored += c.result.censored;
      ks.push_back(c.result.k_max);
    }
    out.censored += censored;
    if (ks.empty() || 2 * censored >= static_cast<int>(ks.size())) continue;
    out.dims.push_back(d);
    out.median_k.push_back(median(ks));
  }
  try {
    out.fit = fit_power_law(out.dims, out.median_k);
  } catch (const std::exception&) {
    out.fit.reset();
  }
  return out;
}

}  // namespace czcal

#endif  // CZCAL_SCALING_STUDY_HPP_
