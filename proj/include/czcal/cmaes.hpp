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

// CMA-ES with an ask/tell interface on the unit cube.

#ifndef CZCAL_CMAES_HPP_
#define CZCAL_CMAES_HPP_

#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "czcal/common.hpp"

namespace czcal {

inline int population_size(int dimension) {
  if (dimension < 1) throw std::invalid_argument("population_size: dimension must be >= 1");
  return std::max(4, static_cast<int>(std::lround(4.0 + 4.0 * std::log(dimension))));
}

struct ParamRange {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  double initial = 0.5;
  double spread = 0.1;  // initial standard deviation, physical units
};

struct SearchSpace {
  std::vector<ParamRange> params;

  std::size_t size() const { return params.size(); }

  void validate() const {
    for (const auto& p : params) {
      if (!(p.lower < p.upper)) throw std::invalid_argument("SearchSpace: lower >= upper for " + p.name);
      if (p.initial < p.lower || p.initial > p.upper)
        throw std::invalid_argument("SearchSpace: initial out of bounds for " + p.name);
      if (!(p.spread > 0.0)) throw std::invalid_argument("SearchSpace: spread must be > 0 for " + p.name);
    }
  }

  VectorXd normalize(std::span<const double> x) const {
    if (x.size() != size()) throw std::invalid_argument("SearchSpace::normalize: size mismatch");
    VectorXd u(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i)
      u(static_cast<Eigen::Index>(i)) = (x[i] - params[i].lower) / (params[i].upper - params[i].lower);
    return u;
  }

  std::vector<double> denormalize(const VectorXd& u) const {
    if (static_cast<std::size_t>(u.size()) != size())
      throw std::invalid_argument("SearchSpace::denormalize: size mismatch");
    std::vector<double> x(size());
    for (std::size_t i = 0; i < size(); ++i)
      x[i] = params[i].lower + u(static_cast<Eigen::Index>(i)) * (params[i].upper - params[i].lower);
    return x;
  }

  std::vector<double> initial() const {
    std::vector<double> x;
    for (const auto& p : params) x.push_back(p.initial);
    return x;
  }

  // Spreads in unit-cube coordinates.
  VectorXd normalized_spread() const {
    VectorXd s(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i)
      s(static_cast<Eigen::Index>(i)) = params[i].spread / (params[i].upper - params[i].lower);
    return s;
  }
};

struct CmaesOptions {
  int population = 0;      // 0: population_size(D)
  int max_resamples = 10;  // out-of-cube redraws before clamping
  double eigen_floor = 1e-14;
};

class Cmaes {
 public:
  static constexpr int kCheckpointVersion = 1;

  // mean and per-coordinate spreads in the unit cube.
  Cmaes(const VectorXd& mean, const VectorXd& spread, CmaesOptions opts = {})
      : opts_(opts), n_(static_cast<int>(mean.size())) {
    if (n_ < 1) throw std::invalid_argument("Cmaes: empty mean");
    if (spread.size() != mean.size() || !(spread.array() > 0.0).all())
      throw std::invalid_argument("Cmaes: spreads must be positive and match the mean");
    lambda_ = opts_.population > 0 ? opts_.population : population_size(n_);
    if (lambda_ < 2) throw std::invalid_argument("Cmaes: population must be >= 2");
    mean_ = mean;
    sigma_ = spread.maxCoeff();
    const VectorXd rel = spread / sigma_;
    cov_ = rel.array().square().matrix().asDiagonal();
    ps_ = VectorXd::Zero(n_);
    pc_ = VectorXd::Zero(n_);
    set_strategy_parameters();
    decompose();
  }

  static Cmaes from_space(const SearchSpace& space, CmaesOptions opts = {}) {
    space.validate();
    return Cmaes(space.normalize(space.initial()), space.normalized_spread(), opts);
  }

  int dimension() const { return n_; }
  int population() const { return lambda_; }
  int mu() const { return mu_; }
  int evolution() const { return k_; }
  double sigma() const { return sigma_; }
  const VectorXd& mean() const { return mean_; }
  const MatrixXd& covariance() const { return cov_; }
  const VectorXd& weights() const { return weights_; }
  int eigen_repairs() const { return repairs_; }

  std::vector<VectorXd> ask(Rng& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<VectorXd> out;
    out.reserve(static_cast<std::size_t>(lambda_));
    for (int j = 0; j < lambda_; ++j) {
      VectorXd x;
      for (int attempt = 0; attempt <= opts_.max_resamples; ++attempt) {
        VectorXd z(n_);
        for (int i = 0; i < n_; ++i) z(i) = normal(rng);
        x = mean_ + sigma_ * (basis_ * (scale_.asDiagonal() * z));
        if ((x.array() >= 0.0).all() && (x.array() <= 1.0).all()) break;
      }
      out.push_back(x.cwiseMax(0.0).cwiseMin(1.0));
    }
    return out;
  }

  // Only the ordering of `costs` matters; non-finite costs rank last, ties
  // break by candidate index.
  void tell(const std::vector<VectorXd>& xs, std::span<const double> costs) {
    if (xs.size() != static_cast<std::size_t>(lambda_) || costs.size() != xs.size())
      throw std::invalid_argument("Cmaes::tell: expected one cost per candidate");
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t i) {
      return std::isfinite(costs[i]) ? costs[i] : std::numeric_limits<double>::infinity();
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

    const VectorXd old = mean_;
    mean_ = VectorXd::Zero(n_);
    for (int i = 0; i < mu_; ++i) mean_ += weights_(i) * xs[order[static_cast<std::size_t>(i)]];
    const VectorXd y = (mean_ - old) / sigma_;

    const VectorXd inv_sqrt_y = basis_ * (scale_.cwiseInverse().asDiagonal() * (basis_.transpose() * y));
    ps_ = (1.0 - cs_) * ps_ + std::sqrt(cs_ * (2.0 - cs_) * mueff_) * inv_sqrt_y;
    ++k_;
    const double ps_norm = ps_.norm();
    const bool hsig = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs_, 2.0 * k_)) / chi_n_ <
                      1.4 + 2.0 / (n_ + 1.0);
    pc_ = (1.0 - cc_) * pc_ + (hsig ? std::sqrt(cc_ * (2.0 - cc_) * mueff_) : 0.0) * y;

    MatrixXd rank_mu = MatrixXd::Zero(n_, n_);
    for (int i = 0; i < mu_; ++i) {
      const VectorXd yi = (xs[order[static_cast<std::size_t>(i)]] - old) / sigma_;
      rank_mu += weights_(i) * yi * yi.transpose();
    }
    cov_ = (1.0 - c1_ - cmu_) * cov_ +
           c1_ * (pc_ * pc_.transpose() + (hsig ? 0.0 : cc_ * (2.0 - cc_)) * cov_) +
           cmu_ * rank_mu;
    cov_ = 0.5 * (cov_ + cov_.transpose());
    sigma_ *= std::exp((cs_ / damps_) * (ps_norm / chi_n_ - 1.0));
    if (!std::isfinite(sigma_) || sigma_ <= 0.0) throw NumericalError("Cmaes: step size collapsed");
    decompose();
  }

  nlohmann::json checkpoint() const {
    auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    std::vector<double> c(cov_.data(), cov_.data() + cov_.size());
    return {{"version", kCheckpointVersion}, {"dimension", n_}, {"population", lambda_},
            {"evolution", k_}, {"sigma", sigma_}, {"mean", vec(mean_)}, {"ps", vec(ps_)},
            {"pc", vec(pc_)}, {"covariance", c}};
  }

  static Cmaes restore(const nlohmann::json& j, CmaesOptions opts = {}) {
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw std::invalid_argument("Cmaes::restore: unsupported checkpoint version");
    const int n = j.at("dimension").get<int>();
    auto vec = [&](const char* k) {
      const auto v = j.at(k).get<std::vector<double>>();
      if (static_cast<int>(v.size()) != n) throw std::invalid_argument("Cmaes::restore: bad size");
      return VectorXd(Eigen::Map<const VectorXd>(v.data(), n));
    };
    opts.population = j.at("population").get<int>();
    Cmaes c(vec("mean"), VectorXd::Ones(n), opts);
    c.sigma_ = j.at("sigma").get<double>();
    c.k_ = j.at("evolution").get<int>();
    c.ps_ = vec("ps");
    c.pc_ = vec("pc");
    const auto cv = j.at("covariance").get<std::vector<double>>();
    if (static_cast<int>(cv.size()) != n * n) throw std::invalid_argument("Cmaes::restore: bad covariance");
    c.cov_ = Eigen::Map<const MatrixXd>(cv.data(), n, n);
    c.decompose();
    return c;
  }

 private:
  void set_strategy_parameters() {
    mu_ = lambda_ / 2;
    weights_.resize(mu_);
    for (int i = 0; i < mu_; ++i) weights_(i) = std::log(mu_ + 0.5) - std::log(i + 1.0);
    weights_ /= weights_.sum();
    mueff_ = 1.0 / weights_.squaredNorm();
    const double n = n_;
    cc_ = (4.0 + mueff_ / n) / (n + 4.0 + 2.0 * mueff_ / n);
    cs_ = (mueff_ + 2.0) / (n + mueff_ + 5.0);
    c1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mueff_);
    cmu_ = std::min(1.0 - c1_, 2.0 * (mueff_ - 2.0 + 1.0 / mueff_) / ((n + 2.0) * (n + 2.0) + mueff_));
    damps_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff_ - 1.0) / (n + 1.0)) - 1.0) + cs_;
    chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  }

  void decompose() {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov_);
    if (es.info() != Eigen::Success) throw NumericalError("Cmaes: covariance decomposition failed");
    VectorXd ev = es.eigenvalues();
    if (ev.minCoeff() < opts_.eigen_floor) {
      ++repairs_;
      ev = ev.cwiseMax(opts_.eigen_floor);
      cov_ = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    }
    basis_ = es.eigenvectors();
    scale_ = ev.cwiseSqrt();
  }

  CmaesOptions opts_;
  int n_ = 0;
  int lambda_ = 0;
  int mu_ = 0;
  int k_ = 0;
  int repairs_ = 0;
  VectorXd weights_;
  double mueff_ = 0, cc_ = 0, cs_ = 0, c1_ = 0, cmu_ = 0, damps_ = 0, chi_n_ = 0;
  VectorXd mean_;
  double sigma_ = 0.0;
  MatrixXd cov_;
  VectorXd ps_, pc_;
  MatrixXd basis_;
  VectorXd scale_;
};

// True when the trailing window of mean costs varies by less than `tolerance`.
inline bool should_terminate(std::span<const double> history, int window = 20,
                             double tolerance = 0.0) {
  if (window < 1 || history.size() < static_cast<std::size_t>(window)) return false;
  const auto tail = history.subspan(history.size() - static_cast<std::size_t>(window));
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
  return *hi - *lo < tolerance || (tolerance == 0.0 && *hi == *lo);
}

}  // namespace czcal

#endif  // CZCAL_CMAES_HPP_
