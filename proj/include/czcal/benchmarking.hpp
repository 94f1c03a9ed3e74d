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

// Randomized benchmarking: sequences, state simulation, decay fits and the
// sensitivity model used to schedule sequence lengths.

#ifndef CZCAL_BENCHMARKING_HPP_
#define CZCAL_BENCHMARKING_HPP_

#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "czcal/clifford.hpp"
#include "czcal/least_squares.hpp"

namespace czcal {

inline constexpr double kMeanCzPerClifford = 1.5;
inline constexpr double kDefaultMeanSqPerClifford = 8.5;

struct RbSequence {
  std::vector<std::size_t> clifford_ids;  // N random elements
  std::size_t recovery_id = 0;
  std::vector<Primitive> gates;           // flattened, recovery included
  int interleave_count = 0;               // CZs after each Clifford

  bool interleaved() const { return interleave_count > 0; }
};

inline RbSequence build_rb_sequence(int n, int interleave_count, Rng& rng) {
  if (n < 1) throw std::invalid_argument("build_rb_sequence: N must be >= 1");
  if (interleave_count < 0) throw std::invalid_argument("build_rb_sequence: negative interleave");
  const auto& table = CliffordTable::instance();
  const Clifford2& cz = primitive_tableau({GateKind::kCZ, 0});
  RbSequence s;
  s.interleave_count = interleave_count;
  Clifford2 total;
  for (int i = 0; i < n; ++i) {
    const std::size_t id = sample_clifford(rng);
    s.clifford_ids.push_back(id);
    const auto& e = table[id];
    s.gates.insert(s.gates.end(), e.gates.begin(), e.gates.end());
    total = total.then(e.tableau);
    for (int k = 0; k < interleave_count; ++k) {
      s.gates.push_back({GateKind::kCZ, 0});
      total = total.then(cz);
    }
  }
  s.recovery_id = table.index_of(total.inverse());
  const auto& r = table[s.recovery_id].gates;
  s.gates.insert(s.gates.end(), r.begin(), r.end());
  return s;
}

inline std::vector<RbSequence> build_rb_sequences(int n, int m, int interleave_count, Rng& rng) {
  if (m < 1) throw std::invalid_argument("build_rb_sequences: M must be >= 1");
  std::vector<RbSequence> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out.push_back(build_rb_sequence(n, interleave_count, rng));
  return out;
}

// One IRB batch: the first M/2 sequences are references, the rest interleaved.
inline std::vector<RbSequence> build_irb_batch(int n, int m, int interleave_count, Rng& rng) {
  std::vector<RbSequence> out = build_rb_sequences(n, m / 2, 0, rng);
  auto rest = build_rb_sequences(n, m - m / 2, interleave_count, rng);
  out.insert(out.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  return out;
}

struct GateCounts {
  double mean_sq = 0.0;
  double mean_cz = 0.0;
};

inline GateCounts report_gate_counts(std::span<const RbSequence> seqs) {
  GateCounts c;
  if (seqs.empty()) return c;
  for (const auto& s : seqs)
    for (const auto& g : s.gates) (is_two_qubit(g) ? c.mean_cz : c.mean_sq) += 1.0;
  c.mean_sq /= static_cast<double>(seqs.size());
  c.mean_cz /= static_cast<double>(seqs.size());
  return c;
}

// Line-oriented text: one sequence per line, one primitive per token.
inline void write_sequences(std::ostream& os, std::span<const RbSequence> seqs) {
  for (const auto& s : seqs) {
    for (std::size_t i = 0; i < s.gates.size(); ++i) os << (i ? " " : "") << to_token(s.gates[i]);
    os << '\n';
  }
}

inline std::vector<std::vector<Primitive>> read_sequences(std::istream& is) {
  std::vector<std::vector<Primitive>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<Primitive> seq;
    std::string tok;
    while (ls >> tok) seq.push_back(parse_token(tok));
    out.push_back(std::move(seq));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation. Single-qubit gates are ideal unitaries on the computational
// block; the CZ is an arbitrary (possibly leaky) matrix on a subspace whose
// first four states are 00, 01, 10, 11.

struct CzModel {
  MatrixXcd gate = cz_block();
  double depolarizing = 0.0;  // applied to the computational block after each CZ

  static MatrixXcd cz_block() {
    MatrixXcd m = MatrixXcd::Identity(4, 4);
    m(3, 3) = -1.0;
    return m;
  }
  // Depolarizing CZ with average gate error eps.
  static CzModel with_error(double eps, int d = 4) {
    CzModel c;
    c.depolarizing = eps * d / (d - 1.0);
    return c;
  }
  Eigen::Index dim() const { return gate.rows(); }
};

struct SqNoise {
  double depolarizing = 0.0;  // per single-qubit gate, on the computational block
  double readout_error = 0.0;

  static SqNoise with_fidelity(double f_sq, int d = 4) {
    SqNoise n;
    n.depolarizing = (1.0 - f_sq) * d / (d - 1.0);
    return n;
  }
};

struct CompiledStep {
  bool cz = false;
  Eigen::Matrix4cd local = Eigen::Matrix4cd::Identity();
  int sq_gates = 0;
};

// Consecutive single-qubit gates are merged into one 4x4 unitary.
inline std::vector<CompiledStep> compile_sequence(std::span<const Primitive> gates) {
  std::vector<CompiledStep> out;
  CompiledStep run;
  for (const auto& g : gates) {
    if (is_two_qubit(g)) {
      if (run.sq_gates) out.push_back(run);
      run = CompiledStep{};
      out.push_back(CompiledStep{true, Eigen::Matrix4cd::Identity(), 0});
    } else {
      run.local = primitive_unitary(g) * run.local;
      ++run.sq_gates;
    }
  }
  if (run.sq_gates) out.push_back(run);
  return out;
}

namespace detail {

// rho_cc -> (1-p) rho_cc + p tr(rho_cc) I/4; coherences with leaked states
// shrink by (1-p); the leaked block is untouched.
inline void depolarize(MatrixXcd& rho, double p) {
  if (p <= 0.0) return;
  const Complex tr = rho.topLeftCorner(4, 4).trace();
  const Eigen::Index n = rho.rows();
  rho.topLeftCorner(4, 4) *= (1.0 - p);
  for (int i = 0; i < 4; ++i) rho(i, i) += 0.25 * p * tr;
  if (n > 4) {
    rho.topRightCorner(4, n - 4) *= (1.0 - p);
    rho.bottomLeftCorner(n - 4, 4) *= (1.0 - p);
  }
}

}  // namespace detail

// Probability of reading qubit 1 in its ground state after the sequence,
// starting from |00>. Leaked population reads as excited.
inline double ground_probability(std::span<const CompiledStep> steps, const CzModel& cz,
                                 const SqNoise& noise = {}) {
  const Eigen::Index n = cz.dim();
  if (n < 4) throw std::invalid_argument("ground_probability: CZ model smaller than 4 states");
  double p0 = 0.0;
  if (cz.depolarizing == 0.0 && noise.depolarizing == 0.0) {
    VectorXcd psi = VectorXcd::Zero(n);
    psi(0) = 1.0;
    for (const auto& s : steps) {
      if (s.cz) {
        psi = cz.gate * psi;
      } else {
        psi.head(4) = s.local * psi.head(4);
      }
    }
    p0 = std::norm(psi(0)) + std::norm(psi(1));
  } else {
    MatrixXcd rho = MatrixXcd::Zero(n, n);
    rho(0, 0) = 1.0;
    for (const auto& s : steps) {
      if (s.cz) {
        rho = cz.gate * rho * cz.gate.adjoint();
        detail::depolarize(rho, cz.depolarizing);
      } else {
        rho.topRows(4) = s.local * rho.topRows(4);
        rho.leftCols(4) = rho.leftCols(4) * s.local.adjoint();
        if (noise.depolarizing > 0.0)
          detail::depolarize(rho, 1.0 - std::pow(1.0 - noise.depolarizing, s.sq_gates));
      }
    }
    p0 = std::real(rho(0, 0) + rho(1, 1));
  }
  const double r = noise.readout_error;
  return std::clamp(p0 * (1.0 - r) + (1.0 - p0) * r, 0.0, 1.0);
}

inline double ground_probability(std::span<const Primitive> gates, const CzModel& cz,
                                 const SqNoise& noise = {}) {
  const auto steps = compile_sequence(gates);
  return ground_probability(steps, cz, noise);
}

// Binomially sampled ground fraction.
inline double sample_shots(double p, int shots, Rng& rng) {
  if (shots < 1) throw std::invalid_argument("sample_shots: shots must be >= 1");
  std::binomial_distribution<int> b(shots, std::clamp(p, 0.0, 1.0));
  return static_cast<double>(b(rng)) / shots;
}

// ---------------------------------------------------------------------------
// Decay fits.

struct DecayFit {
  double a = 0.0;
  double p = 0.0;  // per-Clifford decay (F_C)
  double b = 0.0;
  MatrixXd covariance;  // over (a, p[, b])
  double rms = 0.0;

  double p_sigma() const { return covariance.size() ? std::sqrt(std::max(0.0, covariance(1, 1))) : 0.0; }
  double value(double n) const { return a * std::pow(p, n) + b; }
};

// Fits survival(N) = A p^N + B. `fixed_b` pins B.
inline DecayFit fit_decay(std::span<const double> ns, std::span<const double> survival,
                          std::optional<double> fixed_b = std::nullopt) {
  if (ns.size() != survival.size()) throw std::invalid_argument("fit_decay: size mismatch");
  std::vector<double> distinct(ns.begin(), ns.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw std::invalid_argument("fit_decay: need >= 3 distinct N");
  const auto [lo, hi] = std::minmax_element(survival.begin(), survival.end());
  if (*hi - *lo < 1e-12) throw NumericalError("fit_decay: constant data, decay is degenerate");

  const auto m = static_cast<Eigen::Index>(ns.size());
  const double b0 = fixed_b.value_or(std::clamp(*lo - 0.01, 0.0, 1.0));
  // Seed p from a log-linear fit of survival - B.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double y = survival[i] - b0;
    if (y <= 1e-6) continue;
    sx += ns[i];
    sy += std::log(y);
    sxx += ns[i] * ns[i];
    sxy += ns[i] * std::log(y);
    ++cnt;
  }
  double slope = -0.01, icpt = std::log(std::max(1e-3, survival[0] - b0));
  if (cnt >= 2 && cnt * sxx - sx * sx > 0) {
    slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    icpt = (sy - slope * sx) / cnt;
  }
  const double p0 = std::clamp(std::exp(slope), 1e-6, 1.0);
  const double a0 = std::clamp(std::exp(icpt), 0.0, 1.0);

  const bool free_b = !fixed_b;
  VectorXd x0(free_b ? 3 : 2);
  x0(0) = a0;
  x0(1) = p0;
  if (free_b) x0(2) = b0;
  auto residual = [&](const VectorXd& q) {
    VectorXd r(m);
    const double b = free_b ? q(2) : *fixed_b;
    for (Eigen::Index i = 0; i < m; ++i)
      r(i) = q(0) * std::pow(q(1), ns[static_cast<std::size_t>(i)]) + b -
             survival[static_cast<std::size_t>(i)];
    return r;
  };
  LsqOptions o;
  o.lower = VectorXd::Zero(x0.size());
  o.upper = VectorXd::Ones(x0.size());
  (*o.lower)(1) = 1e-9;
  const LsqResult r = levenberg_marquardt(residual, x0, o);
  if (!r.x.allFinite()) throw NumericalError("fit_decay: fit diverged");
  DecayFit f;
  f.a = r.x(0);
  f.p = r.x(1);
  f.b = free_b ? r.x(2) : *fixed_b;
  f.covariance = r.covariance();
  f.rms = r.rms();
  return f;
}

// Per-gate error from reference and interleaved decays.
inline double irb_gate_error(const DecayFit& ref, const DecayFit& inter, int interleave_count = 1,
                             int d = 4) {
  if (ref.p <= 0.0) throw std::invalid_argument("irb_gate_error: reference decay is zero");
  const double dd = d;
  const double eps = (dd - 1.0) / dd * (1.0 - inter.p / ref.p);
  return eps / std::max(1, interleave_count);
}

inline double irb_gate_error_sigma(const DecayFit& ref, const DecayFit& inter,
                                   int interleave_count = 1, int d = 4) {
  const double dd = d;
  const double ratio = inter.p / ref.p;
  const double rel = std::hypot(inter.p_sigma() / inter.p, ref.p_sigma() / ref.p);
  return (dd - 1.0) / dd * ratio * rel / std::max(1, interleave_count);
}

// ---------------------------------------------------------------------------
// Sensitivity model.

inline double clifford_fidelity(double f_sq, double f_cz,
                                double n_sq = kDefaultMeanSqPerClifford,
                                double n_cz = kMeanCzPerClifford) {
  return std::pow(f_sq, n_sq) * std::pow(f_cz, n_cz);
}

// dF/dF_CZ normalized by the CZ error; at F_CZ = 1 the unnormalized
// derivative is returned.
inline double sensitivity(int n, double f_sq, double f_cz, double a = 0.5,
                          double n_sq = kDefaultMeanSqPerClifford,
                          double n_cz = kMeanCzPerClifford) {
  const double fc = clifford_fidelity(f_sq, f_cz, n_sq, n_cz);
  const double d = a * n * std::pow(fc, n - 1) * n_cz * std::pow(f_cz, n_cz - 1.0) *
                   std::pow(f_sq, n_sq);
  return f_cz < 1.0 ? d / (1.0 - f_cz) : d;
}

inline int optimal_n(double f_sq, double f_cz, int n_max = 10000,
                     double n_sq = kDefaultMeanSqPerClifford,
                     double n_cz = kMeanCzPerClifford) {
  int best = 1;
  double best_s = -1.0;
  for (int n = 1; n <= n_max; ++n) {
    const double s = sensitivity(n, f_sq, f_cz, 0.5, n_sq, n_cz);
    if (s > best_s) {
      best_s = s;
      best = n;
    }
  }
  return best;
}

// Expected cost E(N) = A (1 - F_C^N) with the fully depolarized offset.
inline double expected_cost(int n, double f_c, double a = 0.5) {
  return a * (1.0 - std::pow(f_c, n));
}

// ---------------------------------------------------------------------------
// Interleaved benchmarking experiment on a fixed CZ model.

struct IrbConfig {
  std::vector<int> lengths = {1, 2, 4, 8, 16, 32, 64};
  int sequences = 80;  // per length and arm
  int shots = 128;
  int interleave_count = 1;
  std::optional<double> fixed_b = 0.5;
};

struct IrbResult {
  DecayFit reference;
  DecayFit interleaved;
  double error = 0.0;        // per CZ
  double error_sigma = 0.0;
  std::vector<double> reference_means;
  std::vector<double> interleaved_means;
};

namespace detail {

// Shot-sampled survival for every sequence of every length; returns
// (N per sample, survival per sample) and fills per-length means.
inline std::pair<std::vector<double>, std::vector<double>> rb_arm(
    const CzModel& cz, const SqNoise& noise, const IrbConfig& cfg, int interleave, Rng& rng,
    const Parallelism& par, std::vector<double>& means) {
  std::vector<double> xs, ys;
  means.clear();
  for (int n : cfg.lengths) {
    const auto seqs = build_rb_sequences(n, cfg.sequences, interleave, rng);
    std::vector<double> probs(seqs.size());
    par.for_each(seqs.size(), [&](std::size_t i) {
      probs[i] = ground_probability(std::span<const Primitive>(seqs[i].gates), cz, noise);
    });
    double mean = 0.0;
    for (double p : probs) {
      const double y = sample_shots(p, cfg.shots, rng);
      xs.push_back(n);
      ys.push_back(y);
      mean += y;
    }
    means.push_back(mean / static_cast<double>(probs.size()));
  }
  return {xs, ys};
}

}  // namespace detail

inline IrbResult run_irb(const CzModel& cz, const SqNoise& noise, const IrbConfig& cfg, Rng& rng,
                         const Parallelism& par = Parallelism{}) {
  IrbResult r;
  const auto [xr, yr] = detail::rb_arm(cz, noise, cfg, 0, rng, par, r.reference_means);
  const auto [xi, yi] = detail::rb_arm(cz, noise, cfg, cfg.interleave_count, rng, par,
                                       r.interleaved_means);
  r.reference = fit_decay(xr, yr, cfg.fixed_b);
  r.interleaved = fit_decay(xi, yi, cfg.fixed_b);
  r.error = irb_gate_error(r.reference, r.interleaved, cfg.interleave_count);
  r.error_sigma = irb_gate_error_sigma(r.reference, r.interleaved, cfg.interleave_count);
  return r;
}

}  // namespace czcal

#endif  // CZCAL_BENCHMARKING_HPP_
