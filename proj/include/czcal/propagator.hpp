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

// Schroedinger propagation of flux waveforms and extraction of the
// computational-subspace gate.
//
// Conventions:
//  * U is the lab-frame propagator in the bare basis.
//  * Gates are reported in the idle dressed basis (labeled eigenvectors at the
//    idle flux), in the frame rotating with the idle eigenfrequencies:
//        G = exp(i E T) V^T U V.
//  * 4x4 blocks are ordered 00, 01, 10, 11 (qubit 1 is the left digit).

#ifndef CZCAL_PROPAGATOR_HPP_
#define CZCAL_PROPAGATOR_HPP_

#include <array>
#include <span>
#include <vector>

#include "czcal/common.hpp"
#include "czcal/device_model.hpp"
#include "czcal/least_squares.hpp"
#include "czcal/pulse_shapes.hpp"

namespace czcal {

using Matrix4cd = Eigen::Matrix4cd;

enum class Integrator {
  kMidpoint,  // exp(-i h H(t + h/2)), second order
  kMagnus4,   // two-exponential commutator-free Magnus, fourth order
};

struct PropagatorOptions {
  int substeps = 20;  // per AWG sample interval (0.025 ns at 2 GS/s)
  Integrator integrator = Integrator::kMagnus4;
};

struct GateResult {
  Matrix4cd u4 = Matrix4cd::Identity();
  std::array<double, 4> leakage{};  // per initial computational state
  double phi_zz = 0.0;
  double phi1_acc = 0.0;
  double phi2_acc = 0.0;
  double fidelity_cz = 0.0;
  double duration = 0.0;

  double mean_leakage() const {
    return 0.25 * (leakage[0] + leakage[1] + leakage[2] + leakage[3]);
  }
  double infidelity() const { return 1.0 - fidelity_cz; }
};

inline Matrix4cd cz_matrix() {
  Matrix4cd m = Matrix4cd::Identity();
  m(3, 3) = -1.0;
  return m;
}

// Average gate fidelity of a (possibly leaky) block against a unitary target.
inline double average_gate_fidelity(const Eigen::Ref<const MatrixXcd>& u,
                                    const Eigen::Ref<const MatrixXcd>& target) {
  const auto d = static_cast<double>(u.rows());
  const double tr = std::norm((target.adjoint() * u).trace());
  return (d + tr) / (d * d + d);
}

inline double phase_error(double delta_phi, int d = 4) {
  const double dd = d;
  return 1.0 - (2.0 * (dd - 1.0) / (dd * dd + dd) * std::cos(delta_phi) +
                (dd * (dd - 1.0) + 2.0) / (dd * dd + dd));
}

inline double population_error(std::span<const double> losses, int d = 4) {
  const double dd = d;
  double total = 0.0;
  for (double l : losses) total += l;
  const double a = dd - total;
  return 1.0 - (dd + a * a) / (dd * dd + dd);
}

namespace detail {

inline void fill_metrics(GateResult& g) {
  const double a00 = std::arg(g.u4(0, 0)), a01 = std::arg(g.u4(1, 1));
  const double a10 = std::arg(g.u4(2, 2)), a11 = std::arg(g.u4(3, 3));
  g.phi_zz = wrap_phase(a00 + a11 - a01 - a10);
  g.phi1_acc = wrap_phase(a10 - a00);
  g.phi2_acc = wrap_phase(a01 - a00);
  for (int b = 0; b < 4; ++b) g.leakage[b] = std::max(0.0, 1.0 - g.u4.col(b).squaredNorm());
  g.fidelity_cz = average_gate_fidelity(g.u4, cz_matrix());
}

// H = S + omega_c N conserves total excitation parity, so propagation runs on
// two independent blocks.
class BlockPropagator {
 public:
  BlockPropagator(const DeviceParams& p, const HamiltonianParts& parts) {
    const int n = p.dimension();
    std::vector<int> parity(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const BareLabel l = bare_label(p, i);
      parity[static_cast<std::size_t>(i)] = (l.nc + l.n1 + l.n2) % 2;
    }
    bool split = true;
    for (int i = 0; i < n && split; ++i)
      for (int j = 0; j < n; ++j)
        if (parity[static_cast<std::size_t>(i)] != parity[static_cast<std::size_t>(j)] &&
            parts.static_part(i, j) != 0.0) {
          split = false;
          break;
        }
    blocks_.resize(split ? 2 : 1);
    for (int i = 0; i < n; ++i)
      blocks_[split ? static_cast<std::size_t>(parity[static_cast<std::size_t>(i)]) : 0]
          .index.push_back(i);
    for (auto& b : blocks_) {
      const auto m = static_cast<Eigen::Index>(b.index.size());
      b.s.resize(m, m);
      b.nc.resize(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        b.nc(r) = parts.coupler_number(b.index[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < m; ++c)
          b.s(r, c) = parts.static_part(b.index[static_cast<std::size_t>(r)],
                                        b.index[static_cast<std::size_t>(c)]);
      }
    }
    dim_ = n;
    reset();
  }

  void reset() {
    for (auto& b : blocks_) {
      const auto m = static_cast<Eigen::Index>(b.index.size());
      b.ur = MatrixXd::Identity(m, m);
      b.ui = MatrixXd::Zero(m, m);
    }
  }

  // U <- exp(-i h (S + omega N)) U.
  void step(double omega, double h) {
    for (auto& b : blocks_) {
      b.h = b.s;
      b.h.diagonal() += omega * b.nc;
      b.solver.compute(b.h);
      const MatrixXd& v = b.solver.eigenvectors();
      const VectorXd& lam = b.solver.eigenvalues();
      b.xr.noalias() = v.transpose() * b.ur;
      b.xi.noalias() = v.transpose() * b.ui;
      for (Eigen::Index k = 0; k < lam.size(); ++k) {
        const double c = std::cos(lam(k) * h), s = std::sin(lam(k) * h);
        // (xr + i xi) * (c - i s)
        const auto r = b.xr.row(k).eval();
        b.xr.row(k) = c * r + s * b.xi.row(k);
        b.xi.row(k) = c * b.xi.row(k) - s * r;
      }
      b.ur.noalias() = v * b.xr;
      b.ui.noalias() = v * b.xi;
    }
  }

  MatrixXcd unitary() const {
    MatrixXcd u = MatrixXcd::Zero(dim_, dim_);
    for (const auto& b : blocks_)
      for (std::size_t r = 0; r < b.index.size(); ++r)
        for (std::size_t c = 0; c < b.index.size(); ++c)
          u(b.index[r], b.index[c]) =
              Complex(b.ur(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)),
                      b.ui(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    return u;
  }

 private:
  struct Block {
    std::vector<int> index;
    MatrixXd s;
    VectorXd nc;
    MatrixXd h, ur, ui, xr, xi;
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver;
  };
  std::vector<Block> blocks_;
  int dim_ = 0;
};

}  // namespace detail

class Propagator {
 public:
  Propagator(const DeviceParams& p, double idle_flux, PropagatorOptions opts = {})
      : params_(p), parts_(hamiltonian_parts(p)), idle_flux_(idle_flux), opts_(opts) {
    p.validate();
    if (opts_.substeps < 1) throw std::invalid_argument("Propagator: substeps must be >= 1");
    idle_ = labeled_spectrum(p, idle_flux);
    frame_ = detail::labeled_columns(idle_);
    comp_ = computational_indices(p);
  }

  const DeviceParams& params() const { return params_; }
  const HamiltonianParts& parts() const { return parts_; }
  double idle_flux() const { return idle_flux_; }
  const PropagatorOptions& options() const { return opts_; }
  const LabeledSpectrum& idle_spectrum() const { return idle_; }
  const std::array<int, 4>& computational() const { return comp_; }

  double coupler_omega(double flux_offset) const {
    return coupler_frequency(params_, idle_flux_ + flux_offset);
  }

  // Lab-frame propagator (bare basis) over [t0, t0 + duration]; the flux is
  // linear between samples.
  MatrixXcd propagate(const Waveform& wf) const {
    detail::BlockPropagator bp(params_, parts_);
    const std::size_t n = wf.size();
    const int m = opts_.substeps;
    const double h = wf.dt / m;
    constexpr double c1 = 0.5 - 0.28867513459481287;  // 1/2 -+ sqrt(3)/6
    constexpr double c2 = 0.5 + 0.28867513459481287;
    constexpr double a1 = 0.25 - 0.28867513459481287;  // 1/4 -+ sqrt(3)/6
    constexpr double a2 = 0.25 + 0.28867513459481287;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double s0 = wf.samples[k], ds = wf.samples[k + 1] - wf.samples[k];
      for (int j = 0; j < m; ++j) {
        if (opts_.integrator == Integrator::kMidpoint) {
          bp.step(coupler_omega(s0 + ds * (j + 0.5) / m), h);
        } else {
          const double w1 = coupler_omega(s0 + ds * (j + c1) / m);
          const double w2 = coupler_omega(s0 + ds * (j + c2) / m);
          bp.step(2.0 * (a2 * w1 + a1 * w2), 0.5 * h);
          bp.step(2.0 * (a1 * w1 + a2 * w2), 0.5 * h);
        }
      }
    }
    return bp.unitary();
  }

  // Full propagator in the idle dressed basis and rotating frame. Rows and
  // columns are indexed by bare labels.
  MatrixXcd dressed(const MatrixXcd& u, double duration) const {
    MatrixXcd g = frame_.transpose().cast<Complex>() * u * frame_.cast<Complex>();
    for (Eigen::Index a = 0; a < g.rows(); ++a)
      g.row(a) *= std::polar(1.0, idle_.eigenvalues(idle_.eigen_of[a]) * duration);
    return g;
  }

  GateResult extract(const MatrixXcd& u, double duration) const {
    return gate_from_dressed(dressed(u, duration), duration);
  }

  GateResult gate_from_dressed(const MatrixXcd& g, double duration) const {
    GateResult r;
    r.duration = duration;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) r.u4(a, b) = g(comp_[a], comp_[b]);
    detail::fill_metrics(r);
    return r;
  }

  GateResult gate(const Waveform& wf) const { return extract(propagate(wf), wf.duration()); }

  MatrixXcd dressed_gate(const Waveform& wf) const {
    return dressed(propagate(wf), wf.duration());
  }

 private:
  DeviceParams params_;
  HamiltonianParts parts_;
  double idle_flux_;
  PropagatorOptions opts_;
  LabeledSpectrum idle_;
  MatrixXd frame_;
  std::array<int, 4> comp_{};
};

inline MatrixXcd propagate(const DeviceParams& p, const Waveform& wf, double idle_flux,
                           int substeps = 20) {
  return Propagator(p, idle_flux, {substeps, Integrator::kMagnus4}).propagate(wf);
}

inline GateResult extract_gate(const MatrixXcd& u, const DeviceParams& p, double idle_flux,
                               double duration) {
  return Propagator(p, idle_flux).extract(u, duration);
}

inline GateResult apply_virtual_z(GateResult g, double phi1, double phi2) {
  const std::array<double, 4> ph = {0.0, phi2, phi1, phi1 + phi2};
  for (int a = 0; a < 4; ++a) g.u4.row(a) *= std::polar(1.0, ph[a]);
  const double zz = g.phi_zz;
  detail::fill_metrics(g);
  g.phi_zz = zz;  // invariant up to rounding; keep it bitwise
  return g;
}

// Virtual-Z angles that cancel the accumulated single-qubit phases (the
// fidelity optimum when phi_zz = pi).
inline GateResult with_optimal_virtual_z(const GateResult& g) {
  return apply_virtual_z(g, -g.phi1_acc, -g.phi2_acc);
}

// Gate produced by a pulse parameter set, including its virtual-Z angles.
inline GateResult pulse_gate(const Propagator& prop, const PulseParams& pulse) {
  const auto [phi1, phi2] = virtual_z(pulse);
  return apply_virtual_z(prop.gate(sample(pulse)), phi1, phi2);
}

// Trapezoidal integral of xi over the waveform (rad).
inline double adiabatic_phase(const AdiabaticTracker& tracker, const Waveform& wf,
                              double idle_flux) {
  if (wf.size() < 2) return 0.0;
  double acc = 0.0;
  double prev = tracker.conditional_shift(idle_flux + wf.samples[0]);
  for (std::size_t k = 1; k < wf.size(); ++k) {
    const double cur = tracker.conditional_shift(idle_flux + wf.samples[k]);
    acc += 0.5 * (prev + cur) * wf.dt;
    prev = cur;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Ramsey measurement of the conditional phase: the target is put on the
// equator, the pulse applied, and a pi/2 rotation about an equatorial axis at
// angle theta is followed by a target measurement. A cosine fit per control
// state gives the phase; the difference is phi_zz.

struct RamseyFit {
  double phase = 0.0;
  double contrast = 0.0;
  double offset = 0.0;
};

// Least-squares p(theta) = c0 + c1 cos(theta) + c2 sin(theta), expressed as
// offset + contrast * cos(theta - phase).
inline RamseyFit fit_cosine(std::span<const double> thetas, std::span<const double> ps,
                            double min_contrast = 1e-3) {
  if (thetas.size() != ps.size() || thetas.size() < 3)
    throw std::invalid_argument("fit_cosine: need >= 3 matching points");
  MatrixXd a(static_cast<Eigen::Index>(thetas.size()), 3);
  VectorXd y(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::cos(thetas[static_cast<std::size_t>(i)]);
    a(i, 2) = std::sin(thetas[static_cast<std::size_t>(i)]);
    y(i) = ps[static_cast<std::size_t>(i)];
  }
  const VectorXd c = a.colPivHouseholderQr().solve(y);
  RamseyFit f;
  f.offset = c(0);
  f.contrast = std::hypot(c(1), c(2));
  if (!(f.contrast > min_contrast)) throw NumericalError("fit_cosine: contrast too low");
  f.phase = std::atan2(c(2), c(1));
  return f;
}

inline std::vector<double> default_ramsey_angles(int n = 10) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = -1.1 * kPi + 2.2 * kPi * i / (n - 1);
  return t;
}

// `g` is a dressed-frame full propagator; target_qubit is 1 or 2.
inline double ramsey_conditional_phase(const MatrixXcd& g, const std::array<int, 4>& comp,
                                       std::span<const double> thetas,
                                       int target_qubit = 2) {
  const int tbit = target_qubit == 2 ? 1 : 2;  // index stride of the target in 00,01,10,11
  const int cbit = 3 - tbit;
  std::array<double, 2> phases{};
  for (int control = 0; control < 2; ++control) {
    const int i0 = control * cbit, i1 = i0 + tbit;
    VectorXcd psi0 = VectorXcd::Zero(g.rows());
    psi0(comp[i0]) = 1.0 / std::sqrt(2.0);
    psi0(comp[i1]) = 1.0 / std::sqrt(2.0);
    const VectorXcd psi = g * psi0;
    std::vector<double> ps;
    for (double th : thetas) {
      // pi/2 about cos(th) X + sin(th) Y on the target.
      const Complex m(std::sin(th), -std::cos(th));  // -i e^{i th}
      double p1 = 0.0;
      for (int c = 0; c < 2; ++c) {
        const Complex a0 = psi(comp[c * cbit]), a1 = psi(comp[c * cbit + tbit]);
        const Complex out1 = (a1 + m * a0) / std::sqrt(2.0);
        p1 += std::norm(out1);
      }
      ps.push_back(p1);
    }
    phases[static_cast<std::size_t>(control)] = fit_cosine(thetas, ps).phase;
  }
  return wrap_phase(phases[1] - phases[0]);
}

inline double ramsey_conditional_phase(const Propagator& prop, const Waveform& wf,
                                       std::span<const double> thetas, int target_qubit = 2) {
  return ramsey_conditional_phase(prop.dressed_gate(wf), prop.computational(), thetas,
                                  target_qubit);
}

// ---------------------------------------------------------------------------
// Leakage maps and LZS fits.

struct LeakagePoint {
  double width = 0.0;
  double amplitude = 0.0;
  double p10 = 0.0;  // population retained in |10>
  double p11 = 0.0;  // population retained in |11>
  double phi_zz = 0.0;
};

inline LeakagePoint leakage_point(const Propagator& prop, const PulseParams& pulse) {
  const GateResult g = prop.gate(sample(pulse));
  LeakagePoint pt;
  std::visit(
      [&](const auto& q) {
        pt.width = q.width;
        pt.amplitude = q.amplitude;
      },
      pulse);
  pt.p10 = std::norm(g.u4(2, 2));
  pt.p11 = std::norm(g.u4(3, 3));
  pt.phi_zz = g.phi_zz;
  return pt;
}

// Row-major over (width, amplitude). `shape` supplies the family and the
// remaining parameters.
inline std::vector<LeakagePoint> leakage_map(const Propagator& prop, const PulseParams& shape,
                                             std::span<const double> widths,
                                             std::span<const double> amplitudes,
                                             const Parallelism& par = Parallelism{}) {
  std::vector<LeakagePoint> out(widths.size() * amplitudes.size());
  par.for_each(out.size(), [&](std::size_t i) {
    PulseParams p = shape;
    std::visit(
        [&](auto& q) {
          q.width = widths[i / amplitudes.size()];
          q.amplitude = amplitudes[i % amplitudes.size()];
        },
        p);
    out[i] = leakage_point(prop, p);
  });
  return out;
}

struct LzsFit {
  double max_loss = 0.0;      // L_m
  double period = 0.0;        // in the swept variable (seconds of width)
  double phase_offset = 0.0;  // rad; Lambda = pi (x - x0) / period = pi x / period - phase_offset
  double rms_residual = 0.0;
  double periods_covered = 0.0;
};

// Fits p(x) = 1 - L sin^2(pi x / period - phase_offset).
inline LzsFit fit_lzs(std::span<const double> xs, std::span<const double> ps) {
  if (xs.size() != ps.size() || xs.size() < 8)
    throw std::invalid_argument("fit_lzs: need >= 8 matching points");
  const auto n = static_cast<Eigen::Index>(xs.size());
  const double span = xs.back() - xs.front();
  // 1 - L sin^2(u) = 1 - L/2 + (L/2) cos(2u): scan the period with a linear
  // fit of the harmonic, then refine everything jointly.
  double best_rss = std::numeric_limits<double>::infinity(), best_period = span;
  VectorXd best_c;
  const double dx = span / static_cast<double>(n - 1);
  for (int i = 0; i < 2000; ++i) {
    const double period = std::exp(std::log(span) + (std::log(4.0 * dx) - std::log(span)) * i / 1999.0);
    MatrixXd a(n, 3);
    VectorXd y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double u = kTwoPi * xs[static_cast<std::size_t>(k)] / period;
      a(k, 0) = 1.0;
      a(k, 1) = std::cos(u);
      a(k, 2) = std::sin(u);
      y(k) = ps[static_cast<std::size_t>(k)];
    }
    const VectorXd c = a.colPivHouseholderQr().solve(y);
    const double rss = (a * c - y).squaredNorm();
    if (rss < best_rss) {
      best_rss = rss;
      best_period = period;
      best_c = c;
    }
  }
  const double amp = std::hypot(best_c(1), best_c(2));
  const double phase = std::atan2(best_c(2), best_c(1));  // cos(2 pi x / P - phase)
  // Refine with the period in units of the sweep span.
  VectorXd x0(3);
  x0 << std::clamp(2.0 * amp, 0.0, 1.0), best_period / span, 0.5 * phase;
  auto residual = [&](const VectorXd& q) {
    VectorXd r(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double s = std::sin(kPi * xs[static_cast<std::size_t>(k)] / (q(1) * span) - q(2));
      r(k) = 1.0 - q(0) * s * s - ps[static_cast<std::size_t>(k)];
    }
    return r;
  };
  LsqOptions o;
  o.lower = VectorXd(3);
  o.upper = VectorXd(3);
  *o.lower << 0.0, 0.5 * best_period / span, -10.0;
  *o.upper << 1.0, 2.0 * best_period / span, 10.0;
  const LsqResult r = levenberg_marquardt(residual, x0, o);
  LzsFit f;
  f.max_loss = r.x(0);
  f.period = r.x(1) * span;
  f.phase_offset = r.x(2);
  f.rms_residual = r.rms();
  f.periods_covered = span / f.period;
  return f;
}

}  // namespace czcal

#endif  // CZCAL_PROPAGATOR_HPP_
