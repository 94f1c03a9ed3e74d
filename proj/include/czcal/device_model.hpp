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

// Two fixed-frequency transmons coupled through a flux-tunable transmon
// coupler. The Hamiltonian is built in the bare number basis
// |n_c, n1 n2>, truncated per mode, and is real symmetric because the
// couplings are products of the antisymmetric (a^dag - a) quadratures.

#ifndef CZCAL_DEVICE_MODEL_HPP_
#define CZCAL_DEVICE_MODEL_HPP_

#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "czcal/common.hpp"

namespace czcal {

struct DeviceParams {
  double omega1 = ghz(4.115);
  double omega2 = ghz(3.651);
  double alpha1 = mhz(-261.0);
  double alpha2 = mhz(-275.0);
  double alphaC = mhz(-124.0);
  double g1c = mhz(67.0);
  double g2c = mhz(-61.0);
  double g12 = mhz(-5.5);
  double omegaC_max = ghz(6.3);
  double omegaC_min = ghz(3.7);
  // Junction asymmetry of the coupler SQUID; the default places the
  // half-flux-quantum frequency exactly at omegaC_min.
  double squid_asymmetry = matched_asymmetry(ghz(6.3), ghz(3.7), mhz(-124.0));
  int n_qubit_levels = 3;
  int n_coupler_levels = 4;
  int max_dimension = 512;

  int dimension() const {
    return n_qubit_levels * n_qubit_levels * n_coupler_levels;
  }

  // Asymmetry d for which the SQUID map hits omega_min at half flux.
  static double matched_asymmetry(double omega_max, double omega_min,
                                  double alpha_c) {
    const double r = (omega_min + std::abs(alpha_c)) /
                     (omega_max + std::abs(alpha_c));
    return r * r;
  }

  void validate() const {
    if (n_qubit_levels < 2 || n_coupler_levels < 2)
      throw std::invalid_argument("DeviceParams: need at least two levels per mode");
    if (dimension() > max_dimension) {
      std::ostringstream msg;
      msg << "DeviceParams: Hilbert dimension " << dimension()
          << " exceeds cap " << max_dimension;
      throw std::invalid_argument(msg.str());
    }
    if (!(squid_asymmetry >= 0.0 && squid_asymmetry < 1.0))
      throw std::invalid_argument("DeviceParams: squid_asymmetry must lie in [0,1)");
    if (!(omegaC_max > 0.0))
      throw std::invalid_argument("DeviceParams: omegaC_max must be positive");
  }
};

// Bare product state |n_c, n1 n2>^0.
struct BareLabel {
  int nc = 0;
  int n1 = 0;
  int n2 = 0;

  friend bool operator==(const BareLabel&, const BareLabel&) = default;

  std::string str() const {
    return "|" + std::to_string(nc) + "," + std::to_string(n1) +
           std::to_string(n2) + ">";
  }
};

inline int bare_index(const DeviceParams& p, BareLabel l) {
  return (l.nc * p.n_qubit_levels + l.n1) * p.n_qubit_levels + l.n2;
}

inline BareLabel bare_label(const DeviceParams& p, int index) {
  const int q = p.n_qubit_levels;
  return {index / (q * q), (index / q) % q, index % q};
}

// Indices of |0,00>, |0,01>, |0,10>, |0,11> in the bare basis; this is also
// the row/column order of every 4x4 gate in the library.
inline std::array<int, 4> computational_indices(const DeviceParams& p) {
  return {bare_index(p, {0, 0, 0}), bare_index(p, {0, 0, 1}),
          bare_index(p, {0, 1, 0}), bare_index(p, {0, 1, 1})};
}

// Asymmetric-SQUID transmon tuning curve. Periodic in flux (units of the
// flux quantum) with period 1 and even about zero.
inline double coupler_frequency(const DeviceParams& p, double flux) {
  const double a = std::abs(p.alphaC);
  const double c = std::cos(kPi * flux);
  const double s = std::sin(kPi * flux);
  const double d2 = p.squid_asymmetry * p.squid_asymmetry;
  return (p.omegaC_max + a) * std::pow(c * c + d2 * s * s, 0.25) - a;
}

// Flux folded into [0, 1/2]; the Hamiltonian depends on flux only through
// this value.
inline double fold_flux(double flux) {
  return std::abs(flux - std::round(flux));
}

// H(flux) = static_part + omega_c(flux) * diag(coupler_number).
struct HamiltonianParts {
  MatrixXd static_part;
  VectorXd coupler_number;

  MatrixXd at_coupler_frequency(double omega_c) const {
    MatrixXd h = static_part;
    h.diagonal() += omega_c * coupler_number;
    return h;
  }
};

namespace detail {

inline MatrixXd quadrature(int levels) {
  // a^dag - a in the number basis.
  MatrixXd m = MatrixXd::Zero(levels, levels);
  for (int n = 0; n + 1 < levels; ++n) {
    const double v = std::sqrt(static_cast<double>(n + 1));
    m(n + 1, n) = v;
    m(n, n + 1) = -v;
  }
  return m;
}

inline MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace detail

inline HamiltonianParts hamiltonian_parts(const DeviceParams& p) {
  p.validate();
  const int q = p.n_qubit_levels;
  const int c = p.n_coupler_levels;
  const int dim = p.dimension();
  HamiltonianParts parts;
  parts.static_part = MatrixXd::Zero(dim, dim);
  parts.coupler_number = VectorXd::Zero(dim);
  for (int i = 0; i < dim; ++i) {
    const BareLabel l = bare_label(p, i);
    auto kerr = [](double alpha, int n) { return 0.5 * alpha * n * (n - 1); };
    parts.static_part(i, i) = p.omega1 * l.n1 + kerr(p.alpha1, l.n1) +
                              p.omega2 * l.n2 + kerr(p.alpha2, l.n2) +
                              kerr(p.alphaC, l.nc);
    parts.coupler_number(i) = l.nc;
  }
  const MatrixXd iq = MatrixXd::Identity(q, q);
  const MatrixXd ic = MatrixXd::Identity(c, c);
  const MatrixXd xq = detail::quadrature(q);
  const MatrixXd xc = detail::quadrature(c);
  // Ordering of the tensor factors is coupler (x) Q1 (x) Q2.
  parts.static_part -= p.g1c * detail::kron(detail::kron(xc, xq), iq);
  parts.static_part -= p.g2c * detail::kron(detail::kron(xc, iq), xq);
  parts.static_part -= p.g12 * detail::kron(detail::kron(ic, xq), xq);
  // Symmetrize so that H == H^T holds bitwise.
  parts.static_part = 0.5 * (parts.static_part + parts.static_part.transpose()).eval();
  return parts;
}

// Real symmetric (hence Hermitian) Hamiltonian in rad/s.
inline MatrixXd build_hamiltonian(const DeviceParams& p, double flux) {
  return hamiltonian_parts(p).at_coupler_frequency(coupler_frequency(p, flux));
}

// Eigen-decomposition with every eigenvector tagged by the bare state it is
// continuously connected to.
struct LabeledSpectrum {
  double flux = 0.0;
  VectorXd eigenvalues;           // ascending
  MatrixXd eigenvectors;          // columns match eigenvalues
  std::vector<int> label_of;      // eigen index -> bare index
  std::vector<int> eigen_of;      // bare index -> eigen index
  MatrixXd overlap_matrix;        // |<reference_i|eigen_j>|^2

  double energy(int bare) const { return eigenvalues(eigen_of[bare]); }
  auto vector(int bare) const { return eigenvectors.col(eigen_of[bare]); }
};

namespace detail {

// Assigns each reference state (rows) to an eigenvector (columns) by
// descending overlap. The reference states are the bare basis or the
// labeled vectors of a neighbouring flux point.
inline void assign_labels(LabeledSpectrum& s, const MatrixXd& reference) {
  const Eigen::Index n = s.eigenvectors.cols();
  const MatrixXd amp = reference.transpose() * s.eigenvectors;
  s.overlap_matrix = amp.cwiseAbs2();
  const MatrixXd& o = s.overlap_matrix;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = -1.0, second = -1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = o(i, j);
      if (v > best) {
        second = best;
        best = v;
      } else if (v > second) {
        second = v;
      }
    }
    if (best > 1e-3 && best - second < 1e-6) {
      std::ostringstream msg;
      msg << "labeled_spectrum: ambiguous assignment at flux " << s.flux
          << " for reference state " << i << " (overlap gap "
          << best - second << ")";
      throw NumericalError(msg.str());
    }
  }
  std::vector<std::pair<double, std::pair<int, int>>> pairs;
  pairs.reserve(static_cast<std::size_t>(n * n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      pairs.push_back({o(i, j), {static_cast<int>(i), static_cast<int>(j)}});
  // Deterministic: ties resolved by lower reference index, then eigen index.
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  s.label_of.assign(static_cast<std::size_t>(n), -1);
  s.eigen_of.assign(static_cast<std::size_t>(n), -1);
  for (const auto& [v, ij] : pairs) {
    const auto [i, j] = ij;
    if (s.eigen_of[static_cast<std::size_t>(i)] >= 0 ||
        s.label_of[static_cast<std::size_t>(j)] >= 0)
      continue;
    s.eigen_of[static_cast<std::size_t>(i)] = j;
    s.label_of[static_cast<std::size_t>(j)] = i;
  }
  // Sign convention: each eigenvector has positive overlap with its
  // reference state.
  for (Eigen::Index j = 0; j < n; ++j)
    if (amp(s.label_of[static_cast<std::size_t>(j)], j) < 0.0)
      s.eigenvectors.col(j) *= -1.0;
}

inline LabeledSpectrum diagonalize(const HamiltonianParts& parts, double omega_c,
                                   double flux) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(parts.at_coupler_frequency(omega_c));
  if (solver.info() != Eigen::Success)
    throw NumericalError("labeled_spectrum: eigen-decomposition failed");
  LabeledSpectrum s;
  s.flux = flux;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  return s;
}

inline MatrixXd labeled_columns(const LabeledSpectrum& s) {
  MatrixXd out(s.eigenvectors.rows(), s.eigenvectors.cols());
  for (std::size_t b = 0; b < s.eigen_of.size(); ++b)
    out.col(static_cast<Eigen::Index>(b)) = s.eigenvectors.col(s.eigen_of[b]);
  return out;
}

}  // namespace detail

// Labels by maximum overlap with bare states, or, when `previous` is given,
// with the labeled eigenvectors of a nearby flux point (adiabatic sweep).
inline LabeledSpectrum labeled_spectrum(const DeviceParams& p, double flux,
                                        const LabeledSpectrum* previous = nullptr) {
  const HamiltonianParts parts = hamiltonian_parts(p);
  LabeledSpectrum s = detail::diagonalize(parts, coupler_frequency(p, flux), flux);
  if (previous != nullptr)
    detail::assign_labels(s, detail::labeled_columns(*previous));
  else
    detail::assign_labels(s, MatrixXd::Identity(p.dimension(), p.dimension()));
  return s;
}

// Adiabatic labels: spectra chained on a uniform grid of folded flux from the
// coupler sweet spot (where eigenstates are essentially bare) to half flux.
// Queries at arbitrary flux are labeled against the nearest grid point.
class AdiabaticTracker {
 public:
  explicit AdiabaticTracker(const DeviceParams& p, double step = 5e-4)
      : params_(p), parts_(hamiltonian_parts(p)), step_(step) {
    if (!(step > 0.0 && step <= 1e-3))
      throw std::invalid_argument("AdiabaticTracker: step must lie in (0, 1e-3]");
    const int n = static_cast<int>(std::ceil(0.5 / step_)) + 1;
    grid_.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      const double f = std::min(0.5, k * step_);
      LabeledSpectrum s = detail::diagonalize(parts_, coupler_frequency(p, f), f);
      if (k == 0)
        detail::assign_labels(s, MatrixXd::Identity(p.dimension(), p.dimension()));
      else
        detail::assign_labels(s, detail::labeled_columns(grid_.back()));
      grid_.push_back(std::move(s));
    }
  }

  const DeviceParams& params() const { return params_; }
  const HamiltonianParts& parts() const { return parts_; }

  LabeledSpectrum spectrum(double flux) const {
    const double f = fold_flux(flux);
    const auto k = static_cast<std::size_t>(std::lround(f / step_));
    const LabeledSpectrum& ref = grid_[std::min(k, grid_.size() - 1)];
    LabeledSpectrum s =
        detail::diagonalize(parts_, coupler_frequency(params_, flux), flux);
    detail::assign_labels(s, detail::labeled_columns(ref));
    return s;
  }

  // Adiabatic computational energies (rad/s) in the order 00, 01, 10, 11.
  std::array<double, 4> computational_energies(double flux) const {
    const LabeledSpectrum s = spectrum(flux);
    const auto idx = computational_indices(params_);
    return {s.energy(idx[0]), s.energy(idx[1]), s.energy(idx[2]), s.energy(idx[3])};
  }

  double conditional_shift(double flux) const {
    const auto e = computational_energies(flux);
    return e[3] - e[1] - e[2] + e[0];
  }

 private:
  DeviceParams params_;
  HamiltonianParts parts_;
  double step_;
  std::vector<LabeledSpectrum> grid_;
};

// xi = w11 - w01 - w10 + w00 of the adiabatic computational states (rad/s).
inline double conditional_shift(const DeviceParams& p, double flux) {
  return AdiabaticTracker(p).conditional_shift(flux);
}

// Minimizes |f| on [lo, hi] to `tol`: dense scan, then bisection on a sign
// change or golden-section search around an interior minimum. Returns nullopt
// when |f| is smallest at a bracket end without a sign change.
template <typename Fn>
std::optional<double> minimize_abs(Fn&& f, double lo, double hi,
                                   double tol = 1e-5, int scan_points = 201) {
  if (!(hi > lo)) throw std::invalid_argument("minimize_abs: empty bracket");
  std::vector<double> xs(static_cast<std::size_t>(scan_points));
  std::vector<double> ys(xs.size());
  for (int i = 0; i < scan_points; ++i) {
    xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (scan_points - 1);
    ys[static_cast<std::size_t>(i)] = f(xs[static_cast<std::size_t>(i)]);
  }
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (ys[i] == 0.0) return xs[i];
    if ((ys[i] < 0.0) != (ys[i + 1] < 0.0)) {
      double a = xs[i], b = xs[i + 1], fa = ys[i];
      while (b - a > 0.25 * tol) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      return 0.5 * (a + b);
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < ys.size(); ++i)
    if (std::abs(ys[i]) < std::abs(ys[best])) best = i;
  if (best == 0 || best + 1 == ys.size()) return std::nullopt;
  double a = xs[best - 1], b = xs[best + 1];
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = std::abs(f(c)), fd = std::abs(f(d));
  while (b - a > 0.25 * tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = std::abs(f(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = std::abs(f(d));
    }
  }
  return 0.5 * (a + b);
}

// Flux of minimal |xi| inside [lo, hi] (1e-5 flux-quantum resolution).
inline std::optional<double> zz_zero_crossing(const AdiabaticTracker& tracker,
                                              double lo, double hi) {
  return minimize_abs([&](double x) { return tracker.conditional_shift(x); }, lo,
                      hi);
}

inline std::optional<double> zz_zero_crossing(const DeviceParams& p, double lo,
                                              double hi) {
  return zz_zero_crossing(AdiabaticTracker(p), lo, hi);
}

// Idle operating point: the ZZ-cancellation flux below the first crossing.
inline double default_idle_flux(const AdiabaticTracker& tracker) {
  const auto f = zz_zero_crossing(tracker, 0.0, 0.4);
  if (!f) throw NumericalError("default_idle_flux: no |xi| minimum in [0, 0.4]");
  return *f;
}

}  // namespace czcal

#endif  // CZCAL_DEVICE_MODEL_HPP_
