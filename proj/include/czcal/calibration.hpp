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

// Closed-loop CZ calibration: ORBIT cost on simulated randomized sequences,
// sensitivity-adaptive sequence length, CMA-ES updates, and the
// consecutive-CZ stress protocol.

#ifndef CZCAL_CALIBRATION_HPP_
#define CZCAL_CALIBRATION_HPP_

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "czcal/benchmarking.hpp"
#include "czcal/clifford.hpp"
#include "czcal/cmaes.hpp"
#include "czcal/common.hpp"
#include "czcal/propagator.hpp"
#include "czcal/pulse_shapes.hpp"
#include "czcal/signal_chain.hpp"

namespace czcal {

// ---------------------------------------------------------------------------
// Signal delivery.

enum class Correction { kNone, kPartial, kFull };

inline std::string_view correction_name(Correction c) {
  switch (c) {
    case Correction::kNone: return "none";
    case Correction::kPartial: return "partial";
    case Correction::kFull: return "full";
  }
  return "?";
}

inline Correction parse_correction(std::string_view s) {
  for (auto c : {Correction::kNone, Correction::kPartial, Correction::kFull})
    if (correction_name(c) == s) return c;
  throw std::invalid_argument("unknown correction '" + std::string(s) + "'");
}

// What reaches the coupler for a nominal waveform: optional predistortion,
// then the distortion chain. Both are causal, so truncating the output to the
// nominal length needs no look-ahead.
struct Delivery {
  std::optional<DistortionChain> chain;
  std::optional<Predistortion> predistortion;
};

inline constexpr double kPartialCorrectionTau = 500e-9;

inline Delivery make_delivery(const DistortionChain& chain, Correction c,
                              double partial_tau = kPartialCorrectionTau) {
  Delivery d;
  if (chain.empty()) return d;
  d.chain = chain;
  if (c == Correction::kFull) d.predistortion = invert_chain(chain);
  if (c == Correction::kPartial) d.predistortion = invert_chain_up_to(chain, partial_tau);
  return d;
}

inline Waveform deliver(const Waveform& nominal, const Delivery& d) {
  Waveform y = nominal;
  if (d.predistortion) y = apply_predistortion(y, *d.predistortion);
  if (d.chain) y = apply_chain(y, *d.chain);
  return y;
}

// Two pulses back to back; they share the joint zero sample.
inline Waveform concatenate(const Waveform& a, const Waveform& b) {
  if (std::abs(a.dt - b.dt) > 1e-12 * a.dt)
    throw std::invalid_argument("concatenate: sample periods differ");
  Waveform w = a;
  w.buffer_after = b.buffer_after;
  if (b.samples.empty()) return w;
  if (w.samples.empty()) return b;
  w.samples.insert(w.samples.end(), b.samples.begin() + 1, b.samples.end());
  return w;
}

// ---------------------------------------------------------------------------
// CZ models from propagated pulses.

// Full dressed gate with the virtual-Z frame update on every level and the
// computational states moved to the first four indices.
inline CzModel cz_model_from_dressed(const Propagator& prop, const MatrixXcd& g, double phi1,
                                     double phi2, double depolarizing = 0.0) {
  const auto n = g.rows();
  const auto& comp = prop.computational();
  std::vector<Eigen::Index> order(comp.begin(), comp.end());
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::find(comp.begin(), comp.end(), static_cast<int>(i)) == comp.end()) order.push_back(i);
  CzModel m;
  m.depolarizing = depolarizing;
  m.gate.resize(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const BareLabel l = bare_label(prop.params(), static_cast<int>(order[a]));
    const Complex vz = std::polar(1.0, l.n1 * phi1 + l.n2 * phi2);
    for (Eigen::Index b = 0; b < n; ++b) m.gate(a, b) = vz * g(order[a], order[b]);
  }
  return m;
}

inline Waveform delivered_pulse(const PulseParams& pulse, const Delivery& d) {
  return deliver(sample(pulse), d);
}

inline CzModel cz_model(const Propagator& prop, const PulseParams& pulse, const Delivery& d = {},
                        double depolarizing = 0.0) {
  const auto [phi1, phi2] = virtual_z(pulse);
  return cz_model_from_dressed(prop, prop.dressed_gate(delivered_pulse(pulse, d)), phi1, phi2,
                               depolarizing);
}

// Two consecutive CZs: the pair waveform goes through the chain as a whole,
// so the second pulse sees the first one's transient.
inline CzModel cz_pair_model(const Propagator& prop, const PulseParams& pulse,
                             const Delivery& d = {}, double depolarizing = 0.0) {
  const Waveform one = sample(pulse);
  const Waveform pair = deliver(concatenate(one, one), d);
  const std::size_t split = one.size() - 1;
  Waveform first = pair, second = pair;
  first.samples.assign(pair.samples.begin(), pair.samples.begin() + split + 1);
  second.samples.assign(pair.samples.begin() + split, pair.samples.end());
  const auto [phi1, phi2] = virtual_z(pulse);
  const CzModel a = cz_model_from_dressed(prop, prop.dressed_gate(first), phi1, phi2);
  const CzModel b = cz_model_from_dressed(prop, prop.dressed_gate(second), phi1, phi2);
  CzModel m;
  m.gate = b.gate * a.gate;
  m.depolarizing = 1.0 - (1.0 - depolarizing) * (1.0 - depolarizing);
  return m;
}

// Directly computed gate of a pulse after delivery, virtual-Z included.
inline GateResult delivered_gate(const Propagator& prop, const PulseParams& pulse,
                                 const Delivery& d = {}) {
  const auto [phi1, phi2] = virtual_z(pulse);
  return apply_virtual_z(prop.gate(delivered_pulse(pulse, d)), phi1, phi2);
}

// ---------------------------------------------------------------------------
// ORBIT cost.

struct OrbitConfig {
  int sequences = 80;       // M
  int shots = 128;
  double threshold = 0.2;   // mean-cost trigger for N <- N + 1
  int initial_n = 2;        // N0
  SqNoise sq_noise;
  std::uint64_t seed = 1;

  void validate() const {
    if (sequences < 1) throw std::invalid_argument("OrbitConfig: sequences must be >= 1");
    if (shots < 1) throw std::invalid_argument("OrbitConfig: shots must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0))
      throw std::invalid_argument("OrbitConfig: threshold must lie in (0, 1)");
    if (initial_n < 1) throw std::invalid_argument("OrbitConfig: initial N must be >= 1");
  }
};

struct OrbitSequences {
  int n = 0;
  std::vector<RbSequence> sequences;
  std::vector<std::vector<CompiledStep>> compiled;
  std::uint64_t hash = 0;
  GateCounts counts;
};

inline std::uint64_t sequence_hash(std::span<const RbSequence> seqs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) { h = splitmix64(h ^ v); };
  for (const auto& s : seqs) {
    mix(s.clifford_ids.size());
    for (auto id : s.clifford_ids) mix(id);
    mix(s.recovery_id);
  }
  return h;
}

inline OrbitSequences make_orbit_sequences(int n, int m, Rng& rng) {
  OrbitSequences o;
  o.n = n;
  o.sequences = build_rb_sequences(n, m, 0, rng);
  for (const auto& s : o.sequences) o.compiled.push_back(compile_sequence(s.gates));
  o.hash = sequence_hash(o.sequences);
  o.counts = report_gate_counts(o.sequences);
  return o;
}

// E = 1 - mean shot-sampled ground fraction of Q1.
inline double orbit_cost(const CzModel& cz, const OrbitSequences& seqs, int shots,
                         const SqNoise& noise, Rng& rng) {
  if (seqs.compiled.empty()) throw std::invalid_argument("orbit_cost: no sequences");
  double mean = 0.0;
  for (const auto& steps : seqs.compiled)
    mean += sample_shots(ground_probability(steps, cz, noise), shots, rng);
  return 1.0 - mean / static_cast<double>(seqs.compiled.size());
}

inline double evaluate_candidate(const Propagator& prop, const PulseParams& pulse,
                                 const OrbitSequences& seqs, const Delivery& d,
                                 const OrbitConfig& cfg, Rng& rng) {
  return orbit_cost(cz_model(prop, pulse, d), seqs, cfg.shots, cfg.sq_noise, rng);
}

// ---------------------------------------------------------------------------
// Closed loop.

struct EvolutionRecord {
  int k = 0;
  int n = 0;
  std::vector<std::vector<double>> candidates;  // physical units
  std::vector<double> costs;
  double mean = 0.0;
  std::vector<double> normalized;  // E / N
  GateCounts counts;
  std::uint64_t sequence_hash = 0;
  int failures = 0;

  double min_cost() const { return *std::min_element(costs.begin(), costs.end()); }
};

struct OptimizationConfig {
  OrbitConfig orbit;
  CmaesOptions cmaes;
  int max_evolutions = 150;
  int stall_window = 20;
  double stall_tolerance = 0.0;  // 0: stop only on an exactly flat window
  std::optional<nlohmann::json> warm_start;  // a previous result's checkpoint
};

struct OptimizationResult {
  std::vector<double> best;  // physical parameter vector
  double best_cost = 1.0;
  int best_evolution = 0;
  int final_n = 0;
  std::vector<EvolutionRecord> history;
  nlohmann::json checkpoint;
};

// Maps a physical parameter vector to a CZ model; throws on invalid input.
using CandidateModel = std::function<CzModel(const std::vector<double>&)>;
using EvolutionCallback = std::function<void(const EvolutionRecord&)>;

namespace detail {

enum : std::uint64_t { kStreamSequences = 1, kStreamAsk = 2, kStreamShots = 3 };

}  // namespace detail

inline OptimizationResult run_optimization(const CandidateModel& model, const SearchSpace& space,
                                           const OptimizationConfig& cfg,
                                           const Parallelism& par = Parallelism{},
                                           const EvolutionCallback& on_evolution = {}) {
  cfg.orbit.validate();
  space.validate();
  if (cfg.max_evolutions < 1) throw std::invalid_argument("run_optimization: max_evolutions < 1");
  const std::uint64_t root = cfg.orbit.seed;
  Cmaes es = cfg.warm_start ? Cmaes::restore(cfg.warm_start->at("cmaes"), cfg.cmaes)
                            : Cmaes::from_space(space, cfg.cmaes);
  if (es.dimension() != static_cast<int>(space.size()))
    throw std::invalid_argument("run_optimization: warm start does not match the search space");
  int n = cfg.warm_start ? cfg.warm_start->at("n").get<int>() : cfg.orbit.initial_n;
  int n_updates = 0;
  auto regenerate = [&] {
    Rng rng(derive_seed(root, {detail::kStreamSequences, static_cast<std::uint64_t>(n_updates)}));
    return make_orbit_sequences(n, cfg.orbit.sequences, rng);
  };
  OrbitSequences seqs = regenerate();
  OptimizationResult out;
  std::vector<double> mean_norm;
  for (int k = 1; k <= cfg.max_evolutions; ++k) {
    Rng ask_rng(derive_seed(root, {detail::kStreamAsk, static_cast<std::uint64_t>(k)}));
    const auto xs = es.ask(ask_rng);
    EvolutionRecord rec;
    rec.k = k;
    rec.n = n;
    rec.counts = seqs.counts;
    rec.sequence_hash = seqs.hash;
    rec.costs.assign(xs.size(), 1.0);
    rec.candidates.resize(xs.size());
    std::vector<char> failed(xs.size(), 0);
    par.for_each(xs.size(), [&](std::size_t j) {
      rec.candidates[j] = space.denormalize(xs[j]);
      Rng rng(derive_seed(root, {detail::kStreamShots, static_cast<std::uint64_t>(k),
                                 static_cast<std::uint64_t>(j)}));
      try {
        rec.costs[j] = orbit_cost(model(rec.candidates[j]), seqs, cfg.orbit.shots,
                                  cfg.orbit.sq_noise, rng);
      } catch (const std::exception&) {
        failed[j] = 1;
      }
    });
    for (char f : failed) rec.failures += f;
    for (double c : rec.costs) {
      rec.mean += c;
      rec.normalized.push_back(c / n);
    }
    rec.mean /= static_cast<double>(rec.costs.size());
    es.tell(xs, rec.costs);
    out.history.push_back(rec);
    if (on_evolution) on_evolution(out.history.back());
    mean_norm.push_back(rec.mean / n);
    if (rec.mean < cfg.orbit.threshold) {
      ++n;
      ++n_updates;
      seqs = regenerate();
    }
    if (should_terminate(mean_norm, cfg.stall_window, cfg.stall_tolerance)) break;
  }
  // Best candidate among the evolutions run at the final N.
  const int last_n = out.history.back().n;
  for (const auto& rec : out.history) {
    if (rec.n != last_n) continue;
    for (std::size_t j = 0; j < rec.costs.size(); ++j) {
      if (out.best.empty() || rec.costs[j] < out.best_cost) {
        out.best = rec.candidates[j];
        out.best_cost = rec.costs[j];
        out.best_evolution = rec.k;
      }
    }
  }
  out.final_n = n;
  out.checkpoint = {{"cmaes", es.checkpoint()}, {"n", n}};
  return out;
}

// Pulse calibration: candidate vectors follow parameter_vector(shape).
inline OptimizationResult optimize_pulse(const Propagator& prop, const PulseParams& shape,
                                         const SearchSpace& space, const Delivery& d,
                                         const OptimizationConfig& cfg,
                                         const Parallelism& par = Parallelism{},
                                         const EvolutionCallback& on_evolution = {}) {
  if (space.size() != parameter_vector(shape).size())
    throw std::invalid_argument("optimize_pulse: search space does not match the pulse family");
  const CandidateModel model = [&](const std::vector<double>& v) {
    return cz_model(prop, from_parameter_vector(shape, v), d);
  };
  return run_optimization(model, space, cfg, par, on_evolution);
}

// Box around a starting pulse: relative ranges for amplitude and width,
// absolute ranges for shape coefficients and virtual-Z angles. Initial
// spreads move the accumulated single-qubit phases by roughly the
// virtual-Z spread.
inline SearchSpace default_search_space(const PulseParams& initial) {
  const auto v = parameter_vector(initial);
  const auto names = parameter_names(initial);
  SearchSpace s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string& nm = names[i];
    ParamRange r{nm, 0, 0, v[i], 0};
    if (nm == "amplitude") {
      r.lower = 0.5 * v[i];
      r.upper = 1.5 * v[i];
      r.spread = 5e-4 * v[i];
    } else if (nm == "width") {
      r.lower = 0.5 * v[i];
      r.upper = 1.5 * v[i];
      r.spread = 2e-3 * v[i];
    } else if (nm == "rise_time") {
      r.lower = 0.25 * v[i];
      r.upper = 4.0 * v[i];
      r.spread = 0.2 * v[i];
    } else if (nm == "phi1" || nm == "phi2") {
      r.lower = v[i] - kTwoPi;
      r.upper = v[i] + kTwoPi;
      r.spread = 0.05;
    } else {
      r.lower = v[i] - 1.0;
      r.upper = v[i] + 1.0;
      r.spread = 1e-3;
    }
    s.params.push_back(r);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Direct (noise-free) pulse tuning, used for starting points and for
// re-tuning a pulse under a given delivery.

// Scans the amplitude of `shape` for the best CZ with optimal virtual-Z, then
// refines by golden section; the returned pulse carries the virtual-Z angles.
inline PulseParams tune_amplitude(const Propagator& prop, PulseParams shape, double lo, double hi,
                                  const Delivery& d = {}, int scan = 21,
                                  const Parallelism& par = Parallelism{}) {
  if (!(hi > lo) || scan < 3) throw std::invalid_argument("tune_amplitude: bad scan range");
  auto with_amp = [&](double a) {
    PulseParams p = shape;
    std::visit([a](auto& q) { q.amplitude = a; q.phi1 = 0.0; q.phi2 = 0.0; }, p);
    return p;
  };
  auto infid = [&](double a) {
    return with_optimal_virtual_z(delivered_gate(prop, with_amp(a), d)).infidelity();
  };
  std::vector<double> grid(static_cast<std::size_t>(scan)), vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / (scan - 1);
  par.for_each(grid.size(), [&](std::size_t i) { vals[i] = infid(grid[i]); });
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  double a = grid[best == 0 ? 0 : best - 1], b = grid[std::min(best + 1, grid.size() - 1)];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), e = a + g * (b - a);
  double fc = infid(c), fe = infid(e);
  for (int it = 0; it < 30 && b - a > 1e-7 * std::abs(b); ++it) {
    if (fc < fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - g * (b - a);
      fc = infid(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + g * (b - a);
      fe = infid(e);
    }
  }
  PulseParams p = with_amp(0.5 * (a + b));
  const GateResult gr = delivered_gate(prop, p, d);
  std::visit([&](auto& q) { q.phi1 = -gr.phi1_acc; q.phi2 = -gr.phi2_acc; }, p);
  return p;
}

struct RefineConfig {
  int max_evolutions = 60;
  double target = 0.0;  // stop once the best infidelity falls below this
  std::uint64_t seed = 1;
  CmaesOptions cmaes;
};

struct RefineResult {
  PulseParams pulse;
  double infidelity = 1.0;
  int evolutions = 0;
};

// Deterministic CMA-ES on the directly computed infidelity (optimal
// virtual-Z) over every pulse parameter except the virtual-Z angles.
inline RefineResult refine_pulse(const Propagator& prop, const PulseParams& start, const Delivery& d,
                                 const RefineConfig& cfg, const Parallelism& par = Parallelism{}) {
  SearchSpace full = default_search_space(start);
  SearchSpace space;
  space.params.assign(full.params.begin(), full.params.end() - 2);
  const auto v0 = parameter_vector(start);
  auto to_pulse = [&](const std::vector<double>& x) {
    std::vector<double> v = x;
    v.push_back(0.0);
    v.push_back(0.0);
    return from_parameter_vector(start, v);
  };
  auto infid = [&](const PulseParams& p) {
    return with_optimal_virtual_z(delivered_gate(prop, p, d)).infidelity();
  };
  RefineResult out;
  out.pulse = to_pulse(std::vector<double>(v0.begin(), v0.end() - 2));
  out.infidelity = infid(out.pulse);
  Cmaes es = Cmaes::from_space(space, cfg.cmaes);
  for (int k = 1; k <= cfg.max_evolutions && out.infidelity >= cfg.target; ++k) {
    Rng rng(derive_seed(cfg.seed, {detail::kStreamAsk, static_cast<std::uint64_t>(k)}));
    const auto xs = es.ask(rng);
    std::vector<double> costs(xs.size(), 1.0);
    std::vector<PulseParams> pulses(xs.size());
    par.for_each(xs.size(), [&](std::size_t j) {
      pulses[j] = to_pulse(space.denormalize(xs[j]));
      try {
        costs[j] = infid(pulses[j]);
      } catch (const std::exception&) {
        costs[j] = 1.0;
      }
    });
    es.tell(xs, costs);
    out.evolutions = k;
    for (std::size_t j = 0; j < costs.size(); ++j)
      if (costs[j] < out.infidelity) {
        out.infidelity = costs[j];
        out.pulse = pulses[j];
      }
  }
  const GateResult gr = delivered_gate(prop, out.pulse, d);
  std::visit([&](auto& q) { q.phi1 = -gr.phi1_acc; q.phi2 = -gr.phi2_acc; }, out.pulse);
  return out;
}

// ---------------------------------------------------------------------------
// Consecutive-CZ stress.

namespace detail {

// Sequence simulation where each Clifford is followed by an explicit block.
class SequenceState {
 public:
  SequenceState(Eigen::Index n, bool mixed) : mixed_(mixed) {
    if (mixed_) {
      rho_ = MatrixXcd::Zero(n, n);
      rho_(0, 0) = 1.0;
    } else {
      psi_ = VectorXcd::Zero(n);
      psi_(0) = 1.0;
    }
  }

  void local(const Eigen::Matrix4cd& u, int sq_gates, const SqNoise& noise) {
    if (mixed_) {
      rho_.topRows(4) = u * rho_.topRows(4);
      rho_.leftCols(4) = rho_.leftCols(4) * u.adjoint();
      if (noise.depolarizing > 0.0)
        depolarize(rho_, 1.0 - std::pow(1.0 - noise.depolarizing, sq_gates));
    } else {
      psi_.head(4) = u * psi_.head(4);
    }
  }

  void gate(const CzModel& g) {
    if (mixed_) {
      rho_ = g.gate * rho_ * g.gate.adjoint();
      depolarize(rho_, g.depolarizing);
    } else {
      psi_ = g.gate * psi_;
    }
  }

  void steps(std::span<const CompiledStep> s, const CzModel& cz, const SqNoise& noise) {
    for (const auto& st : s) {
      if (st.cz) gate(cz);
      else local(st.local, st.sq_gates, noise);
    }
  }

  double ground(const SqNoise& noise) const {
    const double p0 = mixed_ ? std::real(rho_(0, 0) + rho_(1, 1))
                             : std::norm(psi_(0)) + std::norm(psi_(1));
    const double r = noise.readout_error;
    return std::clamp(p0 * (1.0 - r) + (1.0 - p0) * r, 0.0, 1.0);
  }

 private:
  bool mixed_;
  VectorXcd psi_;
  MatrixXcd rho_;
};

inline double interleaved_ground_probability(const RbSequence& seq, const CzModel& cz,
                                             const CzModel& block, const SqNoise& noise) {
  if (cz.dim() != block.dim()) throw std::invalid_argument("interleaved block dimension mismatch");
  const bool mixed = cz.depolarizing > 0.0 || block.depolarizing > 0.0 || noise.depolarizing > 0.0;
  SequenceState st(cz.dim(), mixed);
  const auto& table = CliffordTable::instance();
  for (auto id : seq.clifford_ids) {
    st.steps(compile_sequence(table[id].gates), cz, noise);
    if (seq.interleave_count > 0) st.gate(block);
  }
  st.steps(compile_sequence(table[seq.recovery_id].gates), cz, noise);
  return st.ground(noise);
}

}  // namespace detail

// IRB where the interleaved element is `block` (one CZ, or a precomputed run
// of `count` CZs); the error is reported per CZ.
inline IrbResult run_block_irb(const CzModel& cz, const CzModel& block, int count,
                               const SqNoise& noise, const IrbConfig& cfg, Rng& rng,
                               const Parallelism& par = Parallelism{}) {
  if (count < 1) throw std::invalid_argument("run_block_irb: count must be >= 1");
  IrbResult r;
  const auto [xr, yr] = detail::rb_arm(cz, noise, cfg, 0, rng, par, r.reference_means);
  std::vector<double> xi, yi;
  for (int n : cfg.lengths) {
    const auto seqs = build_rb_sequences(n, cfg.sequences, count, rng);
    std::vector<double> probs(seqs.size());
    par.for_each(seqs.size(), [&](std::size_t i) {
      probs[i] = detail::interleaved_ground_probability(seqs[i], cz, block, noise);
    });
    double mean = 0.0;
    for (double p : probs) {
      const double y = sample_shots(p, cfg.shots, rng);
      xi.push_back(n);
      yi.push_back(y);
      mean += y;
    }
    r.interleaved_means.push_back(mean / static_cast<double>(probs.size()));
  }
  r.reference = fit_decay(xr, yr, cfg.fixed_b);
  r.interleaved = fit_decay(xi, yi, cfg.fixed_b);
  r.error = irb_gate_error(r.reference, r.interleaved, count);
  r.error_sigma = irb_gate_error_sigma(r.reference, r.interleaved, count);
  return r;
}

struct StressConfig {
  IrbConfig irb;
  SqNoise sq_noise;
  double cz_depolarizing = 0.0;  // incoherent error per CZ
  double partial_tau = kPartialCorrectionTau;
  std::uint64_t seed = 1;
};

struct StressEntry {
  Correction correction = Correction::kNone;
  IrbResult single;
  IrbResult pair;
  double direct_single = 0.0;  // directly computed infidelity of one CZ
  double direct_pair = 0.0;    // of the pair against CZ^2 = I, per CZ

  double ratio() const { return pair.error / single.error; }
  double ratio_sigma() const {
    return std::abs(ratio()) * std::hypot(pair.error_sigma / pair.error,
                                          single.error_sigma / single.error);
  }
};

// Per correction variant: IRB with one and with two consecutive CZs
// interleaved. `pulses` holds the pulse calibrated for each variant.
inline std::vector<StressEntry> consecutive_cz_stress(
    const Propagator& prop, const DistortionChain& chain,
    const std::map<Correction, PulseParams>& pulses, const StressConfig& cfg,
    const Parallelism& par = Parallelism{}) {
  std::vector<StressEntry> out;
  for (const auto& [corr, pulse] : pulses) {
    const Delivery d = make_delivery(chain, corr, cfg.partial_tau);
    StressEntry e;
    e.correction = corr;
    const CzModel single = cz_model(prop, pulse, d, cfg.cz_depolarizing);
    const CzModel pair = cz_pair_model(prop, pulse, d, cfg.cz_depolarizing);
    const Matrix4cd target = cz_matrix();
    e.direct_single = 1.0 - average_gate_fidelity(single.gate.topLeftCorner(4, 4), target);
    e.direct_pair = 0.5 * (1.0 - average_gate_fidelity(pair.gate.topLeftCorner(4, 4),
                                                       Matrix4cd::Identity()));
    const auto c = static_cast<std::uint64_t>(corr);
    Rng r1(derive_seed(cfg.seed, {c, 1}));
    Rng r2(derive_seed(cfg.seed, {c, 2}));
    e.single = run_block_irb(single, single, 1, cfg.sq_noise, cfg.irb, r1, par);
    e.pair = run_block_irb(single, pair, 2, cfg.sq_noise, cfg.irb, r2, par);
    out.push_back(e);
  }
  return out;
}

}  // namespace czcal

#endif  // CZCAL_CALIBRATION_HPP_
