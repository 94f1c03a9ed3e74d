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

// Run configuration: a YAML document with one section per module. Unknown
// keys are rejected. Requires yaml-cpp (link czcal::config).

#ifndef CZCAL_CONFIG_HPP_
#define CZCAL_CONFIG_HPP_

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "czcal/calibration.hpp"
#include "czcal/cryoscope.hpp"
#include "czcal/scaling_study.hpp"

namespace czcal {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Map node reader that records which keys were read.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ConfigError(where() + "expected a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    seen_.insert(key);
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception& e) {
      throw ConfigError(where() + key + ": " + e.msg);
    }
  }

  // Reads key, multiplies by scale.
  void get_scaled(const std::string& key, double& out, double scale) {
    if (!has(key)) return;
    double v = out / scale;
    get(key, v);
    out = v * scale;
  }

  Section child(const std::string& key) {
    if (has(key)) seen_.insert(key);
    return Section(has(key) ? node_[key] : YAML::Node(), path_.empty() ? key : path_ + "." + key);
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (!seen_.count(k)) throw ConfigError(where() + "unknown key '" + k + "'");
    }
  }

  std::string where() const { return "config" + (path_.empty() ? "" : " [" + path_ + "]") + ": "; }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

struct DeviceSection {
  DeviceParams params;
  std::optional<double> idle_flux;  // default: zero-ZZ point
  int substeps = 20;
};

struct SearchOverride {
  std::optional<double> lower, upper, spread;
};

struct PulseSection {
  PulseParams initial = FourierParams{};
  std::map<std::string, SearchOverride> search;  // overrides of default_search_space
};

struct IrbSection {
  IrbConfig irb;
  std::vector<double> cz_errors = {0.05, 0.01, 0.002};  // injected channels for `rb`
  double sq_fidelity = 1.0;
};

struct StressSection {
  double cz_depolarizing = 0.005;
  double partial_tau = kPartialCorrectionTau;
  std::vector<Correction> variants = {Correction::kNone, Correction::kPartial, Correction::kFull};
  int refine_evolutions = 40;
  double refine_target = 1e-3;
};

struct ScalingSection {
  std::vector<TestFunctionKind> functions = {TestFunctionKind::kSphere,
                                             TestFunctionKind::kRosenbrock};
  std::vector<int> dims = {1, 2, 4, 8, 16, 32};
  int seeds = 10;
  double noise = 1e-2;
  ConvergenceConfig convergence;
};

struct SpectrumSection {
  double flux_lo = 0.0;
  double flux_hi = 0.5;
  int points = 501;
};

struct LeakageMapSection {
  double amplitude_lo = 0.06;
  double amplitude_hi = 0.16;
  int amplitudes = 21;
  double width_lo = 10e-9;
  double width_hi = 70e-9;
  int widths = 31;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output = "out";
  unsigned threads = 1;
  DeviceSection device;
  DistortionChain chain;  // empty: ideal line
  PulseSection pulse;
  OptimizationConfig optimizer;
  IrbSection rb;
  StressSection stress;
  CryoscopeConfig cryoscope;
  ScalingSection scaling;
  SpectrumSection spectrum;
  LeakageMapSection leakage_map;
  std::string source;  // canonical text of the parsed document
};

namespace detail {

inline void read_device(Section s, DeviceSection& d) {
  auto& p = d.params;
  const double g = ghz(1.0), m = mhz(1.0);
  s.get_scaled("omega1_ghz", p.omega1, g);
  s.get_scaled("omega2_ghz", p.omega2, g);
  s.get_scaled("alpha1_mhz", p.alpha1, m);
  s.get_scaled("alpha2_mhz", p.alpha2, m);
  s.get_scaled("alphac_mhz", p.alphaC, m);
  s.get_scaled("g1c_mhz", p.g1c, m);
  s.get_scaled("g2c_mhz", p.g2c, m);
  s.get_scaled("g12_mhz", p.g12, m);
  s.get_scaled("omegac_max_ghz", p.omegaC_max, g);
  s.get_scaled("omegac_min_ghz", p.omegaC_min, g);
  if (s.has("squid_asymmetry")) {
    s.get("squid_asymmetry", p.squid_asymmetry);
  } else {
    p.squid_asymmetry = DeviceParams::matched_asymmetry(p.omegaC_max, p.omegaC_min, p.alphaC);
  }
  s.get("qubit_levels", p.n_qubit_levels);
  s.get("coupler_levels", p.n_coupler_levels);
  s.get("max_dimension", p.max_dimension);
  if (s.has("idle_flux")) {
    double v = 0.0;
    s.get("idle_flux", v);
    d.idle_flux = v;
  }
  s.get("substeps", d.substeps);
  s.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.where() + e.what());
  }
}

inline void read_chain(Section s, DistortionChain& c) {
  std::string preset = "none";
  s.get("preset", preset);
  if (preset == "reference") c = reference_chain();
  else if (preset != "none") throw ConfigError(s.where() + "unknown chain preset '" + preset + "'");
  if (s.has("stages")) {
    c.stages.clear();
    const YAML::Node list = s.raw("stages");
    if (!list.IsSequence()) throw ConfigError(s.where() + "stages must be a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section st(list[i], "chain.stages[" + std::to_string(i) + "]");
      IirStage stage;
      st.get("amplitude", stage.amplitude);
      st.get_scaled("tau_ns", stage.tau, 1e-9);
      st.finish();
      try {
        validate_stage(stage);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(st.where() + e.what());
      }
      c.stages.push_back(stage);
    }
  }
  if (s.has("fir")) {
    std::vector<double> taps;
    s.get("fir", taps);
    if (taps.empty()) throw ConfigError(s.where() + "fir must have at least one tap");
    c.fir = FirFilter{taps, c.dt};
  }
  s.finish();
}

inline void read_pulse(Section s, PulseSection& p) {
  std::string family = "fourier";
  s.get("family", family);
  try {
    p.initial = default_params(parse_family(family));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.where() + e.what());
  }
  std::visit(
      [&](auto& q) {
        using T = std::decay_t<decltype(q)>;
        s.get("amplitude", q.amplitude);
        s.get_scaled("width_ns", q.width, 1e-9);
        s.get("phi1", q.phi1);
        s.get("phi2", q.phi2);
        s.get_scaled("buffer_ns", q.buffer, 1e-9);
        if constexpr (std::is_same_v<T, GaussianSquareParams>) s.get_scaled("rise_time_ns", q.rise_time, 1e-9);
        if constexpr (std::is_same_v<T, FourierParams>) s.get("lambdas", q.lambdas);
        if constexpr (std::is_same_v<T, PiCoSParams>) s.get("nodes", q.nodes);
      },
      p.initial);
  if (s.has("search")) {
    Section search = s.child("search");
    const auto names = parameter_names(p.initial);
    for (const auto& name : names) {
      if (!search.has(name)) continue;
      Section r = search.child(name);
      SearchOverride o;
      for (auto [key, field] : {std::pair{"lower", &o.lower}, {"upper", &o.upper}, {"spread", &o.spread}}) {
        if (!r.has(key)) continue;
        double v = 0.0;
        r.get(key, v);
        *field = v;
      }
      r.finish();
      p.search[name] = o;
    }
    search.finish();
  }
  s.finish();
}

inline void read_orbit(Section s, OrbitConfig& o) {
  s.get("sequences", o.sequences);
  s.get("shots", o.shots);
  s.get("threshold", o.threshold);
  s.get("initial_n", o.initial_n);
  if (s.has("sq_fidelity")) {
    double f = 1.0;
    s.get("sq_fidelity", f);
    o.sq_noise.depolarizing = SqNoise::with_fidelity(f).depolarizing;
  }
  s.get("readout_error", o.sq_noise.readout_error);
  s.finish();
  try {
    o.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.where() + e.what());
  }
}

inline void read_optimizer(Section s, OptimizationConfig& o) {
  s.get("max_evolutions", o.max_evolutions);
  s.get("population", o.cmaes.population);
  s.get("max_resamples", o.cmaes.max_resamples);
  s.get("stall_window", o.stall_window);
  s.get("stall_tolerance", o.stall_tolerance);
  s.finish();
  if (o.max_evolutions < 1) throw ConfigError(s.where() + "max_evolutions must be >= 1");
}

inline void read_rb(Section s, IrbSection& r) {
  s.get("lengths", r.irb.lengths);
  s.get("sequences", r.irb.sequences);
  s.get("shots", r.irb.shots);
  if (s.has("fixed_b")) {
    double b = 0.5;
    s.get("fixed_b", b);
    r.irb.fixed_b = b;
  }
  if (s.has("free_b")) {
    bool free_b = false;
    s.get("free_b", free_b);
    if (free_b) r.irb.fixed_b.reset();
  }
  s.get("cz_errors", r.cz_errors);
  s.get("sq_fidelity", r.sq_fidelity);
  s.finish();
  if (r.irb.lengths.size() < 3) throw ConfigError(s.where() + "need >= 3 lengths");
}

inline void read_stress(Section s, StressSection& st) {
  s.get("cz_depolarizing", st.cz_depolarizing);
  s.get_scaled("partial_tau_ns", st.partial_tau, 1e-9);
  if (s.has("variants")) {
    std::vector<std::string> names;
    s.get("variants", names);
    st.variants.clear();
    try {
      for (const auto& n : names) st.variants.push_back(parse_correction(n));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(s.where() + e.what());
    }
  }
  s.get("refine_evolutions", st.refine_evolutions);
  s.get("refine_target", st.refine_target);
  s.finish();
}

inline void read_cryoscope(Section s, CryoscopeConfig& c) {
  s.get("amplitude", c.amplitude);
  s.get_scaled("t_max_ns", c.t_max, 1e-9);
  s.get_scaled("grid_ns", c.grid, 1e-9);
  s.get_scaled("margin_ns", c.margin, 1e-9);
  s.get("thetas", c.thetas);
  s.get_scaled("sg_window_ns", c.sg_window, 1e-9);
  s.get("sg_order", c.sg_order);
  s.get("calibration_points", c.calibration_points);
  s.get("n_long", c.n_long);
  s.get("n_short", c.n_short);
  s.get_scaled("long_cut_ns", c.long_cut, 1e-9);
  s.get("fir_taps", c.fir_taps);
  s.finish();
}

inline void read_scaling(Section s, ScalingSection& sc) {
  if (s.has("functions")) {
    std::vector<std::string> names;
    s.get("functions", names);
    sc.functions.clear();
    try {
      for (const auto& n : names) sc.functions.push_back(parse_test_function(n));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(s.where() + e.what());
    }
  }
  s.get("dims", sc.dims);
  s.get("seeds", sc.seeds);
  s.get("noise", sc.noise);
  s.get("budget", sc.convergence.budget);
  s.get("initial_spread", sc.convergence.initial_spread);
  s.get("population", sc.convergence.population);
  s.finish();
}

inline void read_spectrum(Section s, SpectrumSection& sp) {
  s.get("flux_lo", sp.flux_lo);
  s.get("flux_hi", sp.flux_hi);
  s.get("points", sp.points);
  s.finish();
  if (sp.points < 2 || !(sp.flux_hi > sp.flux_lo)) throw ConfigError(s.where() + "bad flux grid");
}

inline void read_leakage_map(Section s, LeakageMapSection& l) {
  s.get("amplitude_lo", l.amplitude_lo);
  s.get("amplitude_hi", l.amplitude_hi);
  s.get("amplitudes", l.amplitudes);
  s.get_scaled("width_lo_ns", l.width_lo, 1e-9);
  s.get_scaled("width_hi_ns", l.width_hi, 1e-9);
  s.get("widths", l.widths);
  s.finish();
  if (l.amplitudes < 1 || l.widths < 1) throw ConfigError(s.where() + "grid sizes must be >= 1");
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("config: " + e.msg);
  }
  RunConfig c;
  detail::Section s(root, "");
  s.get("seed", c.seed);
  s.get("output", c.output);
  s.get("threads", c.threads);
  detail::read_device(s.child("device"), c.device);
  detail::read_chain(s.child("chain"), c.chain);
  detail::read_pulse(s.child("pulse"), c.pulse);
  detail::read_orbit(s.child("orbit"), c.optimizer.orbit);
  detail::read_optimizer(s.child("optimizer"), c.optimizer);
  detail::read_rb(s.child("rb"), c.rb);
  detail::read_stress(s.child("stress"), c.stress);
  detail::read_cryoscope(s.child("cryoscope"), c.cryoscope);
  detail::read_scaling(s.child("scaling"), c.scaling);
  detail::read_spectrum(s.child("spectrum"), c.spectrum);
  detail::read_leakage_map(s.child("leakage_map"), c.leakage_map);
  s.finish();
  c.optimizer.orbit.seed = c.seed;
  YAML::Emitter out;
  out << root;
  c.source = out.c_str();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// Default search space with the configured overrides applied.
inline SearchSpace search_space(const PulseSection& p) {
  SearchSpace s = default_search_space(p.initial);
  for (auto& r : s.params) {
    const auto it = p.search.find(r.name);
    if (it == p.search.end()) continue;
    const SearchOverride& o = it->second;
    if (o.lower) r.lower = *o.lower;
    if (o.upper) r.upper = *o.upper;
    if (o.spread) {
      if (!(*o.spread > 0.0)) throw ConfigError("config [pulse.search." + r.name + "]: spread must be > 0");
      r.spread = *o.spread;
    }
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config [pulse.search]: ") + e.what());
  }
  return s;
}

}  // namespace czcal

#endif  // CZCAL_CONFIG_HPP_
