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

// czcal command-line tool.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "czcal/calibration.hpp"
#include "czcal/config.hpp"
#include "czcal/cryoscope.hpp"
#include "czcal/io.hpp"
#include "czcal/scaling_study.hpp"

namespace fs = std::filesystem;
using namespace czcal;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string pulse;
  std::string resume;
  std::string chain_file;
  std::string input;
  std::string output;
  double granularity_ns = 0.0;
  std::string rb_mode = "inject";
  std::string argv_text;
};

// Artifact bookkeeping and the manifest written at the end of every run.
class Run {
 public:
  Run(std::string command, const Options& o) : command_(std::move(command)), opts_(o) {
    cfg_ = o.config.empty() ? parse_config("{}") : load_config(o.config);
    if (o.seed) cfg_.seed = *o.seed;
    cfg_.optimizer.orbit.seed = cfg_.seed;
    if (o.threads) cfg_.threads = o.threads;
    if (!o.pulse.empty()) {
      const PulseFamily f = parse_family(o.pulse);
      if (family_of(cfg_.pulse.initial) != f) {
        cfg_.pulse.initial = default_params(f);
        cfg_.pulse.search.clear();
      }
    }
    dir_ = o.out.empty() ? fs::path(cfg_.output) : fs::path(o.out);
    fs::create_directories(dir_);
    par_ = Parallelism(std::max(1u, cfg_.threads));
  }

  RunConfig& config() { return cfg_; }
  const Parallelism& par() const { return par_; }
  fs::path path(const std::string& name) {
    artifacts_.push_back(name);
    return dir_ / name;
  }

  Propagator propagator() const {
    const auto& d = cfg_.device;
    double idle = 0.0;
    if (d.idle_flux) {
      idle = *d.idle_flux;
    } else {
      AdiabaticTracker tr(d.params);
      idle = default_idle_flux(tr);
    }
    return Propagator(d.params, idle, {d.substeps, Integrator::kMagnus4});
  }

  void finish() {
    Json m;
    m["tool"] = "czcal";
    m["version"] = kVersion;
    m["command"] = command_;
    m["arguments"] = opts_.argv_text;
    m["seed"] = cfg_.seed;
    m["threads"] = cfg_.threads;
    m["config_hash"] = hex64(fnv1a(cfg_.source));
    m["config"] = cfg_.source;
    Json arts = Json::array();
    for (const auto& a : artifacts_)
      arts.push_back({{"file", a}, {"fnv1a", hex64(fnv1a(read_text(dir_ / a)))}});
    m["artifacts"] = arts;
    write_json(dir_ / "manifest.json", m);
  }

 private:
  std::string command_;
  Options opts_;
  RunConfig cfg_;
  fs::path dir_;
  Parallelism par_;
  std::vector<std::string> artifacts_;
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

void cmd_spectrum(Run& run) {
  const auto& cfg = run.config();
  const DeviceParams& p = cfg.device.params;
  AdiabaticTracker tracker(p);
  const auto fluxes = linspace(cfg.spectrum.flux_lo, cfg.spectrum.flux_hi, cfg.spectrum.points);
  std::vector<LabeledSpectrum> specs(fluxes.size());
  run.par().for_each(fluxes.size(), [&](std::size_t i) { specs[i] = tracker.spectrum(fluxes[i]); });
  CsvWriter csv(run.path("spectrum.csv"));
  std::vector<std::string> head = {"flux", "coupler_ghz"};
  for (int b = 0; b < p.dimension(); ++b) head.push_back("E_" + bare_label(p, b).str() + "_ghz");
  head.push_back("xi_mhz");
  csv.header(head);
  for (std::size_t i = 0; i < fluxes.size(); ++i) {
    const auto& s = specs[i];
    std::vector<double> row = {fluxes[i], coupler_frequency(p, fluxes[i]) / ghz(1.0)};
    for (int b = 0; b < p.dimension(); ++b) row.push_back(s.energy(b) / ghz(1.0));
    row.push_back(tracker.conditional_shift(fluxes[i]) / mhz(1.0));
    csv.row(row);
  }
}

void cmd_leakage_map(Run& run) {
  const auto& cfg = run.config();
  const Propagator prop = run.propagator();
  const auto widths = linspace(cfg.leakage_map.width_lo, cfg.leakage_map.width_hi, cfg.leakage_map.widths);
  const auto amps = linspace(cfg.leakage_map.amplitude_lo, cfg.leakage_map.amplitude_hi,
                             cfg.leakage_map.amplitudes);
  const auto map = leakage_map(prop, cfg.pulse.initial, widths, amps, run.par());
  CsvWriter csv(run.path("leakage_map.csv"));
  csv.header({"width", "amplitude", "p10", "p11", "phi_zz"});
  for (const auto& pt : map) csv.row(std::vector<double>{pt.width, pt.amplitude, pt.p10, pt.p11, pt.phi_zz});
}

Delivery configured_delivery(const RunConfig& cfg, Correction c = Correction::kNone) {
  return make_delivery(cfg.chain, c, cfg.stress.partial_tau);
}

void cmd_gate_report(Run& run) {
  const auto& cfg = run.config();
  const Propagator prop = run.propagator();
  Json j;
  j["pulse"] = pulse_to_json(cfg.pulse.initial);
  j["idle_flux"] = prop.idle_flux();
  j["gate"] = gate_to_json(delivered_gate(prop, cfg.pulse.initial, configured_delivery(cfg)));
  j["gate_optimal_virtual_z"] =
      gate_to_json(with_optimal_virtual_z(delivered_gate(prop, cfg.pulse.initial, configured_delivery(cfg))));
  write_json(run.path("gate_report.json"), j);
}

void cmd_optimize(Run& run, const Options& o) {
  auto& cfg = run.config();
  const Propagator prop = run.propagator();
  const SearchSpace space = search_space(cfg.pulse);
  OptimizationConfig ocfg = cfg.optimizer;
  if (!o.resume.empty()) {
    const Json cp = Json::parse(read_text(o.resume));
    ocfg.warm_start = nlohmann::json::parse(cp.dump());
  }
  const Delivery d = configured_delivery(cfg);
  const auto names = parameter_names(cfg.pulse.initial);
  CsvWriter csv(run.path("evolutions.csv"));
  std::vector<std::string> head = {"k", "N", "mean_E", "min_E", "mean_E_norm", "mean_sq", "mean_cz"};
  for (const auto& n : names) head.push_back("best_" + n);
  csv.header(head);
  const auto r = optimize_pulse(prop, cfg.pulse.initial, space, d, ocfg, run.par(),
                                [&](const EvolutionRecord& e) {
                                  const auto j = static_cast<std::size_t>(
                                      std::min_element(e.costs.begin(), e.costs.end()) - e.costs.begin());
                                  std::vector<double> row = {double(e.k), double(e.n), e.mean, e.costs[j],
                                                             e.mean / e.n, e.counts.mean_sq,
                                                             e.counts.mean_cz};
                                  row.insert(row.end(), e.candidates[j].begin(), e.candidates[j].end());
                                  csv.row(row);
                                });
  const PulseParams best = from_parameter_vector(cfg.pulse.initial, r.best);
  Json rep;
  rep["pulse"] = pulse_to_json(best);
  rep["best_cost"] = r.best_cost;
  rep["best_evolution"] = r.best_evolution;
  rep["evolutions"] = r.history.size();
  rep["final_n"] = r.final_n;
  rep["gate"] = gate_to_json(delivered_gate(prop, best, d));
  write_json(run.path("report.json"), rep);
  write_json(run.path("checkpoint.json"), Json::parse(r.checkpoint.dump()));
}

void cmd_cryoscope(Run& run) {
  const auto& cfg = run.config();
  const DeviceParams& p = cfg.device.params;
  AdiabaticTracker tracker(p);
  const double idle = cfg.device.idle_flux ? *cfg.device.idle_flux : default_idle_flux(tracker);
  const auto& cc = cfg.cryoscope;
  const double lo = std::min(cc.calibration_lo, 0.0) * cc.amplitude * 1.5;
  const double hi = std::max(cc.calibration_hi, 1.0) * cc.amplitude * 1.2;
  const Q1ShiftModel shift(tracker, idle, std::min(lo, -0.01), hi);
  const DistortionChain truth = cfg.chain.empty() ? reference_chain() : cfg.chain;
  const auto r = run_cryoscope(shift, truth, cc, run.par());
  {
    CsvWriter csv(run.path("cryoscope_trace.csv"));
    csv.header({"t_p", "phase"});
    for (std::size_t i = 0; i < r.trace.t_p.size(); ++i)
      csv.row(std::vector<double>{r.trace.t_p[i], r.trace.phases[i]});
  }
  {
    CsvWriter csv(run.path("cryoscope_response.csv"));
    csv.header({"t", "shift", "amplitude", "response"});
    for (std::size_t i = 0; i < r.response.t.size(); ++i)
      csv.row(std::vector<double>{r.response.t[i], r.response.shift[i], r.response.amplitude[i],
                                  r.response.value[i]});
  }
  write_json(run.path("chain.json"), correction_to_json(r.identified, r.predistortion));
  Json rep;
  rep["gain"] = r.fit.gain;
  rep["rms"] = r.fit.rms;
  rep["warnings"] = r.fit.warnings;
  rep["identified"] = chain_to_json(r.identified);
  rep["truth"] = chain_to_json(truth);
  rep["corrected_step_error_after_60ns"] = corrected_step_error(truth, r.predistortion, 6000, 60e-9);
  write_json(run.path("cryoscope_report.json"), rep);
}

void cmd_predistort(Run& run, const Options& o) {
  if (o.input.empty()) throw std::invalid_argument("predistort: --input is required");
  Waveform w = read_waveform_csv(o.input);
  DistortionChain chain;
  std::vector<double> fir_inverse;
  if (!o.chain_file.empty()) {
    const Json j = Json::parse(read_text(o.chain_file));
    chain = chain_from_json(j);
    if (j.contains("fir_inverse")) fir_inverse = j.at("fir_inverse").get<std::vector<double>>();
  } else {
    chain = run.config().chain;
    if (chain.empty()) throw std::invalid_argument("predistort: no chain (use --chain or the config)");
  }
  // IIR stages are continuous-time and can be re-discretized; FIR taps cannot.
  if (std::abs(w.dt - chain.dt) > 1e-6 * chain.dt) {
    if (chain.fir || !fir_inverse.empty())
      throw std::invalid_argument("predistort: waveform sample period does not match the FIR filter");
    chain.dt = w.dt;
  }
  w.dt = chain.dt;
  Predistortion p = invert_chain(chain);
  if (!fir_inverse.empty()) p.fir_inverse = fir_inverse;
  if (o.granularity_ns > 0.0) p = emulate_granularity(p, o.granularity_ns * 1e-9);
  write_waveform_csv(run.path(o.output.empty() ? "predistorted.csv" : o.output), apply_predistortion(w, p));
}

void cmd_rb(Run& run, const Options& o) {
  const auto& cfg = run.config();
  const SqNoise noise = SqNoise::with_fidelity(cfg.rb.sq_fidelity);
  CsvWriter csv(run.path("rb.csv"));
  csv.header({"label", "injected", "error", "error_sigma", "ref_p", "int_p"});
  Json rep = Json::array();
  auto emit = [&](const std::string& label, double injected, const IrbResult& r) {
    csv.row({label, format_number(injected), format_number(r.error), format_number(r.error_sigma),
             format_number(r.reference.p), format_number(r.interleaved.p)});
    rep.push_back({{"label", label}, {"injected", injected}, {"error", r.error},
                   {"error_sigma", r.error_sigma}, {"reference_means", r.reference_means},
                   {"interleaved_means", r.interleaved_means}});
  };
  if (o.rb_mode == "inject") {
    for (std::size_t i = 0; i < cfg.rb.cz_errors.size(); ++i) {
      Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(i)}));
      emit("depolarizing", cfg.rb.cz_errors[i],
           run_irb(CzModel::with_error(cfg.rb.cz_errors[i]), noise, cfg.rb.irb, rng, run.par()));
    }
  } else if (o.rb_mode == "pulse") {
    const Propagator prop = run.propagator();
    const PulseParams& pulse = cfg.pulse.initial;
    const Delivery d = configured_delivery(cfg);
    Rng rng(derive_seed(cfg.seed, {0}));
    const double direct = delivered_gate(prop, pulse, d).infidelity();
    emit("pulse", direct, run_irb(cz_model(prop, pulse, d), noise, cfg.rb.irb, rng, run.par()));
  } else {
    throw std::invalid_argument("rb: --mode must be 'inject' or 'pulse'");
  }
  write_json(run.path("rb_report.json"), rep);
}

void cmd_stress(Run& run) {
  const auto& cfg = run.config();
  const Propagator prop = run.propagator();
  const DistortionChain chain = cfg.chain.empty() ? reference_chain() : cfg.chain;
  std::map<Correction, PulseParams> pulses;
  Json tuned = Json::object();
  for (Correction c : cfg.stress.variants) {
    const Delivery d = make_delivery(chain, c, cfg.stress.partial_tau);
    RefineConfig rc;
    rc.max_evolutions = cfg.stress.refine_evolutions;
    rc.target = cfg.stress.refine_target;
    rc.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(c)});
    const auto r = refine_pulse(prop, cfg.pulse.initial, d, rc, run.par());
    pulses[c] = r.pulse;
    tuned[std::string(correction_name(c))] = {{"pulse", pulse_to_json(r.pulse)},
                                              {"infidelity", r.infidelity},
                                              {"evolutions", r.evolutions}};
  }
  StressConfig sc;
  sc.irb = cfg.rb.irb;
  sc.cz_depolarizing = cfg.stress.cz_depolarizing;
  sc.partial_tau = cfg.stress.partial_tau;
  sc.seed = cfg.seed;
  const auto entries = consecutive_cz_stress(prop, chain, pulses, sc, run.par());
  CsvWriter csv(run.path("stress.csv"));
  csv.header({"correction", "error_1", "sigma_1", "error_2", "sigma_2", "ratio", "ratio_sigma"});
  Json rep;
  rep["tuned_pulses"] = tuned;
  rep["entries"] = Json::array();
  for (const auto& e : entries) {
    csv.row({std::string(correction_name(e.correction)), format_number(e.single.error),
             format_number(e.single.error_sigma), format_number(e.pair.error),
             format_number(e.pair.error_sigma), format_number(e.ratio()), format_number(e.ratio_sigma())});
    rep["entries"].push_back({{"correction", correction_name(e.correction)},
                              {"error_1", e.single.error},
                              {"error_2", e.pair.error},
                              {"ratio", e.ratio()},
                              {"direct_single", e.direct_single},
                              {"direct_pair_per_gate", e.direct_pair}});
  }
  write_json(run.path("stress_report.json"), rep);
}

void cmd_scaling(Run& run) {
  const auto& cfg = run.config();
  const auto& sc = cfg.scaling;
  CsvWriter csv(run.path("scaling.csv"));
  csv.header({"function", "D", "seed", "k_max", "censored"});
  Json rep = Json::array();
  for (auto kind : sc.functions) {
    const auto sweep = run_scaling_sweep(kind, sc.dims, sc.seeds, sc.noise, sc.convergence, cfg.seed, run.par());
    for (const auto& c : sweep.cells)
      csv.row({std::string(test_function_name(kind)), std::to_string(c.dimension), std::to_string(c.seed),
               std::to_string(c.result.k_max), c.result.censored ? "1" : "0"});
    Json f = {{"function", test_function_name(kind)}, {"dims", sweep.dims}, {"median_k", sweep.median_k},
              {"censored", sweep.censored}};
    if (sweep.fit) f["fit"] = {{"c", sweep.fit->c}, {"nu", sweep.fit->nu}, {"k1", sweep.fit->k1}, {"rms", sweep.fit->rms}};
    rep.push_back(f);
  }
  write_json(run.path("scaling_fit.json"), rep);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"czcal: CZ gate calibration workbench"};
  app.require_subcommand(1);
  Options o;
  for (int i = 1; i < argc; ++i) o.argv_text += (i > 1 ? " " : "") + std::string(argv[i]);
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", o.config, "YAML run configuration");
    sub->add_option("--out,-o", o.out, "output directory");
    sub->add_option("--seed", o.seed, "root seed");
    sub->add_option("--threads,-j", o.threads, "worker threads");
    sub->add_option("--pulse", o.pulse, "pulse family: gaussian-square, fourier, picos");
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"spectrum", "labeled spectrum and ZZ shift versus coupler flux"},
           {"leakage-map", "retained populations and conditional phase over (width, amplitude)"},
           {"gate-report", "propagated gate metrics for the configured pulse"},
           {"optimize", "closed-loop CMA-ES calibration with the ORBIT cost"},
           {"cryoscope", "simulated cryoscope and distortion identification"},
           {"predistort", "apply a correction filter to a waveform CSV"},
           {"rb", "interleaved randomized benchmarking"},
           {"stress", "consecutive-CZ stress test under the distortion chain"},
           {"scaling", "optimizer convergence scaling on test functions"}}) {
    subs[name] = app.add_subcommand(name, help);
    common(subs[name]);
  }
  subs["optimize"]->add_option("--resume", o.resume, "checkpoint.json from a previous run");
  subs["predistort"]->add_option("--chain", o.chain_file, "chain.json from the cryoscope command");
  subs["predistort"]->add_option("--input,-i", o.input, "waveform CSV (t, value)");
  subs["predistort"]->add_option("--output", o.output, "output file name inside --out");
  subs["predistort"]->add_option("--granularity-ns", o.granularity_ns, "IIR update period");
  subs["rb"]->add_option("--mode", o.rb_mode, "inject (depolarizing channels) or pulse");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      Run run(name, o);
      if (name == "spectrum") cmd_spectrum(run);
      else if (name == "leakage-map") cmd_leakage_map(run);
      else if (name == "gate-report") cmd_gate_report(run);
      else if (name == "optimize") cmd_optimize(run, o);
      else if (name == "cryoscope") cmd_cryoscope(run);
      else if (name == "predistort") cmd_predistort(run, o);
      else if (name == "rb") cmd_rb(run, o);
      else if (name == "stress") cmd_stress(run);
      else if (name == "scaling") cmd_scaling(run);
      run.finish();
    }
  } catch (const std::exception& e) {
    std::cerr << "czcal: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
