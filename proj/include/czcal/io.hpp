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

// Artifact formats: CSV tables, JSON reports, filter-coefficient files and
// run manifests.

#ifndef CZCAL_IO_HPP_
#define CZCAL_IO_HPP_

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "czcal/propagator.hpp"
#include "czcal/signal_chain.hpp"

namespace czcal {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// CSV.

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot write '" + path.string() + "'");
  }

  void header(const std::vector<std::string>& cols) { row(cols); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_escape(cells[i]);
    }
    out_ << "\r\n";
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    row(cells);
  }

 private:
  std::ofstream out_;
};

// Parses RFC-4180 style records; quoted fields may contain commas, quotes
// and line breaks.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(field);
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(field);
        rows.push_back(row);
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw std::invalid_argument("parse_csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(field);
    rows.push_back(row);
  }
  return rows;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

// Waveform CSV: columns (t, value) with an optional header row; t must be
// uniform.
inline Waveform read_waveform_csv(const std::filesystem::path& path) {
  const auto rows = parse_csv(read_text(path));
  std::vector<double> t, v;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 2) throw std::invalid_argument("waveform csv: row " + std::to_string(i + 1) + " has < 2 columns");
    try {
      std::size_t p0 = 0, p1 = 0;
      const double a = std::stod(r[0], &p0), b = std::stod(r[1], &p1);
      if (p0 != r[0].size() || p1 != r[1].size()) throw std::invalid_argument("trailing text");
      t.push_back(a);
      v.push_back(b);
    } catch (const std::exception&) {
      if (i == 0) continue;  // header
      throw std::invalid_argument("waveform csv: bad number in row " + std::to_string(i + 1));
    }
  }
  if (t.size() < 2) throw std::invalid_argument("waveform csv: need at least two samples");
  Waveform w;
  w.dt = t[1] - t[0];
  w.t0 = t[0];
  if (!(w.dt > 0.0)) throw std::invalid_argument("waveform csv: time must increase");
  for (std::size_t k = 1; k < t.size(); ++k)
    if (std::abs((t[k] - t[k - 1]) - w.dt) > 1e-6 * w.dt)
      throw std::invalid_argument("waveform csv: time grid is not uniform");
  w.samples = std::move(v);
  return w;
}

inline void write_waveform_csv(const std::filesystem::path& path, const Waveform& w) {
  CsvWriter csv(path);
  csv.header({"t", "value"});
  for (std::size_t k = 0; k < w.size(); ++k) csv.row(std::vector<double>{w.time(k), w.samples[k]});
}

// ---------------------------------------------------------------------------
// Filter-coefficient files.

inline Json chain_to_json(const DistortionChain& c) {
  Json j;
  j["format"] = "czcal-chain";
  j["version"] = 1;
  j["dt"] = c.dt;
  j["stages"] = Json::array();
  for (const auto& s : c.stages) j["stages"].push_back({{"amplitude", s.amplitude}, {"tau", s.tau}});
  if (c.fir) j["fir"] = c.fir->taps;
  return j;
}

inline DistortionChain chain_from_json(const Json& j) {
  if (j.value("format", "") != "czcal-chain" || j.value("version", 0) != 1)
    throw std::invalid_argument("chain file: unsupported format or version");
  DistortionChain c;
  c.dt = j.at("dt").get<double>();
  for (const auto& s : j.at("stages")) {
    IirStage st{s.at("amplitude").get<double>(), s.at("tau").get<double>()};
    validate_stage(st);
    c.stages.push_back(st);
  }
  if (j.contains("fir")) c.fir = FirFilter{j.at("fir").get<std::vector<double>>(), c.dt};
  return c;
}

// Identified chain plus the correction filter computed for it.
inline Json correction_to_json(const DistortionChain& identified, const Predistortion& p) {
  Json j = chain_to_json(identified);
  if (!p.fir_inverse.empty()) j["fir_inverse"] = p.fir_inverse;
  return j;
}

inline Predistortion correction_from_json(const Json& j) {
  const DistortionChain c = chain_from_json(j);
  Predistortion p = invert_chain(c);
  if (j.contains("fir_inverse")) p.fir_inverse = j.at("fir_inverse").get<std::vector<double>>();
  return p;
}

// ---------------------------------------------------------------------------
// Reports.

inline Json gate_to_json(const GateResult& g) {
  Json j;
  j["fidelity_cz"] = g.fidelity_cz;
  j["infidelity"] = g.infidelity();
  j["phi_zz"] = g.phi_zz;
  j["phi1_acc"] = g.phi1_acc;
  j["phi2_acc"] = g.phi2_acc;
  j["leakage"] = g.leakage;
  j["mean_leakage"] = g.mean_leakage();
  j["duration"] = g.duration;
  Json u = Json::array();
  for (int a = 0; a < 4; ++a) {
    Json row = Json::array();
    for (int b = 0; b < 4; ++b) row.push_back({g.u4(a, b).real(), g.u4(a, b).imag()});
    u.push_back(row);
  }
  j["u4"] = u;
  return j;
}

inline Json pulse_to_json(const PulseParams& p) {
  Json j;
  j["family"] = std::string(family_name(family_of(p)));
  const auto names = parameter_names(p);
  const auto values = parameter_vector(p);
  Json params;
  for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = values[i];
  j["parameters"] = params;
  return j;
}

// FNV-1a, for manifest hashes.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace czcal

#endif  // CZCAL_IO_HPP_
