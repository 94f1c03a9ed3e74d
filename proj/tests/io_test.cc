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

#include "czcal/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>

namespace czcal {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("czcal_io_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Csv, EscapeAndParseRoundTrip) {
  const std::vector<std::vector<std::string>> rows = {
      {"plain", "with,comma", "with \"quote\""}, {"multi\nline", "", "x"}};
  const fs::path dir = temp_dir("csv");
  {
    CsvWriter w(dir / "t.csv");
    for (const auto& r : rows) w.row(r);
  }
  EXPECT_EQ(parse_csv(read_text(dir / "t.csv")), rows);
}

TEST(Csv, ParseHandlesLineEndings) {
  const auto rows = parse_csv("a,b\r\n1,2\n3,4");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2][1], "4");
  EXPECT_THROW(parse_csv("\"open"), std::invalid_argument);
}

TEST(Csv, NumbersRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-9, 6.02214076e23}) EXPECT_EQ(std::stod(format_number(v)), v);
}

TEST(Waveform, CsvRoundTrip) {
  const fs::path dir = temp_dir("wave");
  Waveform w;
  w.dt = 0.5e-9;
  w.samples = {0.0, 0.25, 1.0, 0.5, 0.0};
  write_waveform_csv(dir / "w.csv", w);
  const Waveform r = read_waveform_csv(dir / "w.csv");
  EXPECT_NEAR(r.dt, w.dt, 1e-20);
  EXPECT_EQ(r.samples, w.samples);
}

TEST(Waveform, CsvRejectsBadInput) {
  const fs::path dir = temp_dir("wave_bad");
  write_text(dir / "a.csv", "t,v\n0,1\n1e-9,2\n3e-9,3\n");
  EXPECT_THROW(read_waveform_csv(dir / "a.csv"), std::invalid_argument);
  write_text(dir / "b.csv", "0,1\n1e-9,x\n");
  EXPECT_THROW(read_waveform_csv(dir / "b.csv"), std::invalid_argument);
  write_text(dir / "c.csv", "0,1\n");
  EXPECT_THROW(read_waveform_csv(dir / "c.csv"), std::invalid_argument);
}

TEST(ChainFile, RoundTrip) {
  DistortionChain c = reference_chain();
  c.fir = FirFilter{{0.9, 0.08, 0.02}, c.dt};
  const DistortionChain r = chain_from_json(Json::parse(chain_to_json(c).dump()));
  ASSERT_EQ(r.stages.size(), c.stages.size());
  for (std::size_t i = 0; i < c.stages.size(); ++i) {
    EXPECT_EQ(r.stages[i].amplitude, c.stages[i].amplitude);
    EXPECT_EQ(r.stages[i].tau, c.stages[i].tau);
  }
  ASSERT_TRUE(r.fir.has_value());
  EXPECT_EQ(r.fir->taps, c.fir->taps);
  EXPECT_EQ(r.dt, c.dt);
}

TEST(ChainFile, RejectsWrongFormat) {
  EXPECT_THROW(chain_from_json(Json{{"format", "other"}, {"version", 1}}), std::invalid_argument);
  Json j = chain_to_json(reference_chain());
  j["stages"][0]["amplitude"] = -2.0;
  EXPECT_THROW(chain_from_json(j), std::invalid_argument);
}

TEST(ChainFile, CorrectionReproducesInverse) {
  const DistortionChain c = reference_chain();
  Predistortion p = invert_chain(c);
  p.fir_inverse = {1.0, -0.01};
  const Predistortion r = correction_from_json(Json::parse(correction_to_json(c, p).dump()));
  EXPECT_EQ(r.fir_inverse, p.fir_inverse);
  Waveform step;
  step.dt = c.dt;
  step.samples.assign(200, 1.0);
  const Waveform a = apply_predistortion(step, p), b = apply_predistortion(step, r);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a.samples[k], b.samples[k]);
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hex64(fnv1a("a")), "af63dc4c8601ec8c");
}

TEST(Report, PulseJsonListsParameters) {
  const Json j = pulse_to_json(FourierParams{});
  EXPECT_EQ(j["family"], "fourier");
  EXPECT_EQ(j["parameters"].size(), 9u);
}

}  // namespace
}  // namespace czcal
