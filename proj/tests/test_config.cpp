#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "digirap/config.hpp"
#include "digirap/experiments.hpp"

using namespace digirap;
using namespace digirap::cli;

namespace {

bool has_default(const ExperimentConfig& c, const std::string& path) {
  return std::find(c.defaults_applied.begin(), c.defaults_applied.end(), path) != c.defaults_applied.end();
}

const Diagnostic* find(const ValidationResult& r, DiagnosticCode code) {
  for (const auto& d : r.diagnostics) {
    if (d.code == code) return &d;
  }
  return nullptr;
}

}  // namespace

TEST(Config, MinimalCompareGetsDefaults) {
  const auto r = validate_config(R"({"experiment": "compare", "pulse": {"area": "5pi", "chirp": 291.6}})");
  ASSERT_TRUE(r.ok());
  const auto& c = *r.config;
  EXPECT_EQ(c.experiment, Experiment::Compare);
  EXPECT_NEAR(*c.pulse.area, 5 * pi, 1e-15);
  EXPECT_EQ(c.train.n, 100u);
  EXPECT_EQ(c.train.r1, 100.0);
  EXPECT_EQ(c.train.envelope.kind(), EnvelopeKind::Blackman);
  EXPECT_EQ(c.integrator.samples_per_subpulse, 20u);
  EXPECT_FALSE(c.train.r2.has_value());
  for (const char* p : {"/train/N", "/train/r1", "/train/envelope", "/pulse/envelope",
                        "/integrator/samples_per_subpulse", "/integrator/steps_per_subpulse",
                        "/system/detunings", "/output/directory"}) {
    EXPECT_TRUE(has_default(c, p)) << p;
  }
  EXPECT_FALSE(has_default(c, "/pulse/chirp"));
}

TEST(Config, OverlappingSubpulses) {
  const std::string text = "{\n  \"experiment\": \"compare\",\n  \"pulse\": {\"area\": \"pi\"},\n"
                           "  \"train\": {\n    \"r1\": 0.5\n  }\n}\n";
  const auto r = validate_config(text);
  ASSERT_FALSE(r.ok());
  ASSERT_EQ(r.diagnostics.size(), 1u);
  const auto& d = r.diagnostics.front();
  EXPECT_EQ(d.code, DiagnosticCode::OutOfRange);
  EXPECT_EQ(d.path, "/train/r1");
  EXPECT_EQ(d.message, "subpulses overlap: r1 must be >= 1");
  EXPECT_EQ(d.line, 5u);
}

TEST(Config, AreaAndPeakRabiAreExclusive) {
  for (const char* pulse : {R"({"chirp": 1})", R"({"area": 1, "peak_rabi": 2})"}) {
    const auto r = validate_config(std::string(R"({"experiment": "continuous", "pulse": )") + pulse + "}");
    ASSERT_FALSE(r.ok());
    const auto* d = find(r, DiagnosticCode::ExclusiveKeys);
    ASSERT_NE(d, nullptr) << pulse;
    EXPECT_NE(d->message.find("exactly one of 'area' or 'peak_rabi'"), std::string::npos);
  }
  const auto ok = validate_config(R"({"experiment": "continuous", "pulse": {"peak_rabi": 7.5}})");
  ASSERT_TRUE(ok.ok());
  EXPECT_EQ(*ok.config->pulse.peak_rabi, 7.5);
}

TEST(Config, UnknownKeysRejected) {
  const std::string text = "{\"experiment\": \"compare\",\n\"pulse\": {\"area\": 1, \"chrip\": 3}}";
  const auto r = validate_config(text);
  ASSERT_FALSE(r.ok());
  const auto* d = find(r, DiagnosticCode::UnknownKey);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->path, "/pulse/chrip");
  EXPECT_EQ(d->line, 2u);
  EXPECT_NE(find(validate_config(R"({"experiment": "compare", "pulse": {"area": 1}, "extra": 1})"),
                 DiagnosticCode::UnknownKey),
            nullptr);
}

TEST(Config, ParseErrorsCarryLines) {
  const auto r = validate_config("{\n \"experiment\": \"compare\",\n \"pulse\": {\"area\": }\n}");
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].code, DiagnosticCode::ParseError);
  EXPECT_EQ(r.diagnostics[0].line, 3u);
  EXPECT_EQ(validate_config("[1, 2]").diagnostics[0].code, DiagnosticCode::WrongType);
}

TEST(Config, AreaSpellings) {
  const std::pair<const char*, double> cases[] = {
      {"\"pi\"", pi}, {"\"5pi\"", 5 * pi}, {"\"0.5 * pi\"", 0.5 * pi}, {"\"2*pi\"", 2 * pi}, {"3.25", 3.25}};
  for (const auto& [spelling, value] : cases) {
    const auto r = validate_config(std::string(R"({"experiment": "continuous", "pulse": {"area": )") + spelling + "}}");
    ASSERT_TRUE(r.ok()) << spelling;
    EXPECT_NEAR(*r.config->pulse.area, value, 1e-15) << spelling;
  }
  for (const char* bad : {"\"5 rad\"", "\"pipi\"", "true", "-1"}) {
    EXPECT_FALSE(validate_config(std::string(R"({"experiment": "continuous", "pulse": {"area": )") + bad + "}}").ok())
        << bad;
  }
}

TEST(Config, ExperimentSelection) {
  const std::string text = R"({"experiment": "compare", "pulse": {"area": 1}})";
  EXPECT_TRUE(validate_config(text, Experiment::Compare).ok());
  EXPECT_EQ(validate_config(text, Experiment::Continuous).diagnostics.at(0).path, "/experiment");
  const auto from_cli = validate_config(R"({"pulse": {"area": 1}})", Experiment::Continuous);
  ASSERT_TRUE(from_cli.ok());
  EXPECT_EQ(from_cli.config->experiment, Experiment::Continuous);
  EXPECT_EQ(validate_config(R"({"pulse": {"area": 1}})").diagnostics.at(0).code, DiagnosticCode::MissingKey);
  EXPECT_EQ(validate_config(R"({"experiment": "fig9"})").diagnostics.at(0).code, DiagnosticCode::UnknownName);
}

TEST(Config, SectionsNotUsedByExperiment) {
  const auto r = validate_config(R"({"experiment": "sideband-scan", "pulse": {"area": 1}, "train": {"r2": 2}})");
  ASSERT_EQ(r.diagnostics.size(), 2u);
  for (const auto& d : r.diagnostics) EXPECT_EQ(d.code, DiagnosticCode::NotApplicable);
}

TEST(Config, RangeChecks) {
  const char* bad[] = {
      R"({"experiment": "compare", "pulse": {"area": 1}, "train": {"N": 1}})",
      R"({"experiment": "compare", "pulse": {"area": 1, "duration": 0}})",
      R"({"experiment": "compare", "pulse": {"area": 1}, "train": {"r2": -1}})",
      R"({"experiment": "compare", "pulse": {"area": 1}, "integrator": {"samples_per_subpulse": 1}})",
      R"({"experiment": "compare", "pulse": {"area": 1}, "system": {"detunings": [0, 1], "couplings": [1]}})",
      R"({"experiment": "compare", "pulse": {"area": 1}, "train": {"envelope": "hann"}})",
      R"({"experiment": "compare", "pulse": {"area": 1}, "train": {"N": 2.5}})",
      R"({"experiment": "sideband-scan", "sweep": {"n_min": 5, "n_max": 1}})",
      R"({"experiment": "superposition", "sweep": {"kappa": 0}})",
      R"({"experiment": "error-sweep", "sweep": {"cases": [{"area": "pi"}]}})",
  };
  for (const char* text : bad) EXPECT_FALSE(validate_config(text).ok()) << text;
}

TEST(Config, TableEnvelope) {
  const auto r = validate_config(
      R"({"experiment": "digitize", "pulse": {"area": 1, "envelope": {"table": [[0, 0], [0.5, 2], [1, 0]]}}})");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.config->pulse.envelope.kind(), EnvelopeKind::SampledTable);
  EXPECT_DOUBLE_EQ(r.config->pulse.envelope.shape_factor(), 0.5);
  EXPECT_FALSE(validate_config(
                   R"({"experiment": "digitize", "pulse": {"area": 1, "envelope": {"table": [[0.2, 1], [1, 1]]}}})")
                   .ok());
}

TEST(Config, ResolvedConfigIsAFixedPoint) {
  for (const auto& entry : std::filesystem::directory_iterator(DIGIRAP_CONFIG_DIR)) {
    std::ifstream in(entry.path());
    std::stringstream ss;
    ss << in.rdbuf();
    const auto first = validate_config(ss.str());
    ASSERT_TRUE(first.ok()) << entry.path();
    const auto resolved = resolved_json(*first.config);
    const auto second = validate_config(resolved.dump());
    ASSERT_TRUE(second.ok()) << entry.path() << " " << second.diagnostics.at(0).to_string();
    EXPECT_EQ(resolved_json(*second.config), resolved) << entry.path();
  }
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  for (std::size_t threads : {1u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(101);
    parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  EXPECT_THROW(parallel_for(20, 4,
                            [](std::size_t i) {
                              if (i == 7) throw NumericalFailure("boom");
                            }),
               NumericalFailure);
}

TEST(RunExperiment, ErrorSweepIsThreadIndependent) {
  const auto r = validate_config(R"({"experiment": "error-sweep",
      "sweep": {"N": [10, 20], "cases": [{"area": "pi", "chirp": 291.6}, {"area": "5pi", "chirp": 64.8}]},
      "integrator": {"continuous_samples": 400, "steps_per_sample": 200}})");
  ASSERT_TRUE(r.ok());
  const auto base = std::filesystem::temp_directory_path() / "digirap_test_sweep";
  std::filesystem::remove_all(base);
  run_experiment(*r.config, base / "a", 1);
  run_experiment(*r.config, base / "b", 4);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const auto a = slurp(base / "a" / "error_sweep.csv");
  EXPECT_EQ(a, slurp(base / "b" / "error_sweep.csv"));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 5);
  EXPECT_EQ(a.substr(0, a.find('\n')), "area,chirp,N,r1,r2,level,sigma_P,final_continuous,final_train");
  std::filesystem::remove_all(base);
}
