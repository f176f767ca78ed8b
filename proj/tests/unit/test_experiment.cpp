#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "jellium/error.hpp"
#include "jellium/experiment.hpp"

using namespace jellium;
namespace fs = std::filesystem;

namespace {

const ExperimentKind kAll[] = {ExperimentKind::KernelConvergence, ExperimentKind::AnnulusQ,
                               ExperimentKind::Independence,      ExperimentKind::Zeros,
                               ExperimentKind::Counts,            ExperimentKind::Scaling,
                               ExperimentKind::SamplerValidation, ExperimentKind::Sample};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("jellium_test_" + name);
  fs::remove_all(p);
  return p;
}

bool has_error(const std::vector<std::string>& errs, const std::string& needle) {
  for (const auto& e : errs)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Config, DefaultsValidateAndRoundTrip) {
  for (auto k : kAll) {
    const auto c = default_config(k);
    EXPECT_TRUE(validate_config(c).empty()) << kind_name(k);
    const auto text = serialize_config(c);
    const auto back = parse_config(text);
    EXPECT_TRUE(back == c) << kind_name(k);
    EXPECT_EQ(serialize_config(back), text);
    EXPECT_EQ(parse_kind(kind_name(k)), k);
  }
}

TEST(Config, RoundTripAwkwardValues) {
  auto c = default_config(ExperimentKind::Counts);
  c.chi = 0.1 + 0.2;  // not representable in short decimal form
  c.kappa = {2.0 + 1.0 / 3.0, 256.0 + 1e-12};
  c.measure = {ComponentConfig{1.0 / 3.0, "circle", {{"radius", {1.0}}}},
               ComponentConfig{2.0 / 3.0, "radial-cdf", {{"radii", {1.5, 2.0 / 0.7}}, {"cdf", {0.0, 2.0 / 3.0}}}}};
  c.regions = {RegionSpec{1e-300, kInf, true, -1.0, 2.0, true}};
  c.seed = 18446744073709551615ULL;
  c.gates = {{"count_sigmas", 2.5}};
  c.probes = {Complex(1.0 / 7.0, -5e-310)};
  const auto back = parse_config(serialize_config(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(serialize_config(back), serialize_config(c));
}

TEST(Config, ParseErrorsAreCollected) {
  std::vector<std::string> errs;
  const auto c = try_parse_config(R"({"experiment":"nope","N":"x","grids":[{"n_r":1.5,"foo":1}],"zzz":0})", errs);
  EXPECT_FALSE(c.has_value());
  EXPECT_TRUE(has_error(errs, "config.experiment"));
  EXPECT_TRUE(has_error(errs, "config.N"));
  EXPECT_TRUE(has_error(errs, "config.grids[0].n_r"));
  EXPECT_TRUE(has_error(errs, "config.grids[0].foo: unknown key"));
  EXPECT_TRUE(has_error(errs, "config.zzz: unknown key"));
  EXPECT_THROW(parse_config("{not json"), InvalidArgument);
  EXPECT_THROW(parse_config("[]"), InvalidArgument);
}

TEST(Config, KappaEqualToNRejected) {
  auto c = default_config(ExperimentKind::KernelConvergence);
  c.kappa = {64.0, 128.5, 256.5, 512.5};
  const auto errs = validate_config(c);
  EXPECT_TRUE(has_error(errs, "kappa must exceed N"));
  c.kappa = {65.0, 129.5};
  EXPECT_TRUE(has_error(validate_config(c), "one value per N"));
}

TEST(Config, SemanticChecks) {
  auto c = default_config(ExperimentKind::KernelConvergence);
  c.grids.push_back(GridSpec{0.5, 1.5, 3, 1});
  EXPECT_TRUE(has_error(validate_config(c), "lies in the support"));
  auto s = default_config(ExperimentKind::SamplerValidation);
  s.N = {4};
  EXPECT_TRUE(has_error(validate_config(s), "N <= 3"));
  auto z = default_config(ExperimentKind::Zeros);
  z.gates["made_up"] = 1.0;
  z.replicas = 0;
  const auto errs = validate_config(z);
  EXPECT_TRUE(has_error(errs, "unknown gate"));
  EXPECT_TRUE(has_error(errs, "replicas"));
  auto m = default_config(ExperimentKind::Scaling);
  m.measure[0].mass = 0.5;
  EXPECT_TRUE(has_error(validate_config(m), "measure"));
  m.measure[0] = ComponentConfig{1.0, "hexagon", {}};
  EXPECT_TRUE(has_error(validate_config(m), "unknown profile"));
}

TEST(Config, HashIgnoresOutput) {
  auto a = default_config(ExperimentKind::Scaling), b = a;
  b.output = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Run, InvalidConfigWritesNothing) {
  auto c = default_config(ExperimentKind::Scaling);
  c.chi = 0.0;
  c.output = scratch("invalid").string();
  const auto r = run(c);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_FALSE(r.errors.empty());
  EXPECT_FALSE(fs::exists(c.output));
}

TEST(Run, ScalingReportAndManifest) {
  auto c = default_config(ExperimentKind::Scaling);
  c.output = scratch("scaling").string();
  const auto r = run(c, {1, true});
  EXPECT_EQ(r.exit_code, 0);
  ASSERT_EQ(r.gates.size(), 3u);
  for (const auto& g : r.gates) EXPECT_TRUE(g.pass) << g.name;
  const auto report = slurp(fs::path(c.output) / "report.json");
  EXPECT_NE(report.find("\"config_hash\": \"" + config_hash(c) + "\""), std::string::npos);
  EXPECT_NE(report.find("\"gates\""), std::string::npos);
  const auto manifest = slurp(fs::path(c.output) / "manifest.json");
  EXPECT_NE(manifest.find(library_version()), std::string::npos);
  const auto csv = slurp(fs::path(c.output) / "scaling.csv");
  EXPECT_EQ(csv.rfind("# config_hash=" + config_hash(c) + "\n", 0), 0u);
}

TEST(Run, GateFailureSetsExitCode) {
  auto c = default_config(ExperimentKind::Scaling);
  c.gates["eta_sqrt_ratio"] = 1.01;
  const auto r = run(c, {1, false});
  EXPECT_EQ(r.exit_code, 1);
}

TEST(Run, KernelConvergenceLadder) {
  auto c = default_config(ExperimentKind::KernelConvergence);
  const auto r = run(c, {2, false});
  EXPECT_EQ(r.exit_code, 0);
  // the chi variant: weighted exterior limit with Q = chi
  c.chi = 0.5;
  c.grids = {GridSpec{1.25, 3.0, 40, 1}};
  const auto rc = run(c, {2, false});
  for (const auto& g : rc.gates)
    if (g.name == "monotonicity_violations") {
      EXPECT_TRUE(g.pass);
    }
}

TEST(Run, DeterministicAcrossThreads) {
  auto c = default_config(ExperimentKind::Independence);
  c.N = {24};
  c.replicas = 300;
  c.output = scratch("threads1").string();
  const auto a = run(c, {1, true});
  const auto out1 = c.output;
  c.output = scratch("threads3").string();
  const auto b = run(c, {3, true});
  ASSERT_EQ(a.files, b.files);
  for (const auto& f : a.files) EXPECT_EQ(slurp(fs::path(out1) / f), slurp(fs::path(c.output) / f)) << f;
  EXPECT_EQ(a.report_json, b.report_json);
}

TEST(Run, CompareCsv) {
  auto c = default_config(ExperimentKind::KernelConvergence);
  c.N = {64, 512};
  c.output = scratch("cmp_src").string();
  run(c, {1, true});
  const auto dir = fs::path(c.output);
  const auto out = scratch("cmp_out");
  const auto r = compare_csv((dir / "kernel_N512_g0.csv").string(), (dir / "limit_N512_g0.csv").string(), out.string(), 0.05);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(fs::exists(out / "comparison.csv"));
  const auto bad = compare_csv((dir / "kernel_N512_g0.csv").string(), (dir / "limit_N512_g1.csv").string(),
                               scratch("cmp_bad").string(), 0.05);
  EXPECT_EQ(bad.exit_code, 2);
}
