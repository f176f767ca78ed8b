#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jellium/measure.hpp"
#include "jellium/stats.hpp"

namespace jellium {

enum class ExperimentKind {
  KernelConvergence,
  AnnulusQ,
  Independence,
  Zeros,
  Counts,
  Scaling,
  SamplerValidation,
  Sample,
};

const char* kind_name(ExperimentKind k) noexcept;
std::optional<ExperimentKind> parse_kind(std::string_view s) noexcept;

/// One measure component as written in the config: profile name plus numeric
/// parameters (scalars are one-element vectors).
struct ComponentConfig {
  double mass = 1.0;
  std::string profile = "circle";
  std::map<std::string, std::vector<double>> params;

  bool operator==(const ComponentConfig&) const = default;
};

/// Grid of r_i * exp(i theta_j): n_r radii equally spaced on [r_min, r_max]
/// and n_theta angles theta0 + 2 pi j / n_theta; with `twist`, radius i is
/// additionally rotated by i * twist.
struct GridSpec {
  double r_min = 0.0;
  double r_max = 1.0;
  int n_r = 40;
  int n_theta = 1;
  double theta0 = 0.0;
  double twist = 0.0;

  std::vector<Complex> points() const;
  bool operator==(const GridSpec&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::KernelConvergence;
  std::vector<ComponentConfig> measure{ComponentConfig{}};
  double chi = 1.0;                 // kappa_N = N + chi
  std::vector<double> kappa;        // explicit kappa per N (overrides chi)
  std::vector<int> N{64, 128, 256, 512};
  std::vector<RegionSpec> regions;
  std::vector<GridSpec> grids;
  std::vector<Complex> probes;      // points where the error must decrease in N
  std::vector<double> target_Q;
  double q_tol = 0.01;
  int select_N_max = 20000;
  int N_cap = 4096;
  int replicas = 0;
  std::uint64_t seed = 1;
  std::string sampler = "hkpv";     // hkpv | kostlan
  double intensity_eps = 0.3;
  std::vector<double> intensity_radii{0.0, 0.5};
  double intensity_halfwidth = 0.05;
  int histogram_bins = 10;
  int kostlan_N = 4;
  std::map<std::string, double> gates;  // thresholds; missing keys take defaults
  std::string output = "out";

  double kappa_for(std::size_t i) const;
  double gate(const std::string& name) const;
  /// Measure built from `measure`; throws InvalidArgument on bad input.
  MeasureSpec build_measure() const;

  bool operator==(const ExperimentConfig&) const;
};

/// Default gate thresholds per experiment kind.
std::map<std::string, double> default_gates(ExperimentKind kind);

/// The reference configuration of each kind (the acceptance setups).
ExperimentConfig default_config(ExperimentKind kind);

/// JSON text <-> config. parse throws InvalidArgument with every problem
/// found; serialize is canonical, so parse(serialize(c)) == c and
/// serialize(parse(serialize(c))) == serialize(c).
ExperimentConfig parse_config(std::string_view json_text);
/// Non-throwing variant; appends to `errors` and returns nullopt on failure.
std::optional<ExperimentConfig> try_parse_config(std::string_view json_text, std::vector<std::string>& errors);
std::string serialize_config(const ExperimentConfig& config);

/// Checks every module precondition the run will rely on; empty when valid.
std::vector<std::string> validate_config(const ExperimentConfig& config);

/// FNV-1a of the canonical serialization with `output` cleared.
std::string config_hash(const ExperimentConfig& config);

struct Gate {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct RunOptions {
  unsigned threads = 0;   // 0: hardware concurrency
  bool write_files = true;
};

struct RunResult {
  int exit_code = 0;               // 0: all gates pass, 1: a gate failed, 2: invalid config
  std::vector<std::string> errors;
  std::vector<Gate> gates;
  std::string report_json;
  std::vector<std::string> files;  // written, relative to the output directory
};

/// Validates, computes, and writes report.json, CSV payloads and
/// manifest.json into config.output. Nothing is written when validation
/// fails. Numerical failures propagate as exceptions.
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

/// sup_rel_diff report for two grid CSV files (columns re, im, value).
RunResult compare_csv(const std::string& a_path, const std::string& b_path, const std::string& out_dir,
                      double threshold);

const char* library_version() noexcept;

}  // namespace jellium
