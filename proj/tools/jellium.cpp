// Command line front end for the experiment runner.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "jellium/error.hpp"
#include "jellium/experiment.hpp"

namespace {

using jellium::ExperimentKind;

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int replicas = -1;
  unsigned threads = 0;
};

int print_errors(const std::vector<std::string>& errors) {
  nlohmann::json j{{"errors", errors}};
  std::cout << j.dump(2) << "\n";
  return 2;
}

void print_gates(const jellium::RunResult& res) {
  for (const auto& g : res.gates)
    std::printf("%-4s %-34s %.6g (threshold %.6g)\n", g.pass ? "PASS" : "FAIL", g.name.c_str(), g.value, g.threshold);
}

int execute(const Common& opt, std::vector<ExperimentKind> allowed) {
  std::vector<std::string> errors;
  jellium::ExperimentConfig cfg;
  if (opt.config.empty()) {
    if (allowed.empty()) return print_errors({"--config is required for run"});
    cfg = jellium::default_config(allowed.front());
  } else {
    std::ifstream in(opt.config, std::ios::binary);
    if (!in) return print_errors({"cannot read config file " + opt.config});
    std::stringstream ss;
    ss << in.rdbuf();
    auto parsed = jellium::try_parse_config(ss.str(), errors);
    if (!parsed) return print_errors(errors);
    cfg = *parsed;
  }
  if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), cfg.kind) == allowed.end())
    return print_errors({std::string("experiment '") + jellium::kind_name(cfg.kind) + "' is not handled by this subcommand"});
  if (opt.has_seed) cfg.seed = opt.seed;
  if (!opt.out.empty()) cfg.output = opt.out;
  if (opt.replicas >= 0) cfg.replicas = opt.replicas;

  const auto t0 = std::chrono::steady_clock::now();
  jellium::RunResult res;
  try {
    res = jellium::run(cfg, {opt.threads, true});
  } catch (const jellium::Error& e) {
    std::cerr << "jellium: " << e.what() << "\n";
    return 3;
  }
  if (res.exit_code == 2) return print_errors(res.errors);
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s: config %s, seed %llu, %.2f s\n", jellium::kind_name(cfg.kind), jellium::config_hash(cfg).c_str(),
              static_cast<unsigned long long>(cfg.seed), dt);
  print_gates(res);
  std::printf("wrote %zu files to %s\n", res.files.size(), cfg.output.c_str());
  return res.exit_code;
}

void add_common(CLI::App* app, Common& opt) {
  app->add_option("--config", opt.config, "experiment config (JSON)");
  app->add_option("--seed", opt.seed, "master seed, overrides the config")->each([&](const std::string&) {
    opt.has_seed = true;
  });
  app->add_option("--out", opt.out, "output directory, overrides the config");
  app->add_option("--threads", opt.threads, "worker threads (0: all cores); never changes results");
  app->add_option("--replicas", opt.replicas, "replica count, overrides the config");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jellium: finite-N Coulomb gas kernels, exact samplers and limit checks"};
  app.require_subcommand(1);
  Common opt;

  struct Sub {
    const char* name;
    const char* help;
    std::vector<ExperimentKind> kinds;
  };
  const std::vector<Sub> subs = {
      {"kernel", "finite-N kernel diagonals against limit kernels",
       {ExperimentKind::KernelConvergence, ExperimentKind::AnnulusQ}},
      {"sample", "write gas or zero samples", {ExperimentKind::Sample}},
      {"zeros", "random polynomial zero statistics", {ExperimentKind::Zeros}},
      {"counts", "exact and Monte Carlo outlier counts", {ExperimentKind::Counts, ExperimentKind::Scaling}},
      {"independence", "count correlation across uncharged components", {ExperimentKind::Independence}},
      {"validate-sampler", "sampler cross-checks", {ExperimentKind::SamplerValidation}},
      {"run", "run any config", {}},
  };
  std::vector<std::pair<CLI::App*, const Sub*>> apps;
  for (const auto& s : subs) {
    auto* a = app.add_subcommand(s.name, s.help);
    add_common(a, opt);
    apps.emplace_back(a, &s);
  }

  std::string a_path, b_path, cmp_out = "out";
  double threshold = 0.05;
  auto* cmp = app.add_subcommand("compare", "sup relative difference of two grid CSV files");
  cmp->add_option("a", a_path, "grid CSV (re,im,value)")->required();
  cmp->add_option("b", b_path, "reference grid CSV")->required();
  cmp->add_option("--out", cmp_out, "output directory");
  cmp->add_option("--threshold", threshold, "gate on the sup relative difference");

  std::string kind_arg;
  auto* cfg = app.add_subcommand("config", "print the reference config of an experiment kind");
  cfg->add_option("kind", kind_arg, "experiment kind")->required();

  CLI11_PARSE(app, argc, argv);

  for (const auto& [a, s] : apps)
    if (a->parsed()) return execute(opt, s->kinds);
  if (cmp->parsed()) {
    try {
      const auto res = jellium::compare_csv(a_path, b_path, cmp_out, threshold);
      if (res.exit_code == 2) return print_errors(res.errors);
      print_gates(res);
      return res.exit_code;
    } catch (const jellium::Error& e) {
      std::cerr << "jellium: " << e.what() << "\n";
      return 3;
    }
  }
  if (cfg->parsed()) {
    const auto k = jellium::parse_kind(kind_arg);
    if (!k) return print_errors({"unknown experiment kind '" + kind_arg + "'"});
    std::cout << jellium::serialize_config(jellium::default_config(*k));
    return 0;
  }
  return 1;
}
