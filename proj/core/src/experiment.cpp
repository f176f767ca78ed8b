#include "jellium/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jellium/bergman.hpp"
#include "jellium/error.hpp"
#include "jellium/parallel.hpp"
#include "jellium/rng.hpp"
#include "jellium/sampler.hpp"
#include "jellium/wpoly.hpp"

#ifndef JELLIUM_VERSION
#define JELLIUM_VERSION "0.0.0"
#endif

namespace jellium {

using json = nlohmann::ordered_json;

namespace {

constexpr std::pair<ExperimentKind, const char*> kKinds[] = {
    {ExperimentKind::KernelConvergence, "kernel-convergence"},
    {ExperimentKind::AnnulusQ, "annulus-Q"},
    {ExperimentKind::Independence, "independence"},
    {ExperimentKind::Zeros, "zeros"},
    {ExperimentKind::Counts, "counts"},
    {ExperimentKind::Scaling, "scaling"},
    {ExperimentKind::SamplerValidation, "sampler-validation"},
    {ExperimentKind::Sample, "sample"},
};

const std::set<std::string> kSamplers{"hkpv", "kostlan", "bruteforce", "zeros"};

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace

const char* kind_name(ExperimentKind k) noexcept {
  for (const auto& [kk, name] : kKinds)
    if (kk == k) return name;
  return "?";
}

std::optional<ExperimentKind> parse_kind(std::string_view s) noexcept {
  for (const auto& [kk, name] : kKinds)
    if (s == name) return kk;
  return std::nullopt;
}

const char* library_version() noexcept { return JELLIUM_VERSION; }

std::vector<Complex> GridSpec::points() const {
  std::vector<Complex> out;
  if (n_r < 1 || n_theta < 1) return out;
  out.reserve(static_cast<std::size_t>(n_r) * n_theta);
  for (int i = 0; i < n_r; ++i) {
    const double r = n_r == 1 ? r_min : r_min + (r_max - r_min) * i / (n_r - 1);
    for (int j = 0; j < n_theta; ++j) out.push_back(std::polar(r, theta0 + 2.0 * kPi * j / n_theta + i * twist));
  }
  return out;
}

double ExperimentConfig::kappa_for(std::size_t i) const {
  return kappa.empty() ? kappa_rule(N.at(i), chi) : kappa.at(i);
}

double ExperimentConfig::gate(const std::string& name) const {
  if (auto it = gates.find(name); it != gates.end()) return it->second;
  const auto d = default_gates(kind);
  if (auto it = d.find(name); it != d.end()) return it->second;
  throw InvalidArgument("unknown gate '" + name + "'");
}

bool ExperimentConfig::operator==(const ExperimentConfig&) const = default;

std::map<std::string, double> default_gates(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::KernelConvergence:
      return {{"sup_rel_diff", 0.05}, {"probe_nonincreasing_steps", 0.0}, {"monotonicity_violations", 0.0},
              {"monotonicity_slack", 1e-6}};
    case ExperimentKind::AnnulusQ:
      return {{"selected_min", 1.0}, {"sup_rel_diff", 0.07}, {"monotonicity_violations", 0.0},
              {"monotonicity_slack", 1e-6}, {"limit_separation", 0.01}};
    case ExperimentKind::Independence:
      return {{"corr_sigmas", 3.0}};
    case ExperimentKind::Zeros:
      return {{"intensity_rel_err_origin", 0.05}, {"intensity_rel_err_ring", 0.07}, {"corr_sigmas", 3.0},
              {"max_root_residual", 1e-8}};
    case ExperimentKind::Counts:
      return {{"count_sigmas", 3.0}, {"complement_error", 1e-9}};
    case ExperimentKind::Scaling:
      return {{"eta_sqrt_ratio", 2.0}, {"log_column_increases", 0.0}, {"eta_decreases", 0.0}};
    case ExperimentKind::SamplerValidation:
      return {{"tv_max", 0.05}, {"kostlan_tail_sigmas", 3.0}};
    case ExperimentKind::Sample:
      return {};
  }
  return {};
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.measure = {ComponentConfig{1.0, "circle", {{"radius", {1.0}}}}};
  switch (kind) {
    case ExperimentKind::KernelConvergence:
      c.N = {64, 128, 256, 512};
      c.grids = {GridSpec{1.25, 3.0, 40, 1, 0.0, 0.0}, GridSpec{0.0, 0.8, 40, 1, 0.0, 0.0}};
      c.probes = {Complex(1.5, 0.0)};
      break;
    case ExperimentKind::AnnulusQ: {
      const double q = 1.0 / std::sqrt(2.0);
      c.measure = {ComponentConfig{q, "circle", {{"radius", {1.0}}}},
                   ComponentConfig{1.0 - q, "circle", {{"radius", {2.0}}}}};
      c.N = {};
      c.grids = {GridSpec{1.25, 1.75, 40, 1, 0.0, 0.0}};
      c.target_Q = {0.0, 0.3};
      break;
    }
    case ExperimentKind::Independence:
      c.N = {256};
      c.replicas = 2000;
      c.regions = {RegionSpec{0.0, 0.6, false, 0.0, 2.0 * kPi, true}, RegionSpec{1.4, 2.0, false, 0.0, 2.0 * kPi, true}};
      break;
    case ExperimentKind::Zeros:
      c.N = {64};
      c.replicas = 200000;
      c.sampler = "zeros";
      c.regions = {RegionSpec{0.0, 0.6, false, 0.0, 2.0 * kPi, true}, RegionSpec{1.4, 2.0, false, 0.0, 2.0 * kPi, true}};
      break;
    case ExperimentKind::Counts:
      c.N = {2, 256};
      c.replicas = 2000;
      c.regions = {RegionSpec{1.0, kInf}, RegionSpec{std::sqrt(2.0), kInf}};
      break;
    case ExperimentKind::Scaling:
      c.measure = {ComponentConfig{1.0, "disk", {{"radius", {1.0}}}}};
      c.N = {64, 256, 1024, 4096};
      c.regions = {RegionSpec{1.0, kInf}};
      break;
    case ExperimentKind::SamplerValidation:
      c.N = {2, 3};
      c.replicas = 100000;
      break;
    case ExperimentKind::Sample:
      c.N = {64};
      c.replicas = 10;
      break;
  }
  return c;
}

// ---- JSON reading

namespace {

struct Reader {
  const json& j;
  std::string path;
  std::vector<std::string>& errors;
  std::set<std::string> seen{};

  void error(const std::string& key, const std::string& msg) const {
    errors.push_back(path + (key.empty() ? "" : "." + key) + ": " + msg);
  }
  bool has(const std::string& key) { return j.contains(key); }
  const json* find(const std::string& key) {
    seen.insert(key);
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }
  void finish() const {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!seen.count(it.key())) error(it.key(), "unknown key");
  }
};

// Numbers plus the strings "inf" / "-inf"; finite unless allowed.
bool to_double(const json& v, double& out, bool allow_inf) {
  if (v.is_number()) {
    out = v.get<double>();
    return std::isfinite(out);
  }
  if (allow_inf && v.is_string() && (v == "inf" || v == "infinity")) {
    out = kInf;
    return true;
  }
  return false;
}

json from_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

void read_double(Reader& r, const std::string& key, double& out, bool allow_inf = false) {
  if (const json* v = r.find(key))
    if (!to_double(*v, out, allow_inf)) r.error(key, allow_inf ? "expected a number or \"inf\"" : "expected a finite number");
}

void read_int(Reader& r, const std::string& key, int& out) {
  if (const json* v = r.find(key)) {
    if (v->is_number_integer() && v->get<long long>() >= -2147483647LL && v->get<long long>() <= 2147483647LL)
      out = static_cast<int>(v->get<long long>());
    else
      r.error(key, "expected an integer");
  }
}

void read_doubles(Reader& r, const std::string& key, std::vector<double>& out) {
  if (const json* v = r.find(key)) {
    if (!v->is_array()) {
      r.error(key, "expected an array of numbers");
      return;
    }
    out.clear();
    for (const auto& e : *v) {
      double x;
      if (!to_double(e, x, false)) {
        r.error(key, "expected finite numbers");
        return;
      }
      out.push_back(x);
    }
  }
}

void read_ints(Reader& r, const std::string& key, std::vector<int>& out) {
  if (const json* v = r.find(key)) {
    if (!v->is_array()) {
      r.error(key, "expected an array of integers");
      return;
    }
    out.clear();
    for (const auto& e : *v) {
      if (!e.is_number_integer() || e.get<long long>() > 2147483647LL || e.get<long long>() < -2147483647LL) {
        r.error(key, "expected integers");
        return;
      }
      out.push_back(static_cast<int>(e.get<long long>()));
    }
  }
}

ComponentConfig read_component(const json& j, const std::string& path, std::vector<std::string>& errors) {
  ComponentConfig c;
  c.params.clear();
  if (!j.is_object()) {
    errors.push_back(path + ": expected an object");
    return c;
  }
  Reader r{j, path, errors};
  read_double(r, "mass", c.mass);
  if (const json* p = r.find("profile")) {
    if (p->is_string())
      c.profile = p->get<std::string>();
    else
      r.error("profile", "expected a string");
  }
  if (const json* p = r.find("params")) {
    if (!p->is_object()) {
      r.error("params", "expected an object");
    } else {
      for (auto it = p->begin(); it != p->end(); ++it) {
        std::vector<double> v;
        double x;
        if (it->is_array()) {
          bool ok = true;
          for (const auto& e : *it) ok = ok && to_double(e, x, false) && (v.push_back(x), true);
          if (!ok) r.error("params." + it.key(), "expected finite numbers");
        } else if (to_double(*it, x, false)) {
          v.push_back(x);
        } else {
          r.error("params." + it.key(), "expected a number or an array of numbers");
        }
        c.params[it.key()] = std::move(v);
      }
    }
  }
  r.finish();
  return c;
}

RegionSpec read_region(const json& j, const std::string& path, std::vector<std::string>& errors) {
  RegionSpec s;
  if (!j.is_object()) {
    errors.push_back(path + ": expected an object");
    return s;
  }
  Reader r{j, path, errors};
  read_double(r, "r_min", s.r_min);
  read_double(r, "r_max", s.r_max, true);
  if (const json* v = r.find("sector")) {
    double a, b;
    if (v->is_array() && v->size() == 2 && to_double((*v)[0], a, false) && to_double((*v)[1], b, false)) {
      s.sector = true;
      s.theta_min = a;
      s.theta_max = b;
    } else {
      r.error("sector", "expected [theta_min, theta_max]");
    }
  }
  if (const json* v = r.find("compact")) {
    if (v->is_boolean())
      s.compact_in_uncharged = v->get<bool>();
    else
      r.error("compact", "expected a boolean");
  }
  r.finish();
  return s;
}

GridSpec read_grid(const json& j, const std::string& path, std::vector<std::string>& errors) {
  GridSpec g;
  if (!j.is_object()) {
    errors.push_back(path + ": expected an object");
    return g;
  }
  Reader r{j, path, errors};
  read_double(r, "r_min", g.r_min);
  read_double(r, "r_max", g.r_max);
  read_int(r, "n_r", g.n_r);
  read_int(r, "n_theta", g.n_theta);
  read_double(r, "theta0", g.theta0);
  read_double(r, "twist", g.twist);
  r.finish();
  return g;
}

}  // namespace

std::optional<ExperimentConfig> try_parse_config(std::string_view text, std::vector<std::string>& errors) {
  const std::size_t before = errors.size();
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    errors.push_back(std::string("config: not valid JSON: ") + e.what());
    return std::nullopt;
  }
  if (!j.is_object()) {
    errors.push_back("config: expected a JSON object");
    return std::nullopt;
  }
  Reader r{j, "config", errors};
  ExperimentConfig c;
  if (const json* v = r.find("experiment")) {
    const auto k = v->is_string() ? parse_kind(v->get<std::string>()) : std::nullopt;
    if (k)
      c = default_config(*k);
    else
      r.error("experiment", "unknown experiment kind");
  } else {
    r.error("experiment", "missing");
  }
  if (const json* v = r.find("measure")) {
    if (v->is_array()) {
      c.measure.clear();
      for (std::size_t i = 0; i < v->size(); ++i)
        c.measure.push_back(read_component((*v)[i], "config.measure[" + std::to_string(i) + "]", errors));
    } else {
      r.error("measure", "expected an array of components");
    }
  }
  read_double(r, "chi", c.chi);
  read_doubles(r, "kappa", c.kappa);
  read_ints(r, "N", c.N);
  if (const json* v = r.find("regions")) {
    if (v->is_array()) {
      c.regions.clear();
      for (std::size_t i = 0; i < v->size(); ++i)
        c.regions.push_back(read_region((*v)[i], "config.regions[" + std::to_string(i) + "]", errors));
    } else {
      r.error("regions", "expected an array");
    }
  }
  if (const json* v = r.find("grids")) {
    if (v->is_array()) {
      c.grids.clear();
      for (std::size_t i = 0; i < v->size(); ++i)
        c.grids.push_back(read_grid((*v)[i], "config.grids[" + std::to_string(i) + "]", errors));
    } else {
      r.error("grids", "expected an array");
    }
  }
  if (const json* v = r.find("probes")) {
    c.probes.clear();
    bool ok = v->is_array();
    if (ok)
      for (const auto& p : *v) {
        double a, b;
        if (p.is_array() && p.size() == 2 && to_double(p[0], a, false) && to_double(p[1], b, false))
          c.probes.emplace_back(a, b);
        else
          ok = false;
      }
    if (!ok) r.error("probes", "expected an array of [re, im] pairs");
  }
  read_doubles(r, "target_Q", c.target_Q);
  read_double(r, "q_tol", c.q_tol);
  read_int(r, "select_N_max", c.select_N_max);
  read_int(r, "N_cap", c.N_cap);
  read_int(r, "replicas", c.replicas);
  if (const json* v = r.find("seed")) {
    if (v->is_number_unsigned())
      c.seed = v->get<std::uint64_t>();
    else if (v->is_number_integer() && v->get<long long>() >= 0)
      c.seed = static_cast<std::uint64_t>(v->get<long long>());
    else
      r.error("seed", "expected a nonnegative 64-bit integer");
  }
  if (const json* v = r.find("sampler")) {
    if (v->is_string())
      c.sampler = v->get<std::string>();
    else
      r.error("sampler", "expected a string");
  }
  read_double(r, "intensity_eps", c.intensity_eps);
  read_doubles(r, "intensity_radii", c.intensity_radii);
  read_double(r, "intensity_halfwidth", c.intensity_halfwidth);
  read_int(r, "histogram_bins", c.histogram_bins);
  read_int(r, "kostlan_N", c.kostlan_N);
  if (const json* v = r.find("gates")) {
    if (v->is_object()) {
      for (auto it = v->begin(); it != v->end(); ++it) {
        double x;
        if (to_double(*it, x, false))
          c.gates[it.key()] = x;
        else
          r.error("gates." + it.key(), "expected a finite number");
      }
    } else {
      r.error("gates", "expected an object");
    }
  }
  if (const json* v = r.find("output")) {
    if (v->is_string())
      c.output = v->get<std::string>();
    else
      r.error("output", "expected a string");
  }
  r.finish();
  if (errors.size() != before) return std::nullopt;
  return c;
}

ExperimentConfig parse_config(std::string_view text) {
  std::vector<std::string> errors;
  auto c = try_parse_config(text, errors);
  if (!c) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
    throw InvalidArgument(msg);
  }
  return *c;
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["experiment"] = kind_name(c.kind);
  json m = json::array();
  for (const auto& comp : c.measure) {
    json p = json::object();
    for (const auto& [k, v] : comp.params) p[k] = v.size() == 1 ? json(v[0]) : json(v);
    m.push_back(json{{"mass", comp.mass}, {"profile", comp.profile}, {"params", p}});
  }
  j["measure"] = m;
  j["chi"] = c.chi;
  j["kappa"] = c.kappa;
  j["N"] = c.N;
  json regions = json::array();
  for (const auto& s : c.regions) {
    json e{{"r_min", s.r_min}, {"r_max", from_double(s.r_max)}};
    if (s.sector) e["sector"] = {s.theta_min, s.theta_max};
    e["compact"] = s.compact_in_uncharged;
    regions.push_back(e);
  }
  j["regions"] = regions;
  json grids = json::array();
  for (const auto& g : c.grids)
    grids.push_back(json{{"r_min", g.r_min}, {"r_max", g.r_max}, {"n_r", g.n_r}, {"n_theta", g.n_theta},
                         {"theta0", g.theta0}, {"twist", g.twist}});
  j["grids"] = grids;
  json probes = json::array();
  for (const auto& p : c.probes) probes.push_back({p.real(), p.imag()});
  j["probes"] = probes;
  j["target_Q"] = c.target_Q;
  j["q_tol"] = c.q_tol;
  j["select_N_max"] = c.select_N_max;
  j["N_cap"] = c.N_cap;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["sampler"] = c.sampler;
  j["intensity_eps"] = c.intensity_eps;
  j["intensity_radii"] = c.intensity_radii;
  j["intensity_halfwidth"] = c.intensity_halfwidth;
  j["histogram_bins"] = c.histogram_bins;
  j["kostlan_N"] = c.kostlan_N;
  json gates = json::object();
  for (const auto& [k, v] : c.gates) gates[k] = v;
  j["gates"] = gates;
  j["output"] = c.output;
  return j.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.output.clear();
  return hex64(fnv1a(serialize_config(c)));
}

// ---- measure construction and validation

namespace {

double param(const ComponentConfig& c, const std::string& key, std::size_t n_expected = 1) {
  auto it = c.params.find(key);
  if (it == c.params.end()) throw InvalidArgument("profile '" + c.profile + "' needs parameter '" + key + "'");
  if (n_expected == 1 && it->second.size() != 1)
    throw InvalidArgument("parameter '" + key + "' must be a scalar");
  return it->second.front();
}

const std::vector<double>& param_vec(const ComponentConfig& c, const std::string& key) {
  auto it = c.params.find(key);
  if (it == c.params.end()) throw InvalidArgument("profile '" + c.profile + "' needs parameter '" + key + "'");
  return it->second;
}

void check_params(const ComponentConfig& c, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : c.params) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw InvalidArgument("profile '" + c.profile + "' has no parameter '" + k + "'");
  }
}

Component build_component(const ComponentConfig& c) {
  if (c.profile == "circle") {
    check_params(c, {"radius"});
    return {c.mass, UniformCircle{param(c, "radius")}};
  }
  if (c.profile == "disk") {
    check_params(c, {"radius"});
    return {c.mass, UniformDisk{param(c, "radius")}};
  }
  if (c.profile == "annulus") {
    check_params(c, {"inner", "outer"});
    return {c.mass, UniformAnnulus{param(c, "inner"), param(c, "outer")}};
  }
  if (c.profile == "radial-cdf") {
    check_params(c, {"radii", "cdf"});
    return {c.mass, RadialCdf{param_vec(c, "radii"), param_vec(c, "cdf")}};
  }
  if (c.profile == "polar") {
    check_params(c, {"radii", "n_theta", "values"});
    const double nt = param(c, "n_theta");
    if (nt != std::floor(nt) || nt < 1 || nt > 1e6) throw InvalidArgument("parameter 'n_theta' must be a positive integer");
    return {c.mass, PolarDensity{param_vec(c, "radii"), static_cast<int>(nt), param_vec(c, "values")}};
  }
  throw InvalidArgument("unknown profile '" + c.profile + "' (circle, disk, annulus, radial-cdf, polar)");
}

// The charge-free radial component {lo < |z| < hi} containing radius r, or
// nullopt when r lies in the support.
std::optional<std::pair<double, double>> uncharged_component(const MeasureSpec& m, double r) {
  std::vector<double> cand{0.0, m.inner_radius(), m.outer_radius()};
  for (double b : m.breakpoints()) cand.push_back(b);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  if (r > 0.0 && std::binary_search(cand.begin(), cand.end(), r) && !m.charge_free(r * (1 - 1e-12), r * (1 + 1e-12)))
    return std::nullopt;
  // i: last candidate below r (or at r = 0), then widen while charge free
  std::size_t i = 0;
  while (i + 1 < cand.size() && cand[i + 1] < r) ++i;
  std::size_t j = i + 1;
  while (j < cand.size() && cand[j] <= r) ++j;
  double lo = cand[i];
  double hi = j < cand.size() ? cand[j] : kInf;
  if (!m.charge_free(lo, hi)) return std::nullopt;
  while (i > 0 && m.charge_free(cand[i - 1], hi)) lo = cand[--i];
  while (hi < kInf) {
    const double next = j + 1 < cand.size() ? cand[j + 1] : kInf;
    if (!m.charge_free(lo, next)) break;
    hi = next;
    ++j;
  }
  return std::make_pair(lo, hi);
}

// Limit Bergman diagonal for grid points of a radial measure: disk, exterior
// disk or annulus with the reduced charge of kappa times the enclosed mass.
struct AutoLimit {
  double lo = 0.0, hi = kInf, Q = 0.0;
  std::shared_ptr<BergmanOracle> oracle;
};

AutoLimit make_limit(const MeasureSpec& m, double kappa, double r) {
  const auto comp = uncharged_component(m, r);
  if (!comp) throw InvalidArgument("grid radius " + fmt17(r) + " lies in the support of the measure");
  AutoLimit L;
  L.lo = comp->first;
  L.hi = comp->second;
  if (L.lo == 0.0 && L.hi == kInf) throw InvalidArgument("measure has no support");
  L.Q = L.lo > 0.0 ? class_representative(kappa * m.mass_within(L.lo), 0.5) : 0.0;
  if (L.lo == 0.0)
    L.oracle = std::make_shared<BergmanOracle>(BergmanOracle::Disk{L.hi});
  else if (L.hi == kInf)
    L.oracle = std::make_shared<BergmanOracle>(BergmanOracle::ExteriorDisk{L.lo}, std::vector<double>{L.Q});
  else
    L.oracle = std::make_shared<BergmanOracle>(BergmanOracle::Annulus{L.lo, L.hi}, std::vector<double>{L.Q});
  return L;
}

std::vector<double> limit_diag(const MeasureSpec& m, double kappa, std::span<const Complex> pts, unsigned threads) {
  std::vector<double> out(pts.size());
  parallel_for(pts.size(), threads, [&](std::size_t i) {
    out[i] = make_limit(m, kappa, std::abs(pts[i])).oracle->diag(pts[i]);
  });
  return out;
}

bool needs_samples(ExperimentKind k) {
  return k == ExperimentKind::Independence || k == ExperimentKind::Zeros || k == ExperimentKind::SamplerValidation ||
         k == ExperimentKind::Sample;
}

}  // namespace

MeasureSpec ExperimentConfig::build_measure() const {
  std::vector<Component> comps;
  for (const auto& c : measure) comps.push_back(build_component(c));
  return MeasureSpec(std::move(comps));
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  auto err = [&](const std::string& s) { errors.push_back(s); };

  std::optional<MeasureSpec> m;
  try {
    if (c.measure.empty()) throw InvalidArgument("at least one component is required");
    m = c.build_measure();
  } catch (const Error& e) {
    err(std::string("measure: ") + e.what());
  }

  const bool zeros = c.kind == ExperimentKind::Zeros || (c.kind == ExperimentKind::Sample && c.sampler == "zeros");
  if (!(c.chi > 0.0 && c.chi <= 1.0)) err("chi: must lie in (0, 1]");
  if (c.kind != ExperimentKind::AnnulusQ && c.N.empty()) err("N: at least one value is required");
  for (int n : c.N)
    if (n < 1 || n > 200000) err("N: values must lie in [1, 200000]");
  if (!c.kappa.empty()) {
    if (c.kappa.size() != c.N.size()) err("kappa: one value per N is required");
    if (c.kind == ExperimentKind::AnnulusQ || c.kind == ExperimentKind::Scaling)
      err("kappa: explicit values are not supported for this experiment; use chi");
    for (std::size_t i = 0; i < std::min(c.kappa.size(), c.N.size()); ++i) {
      if (!(c.kappa[i] > c.N[i])) err("kappa: kappa must exceed N (N = " + std::to_string(c.N[i]) + ")");
      else if (c.kappa[i] > c.N[i] + 1.0) err("kappa: kappa must not exceed N + 1 (N = " + std::to_string(c.N[i]) + ")");
    }
  }
  if (!kSamplers.count(c.sampler)) err("sampler: expected hkpv, kostlan, bruteforce or zeros");
  if (needs_samples(c.kind) || (c.kind == ExperimentKind::Counts && c.replicas != 0)) {
    if (c.replicas < 1) err("replicas: must be positive");
    if (c.replicas > 100000000) err("replicas: too many");
  } else if (c.replicas < 0) {
    err("replicas: must be nonnegative");
  }
  for (std::size_t i = 0; i < c.regions.size(); ++i) {
    try {
      c.regions[i].validate();
    } catch (const Error& e) {
      err("regions[" + std::to_string(i) + "]: " + e.what());
    }
  }
  for (std::size_t i = 0; i < c.grids.size(); ++i) {
    const auto& g = c.grids[i];
    const std::string p = "grids[" + std::to_string(i) + "]: ";
    if (!(g.r_min >= 0.0 && g.r_max >= g.r_min)) err(p + "need 0 <= r_min <= r_max");
    if (g.n_r < 1 || g.n_theta < 1 || static_cast<long>(g.n_r) * g.n_theta > 10000000) err(p + "need n_r, n_theta >= 1");
  }
  for (const auto& [k, v] : c.gates)
    if (!default_gates(c.kind).count(k)) err("gates: unknown gate '" + k + "' for " + kind_name(c.kind));
  for (const auto& [k, v] : c.gates)
    if (v < 0.0) err("gates: '" + k + "' must be nonnegative");

  const bool radial = m && m->is_radial();
  auto need_radial = [&](const char* what) {
    if (m && !radial) err(std::string("measure: ") + what + " requires a radial measure");
  };
  auto need_regions = [&](std::size_t n, bool no_sector) {
    if (c.regions.size() < n) err("regions: " + std::to_string(n) + " region(s) required");
    if (no_sector)
      for (const auto& s : c.regions)
        if (s.sector) err("regions: sectors need full point samples; not available for this sampler");
  };

  switch (c.kind) {
    case ExperimentKind::KernelConvergence:
      if (c.grids.empty() && c.probes.empty()) err("grids: at least one grid or probe is required");
      need_radial("the automatic limit kernel");
      if (radial) {
        for (std::size_t i = 0; i < c.grids.size(); ++i)
          for (const auto& z : c.grids[i].points())
            if (!uncharged_component(*m, std::abs(z))) {
              err("grids[" + std::to_string(i) + "]: radius " + fmt17(std::abs(z)) + " lies in the support");
              break;
            }
        for (const auto& z : c.probes)
          if (!uncharged_component(*m, std::abs(z))) err("probes: " + fmt17(std::abs(z)) + " lies in the support");
      }
      break;
    case ExperimentKind::AnnulusQ:
      need_radial("the annulus family");
      if (c.target_Q.empty()) err("target_Q: at least one target is required");
      for (double q : c.target_Q)
        if (!(q >= 0.0 && q < 1.0)) err("target_Q: targets must lie in [0, 1)");
      if (!(c.q_tol >= 0.0)) err("q_tol: must be nonnegative");
      if (c.select_N_max < 1) err("select_N_max: must be positive");
      if (c.N_cap < 1 || c.N_cap > 200000) err("N_cap: must lie in [1, 200000]");
      if (c.grids.size() != 1) err("grids: exactly one grid inside the annulus is required");
      if (radial && c.grids.size() == 1) {
        const auto pts = c.grids[0].points();
        std::optional<std::pair<double, double>> comp0;
        for (const auto& z : pts) {
          const auto comp = uncharged_component(*m, std::abs(z));
          if (!comp || comp->first == 0.0 || comp->second == kInf) {
            err("grids[0]: every point must lie in a bounded uncharged annulus");
            break;
          }
          if (comp0 && *comp0 != *comp) {
            err("grids[0]: points span several uncharged components");
            break;
          }
          comp0 = comp;
        }
        if (comp0) {
          const double q = m->mass_within(comp0->first);
          if (!(q > 0.0 && q <= 1.0)) err("measure: the hole mass must lie in (0, 1]");
        }
      }
      break;
    case ExperimentKind::Independence:
      need_regions(2, c.sampler == "kostlan");
      if (c.sampler == "zeros") err("sampler: zeros are handled by the zeros experiment");
      if (c.sampler == "hkpv" || c.sampler == "kostlan") need_radial("this sampler");
      break;
    case ExperimentKind::Counts:
      need_radial("exact counts");
      need_regions(1, c.sampler == "kostlan");
      if (c.sampler == "zeros") err("sampler: zeros are handled by the zeros experiment");
      break;
    case ExperimentKind::Scaling:
      need_radial("exact counts");
      need_regions(1, false);
      for (const auto& s : c.regions)
        if (s.sector) err("regions: scaling uses radial regions");
      break;
    case ExperimentKind::Zeros:
      if (c.sampler != "zeros") err("sampler: the zeros experiment uses the 'zeros' sampler");
      need_regions(2, false);
      if (!(c.intensity_eps > 0.0 && c.intensity_eps < 1.0)) err("intensity_eps: must lie in (0, 1)");
      if (!(c.intensity_halfwidth > 0.0)) err("intensity_halfwidth: must be positive");
      for (double r : c.intensity_radii)
        if (!(r >= 0.0) || (r > 0.0 && !(r - c.intensity_halfwidth > 0.0 && r + c.intensity_halfwidth < 1.0)))
          err("intensity_radii: rings must lie inside the unit disk and away from 0");
      break;
    case ExperimentKind::SamplerValidation:
      need_radial("the brute-force and Kostlan samplers");
      for (int n : c.N)
        if (n > 3) err("N: brute-force sampling supports N <= 3");
      if (c.histogram_bins < 1 || c.histogram_bins > 64) err("histogram_bins: must lie in [1, 64]");
      if (c.kostlan_N < 1 || c.kostlan_N > 200000) err("kostlan_N: must lie in [1, 200000]");
      break;
    case ExperimentKind::Sample:
      if (c.sampler == "bruteforce")
        for (int n : c.N)
          if (n > 3) err("N: brute-force sampling supports N <= 3");
      if (!zeros && c.sampler != "bruteforce" && c.sampler != "hkpv") need_radial("this sampler");
      if (c.sampler == "bruteforce") need_radial("this sampler");
      break;
  }
  if (c.output.empty()) err("output: directory must be given");
  return errors;
}

// ---- running

namespace {

struct Csv {
  std::string name;
  std::string body;
};

class Artifacts {
 public:
  explicit Artifacts(std::string hash) : hash_(std::move(hash)) {}
  std::string& csv(const std::string& name, const std::string& header) {
    files_.push_back({name, "# config_hash=" + hash_ + "\n" + header + "\n"});
    return files_.back().body;
  }
  std::deque<Csv>& files() { return files_; }

 private:
  std::string hash_;
  std::deque<Csv> files_;
};

void row(std::string& out, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
}

struct Context {
  const ExperimentConfig& c;
  unsigned threads;
  json metrics = json::object();
  std::vector<Gate> gates;
  Artifacts art;

  void gate_le(const std::string& name, double value, double threshold) {
    gates.push_back({name, value, threshold, value <= threshold});
  }
  void gate_ge(const std::string& name, double value, double threshold) {
    gates.push_back({name, value, threshold, value >= threshold});
  }
  void gate_gt(const std::string& name, double value, double threshold) {
    gates.push_back({name, value, threshold, value > threshold});
  }
};

std::uint64_t stream_id(const ExperimentConfig& c, const std::string& tag, int N) {
  return fnv1a(std::string(kind_name(c.kind)) + "/" + tag + "/" + std::to_string(N));
}

std::string grid_csv(Artifacts& art, const std::string& name, std::span<const Complex> pts, std::span<const double> v) {
  auto& s = art.csv(name, "re,im,value");
  for (std::size_t i = 0; i < pts.size(); ++i) row(s, {fmt17(pts[i].real()), fmt17(pts[i].imag()), fmt17(v[i])});
  return name;
}

void samples_csv(Artifacts& art, const std::string& name, const std::vector<PointSample>& samples) {
  auto& s = art.csv(name, "replica,re,im");
  for (const auto& p : samples)
    for (const auto& z : p.points) row(s, {std::to_string(p.replica), fmt17(z.real()), fmt17(z.imag())});
}

std::shared_ptr<const KernelEvaluator> make_kernel(const MeasureSpec& m, int N, double kappa) {
  return std::make_shared<const KernelEvaluator>(WeightedBasis::build(m, BasisParams{N, kappa}));
}

// Per-replica point samples of the gas with the configured sampler. Kostlan
// samples carry the moduli as positive reals.
std::vector<PointSample> gas_samples(const Context& ctx, const MeasureSpec& m, int N, double kappa,
                                     const std::string& tag) {
  const auto& c = ctx.c;
  const std::uint64_t id = stream_id(c, tag + "/" + c.sampler, N);
  if (c.sampler == "kostlan") {
    const KostlanSampler ks(m, BasisParams{N, kappa});
    return run_replicas(c.replicas, ctx.threads, [&](std::uint64_t r) {
      RngStream rng(c.seed, id, r);
      PointSample s;
      s.N = N;
      s.seed = c.seed;
      s.replica = r;
      for (double x : ks.moduli(rng)) s.points.emplace_back(x, 0.0);
      return s;
    });
  }
  if (c.sampler == "bruteforce") {
    const BruteforceSampler bf(m, kappa, N);
    return run_replicas(c.replicas, ctx.threads, [&](std::uint64_t r) {
      RngStream rng(c.seed, id, r);
      return bf.sample(rng);
    });
  }
  const HkpvSampler hk(make_kernel(m, N, kappa));
  return run_replicas(c.replicas, ctx.threads, [&](std::uint64_t r) {
    RngStream rng(c.seed, id, r);
    return hk.sample(rng);
  });
}

void run_kernel_convergence(Context& ctx) {
  const auto& c = ctx.c;
  const MeasureSpec m = c.build_measure();
  const double slack = c.gate("monotonicity_slack");
  json per_N = json::array();
  std::vector<double> last_sup(c.grids.size(), 0.0);
  std::vector<std::vector<double>> probe_err(c.probes.size());
  long violations = 0;
  auto& table = ctx.art.csv("convergence.csv", "N,kappa,grid,sup_rel_diff,monotonicity_violations,gram_residual");
  auto& ptable = ctx.art.csv("probes.csv", "N,kappa,re,im,kernel,limit,rel_err");
  for (std::size_t i = 0; i < c.N.size(); ++i) {
    const int N = c.N[i];
    const double kappa = c.kappa_for(i);
    const auto kernel = make_kernel(m, N, kappa);
    json row_j{{"N", N}, {"kappa", kappa}, {"gram_residual", kernel->basis().gram_residual()}};
    json sups = json::array();
    for (std::size_t g = 0; g < c.grids.size(); ++g) {
      const auto pts = c.grids[g].points();
      const auto K = kernel->diag_grid(pts, ctx.threads);
      const auto B = limit_diag(m, kappa, pts, ctx.threads);
      long v = 0;
      for (std::size_t k = 0; k < pts.size(); ++k) v += K[k] > B[k] * (1.0 + slack) ? 1 : 0;
      violations += v;
      const double sup = sup_rel_diff(K, B);
      last_sup[g] = sup;
      sups.push_back(sup);
      row(table, {std::to_string(N), fmt17(kappa), std::to_string(g), fmt17(sup), std::to_string(v),
                  fmt17(kernel->basis().gram_residual())});
      grid_csv(ctx.art, "kernel_N" + std::to_string(N) + "_g" + std::to_string(g) + ".csv", pts, K);
      grid_csv(ctx.art, "limit_N" + std::to_string(N) + "_g" + std::to_string(g) + ".csv", pts, B);
    }
    row_j["sup_rel_diff"] = sups;
    json perr = json::array();
    for (std::size_t p = 0; p < c.probes.size(); ++p) {
      const Complex z = c.probes[p];
      const double K = kernel->diag(z);
      const double B = make_limit(m, kappa, std::abs(z)).oracle->diag(z);
      const double e = std::abs(K - B) / B;
      violations += K > B * (1.0 + slack) ? 1 : 0;
      probe_err[p].push_back(e);
      perr.push_back(e);
      row(ptable, {std::to_string(N), fmt17(kappa), fmt17(z.real()), fmt17(z.imag()), fmt17(K), fmt17(B), fmt17(e)});
    }
    row_j["probe_rel_err"] = perr;
    per_N.push_back(row_j);
  }
  ctx.metrics["ladder"] = per_N;
  if (!c.grids.empty()) {
    const double worst = *std::max_element(last_sup.begin(), last_sup.end());
    ctx.gate_le("sup_rel_diff", worst, c.gate("sup_rel_diff"));
  }
  long steps = 0;
  for (const auto& e : probe_err)
    for (std::size_t i = 1; i < e.size(); ++i) steps += e[i] >= e[i - 1] ? 1 : 0;
  if (!c.probes.empty() && c.N.size() > 1)
    ctx.gate_le("probe_nonincreasing_steps", static_cast<double>(steps), c.gate("probe_nonincreasing_steps"));
  ctx.gate_le("monotonicity_violations", static_cast<double>(violations), c.gate("monotonicity_violations"));
}

void run_annulus_q(Context& ctx) {
  const auto& c = ctx.c;
  const MeasureSpec m = c.build_measure();
  const auto pts = c.grids[0].points();
  const auto comp = *uncharged_component(m, std::abs(pts.front()));
  const double a = comp.first, b = comp.second;
  const double q = m.mass_within(a);
  const double slack = c.gate("monotonicity_slack");
  ctx.metrics["annulus"] = {a, b};
  ctx.metrics["hole_mass"] = q;
  auto& sel = ctx.art.csv("selected_N.csv", "target_Q,N,kappa,representative");
  json targets = json::array();
  std::vector<std::vector<double>> limits;
  double worst_sup = 0.0, min_selected = kInf;
  long violations = 0;
  for (std::size_t t = 0; t < c.target_Q.size(); ++t) {
    const double target = c.target_Q[t];
    const auto Ns = subsequence_select(q, c.chi, target, 1, c.select_N_max, c.q_tol);
    for (int N : Ns) {
      const double kappa = kappa_rule(N, c.chi);
      row(sel, {fmt17(target), std::to_string(N), fmt17(kappa), fmt17(class_representative(kappa * q, target))});
    }
    min_selected = std::min(min_selected, static_cast<double>(Ns.size()));
    BergmanOracle target_oracle(BergmanOracle::Annulus{a, b}, {target});
    std::vector<double> B(pts.size());
    parallel_for(pts.size(), ctx.threads, [&](std::size_t i) { B[i] = target_oracle.diag(pts[i]); });
    limits.push_back(B);
    grid_csv(ctx.art, "limit_Q" + std::to_string(t) + ".csv", pts, B);
    json tj{{"target_Q", target}, {"selected_count", Ns.size()}};
    int chosen = 0;
    for (int N : Ns)
      if (N <= c.N_cap) chosen = N;
    if (chosen == 0) {
      worst_sup = kInf;
      tj["N"] = nullptr;
    } else {
      const double kappa = kappa_rule(chosen, c.chi);
      const double rep = class_representative(kappa * q, target);
      const auto kernel = make_kernel(m, chosen, kappa);
      const auto K = kernel->diag_grid(pts, ctx.threads);
      const double sup = sup_rel_diff(K, B);
      worst_sup = std::max(worst_sup, sup);
      // monotonicity uses the charge the finite system actually carries
      BergmanOracle actual(BergmanOracle::Annulus{a, b}, {rep});
      std::vector<double> Ba(pts.size());
      parallel_for(pts.size(), ctx.threads, [&](std::size_t i) { Ba[i] = actual.diag(pts[i]); });
      long v = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) v += K[i] > Ba[i] * (1.0 + slack) ? 1 : 0;
      violations += v;
      grid_csv(ctx.art, "kernel_Q" + std::to_string(t) + ".csv", pts, K);
      tj["N"] = chosen;
      tj["kappa"] = kappa;
      tj["representative"] = rep;
      tj["sup_rel_diff"] = sup;
      tj["monotonicity_violations"] = v;
      tj["gram_residual"] = kernel->basis().gram_residual();
    }
    targets.push_back(tj);
  }
  ctx.metrics["targets"] = targets;
  ctx.gate_ge("selected_min", min_selected, c.gate("selected_min"));
  ctx.gate_le("sup_rel_diff", worst_sup, c.gate("sup_rel_diff"));
  ctx.gate_le("monotonicity_violations", static_cast<double>(violations), c.gate("monotonicity_violations"));
  if (limits.size() >= 2) {
    // largest relative gap between any two limit diagonals on the grid
    double sep = 0.0, sep_off = 0.0;
    for (std::size_t s = 0; s < limits.size(); ++s)
      for (std::size_t t = s + 1; t < limits.size(); ++t) {
        for (std::size_t i = 0; i < pts.size(); ++i)
          sep = std::max(sep, std::abs(limits[s][i] - limits[t][i]) / limits[t][i]);
        for (const auto& z : pts) {
          const double x = annulus_weighted_offdiag_modulus(a, b, c.target_Q[s], z, -z);
          const double y = annulus_weighted_offdiag_modulus(a, b, c.target_Q[t], z, -z);
          sep_off = std::max(sep_off, std::abs(x - y) / y);
        }
      }
    ctx.metrics["limit_diag_separation"] = sep;
    ctx.metrics["limit_antipodal_modulus_separation"] = sep_off;
    ctx.gate_gt("limit_separation", sep, c.gate("limit_separation"));
  }
}

void run_independence(Context& ctx) {
  const auto& c = ctx.c;
  const MeasureSpec m = c.build_measure();
  const double bound = c.gate("corr_sigmas") / std::sqrt(static_cast<double>(c.replicas));
  auto& curve = ctx.art.csv("correlation.csv", "N,kappa,corr,bound,mean_A,mean_B");
  json rows = json::array();
  for (std::size_t i = 0; i < c.N.size(); ++i) {
    const int N = c.N[i];
    const double kappa = c.kappa_for(i);
    const auto samples = gas_samples(ctx, m, N, kappa, "pair");
    const auto A = counts_in(samples, c.regions[0]);
    const auto B = counts_in(samples, c.regions[1]);
    auto& cc = ctx.art.csv("counts_N" + std::to_string(N) + ".csv", "replica,count_A,count_B");
    for (std::size_t r = 0; r < samples.size(); ++r)
      row(cc, {std::to_string(r), std::to_string(static_cast<long>(A[r])), std::to_string(static_cast<long>(B[r]))});
    const double corr = pearson(A, B);
    const auto mA = mean_estimate(A), mB = mean_estimate(B);
    row(curve, {std::to_string(N), fmt17(kappa), fmt17(corr), fmt17(bound), fmt17(mA.value), fmt17(mB.value)});
    rows.push_back({{"N", N}, {"kappa", kappa}, {"corr", corr}, {"mean_A", mA.value}, {"mean_B", mB.value}});
    ctx.gate_le("abs_correlation_N" + std::to_string(N), std::abs(corr), bound);
  }
  ctx.metrics["correlation"] = rows;
}

void run_counts(Context& ctx) {
  const auto& c = ctx.c;
  const MeasureSpec m = c.build_measure();
  auto& t = ctx.art.csv("counts.csv", "N,kappa,region,expected,complement_error,mc_mean,mc_stderr,z");
  json rows = json::array();
  double worst_complement = 0.0;
  for (std::size_t i = 0; i < c.N.size(); ++i) {
    const int N = c.N[i];
    const double kappa = c.kappa_for(i);
    const BasisParams bp{N, kappa};
    std::vector<PointSample> samples;
    if (c.replicas > 0) samples = gas_samples(ctx, m, N, kappa, "counts");
    for (std::size_t k = 0; k < c.regions.size(); ++k) {
      const auto& reg = c.regions[k];
      const double e = expected_count_radial(m, bp, reg);
      double comp_err = 0.0;
      if (!reg.sector) {
        const double below = expected_count_radial(m, bp, RegionSpec{0.0, reg.r_min});
        const double above = reg.r_max < kInf ? expected_count_radial(m, bp, RegionSpec{reg.r_max, kInf}) : 0.0;
        comp_err = std::abs(e + below + above - N);
        worst_complement = std::max(worst_complement, comp_err);
      }
      json rj{{"N", N}, {"kappa", kappa}, {"region", k}, {"expected", e}, {"complement_error", comp_err}};
      std::string mean_s = "nan", se_s = "nan", z_s = "nan";
      if (!samples.empty()) {
        const auto counts = counts_in(samples, reg);
        const auto est = mean_estimate(counts);
        // a degenerate count (zero variance) matches only when exact
        const double z = est.stderr_ > 0.0 ? std::abs(est.value - e) / est.stderr_
                                           : (std::abs(est.value - e) <= 1e-9 * std::max(1.0, e) ? 0.0 : kInf);
        mean_s = fmt17(est.value);
        se_s = fmt17(est.stderr_);
        z_s = fmt17(z);
        rj["mc_mean"] = est.value;
        rj["mc_stderr"] = est.stderr_;
        ctx.gate_le("count_sigmas_N" + std::to_string(N) + "_R" + std::to_string(k), z, c.gate("count_sigmas"));
      }
      row(t, {std::to_string(N), fmt17(kappa), std::to_string(k), fmt17(e), fmt17(comp_err), mean_s, se_s, z_s});
      rows.push_back(rj);
    }
  }
  ctx.metrics["counts"] = rows;
  ctx.gate_le("complement_error", worst_complement, c.gate("complement_error"));
}

void run_scaling(Context& ctx) {
  const auto& c = ctx.c;
  const MeasureSpec m = c.build_measure();
  const auto rows = scaling_table(m, c.chi, c.N, c.regions[0], ctx.threads);
  auto& t = ctx.art.csv("scaling.csv", "N,kappa,eta,eta_over_sqrt_N,eta_over_sqrt_N_log_N");
  json j = json::array();
  double lo = kInf, hi = 0.0;
  long log_inc = 0, eta_dec = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    row(t, {std::to_string(r.N), fmt17(r.kappa), fmt17(r.eta), fmt17(r.eta_over_sqrt), fmt17(r.eta_over_sqrt_log)});
    j.push_back({{"N", r.N}, {"eta", r.eta}, {"eta_over_sqrt_N", r.eta_over_sqrt}, {"eta_over_sqrt_N_log_N", r.eta_over_sqrt_log}});
    lo = std::min(lo, r.eta_over_sqrt);
    hi = std::max(hi, r.eta_over_sqrt);
    if (i > 0) {
      log_inc += rows[i].eta_over_sqrt_log > rows[i - 1].eta_over_sqrt_log ? 1 : 0;
      eta_dec += rows[i].eta < rows[i - 1].eta ? 1 : 0;
    }
  }
  ctx.metrics["table"] = j;
  ctx.metrics["eta_over_sqrt_N_range"] = {lo, hi};
  ctx.gate_le("eta_sqrt_ratio", lo > 0.0 ? hi / lo : kInf, c.gate("eta_sqrt_ratio"));
  ctx.gate_le("log_column_increases", static_cast<double>(log_inc), c.gate("log_column_increases"));
  ctx.gate_le("eta_decreases", static_cast<double>(eta_dec), c.gate("eta_decreases"));
}

void run_zeros(Context& ctx) {
  const auto& c = ctx.c;
  const GafModel model{c.N.front()};
  model.validate();
  const std::size_t M = static_cast<std::size_t>(c.replicas);
  const std::uint64_t id = stream_id(c, "zeros", model.N);
  const double eps = c.intensity_eps, hw = c.intensity_halfwidth;
  const std::size_t nrad = c.intensity_radii.size();
  // per-replica statistics; samples themselves are not kept
  std::vector<double> cA(M), cB(M), resid(M), count(M);
  std::vector<double> ring(M * nrad);
  const std::size_t keep = std::min<std::size_t>(M, 16);
  std::vector<PointSample> head(keep);
  const double a0 = 4.0 / (kPi * eps * eps), b0 = -6.0 / (kPi * eps * eps * eps * eps);
  parallel_for(M, ctx.threads, [&](std::size_t r) {
    RngStream rng(c.seed, id, r);
    PointSample s = gaf_zeros_sample(model, rng);
    cA[r] = count_in(s, c.regions[0]);
    cB[r] = count_in(s, c.regions[1]);
    count[r] = static_cast<double>(s.points.size());
    resid[r] = s.residuals.empty() ? 0.0 : *std::max_element(s.residuals.begin(), s.residuals.end());
    for (std::size_t k = 0; k < nrad; ++k) {
      const double rad = c.intensity_radii[k];
      double v = 0.0;
      for (const auto& z : s.points) {
        const double r2 = std::norm(z);
        if (rad == 0.0) {
          if (r2 < eps * eps) v += a0 + b0 * r2;
        } else {
          const double x = std::sqrt(r2);
          if (x >= rad - hw && x < rad + hw) v += 1.0;
        }
      }
      ring[r * nrad + k] = v;
    }
    if (r < keep) head[r] = std::move(s);
  });
  samples_csv(ctx.art, "zeros_head.csv", head);
  auto& t = ctx.art.csv("intensity.csv", "radius,estimate,stderr,oracle,rel_err");
  json rows = json::array();
  for (std::size_t k = 0; k < nrad; ++k) {
    const double rad = c.intensity_radii[k];
    std::vector<double> v(M);
    for (std::size_t r = 0; r < M; ++r) v[r] = ring[r * nrad + k];
    auto est = mean_estimate(v);
    double oracle;
    if (rad == 0.0) {
      oracle = disk_kernel(0.0, 0.0).real();
    } else {
      // ring average of 1/(pi (1-r^2)^2) is [1/(1-r^2)] over the ring area / pi
      const double lo = rad - hw, hi = rad + hw;
      const double area = kPi * (hi * hi - lo * lo);
      est.value /= area;
      est.stderr_ /= area;
      oracle = (1.0 / (1.0 - hi * hi) - 1.0 / (1.0 - lo * lo)) / area;
    }
    const double rel = std::abs(est.value - oracle) / oracle;
    row(t, {fmt17(rad), fmt17(est.value), fmt17(est.stderr_), fmt17(oracle), fmt17(rel)});
    rows.push_back({{"radius", rad}, {"estimate", est.value}, {"stderr", est.stderr_}, {"oracle", oracle}, {"rel_err", rel}});
    if (rad == 0.0)
      ctx.gate_le("intensity_rel_err_origin", rel, c.gate("intensity_rel_err_origin"));
    else
      ctx.gate_le("intensity_rel_err_r" + fmt17(rad), rel, c.gate("intensity_rel_err_ring"));
  }
  ctx.metrics["intensity"] = rows;
  const double corr = pearson(cA, cB);
  const double bound = c.gate("corr_sigmas") / std::sqrt(static_cast<double>(M));
  ctx.metrics["count_correlation"] = corr;
  ctx.metrics["mean_root_count"] = mean_estimate(count).value;
  const double worst = M ? *std::max_element(resid.begin(), resid.end()) : 0.0;
  ctx.metrics["max_root_residual"] = worst;
  ctx.gate_le("abs_correlation", std::abs(corr), bound);
  ctx.gate_le("max_root_residual", worst, c.gate("max_root_residual"));
  auto& cc = ctx.art.csv("zero_counts.csv", "replica,count_A,count_B");
  for (std::size_t r = 0; r < M; ++r)
    row(cc, {std::to_string(r), std::to_string(static_cast<long>(cA[r])), std::to_string(static_cast<long>(cB[r]))});
}

void run_sampler_validation(Context& ctx) {
  const auto& c = ctx.c;
  const MeasureSpec m = c.build_measure();
  const std::size_t M = static_cast<std::size_t>(c.replicas);
  auto& h = ctx.art.csv("histograms.csv", "N,cell,hkpv,bruteforce");
  json rows = json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < c.N.size(); ++i) {
    const int N = c.N[i];
    const double kappa = c.kappa_for(i);
    const HkpvSampler hk(make_kernel(m, N, kappa));
    const BruteforceSampler bf(m, kappa, N);
    const auto id_h = stream_id(c, "hkpv", N), id_b = stream_id(c, "bruteforce", N);
    const auto sh = run_replicas(M, ctx.threads, [&](std::uint64_t r) {
      RngStream rng(c.seed, id_h, r);
      return hk.sample(rng);
    });
    const auto sb = run_replicas(M, ctx.threads, [&](std::uint64_t r) {
      RngStream rng(c.seed, id_b, r);
      return bf.sample(rng);
    });
    const auto hh = sorted_moduli_histogram(sh, c.histogram_bins);
    const auto hb = sorted_moduli_histogram(sb, c.histogram_bins);
    for (std::size_t k = 0; k < hh.size(); ++k)
      row(h, {std::to_string(N), std::to_string(k), fmt17(hh[k]), fmt17(hb[k])});
    const double tv = tv_distance(hh, hb);
    worst = std::max(worst, tv);
    rows.push_back({{"N", N}, {"kappa", kappa}, {"tv", tv}});
    ctx.gate_le("tv_N" + std::to_string(N), tv, c.gate("tv_max"));
  }
  ctx.metrics["tv"] = rows;
  // Kostlan tail P(R_0 > 1)
  const int n = c.kostlan_N;
  const KostlanSampler ks(m, BasisParams{n, kappa_rule(n, c.chi)});
  const double p = ks.law(0).ccdf(1.0);
  const auto id_k = stream_id(c, "kostlan", n);
  std::vector<double> hit(M);
  parallel_for(M, ctx.threads, [&](std::size_t r) {
    RngStream rng(c.seed, id_k, r);
    hit[r] = ks.moduli(rng)[0] > 1.0 ? 1.0 : 0.0;
  });
  const double f = mean_estimate(hit).value;
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(M));
  const double z = sigma > 0.0 ? std::abs(f - p) / sigma : (f == p ? 0.0 : kInf);
  ctx.metrics["kostlan_tail"] = {{"N", n}, {"exact", p}, {"empirical", f}, {"sigmas", z}};
  ctx.gate_le("kostlan_tail_sigmas", z, c.gate("kostlan_tail_sigmas"));
}

void run_sample(Context& ctx) {
  const auto& c = ctx.c;
  for (std::size_t i = 0; i < c.N.size(); ++i) {
    const int N = c.N[i];
    std::vector<PointSample> samples;
    if (c.sampler == "zeros") {
      const GafModel model{N};
      const auto id = stream_id(c, "zeros", N);
      samples = run_replicas(c.replicas, ctx.threads, [&](std::uint64_t r) {
        RngStream rng(c.seed, id, r);
        return gaf_zeros_sample(model, rng);
      });
    } else {
      samples = gas_samples(ctx, c.build_measure(), N, c.kappa_for(i), "sample");
    }
    samples_csv(ctx.art, "samples_N" + std::to_string(N) + ".csv", samples);
    ctx.metrics["N" + std::to_string(N)] = {{"replicas", samples.size()}};
  }
}

std::string report_text(const std::string& experiment, const std::string& hash, std::uint64_t seed,
                        const json& metrics, const std::vector<Gate>& gates) {
  json g = json::array();
  for (const auto& x : gates)
    g.push_back({{"name", x.name}, {"value", from_double(x.value)}, {"threshold", x.threshold}, {"pass", x.pass}});
  json j{{"experiment", experiment}, {"config_hash", hash}, {"seed", seed}, {"metrics", metrics}, {"gates", g}};
  return j.dump(2) + "\n";
}

void write_all(const std::filesystem::path& dir, const std::string& hash, std::uint64_t seed,
               const std::string& report, std::deque<Csv>& files, RunResult& res) {
  std::filesystem::create_directories(dir);
  files.push_back({"report.json", report});
  json list = json::array();
  for (const auto& f : files) {
    std::ofstream out(dir / f.name, std::ios::binary);
    out << f.body;
    if (!out) throw Error("cannot write " + (dir / f.name).string());
    res.files.push_back(f.name);
    list.push_back({{"name", f.name}, {"bytes", f.body.size()}, {"fnv1a", hex64(fnv1a(f.body))}});
  }
  json man{{"config_hash", hash}, {"seed", seed}, {"library_version", library_version()}, {"files", list}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << man.dump(2) << "\n";
  if (!out) throw Error("cannot write manifest.json");
  res.files.push_back("manifest.json");
}

}  // namespace

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
  RunResult res;
  res.errors = validate_config(config);
  if (!res.errors.empty()) {
    res.exit_code = 2;
    return res;
  }
  const std::string hash = config_hash(config);
  Context ctx{config, options.threads == 0 ? default_threads() : options.threads, json::object(), {}, Artifacts(hash)};
  switch (config.kind) {
    case ExperimentKind::KernelConvergence: run_kernel_convergence(ctx); break;
    case ExperimentKind::AnnulusQ: run_annulus_q(ctx); break;
    case ExperimentKind::Independence: run_independence(ctx); break;
    case ExperimentKind::Zeros: run_zeros(ctx); break;
    case ExperimentKind::Counts: run_counts(ctx); break;
    case ExperimentKind::Scaling: run_scaling(ctx); break;
    case ExperimentKind::SamplerValidation: run_sampler_validation(ctx); break;
    case ExperimentKind::Sample: run_sample(ctx); break;
  }
  res.gates = ctx.gates;
  res.report_json = report_text(kind_name(config.kind), hash, config.seed, ctx.metrics, ctx.gates);
  res.exit_code = std::all_of(ctx.gates.begin(), ctx.gates.end(), [](const Gate& g) { return g.pass; }) ? 0 : 1;
  if (options.write_files) write_all(config.output, hash, config.seed, res.report_json, ctx.art.files(), res);
  return res;
}

namespace {

struct GridFile {
  std::vector<Complex> pts;
  std::vector<double> values;
  std::string hash;
};

GridFile read_grid_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path);
  GridFile g;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# config_hash=", 0) == 0) g.hash = line.substr(14);
      continue;
    }
    if (!header) {
      if (line != "re,im,value") throw InvalidArgument(path + ": expected header re,im,value");
      header = true;
      continue;
    }
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected three columns");
    try {
      g.pts.emplace_back(std::stod(a), std::stod(b));
      g.values.push_back(std::stod(c));
    } catch (const std::exception&) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  if (!header) throw InvalidArgument(path + ": empty file");
  return g;
}

}  // namespace

RunResult compare_csv(const std::string& a_path, const std::string& b_path, const std::string& out_dir,
                      double threshold) {
  RunResult res;
  GridFile A, B;
  try {
    A = read_grid_csv(a_path);
    B = read_grid_csv(b_path);
    if (A.pts.size() != B.pts.size()) throw InvalidArgument("grids differ in size");
    for (std::size_t i = 0; i < A.pts.size(); ++i)
      if (std::abs(A.pts[i] - B.pts[i]) > 1e-12 * std::max(1.0, std::abs(B.pts[i])))
        throw InvalidArgument("grids differ at row " + std::to_string(i + 1));
    for (double v : B.values)
      if (!(v > 0.0)) throw InvalidArgument("reference values must be positive");
  } catch (const InvalidArgument& e) {
    res.errors.push_back(e.what());
    res.exit_code = 2;
    return res;
  }
  const auto rep = compare_grids(A.pts, A.values, B.values);
  const std::string hash = hex64(fnv1a(A.hash + "|" + B.hash + "|" + fmt17(threshold)));
  Artifacts art(hash);
  auto& s = art.csv("comparison.csv", "re,im,a,b,rel_diff");
  for (std::size_t i = 0; i < rep.grid.size(); ++i)
    row(s, {fmt17(rep.grid[i].real()), fmt17(rep.grid[i].imag()), fmt17(rep.a[i]), fmt17(rep.b[i]),
            fmt17(rep.rel_diff[i])});
  res.gates.push_back({"sup_rel_diff", rep.sup, threshold, rep.sup <= threshold});
  json metrics{{"a", a_path}, {"b", b_path}, {"a_config_hash", A.hash}, {"b_config_hash", B.hash},
               {"points", rep.grid.size()}, {"sup_rel_diff", rep.sup}};
  res.report_json = report_text("compare", hash, 0, metrics, res.gates);
  res.exit_code = res.gates.front().pass ? 0 : 1;
  write_all(out_dir, hash, 0, res.report_json, art.files(), res);
  return res;
}

}  // namespace jellium
