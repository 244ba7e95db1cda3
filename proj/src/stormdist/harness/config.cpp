// SPDX-License-Identifier: Apache-2.0
#include "stormdist/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "stormdist/errors.hpp"

namespace stormdist::harness {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError((path.empty() ? "config" : path) + ": expected an object");
}

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigKeyError(join(path, key));
  }
}

const json& required(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigKeyError(join(path, key), true);
  return *it;
}

double as_double(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(where + ": must be finite");
  return d;
}

std::uint64_t as_u64(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw ValidationError(where + ": expected a non-negative integer");
}

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ValidationError(where + ": expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ValidationError(where + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> as_vector(const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_double(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Scalar or array of non-negative integers.
std::vector<std::uint64_t> as_u64_list(const json& v, const std::string& where) {
  std::vector<std::uint64_t> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(as_u64(v[i], where + "[" + std::to_string(i) + "]"));
    }
  } else {
    out.push_back(as_u64(v, where));
  }
  if (out.empty()) throw ValidationError(where + ": list must be non-empty");
  return out;
}

std::optional<double> opt_double(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return as_double(*it, join(path, key));
}

ScheduleConfig parse_schedule(const json& j) {
  const std::string path = "schedule";
  require_object(j, path);
  reject_unknown(j, path,
                 {"b", "alpha", "kappa_bar", "c", "w0", "noise_scale", "eta", "force_a_one",
                  "fresh_sample_step5"});
  ScheduleConfig s;
  if (auto v = opt_double(j, "b", path)) s.b = *v;
  if (auto v = opt_double(j, "alpha", path)) s.alpha = *v;
  s.kappa_bar = opt_double(j, "kappa_bar", path);
  s.c = opt_double(j, "c", path);
  s.w0 = opt_double(j, "w0", path);
  s.noise_scale = opt_double(j, "noise_scale", path);
  s.eta = opt_double(j, "eta", path);
  if (j.contains("force_a_one")) s.force_a_one = as_bool(j["force_a_one"], "schedule.force_a_one");
  if (j.contains("fresh_sample_step5")) {
    s.fresh_sample_step5 = as_bool(j["fresh_sample_step5"], "schedule.fresh_sample_step5");
  }
  if (s.eta && !(*s.eta > 0.0)) throw ValidationError("schedule.eta: must be > 0");
  return s;
}

}  // namespace

ProblemConfig parse_problem(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path,
                 {"family", "d", "k", "centers", "sigma", "lambda", "region_radius", "seed",
                  "homogeneous", "x_init"});
  ProblemConfig p;
  const std::string family = as_string(required(j, path, "family"), join(path, "family"));
  const auto fam = parse_family(family);
  if (!fam) {
    throw ValidationError(join(path, "family") + ": unknown family '" + family +
                          "' (het_quadratic, sigmoid_quadratic)");
  }
  p.family = *fam;
  p.dim = as_u64(required(j, path, "d"), join(path, "d"));
  p.workers = as_u64(required(j, path, "k"), join(path, "k"));
  if (auto v = opt_double(j, "sigma", path)) p.sigma = *v;
  if (auto v = opt_double(j, "lambda", path)) p.lambda = *v;
  if (auto v = opt_double(j, "region_radius", path)) {
    if (!(*v > 0.0)) throw ValidationError(join(path, "region_radius") + ": must be > 0");
    p.region_radius = *v;
  }
  if (j.contains("seed")) p.seed = as_u64(j["seed"], join(path, "seed"));
  if (j.contains("homogeneous")) p.homogeneous = as_bool(j["homogeneous"], join(path, "homogeneous"));
  if (j.contains("centers") && !j["centers"].is_null()) {
    const json& c = j["centers"];
    if (!c.is_array()) throw ValidationError(join(path, "centers") + ": expected array of arrays");
    for (std::size_t k = 0; k < c.size(); ++k) {
      p.centers.emplace_back(as_vector(c[k], join(path, "centers") + "[" + std::to_string(k) + "]"));
    }
  }
  if (j.contains("x_init") && !j["x_init"].is_null()) {
    p.x_init = as_vector(j["x_init"], join(path, "x_init"));
  }
  return p;
}

json problem_to_json(const ProblemConfig& config) {
  json j;
  j["family"] = std::string(to_string(config.family));
  j["d"] = config.dim;
  j["k"] = config.workers;
  j["sigma"] = config.sigma;
  j["lambda"] = config.lambda;
  j["seed"] = config.seed;
  j["homogeneous"] = config.homogeneous;
  if (config.region_radius > 0.0) j["region_radius"] = config.region_radius;
  if (!config.centers.empty()) {
    json c = json::array();
    for (const auto& mu : config.centers) c.push_back(mu.values());
    j["centers"] = c;
  }
  if (!config.x_init.empty()) j["x_init"] = config.x_init;
  return j;
}

RunConfig parse_run_config(const json& j) {
  require_object(j, "");
  reject_unknown(j, "",
                 {"problem", "algo", "T", "K", "seeds", "schedule", "output_dir", "reservoir_cap",
                  "epsilon"});
  RunConfig cfg;
  cfg.problem = parse_problem(required(j, "", "problem"));

  const json& algo = required(j, "", "algo");
  const auto parse_one = [](const json& v) {
    const std::string name = as_string(v, "algo");
    const auto a = parse_algorithm(name);
    if (!a) throw ValidationError("algo: unknown algorithm '" + name + "' (adstorm, dstorm, dsgd)");
    return *a;
  };
  if (algo.is_array()) {
    for (const auto& v : algo) cfg.algos.push_back(parse_one(v));
  } else {
    cfg.algos.push_back(parse_one(algo));
  }
  if (cfg.algos.empty()) throw ValidationError("algo: list must be non-empty");

  cfg.rounds = as_u64_list(required(j, "", "T"), "T");
  for (auto t : cfg.rounds) {
    if (t < 1) throw ValidationError("T: must be >= 1");
  }
  if (j.contains("K")) {
    for (auto k : as_u64_list(j["K"], "K")) {
      if (k < 1) throw ValidationError("K: must be >= 1");
      cfg.workers.push_back(static_cast<std::size_t>(k));
    }
  } else {
    cfg.workers.push_back(cfg.problem.workers);
  }
  cfg.seeds = j.contains("seeds") ? as_u64_list(j["seeds"], "seeds") : std::vector<std::uint64_t>{0};
  if (j.contains("schedule")) cfg.schedule = parse_schedule(j["schedule"]);
  if (j.contains("output_dir")) cfg.output_dir = as_string(j["output_dir"], "output_dir");
  if (j.contains("reservoir_cap")) {
    cfg.reservoir_cap = as_u64(j["reservoir_cap"], "reservoir_cap");
    if (cfg.reservoir_cap < 1) throw ValidationError("reservoir_cap: must be >= 1");
  }
  if (auto v = opt_double(j, "epsilon", "")) {
    if (!(*v > 0.0)) throw ValidationError("epsilon: must be > 0");
    cfg.epsilon = v;
  }

  validate_run_config(cfg);
  return cfg;
}

void validate_run_config(const RunConfig& config) {
  if (config.algos.empty()) throw ValidationError("algo: list must be non-empty");
  if (config.rounds.empty()) throw ValidationError("T: list must be non-empty");
  if (config.workers.empty()) throw ValidationError("K: list must be non-empty");
  if (config.seeds.empty()) throw ValidationError("seeds: list must be non-empty");
  for (auto k : config.workers) {
    const ProblemSpec spec = with_workers(config.problem, k);
    for (auto algo : config.algos) {
      if (algo == Algorithm::kDSgd) {
        if (config.schedule.eta) continue;
        algo = Algorithm::kDStorm;  // D-SGD follows the non-adaptive steps
      }
      (void)resolve_schedule(config, spec, algo);
    }
  }
}

RunConfig parse_run_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str());
}

ScheduleParams resolve_schedule(const RunConfig& config, const ProblemSpec& spec, Algorithm algo) {
  const ScheduleConfig& s = config.schedule;
  double noise_scale = 0.0;
  if (s.noise_scale) {
    noise_scale = *s.noise_scale;
  } else {
    noise_scale = algo == Algorithm::kAdStorm ? spec.gradient_bound : std::sqrt(spec.sigma_sq);
  }
  if (!(noise_scale >= 0.0)) throw ValidationError("schedule.noise_scale: must be >= 0");
  ScheduleOverrides overrides{s.kappa_bar, s.c, s.w0};
  return derive_params(spec.workers, spec.smoothness, noise_scale, s.b, s.alpha, overrides);
}

}  // namespace stormdist::harness
