#include <fstream>

#include <json.hpp>

#include "sdae/cli.hpp"
#include "sdae/errors.hpp"

namespace sdae::cli {

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key))
    throw ConfigError("missing config key '" + where + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

Interp parse_interp(const std::string& s) {
  if (s == "constant") return Interp::kConstant;
  if (s == "linear") return Interp::kLinear;
  throw ConfigError("interp must be 'constant' or 'linear', got '" + s + "'");
}

ModelConfig parse_model(const json& j) {
  ModelConfig model;
  model.name = require<std::string>(j, "name", "model.");
  if (model.name != "pendulum" && model.name != "fiber" &&
      model.name != "langevin")
    throw ConfigError("model.name must be pendulum | fiber | langevin");
  model.c_g = get_or(j, "c_g", 0.0);
  model.c_gravity = get_or(j, "c_gravity", 1.0);
  model.num_points = get_or(j, "num_points", 3);
  model.ds = get_or(j, "ds", 1.0);
  model.forces.gravity = get_or(j, "gravity", 1.0);
  model.forces.bending = get_or(j, "bending", 0.1);
  model.forces.sigma = get_or(j, "sigma", 1.0);
  model.friction = get_or(j, "friction", 1.0);
  model.sigma = get_or(j, "sigma", 1.0);
  model.well = get_or(j, "well", 1.0);
  model.mutation = get_or<std::string>(j, "mutation", "");
  if (!model.mutation.empty() && model.mutation != "dg_sign_flip")
    throw ConfigError("model.mutation must be empty or 'dg_sign_flip'");
  return model;
}

}  // namespace

RunConfig load_config(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " +
                      e.what());
  }

  // Flag overrides become part of the effective config before parsing, so
  // the echoed config is the complete experiment record.
  if (overrides.seed) j["seed"] = *overrides.seed;
  if (overrides.out_dir) j["out_dir"] = *overrides.out_dir;
  if (overrides.threads) j["threads"] = *overrides.threads;
  if (overrides.interp) j["interp"] = *overrides.interp;

  RunConfig config;
  if (!j.contains("model")) throw ConfigError("missing config key 'model'");
  config.model = parse_model(j.at("model"));

  config.horizon = require<double>(j, "T", "");
  if (!(config.horizon > 0.0)) throw ConfigError("T must be positive");
  config.seed = get_or<std::uint64_t>(j, "seed", 0);
  config.interp = parse_interp(get_or<std::string>(j, "interp", "constant"));
  config.threads = get_or(j, "threads", 0);
  config.out_dir = get_or<std::string>(j, "out_dir", "out");

  if (j.contains("stepper")) {
    const json& s = j.at("stepper");
    config.stepper.newton_tol = get_or(s, "newton_tol", 1e-12);
    config.stepper.newton_max_iter = get_or(s, "newton_max_iter", 25);
    config.stepper.homotopy_max_depth = get_or(s, "homotopy_max_depth", 10);
    config.stepper.gram_cond_limit = get_or(s, "gram_cond_limit", 1e12);
    const std::string mode =
        get_or<std::string>(s, "kappa_bound_mode", "enforce");
    if (mode == "enforce")
      config.stepper.kappa_bound_mode = KappaBoundMode::kEnforce;
    else if (mode == "warn")
      config.stepper.kappa_bound_mode = KappaBoundMode::kWarn;
    else
      throw ConfigError("stepper.kappa_bound_mode must be enforce | warn");
    if (!(config.stepper.newton_tol > 0.0))
      throw ConfigError("stepper.newton_tol must be positive");
    if (config.stepper.newton_max_iter < 1)
      throw ConfigError("stepper.newton_max_iter must be >= 1");
  }

  if (j.contains("simulate")) {
    config.simulate_n = require<int>(j.at("simulate"), "N", "simulate.");
    if (config.simulate_n < 1) throw ConfigError("simulate.N must be >= 1");
  }

  if (j.contains("converge")) {
    const json& c = j.at("converge");
    config.resolutions =
        require<std::vector<int>>(c, "resolutions", "converge.");
    config.n_ref = require<int>(c, "N_ref", "converge.");
    config.samples = require<int>(c, "samples", "converge.");
    config.p = get_or(c, "p", 2.0);
    if (config.samples < 2)
      throw ConfigError("converge.samples must be >= 2");
    if (!(config.p >= 1.0)) throw ConfigError("converge.p must be >= 1");
    for (std::size_t i = 0; i < config.resolutions.size(); ++i) {
      const int n = config.resolutions[i];
      if (n < 1 || config.n_ref % n != 0)
        throw ConfigError("converge.resolutions entry " + std::to_string(n) +
                          " does not divide N_ref");
      const int ratio = config.n_ref / n;
      if ((ratio & (ratio - 1)) != 0)
        throw ConfigError("converge.N_ref / " + std::to_string(n) +
                          " must be a power of two");
      if (i > 0 && n <= config.resolutions[i - 1])
        throw ConfigError("converge.resolutions must be strictly increasing");
    }
  }

  if (j.contains("compare")) {
    const json& c = j.at("compare");
    config.compare_resolutions =
        require<std::vector<int>>(c, "resolutions", "compare.");
    config.compare_samples = require<int>(c, "samples", "compare.");
    if (config.compare_samples < 2)
      throw ConfigError("compare.samples must be >= 2");
    const int n_max = *std::max_element(config.compare_resolutions.begin(),
                                        config.compare_resolutions.end());
    for (int n : config.compare_resolutions) {
      if (n < 1 || n_max % n != 0 || ((n_max / n) & (n_max / n - 1)) != 0)
        throw ConfigError(
            "compare.resolutions must be dyadic divisors of their maximum");
    }
  }

  if (j.contains("validate")) {
    const json& v = j.at("validate");
    config.validate_samples = get_or(v, "samples", 100);
    config.validate_fd_step = get_or(v, "fd_step", 1e-5);
    config.cg_failure_fatal = get_or(v, "cg_failure_fatal", false);
    if (config.validate_samples < 1)
      throw ConfigError("validate.samples must be >= 1");
    if (!(config.validate_fd_step > 0.0))
      throw ConfigError("validate.fd_step must be positive");
  }

  config.echo_json = j.dump(2);
  return config;
}

SdaeProblem build_model(const ModelConfig& model) {
  SdaeProblem problem;
  if (model.name == "pendulum") {
    problem = make_pendulum(model.c_gravity,
                            model.c_g > 0.0 ? model.c_g : 2.0);
  } else if (model.name == "fiber") {
    problem = make_fiber_chain(model.num_points, model.ds, model.forces,
                               model.c_g > 0.0 ? model.c_g : 4.0);
  } else if (model.name == "langevin") {
    const double well = model.well;
    auto grad = [well](const Vec& x) {
      Vec g = Vec::Zero(x.size());
      const double z = x(x.size() - 1);
      g(x.size() - 1) = 4.0 * well * z * (z * z - 0.5);
      return g;
    };
    problem = make_langevin(grad, model.friction, model.sigma,
                            unit_sphere_geometry(
                                3, model.c_g > 0.0 ? model.c_g : 2.0));
    // Constants sized for the validation sampling ball (||r|| <= 2,
    // ||v|| <= 3); the potential gradient is cubic.
    problem.growth_meta = GrowthMeta{
        model.friction + 20.0 * well + 1.0, 3.0,
        model.sigma * 2.0 + 1.0};
  } else {
    throw ConfigError("unknown model '" + model.name + "'");
  }

  if (model.mutation == "dg_sign_flip") {
    auto original = problem.geometry.dg;
    problem.geometry.dg = [original](const Vec& x) {
      return Mat(-original(x));
    };
  }
  return problem;
}

}  // namespace sdae::cli
