#include "dmcc/config.hpp"

#include <algorithm>
#include <initializer_list>

#include <fmt/format.h>

#include "dmcc/csv.hpp"

namespace dmcc::config {

using json = nlohmann::ordered_json;
using experiment::ExperimentConfig;

namespace {

void require_object(const json& j, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", where));
}

void reject_unknown_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(fmt::format("unknown key '{}' in {}", item.key(), where));
    }
  }
}

template <class T>
T get(const json& j, std::string_view key, std::string_view where) {
  try {
    return j.at(std::string(key)).get<T>();
  } catch (const json::exception& err) {
    throw ConfigError(fmt::format("{}.{}: {}", where, key, err.what()));
  }
}

template <class T>
void read_optional(const json& j, std::string_view key, std::string_view where, T& out) {
  if (j.contains(std::string(key))) out = get<T>(j, key, where);
}

std::size_t get_count(const json& j, std::string_view key, std::string_view where) {
  const auto& v = j.at(std::string(key));
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(fmt::format("{}.{} must be a nonnegative integer", where, key));
  }
  return v.get<std::size_t>();
}

void parse_topology(const json& j, experiment::TopologySpec& spec) {
  require_object(j, "topology");
  reject_unknown_keys(j, "topology", {"n", "region", "radius", "seed", "file"});
  if (j.contains("n")) spec.n = get_count(j, "n", "topology");
  read_optional(j, "region", "topology", spec.region);
  read_optional(j, "radius", "topology", spec.radius);
  if (j.contains("seed")) spec.seed = get<std::uint64_t>(j, "seed", "topology");
  if (j.contains("file")) spec.file = get<std::string>(j, "file", "topology");
}

void parse_model(const json& j, experiment::ModelSpec& spec) {
  require_object(j, "model");
  reject_unknown_keys(j, "model", {"m", "seed", "regressor_variance", "regenerate_per_run"});
  if (j.contains("m")) spec.m = get_count(j, "m", "model");
  if (j.contains("seed")) spec.seed = get<std::uint64_t>(j, "seed", "model");
  if (j.contains("regressor_variance")) {
    const auto& v = j.at("regressor_variance");
    if (v.is_number()) {
      spec.regressor_variance = {v.get<double>()};
    } else {
      spec.regressor_variance = get<std::vector<double>>(j, "regressor_variance", "model");
    }
  }
  read_optional(j, "regenerate_per_run", "model", spec.regenerate_per_run);
}

void parse_noise(const json& j, signal::NoiseModel& noise) {
  require_object(j, "noise");
  reject_unknown_keys(j, "noise", {"kind", "gaussian_variance", "arrival_probability", "stable"});
  if (j.contains("kind")) {
    const auto kind = get<std::string>(j, "kind", "noise");
    if (kind == "gaussian") {
      noise.kind = signal::NoiseKind::gaussian;
    } else if (kind == "impulsive") {
      noise.kind = signal::NoiseKind::impulsive;
    } else {
      throw ConfigError(fmt::format("noise.kind must be 'gaussian' or 'impulsive', got '{}'", kind));
    }
  }
  read_optional(j, "gaussian_variance", "noise", noise.gaussian_variance);
  read_optional(j, "arrival_probability", "noise", noise.arrival_probability);
  if (j.contains("stable")) {
    const auto& s = j.at("stable");
    require_object(s, "noise.stable");
    reject_unknown_keys(s, "noise.stable", {"alpha", "beta", "lambda", "delta"});
    double alpha = noise.stable.alpha(), beta = noise.stable.beta();
    double lambda = noise.stable.lambda(), delta = noise.stable.delta();
    read_optional(s, "alpha", "noise.stable", alpha);
    read_optional(s, "beta", "noise.stable", beta);
    read_optional(s, "lambda", "noise.stable", lambda);
    read_optional(s, "delta", "noise.stable", delta);
    try {
      noise.stable = signal::AlphaStableParams(alpha, beta, lambda, delta);
    } catch (const std::invalid_argument& err) {
      throw ConfigError(fmt::format("noise.stable: {}", err.what()));
    }
  }
}

diffusion::AlgorithmConfig parse_algorithm(const json& j, std::size_t index) {
  const std::string where = fmt::format("algorithms[{}]", index);
  require_object(j, where);
  reject_unknown_keys(j, where,
                      {"name", "criterion", "mode", "eta", "sigma", "p", "window", "combiner", "beta_combiner",
                       "alpha_combiner", "delta_combiner", "eta_per_node", "sigma_per_node"});
  diffusion::AlgorithmConfig a;
  try {
    a.name = get<std::string>(j, "name", where);
    a.params.criterion = diffusion::parse_criterion(get<std::string>(j, "criterion", where));
    if (j.contains("mode")) a.mode = diffusion::parse_mode(get<std::string>(j, "mode", where));
    read_optional(j, "eta", where, a.params.eta);
    read_optional(j, "sigma", where, a.params.sigma);
    read_optional(j, "p", where, a.params.p);
    if (j.contains("window")) a.params.window = get_count(j, "window", where);
    read_optional(j, "eta_per_node", where, a.eta_per_node);
    read_optional(j, "sigma_per_node", where, a.sigma_per_node);

    // One combiner for the active phase; general mode may set each matrix.
    const auto combiner = network::parse_combination_rule(
        j.contains("combiner") ? get<std::string>(j, "combiner", where) : std::string("metropolis"));
    a.beta = a.delta = combiner;
    a.alpha = network::CombinationRule::identity;
    if (j.contains("beta_combiner")) {
      a.beta = network::parse_combination_rule(get<std::string>(j, "beta_combiner", where));
    }
    if (j.contains("alpha_combiner")) {
      a.alpha = network::parse_combination_rule(get<std::string>(j, "alpha_combiner", where));
    }
    if (j.contains("delta_combiner")) {
      a.delta = network::parse_combination_rule(get<std::string>(j, "delta_combiner", where));
    }
    a.params.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(fmt::format("{}: {}", where, err.what()));
  }
  return a;
}

void parse_run(const json& j, experiment::RunSpec& run) {
  require_object(j, "run");
  reject_unknown_keys(j, "run", {"iterations", "monte_carlo_runs", "seed", "steady_window"});
  if (j.contains("iterations")) run.iterations = get_count(j, "iterations", "run");
  if (j.contains("monte_carlo_runs")) run.monte_carlo_runs = get_count(j, "monte_carlo_runs", "run");
  if (j.contains("seed")) run.seed = get<std::uint64_t>(j, "seed", "run");
  if (j.contains("steady_window")) run.steady_window = get_count(j, "steady_window", "run");
}

void parse_sweep(const json& j, experiment::SweepGrid& grid) {
  require_object(j, "sweep");
  for (const auto& item : j.items()) {
    const auto names = experiment::sweep_parameter_names();
    if (std::find(names.begin(), names.end(), item.key()) == names.end()) {
      throw experiment::UnknownParameterError(fmt::format("unknown sweep parameter '{}'", item.key()));
    }
    grid.emplace_back(item.key(), get<std::vector<double>>(j, item.key(), "sweep"));
  }
}

void parse_analysis(const json& j, experiment::AnalysisSpec& spec) {
  require_object(j, "analysis");
  reject_unknown_keys(j, "analysis", {"algorithm", "pilot_runs", "kernel_samples", "tau"});
  if (j.contains("algorithm")) spec.algorithm = get<std::string>(j, "algorithm", "analysis");
  if (j.contains("pilot_runs")) spec.pilot_runs = get_count(j, "pilot_runs", "analysis");
  if (j.contains("kernel_samples")) spec.kernel_samples = get_count(j, "kernel_samples", "analysis");
  if (j.contains("tau")) spec.tau = get<double>(j, "tau", "analysis");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(fmt::format("invalid JSON: {}", err.what()));
  }
  require_object(doc, "config");
  reject_unknown_keys(doc, "config", {"topology", "model", "noise", "algorithms", "run", "sweep", "analysis"});

  ExperimentConfig config;
  if (doc.contains("topology")) parse_topology(doc.at("topology"), config.topology);
  if (doc.contains("model")) parse_model(doc.at("model"), config.model);
  if (doc.contains("noise")) parse_noise(doc.at("noise"), config.noise);
  if (!doc.contains("algorithms") || !doc.at("algorithms").is_array()) {
    throw ConfigError("config.algorithms must be an array");
  }
  const auto& algos = doc.at("algorithms");
  for (std::size_t i = 0; i < algos.size(); ++i) config.algorithms.push_back(parse_algorithm(algos[i], i));
  if (doc.contains("run")) parse_run(doc.at("run"), config.run);
  if (doc.contains("sweep")) parse_sweep(doc.at("sweep"), config.sweep);
  if (doc.contains("analysis")) parse_analysis(doc.at("analysis"), config.analysis);

  try {
    config.validate();
  } catch (const experiment::UnknownParameterError&) {
    throw;
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text_file(path);
  } catch (const io::IoError& err) {
    throw ConfigError(err.what());
  }
  ExperimentConfig config = parse_config(text);
  // Imported topology paths are relative to the config file.
  if (config.topology.file && std::filesystem::path(*config.topology.file).is_relative()) {
    config.topology.file = (path.parent_path() / *config.topology.file).string();
  }
  return config;
}

json to_json(const ExperimentConfig& config) {
  json out;
  json topology;
  topology["n"] = config.topology.n;
  topology["region"] = config.topology.region;
  topology["radius"] = config.topology.radius;
  if (config.topology.seed) topology["seed"] = *config.topology.seed;
  if (config.topology.file) topology["file"] = *config.topology.file;
  out["topology"] = topology;

  json model;
  model["m"] = config.model.m;
  if (config.model.seed) model["seed"] = *config.model.seed;
  if (config.model.regressor_variance.size() == 1) {
    model["regressor_variance"] = config.model.regressor_variance.front();
  } else {
    model["regressor_variance"] = config.model.regressor_variance;
  }
  model["regenerate_per_run"] = config.model.regenerate_per_run;
  out["model"] = model;

  json noise;
  noise["kind"] = config.noise.kind == signal::NoiseKind::gaussian ? "gaussian" : "impulsive";
  noise["gaussian_variance"] = config.noise.gaussian_variance;
  noise["arrival_probability"] = config.noise.arrival_probability;
  noise["stable"] = {{"alpha", config.noise.stable.alpha()},
                     {"beta", config.noise.stable.beta()},
                     {"lambda", config.noise.stable.lambda()},
                     {"delta", config.noise.stable.delta()}};
  out["noise"] = noise;

  json algos = json::array();
  for (const auto& a : config.algorithms) {
    json j;
    j["name"] = a.name;
    j["criterion"] = std::string(diffusion::to_string(a.params.criterion));
    j["mode"] = std::string(diffusion::to_string(a.mode));
    j["eta"] = a.params.eta;
    j["sigma"] = a.params.sigma;
    j["p"] = a.params.p;
    j["window"] = a.params.window;
    j["beta_combiner"] = std::string(network::to_string(a.beta));
    j["alpha_combiner"] = std::string(network::to_string(a.alpha));
    j["delta_combiner"] = std::string(network::to_string(a.delta));
    if (!a.eta_per_node.empty()) j["eta_per_node"] = a.eta_per_node;
    if (!a.sigma_per_node.empty()) j["sigma_per_node"] = a.sigma_per_node;
    algos.push_back(j);
  }
  out["algorithms"] = algos;

  out["run"] = {{"iterations", config.run.iterations},
                {"monte_carlo_runs", config.run.monte_carlo_runs},
                {"seed", config.run.seed},
                {"steady_window", config.run.steady_window}};
  if (!config.sweep.empty()) {
    json sweep = json::object();
    for (const auto& [name, values] : config.sweep) sweep[name] = values;
    out["sweep"] = sweep;
  }
  json analysis = json::object();
  if (config.analysis.algorithm) analysis["algorithm"] = *config.analysis.algorithm;
  if (config.analysis.pilot_runs) analysis["pilot_runs"] = *config.analysis.pilot_runs;
  analysis["kernel_samples"] = config.analysis.kernel_samples;
  if (config.analysis.tau) analysis["tau"] = *config.analysis.tau;
  out["analysis"] = analysis;
  return out;
}

}  // namespace dmcc::config
