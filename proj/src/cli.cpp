#include "dmcc/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "dmcc/analysis.hpp"
#include "dmcc/config.hpp"
#include "dmcc/csv.hpp"
#include "dmcc/experiment.hpp"
#include "dmcc/plot.hpp"
#include "dmcc/rng.hpp"
#include "dmcc/signal.hpp"

namespace dmcc::cli {

namespace fs = std::filesystem;
using experiment::ExperimentConfig;

namespace {

enum class Format { csv, svg, both };

struct Invocation {
  std::string subcommand;
  fs::path config;
  fs::path out = ".";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> algos;
  Format format = Format::both;

  bool want_csv() const { return format != Format::svg; }
  bool want_svg() const { return format != Format::csv; }
};

// Exit-code carrier for failures detected by the driver itself.
struct Failure : std::runtime_error {
  Failure(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

ExperimentConfig load(const Invocation& inv) {
  if (inv.config.empty()) throw Failure(kUsage, "--config is required");
  std::error_code ec;
  if (!fs::exists(inv.config, ec)) throw Failure(kMissingConfig, fmt::format("config file not found: {}", inv.config.string()));
  ExperimentConfig config = config::load_config(inv.config);
  if (inv.seed) config.run.seed = *inv.seed;
  if (!inv.algos.empty()) {
    std::vector<diffusion::AlgorithmConfig> kept;
    for (const auto& name : inv.algos) {
      auto it = std::find_if(config.algorithms.begin(), config.algorithms.end(),
                             [&](const auto& a) { return a.name == name; });
      if (it == config.algorithms.end()) throw config::ConfigError(fmt::format("--algo: no algorithm named '{}'", name));
      if (std::none_of(kept.begin(), kept.end(), [&](const auto& a) { return a.name == name; })) kept.push_back(*it);
    }
    config.algorithms = std::move(kept);
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw config::ConfigError(e.what());
  }
  return config;
}

void prepare_out(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw io::IoError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
  }
}

void emit(const Invocation& inv, const std::string& stem, const io::CsvTable& table, const plot::PlotSpec& spec) {
  if (inv.want_csv()) io::write_text_file(inv.out / (stem + ".csv"), io::format_csv(table));
  if (inv.want_svg()) io::write_text_file(inv.out / (stem + ".svg"), plot::render_svg(table, spec));
}

std::size_t selected_algorithm(const ExperimentConfig& config) {
  if (!config.analysis.algorithm) return 0;
  for (std::size_t a = 0; a < config.algorithms.size(); ++a) {
    if (config.algorithms[a].name == *config.analysis.algorithm) return a;
  }
  throw config::ConfigError(fmt::format("analysis.algorithm '{}' is not among the selected algorithms",
                                        *config.analysis.algorithm));
}

int cmd_topology(const Invocation& inv, std::ostream& out) {
  const ExperimentConfig config = load(inv);
  prepare_out(inv.out);
  const auto topology = experiment::build_topology(config);
  if (inv.want_csv()) io::write_text_file(inv.out / "topology.csv", io::format_topology_csv(topology));
  if (inv.want_svg()) io::write_text_file(inv.out / "topology.svg", plot::render_topology_svg(topology));
  fmt::print(out, "topology: {} nodes, {} edges, seed {}\n", topology.size(), topology.edges().size(),
             experiment::topology_seed(config));
  return kOk;
}

nlohmann::ordered_json manifest(const experiment::RunResult& result) {
  nlohmann::ordered_json j;
  j["version"] = std::string(kVersion);
  j["config"] = config::to_json(result.config);
  j["seeds"] = {{"master", result.seeds.master},
                {"topology", result.seeds.topology},
                {"true_weights", result.seeds.true_weights},
                {"runs", result.seeds.runs}};
  auto algos = nlohmann::ordered_json::array();
  for (const auto& a : result.algorithms) {
    algos.push_back({{"name", a.name}, {"steady_db", io::format_db(a.steady_db)}, {"diverged_runs", a.diverged_runs}});
  }
  j["results"] = algos;
  return j;
}

int cmd_run(const Invocation& inv, std::ostream& out) {
  const ExperimentConfig config = load(inv);
  prepare_out(inv.out);
  const auto result = experiment::run_monte_carlo(config);
  emit(inv, "curves", io::curves_table(result), {plot::PlotKind::curves, "Network MSD"});
  emit(inv, "steady_state", io::steady_state_table(result), {plot::PlotKind::steady_state, "Steady-state MSD per node"});
  io::write_text_file(inv.out / "manifest.json", manifest(result).dump(2) + "\n");

  bool all_diverged = true;
  for (const auto& a : result.algorithms) {
    fmt::print(out, "{:<16} steady {:>10.3f} dB  diverged {}/{}\n", a.name, a.steady_db, a.diverged_runs,
               config.run.monte_carlo_runs);
    all_diverged = all_diverged && a.diverged_runs == config.run.monte_carlo_runs;
  }
  // Kept out of manifest.json so seeded artifacts stay byte-identical.
  fmt::print(out, "wall time {:.2f} s\n", result.wall_seconds);
  if (all_diverged) throw Failure(kAllDiverged, "every run of every algorithm diverged");
  return kOk;
}

int cmd_sweep(const Invocation& inv, std::ostream& out) {
  const ExperimentConfig config = load(inv);
  if (config.sweep.empty()) throw config::ConfigError("sweep: the config has no sweep grid");
  prepare_out(inv.out);
  const auto result = experiment::parameter_sweep(config, config.sweep);
  emit(inv, "sweep", io::sweep_table(result), {plot::PlotKind::sweep, "Steady-state MSD sweep"});
  fmt::print(out, "sweep: {} rows over {}\n", result.rows.size(), fmt::join(result.parameters, " x "));
  return kOk;
}

std::string num(double v) { return fmt::format("{:.10g}", v); }

int cmd_stability(const Invocation& inv, std::ostream& out) {
  const ExperimentConfig config = load(inv);
  const std::size_t index = selected_algorithm(config);
  const auto& algo_config = config.algorithms[index];
  if (algo_config.params.criterion != diffusion::Criterion::mcc) {
    throw config::ConfigError(fmt::format("stability: '{}' does not use the mcc criterion", algo_config.name));
  }
  prepare_out(inv.out);
  const auto topology = experiment::build_topology(config);
  const diffusion::DiffusionAlgorithm algorithm(algo_config, topology);
  const std::size_t m = config.model.m;
  const auto variances = experiment::node_regressor_variances(config.model, topology.size());
  const Vector w_o = signal::init_true_weights(m, experiment::true_weights_seed(config));
  const double tau = config.analysis.tau.value_or(2.0 * w_o.lpNorm<1>());
  const std::size_t samples = config.analysis.kernel_samples;
  const auto errors = analysis::error_distribution_from_noise(config.noise);

  io::CsvTable table;
  table.header = {"node", "lambda_max", "eta", "kernel_noise", "eta_max_noise",
                  "kernel_l1", "eta_max_l1", "kernel_worst", "eta_max_worst"};
  fmt::print(out, "{} (tau = {:.4g})\n", algo_config.name, tau);
  fmt::print(out, "{:>4} {:>10} {:>8} {:>12} {:>12} {:>12}\n", "node", "lambda_max", "eta", "eta_max", "eta_max_l1",
             "eta_max_wc");
  for (std::size_t k = 0; k < topology.size(); ++k) {
    const auto& params = algorithm.node_params(k);
    const Matrix r_k = analysis::regressor_autocorrelation(std::span<const double>(&variances[k], 1), m);
    const std::uint64_t seed = derive_seed(config.run.seed, StreamTag::kernel, k);
    const auto noise_bound = analysis::mean_stability_bound(r_k, params.sigma, analysis::KernelFromErrors{errors, samples, seed});
    const auto l1_bound = analysis::mean_stability_bound(
        r_k, params.sigma, analysis::KernelFromL1Bound{tau, w_o, variances[k], config.noise, samples, seed});
    const auto worst = analysis::mean_stability_bound(r_k, params.sigma, analysis::WorstCaseKernel{});
    table.rows.push_back({std::to_string(k + 1), num(noise_bound.lambda_max), num(params.eta),
                          num(noise_bound.kernel_expectation), num(noise_bound.eta_max),
                          num(l1_bound.kernel_expectation), num(l1_bound.eta_max), num(worst.kernel_expectation),
                          num(worst.eta_max)});
    fmt::print(out, "{:>4} {:>10.4g} {:>8.4g} {:>12.4g} {:>12.4g} {:>12.4g}{}\n", k + 1, noise_bound.lambda_max,
               params.eta, noise_bound.eta_max, l1_bound.eta_max, worst.eta_max,
               params.eta < l1_bound.eta_max ? "" : "  (step exceeds the bound)");
  }
  io::write_text_file(inv.out / "stability.csv", io::format_csv(table));
  return kOk;
}

int cmd_predict(const Invocation& inv, std::ostream& out) {
  ExperimentConfig config = load(inv);
  const std::size_t index = selected_algorithm(config);
  const auto algo_config = config.algorithms[index];
  if (config.noise.kind != signal::NoiseKind::gaussian) {
    throw config::ConfigError("predict: the transient model needs Gaussian noise");
  }
  if (algo_config.mode != diffusion::Mode::atc && algo_config.mode != diffusion::Mode::noncoop) {
    throw config::ConfigError("predict: the transient model covers the atc and noncoop modes");
  }
  if (algo_config.params.criterion != diffusion::Criterion::mcc &&
      algo_config.params.criterion != diffusion::Criterion::lms) {
    throw config::ConfigError("predict: the transient model covers the mcc and lms criteria");
  }
  if (config.model.regenerate_per_run) {
    throw config::ConfigError("predict: model.regenerate_per_run must be false");
  }
  prepare_out(inv.out);

  const auto topology = experiment::build_topology(config);
  const diffusion::DiffusionAlgorithm algorithm(algo_config, topology);
  const std::size_t n = topology.size();
  const std::size_t m = config.model.m;
  const std::size_t pilot_runs = config.analysis.pilot_runs.value_or(config.run.monte_carlo_runs);
  const auto moments = experiment::pilot_step_moments(config, index, pilot_runs,
                                                      derive_seed(config.run.seed, StreamTag::pilot));
  const auto variances = experiment::node_regressor_variances(config.model, n);
  const Vector noise_variance = Vector::Constant(static_cast<Eigen::Index>(n), config.noise.gaussian_variance);
  const auto model =
      analysis::GlobalModel::build(algorithm.delta().entries(), variances, m, moments.mean.front(), noise_variance);
  const Vector w_o = signal::init_true_weights(m, experiment::true_weights_seed(config));
  const Vector initial_error = w_o.replicate(static_cast<Eigen::Index>(n), 1);
  const std::size_t dim = n * m * n * m;
  const auto prediction = dim <= analysis::kMaxTransferDimension
                              ? analysis::transient_msd_model(model, initial_error, moments)
                              : analysis::transient_msd_matrix_form(model, initial_error, moments);

  config.algorithms = {algo_config};
  const auto simulated = experiment::run_monte_carlo(config);
  const auto& sim = simulated.algorithms.front();

  io::CsvTable table;
  table.header = {"iteration", "predicted_msd_db", "simulated_msd_db"};
  for (std::size_t i = 0; i < prediction.msd_db.size(); ++i) {
    table.rows.push_back({std::to_string(i + 1), io::format_db(prediction.msd_db[i]), io::format_db(sim.msd_db[i])});
  }
  if (inv.want_csv()) io::write_text_file(inv.out / "prediction.csv", io::format_csv(table));
  if (inv.want_svg()) {
    io::CsvTable curves;
    curves.header = {"iteration", "theory_msd_db", "simulation_msd_db"};
    curves.rows = table.rows;
    io::write_text_file(inv.out / "prediction.svg",
                        plot::render_svg(curves, {plot::PlotKind::curves, algo_config.name + ": theory and simulation"}));
  }
  fmt::print(out, "{}: predicted steady {:.3f} dB, simulated {:.3f} dB\n", algo_config.name,
             experiment::steady_state_msd(prediction.msd, config.run.steady_window), sim.steady_db);
  return kOk;
}

int cmd_report(const Invocation& inv, std::ostream& out) {
  const std::vector<std::pair<std::string, plot::PlotSpec>> known = {
      {"curves", {plot::PlotKind::curves, "Network MSD"}},
      {"steady_state", {plot::PlotKind::steady_state, "Steady-state MSD per node"}},
      {"sweep", {plot::PlotKind::sweep, "Steady-state MSD sweep"}},
  };
  std::size_t rendered = 0;
  for (const auto& [stem, spec] : known) {
    const fs::path csv = inv.out / (stem + ".csv");
    if (!fs::exists(csv)) continue;
    plot::emit_plot(csv, inv.out / (stem + ".svg"), spec);
    fmt::print(out, "wrote {}\n", (inv.out / (stem + ".svg")).string());
    ++rendered;
  }
  if (rendered == 0) throw io::IoError(fmt::format("no curves.csv, steady_state.csv or sweep.csv in {}", inv.out.string()));
  return kOk;
}

int run_subcommand(const Invocation& inv, std::ostream& out) {
  if (inv.subcommand == "topology") return cmd_topology(inv, out);
  if (inv.subcommand == "run") return cmd_run(inv, out);
  if (inv.subcommand == "sweep") return cmd_sweep(inv, out);
  if (inv.subcommand == "stability") return cmd_stability(inv, out);
  if (inv.subcommand == "predict") return cmd_predict(inv, out);
  return cmd_report(inv, out);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffusion correntropy adaptive network simulator", "dmcc"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);

  Invocation inv;
  std::string format = "both";
  const std::vector<std::pair<std::string, std::string>> subcommands = {
      {"topology", "draw and export the network topology"},
      {"run", "Monte Carlo learning curves and per-node steady state"},
      {"sweep", "steady-state MSD over the config's parameter grid"},
      {"stability", "mean-stability step-size bounds per node"},
      {"predict", "transient MSD theory against a fresh simulation"},
      {"report", "re-render SVG plots from CSV files in --out"},
  };
  for (const auto& [name, help] : subcommands) {
    auto* sub = app.add_subcommand(name, help);
    if (name != "report") sub->add_option("--config", inv.config, "experiment config (JSON)")->required();
    sub->add_option("--out", inv.out, "output directory")->capture_default_str();
    if (name != "report") {
      sub->add_option("--seed", inv.seed, "override the master seed");
      sub->add_option("--algo", inv.algos, "restrict to these algorithms (repeatable)")->take_all();
    }
    sub->add_option("--format", format, "csv, svg or both")
        ->check(CLI::IsMember({"csv", "svg", "both"}))
        ->capture_default_str();
    sub->callback([&inv, name = name] { inv.subcommand = name; });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::Success&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "dmcc: " << e.what() << "\n";
    return kUsage;
  }
  inv.format = format == "csv" ? Format::csv : format == "svg" ? Format::svg : Format::both;

  try {
    return run_subcommand(inv, out);
  } catch (const Failure& e) {
    err << "dmcc: " << e.what() << "\n";
    return e.code;
  } catch (const experiment::UnknownParameterError& e) {
    err << "dmcc: " << e.what() << "\n";
    return kUnknownParameter;
  } catch (const config::ConfigError& e) {
    err << "dmcc: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const network::TopologyError& e) {
    err << "dmcc: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const io::SchemaError& e) {
    err << "dmcc: schema error: " << e.what() << "\n";
    return kIoError;
  } catch (const io::IoError& e) {
    err << "dmcc: i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "dmcc: i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    err << "dmcc: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "dmcc: " << e.what() << "\n";
    return kUsage;
  }
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace dmcc::cli
