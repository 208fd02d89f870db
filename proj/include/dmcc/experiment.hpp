#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dmcc/analysis.hpp"
#include "dmcc/diffusion.hpp"
#include "dmcc/network.hpp"
#include "dmcc/signal.hpp"
#include "dmcc/types.hpp"

namespace dmcc::experiment {

struct TopologySpec {
  std::size_t n = 20;
  double region = 1.2;
  double radius = 0.45;
  std::optional<std::uint64_t> seed;  // derived from the master seed when absent
  std::optional<std::string> file;    // imported topology CSV instead of a random draw
};

struct ModelSpec {
  std::size_t m = 10;
  std::optional<std::uint64_t> seed;
  std::vector<double> regressor_variance{1.0};  // one shared value or one per node
  bool regenerate_per_run = false;
};

struct RunSpec {
  std::size_t iterations = 500;
  std::size_t monte_carlo_runs = 50;
  std::uint64_t seed = 2016;
  std::size_t steady_window = 100;
};

/// Settings for the stability and predict front ends.
struct AnalysisSpec {
  std::optional<std::string> algorithm;  // defaults to the first algorithm
  std::optional<std::size_t> pilot_runs;  // defaults to monte_carlo_runs
  std::size_t kernel_samples = 100000;
  std::optional<double> tau;  // l1 bound on the estimates; defaults to 2 ||w_o||_1
};

using SweepGrid = std::vector<std::pair<std::string, std::vector<double>>>;

struct ExperimentConfig {
  TopologySpec topology;
  ModelSpec model;
  signal::NoiseModel noise;
  std::vector<diffusion::AlgorithmConfig> algorithms;
  RunSpec run;
  SweepGrid sweep;
  AnalysisSpec analysis;

  void validate() const;
};

/// Seeds actually used, after derivation from the master seed.
struct SeedRecord {
  std::uint64_t master = 0;
  std::uint64_t topology = 0;
  std::uint64_t true_weights = 0;
  std::vector<std::uint64_t> runs;
};

std::uint64_t topology_seed(const ExperimentConfig& config);
std::uint64_t true_weights_seed(const ExperimentConfig& config);
std::uint64_t run_seed(std::uint64_t master, std::size_t run);

/// Loads or draws the topology the config describes.
network::NetworkTopology build_topology(const ExperimentConfig& config);
/// Regressor variance per node, expanding a shared value.
std::vector<double> node_regressor_variances(const ModelSpec& spec, std::size_t nodes);

struct MsdValue {
  double linear = 0.0;
  double db = 0.0;
};

inline constexpr double kMsdFloor = 1e-30;
inline constexpr double kDivergenceMagnitude = 1e12;
inline constexpr double kDivergedMsdDb = 100.0;

double msd_to_db(double linear);

/// (1/N) sum_k ||w_o - w_k||^2 and its dB value.
MsdValue network_msd(std::span<const Vector> weights, const Vector& true_weights);

/// dB of the mean of the last `window` linear values.
double steady_state_msd(std::span<const double> linear_trajectory, std::size_t window);

struct AlgorithmResult {
  std::string name;
  std::vector<double> msd_linear;  // ensemble mean, length I
  std::vector<double> msd_db;
  std::vector<double> node_steady_db;  // length N
  double steady_db = 0.0;
  std::size_t diverged_runs = 0;
  std::vector<std::optional<std::size_t>> diverged_at;  // per run, 1-based iteration
  std::vector<std::vector<double>> per_run_msd;          // filled when requested
};

struct RunResult {
  std::vector<AlgorithmResult> algorithms;
  ExperimentConfig config;
  SeedRecord seeds;
  double wall_seconds = 0.0;

  const AlgorithmResult& find(const std::string& name) const;
};

struct RunOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
  bool keep_per_run = false;
};

/// Ensemble of independent runs over a fixed topology. Every algorithm sees
/// the same per-run data stream; trajectories are averaged in the linear
/// domain in run order.
RunResult run_monte_carlo(const ExperimentConfig& config, const RunOptions& options = {});

class UnknownParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Names accepted in a sweep grid.
std::span<const std::string_view> sweep_parameter_names();

/// Returns a copy of config with one sweepable parameter replaced.
ExperimentConfig apply_parameter(ExperimentConfig config, const std::string& name, double value);

struct SweepRow {
  std::vector<double> values;  // one per grid parameter
  std::string algorithm;
  double msd_db = 0.0;
};

struct SweepResult {
  std::vector<std::string> parameters;
  std::vector<SweepRow> rows;
};

/// One Monte Carlo ensemble per point of the Cartesian product of the grid,
/// the last grid parameter varying fastest.
SweepResult parameter_sweep(const ExperimentConfig& base, const SweepGrid& grid, const RunOptions& options = {});

/// Per-iteration E[rho_k] and E[rho_k^2] of one algorithm, measured by
/// Monte Carlo over `runs` runs seeded from `seed`. rho_k = eta_k * G(e_k)
/// for mcc and eta_k for lms, with e_k the a-priori error at the estimate the
/// node adapts from.
analysis::StepMoments pilot_step_moments(const ExperimentConfig& config, std::size_t algorithm_index,
                                         std::size_t runs, std::uint64_t seed);

}  // namespace dmcc::experiment
