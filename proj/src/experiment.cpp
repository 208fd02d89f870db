#include "dmcc/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "dmcc/csv.hpp"
#include "dmcc/rng.hpp"

namespace dmcc::experiment {

using diffusion::Criterion;
using diffusion::DiffusionAlgorithm;
using diffusion::Mode;
using diffusion::NetworkState;

namespace {

constexpr std::array<std::string_view, 6> kSweepParameters{"sigma", "c", "alpha", "p", "L", "eta"};

double divergence_linear() { return std::pow(10.0, kDivergedMsdDb / 10.0); }

bool has_diverged(const NetworkState& state) {
  for (const auto& w : state.weights) {
    if (!w.allFinite() || w.cwiseAbs().maxCoeff() > kDivergenceMagnitude) return true;
  }
  return false;
}

std::size_t history_window(const DiffusionAlgorithm& algorithm) {
  return algorithm.config().params.criterion == Criterion::mee ? algorithm.config().params.window : 0;
}

// Runs `count` independent jobs over a small thread pool; the first
// exception is rethrown after all workers stop.
template <class Job>
void parallel_for(std::size_t count, std::size_t threads, Job job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            job(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

struct RunTrace {
  std::vector<double> msd;        // length I
  std::vector<double> node_sum;   // sum over the steady window, per node
  std::optional<std::size_t> diverged_at;
};

}  // namespace

void ExperimentConfig::validate() const {
  if (!topology.file) {
    if (topology.n == 0) throw std::invalid_argument("topology.n must be at least 1");
    if (!(topology.region > 0.0)) throw std::invalid_argument("topology.region must be positive");
    if (!(topology.radius >= 0.0)) throw std::invalid_argument("topology.radius must be nonnegative");
  }
  if (model.m == 0) throw std::invalid_argument("model.m must be at least 1");
  if (model.regressor_variance.empty()) throw std::invalid_argument("model.regressor_variance is empty");
  for (double v : model.regressor_variance) {
    if (!(v > 0.0)) throw std::invalid_argument("model.regressor_variance entries must be positive");
  }
  noise.validate();
  if (algorithms.empty()) throw std::invalid_argument("at least one algorithm is required");
  std::set<std::string> names;
  for (const auto& a : algorithms) {
    if (a.name.empty()) throw std::invalid_argument("algorithm names must be nonempty");
    if (!names.insert(a.name).second) throw std::invalid_argument(fmt::format("duplicate algorithm name '{}'", a.name));
    a.params.validate();
  }
  if (run.monte_carlo_runs == 0) throw std::invalid_argument("run.monte_carlo_runs must be at least 1");
  if (run.steady_window == 0) throw std::invalid_argument("run.steady_window must be at least 1");
  if (run.iterations < run.steady_window) {
    throw std::invalid_argument("run.iterations must be at least run.steady_window");
  }
  for (const auto& [name, values] : sweep) {
    if (std::find(kSweepParameters.begin(), kSweepParameters.end(), name) == kSweepParameters.end()) {
      throw UnknownParameterError(fmt::format("unknown sweep parameter '{}'", name));
    }
    if (values.empty()) throw std::invalid_argument(fmt::format("sweep parameter '{}' has no values", name));
  }
}

std::uint64_t topology_seed(const ExperimentConfig& config) {
  return config.topology.seed.value_or(derive_seed(config.run.seed, StreamTag::topology));
}

std::uint64_t true_weights_seed(const ExperimentConfig& config) {
  return config.model.seed.value_or(derive_seed(config.run.seed, StreamTag::true_weights));
}

std::uint64_t run_seed(std::uint64_t master, std::size_t run) { return derive_seed(master, StreamTag::run, run); }

network::NetworkTopology build_topology(const ExperimentConfig& config) {
  if (config.topology.file) return io::parse_topology_csv(io::read_text_file(*config.topology.file));
  return network::generate_topology(config.topology.n, config.topology.region, config.topology.radius,
                                    topology_seed(config));
}

std::vector<double> node_regressor_variances(const ModelSpec& spec, std::size_t nodes) {
  if (spec.regressor_variance.size() == 1) return std::vector<double>(nodes, spec.regressor_variance.front());
  if (spec.regressor_variance.size() != nodes) {
    throw std::invalid_argument(fmt::format("model.regressor_variance has {} entries for {} nodes",
                                            spec.regressor_variance.size(), nodes));
  }
  return spec.regressor_variance;
}

double msd_to_db(double linear) { return 10.0 * std::log10(std::max(linear, kMsdFloor)); }

MsdValue network_msd(std::span<const Vector> weights, const Vector& true_weights) {
  if (weights.empty()) throw std::invalid_argument("network_msd needs at least one node");
  double sum = 0.0;
  for (const auto& w : weights) {
    if (w.size() != true_weights.size()) throw std::invalid_argument("estimate and true weights differ in length");
    sum += (true_weights - w).squaredNorm();
  }
  const double linear = sum / static_cast<double>(weights.size());
  return {linear, msd_to_db(linear)};
}

double steady_state_msd(std::span<const double> linear_trajectory, std::size_t window) {
  if (window == 0 || window > linear_trajectory.size()) {
    throw std::invalid_argument(
        fmt::format("steady window {} does not fit a trajectory of length {}", window, linear_trajectory.size()));
  }
  double sum = 0.0;
  for (double v : linear_trajectory.subspan(linear_trajectory.size() - window)) sum += v;
  return msd_to_db(sum / static_cast<double>(window));
}

const AlgorithmResult& RunResult::find(const std::string& name) const {
  for (const auto& a : algorithms) {
    if (a.name == name) return a;
  }
  throw std::out_of_range(fmt::format("no algorithm named '{}' in the result", name));
}

RunResult run_monte_carlo(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  const network::NetworkTopology topology = build_topology(config);
  const std::size_t n = topology.size();
  const std::size_t m = config.model.m;
  const std::size_t iterations = config.run.iterations;
  const std::size_t runs = config.run.monte_carlo_runs;
  const std::size_t window = config.run.steady_window;
  const std::vector<double> variances = node_regressor_variances(config.model, n);
  const Vector shared_weights = signal::init_true_weights(m, true_weights_seed(config));

  std::vector<DiffusionAlgorithm> algorithms;
  for (const auto& a : config.algorithms) algorithms.emplace_back(a, topology);
  const std::size_t count = algorithms.size();

  RunResult result;
  result.config = config;
  result.seeds.master = config.run.seed;
  result.seeds.topology = config.topology.file ? 0 : topology_seed(config);
  result.seeds.true_weights = true_weights_seed(config);
  for (std::size_t r = 0; r < runs; ++r) result.seeds.runs.push_back(run_seed(config.run.seed, r));

  std::vector<std::vector<RunTrace>> traces(runs, std::vector<RunTrace>(count));
  const double sentinel = divergence_linear();

  parallel_for(runs, options.threads, [&](std::size_t r) {
    const std::uint64_t seed = result.seeds.runs[r];
    signal::MeasurementModel model{
        config.model.regenerate_per_run ? signal::init_true_weights(m, derive_seed(seed, StreamTag::true_weights))
                                        : shared_weights,
        variances};
    signal::NetworkDataSource source(model, config.noise, seed);

    std::vector<NetworkState> states;
    for (const auto& a : algorithms) states.push_back(NetworkState::zeros(n, m, history_window(a)));
    auto& run_traces = traces[r];
    for (auto& t : run_traces) {
      t.msd.assign(iterations, 0.0);
      t.node_sum.assign(n, 0.0);
    }

    std::vector<signal::NodeDatum> data;
    for (std::size_t i = 0; i < iterations; ++i) {
      source.next(data);
      const bool in_window = i >= iterations - window;
      for (std::size_t a = 0; a < count; ++a) {
        RunTrace& trace = run_traces[a];
        if (!trace.diverged_at) {
          try {
            states[a] = diffusion::run_iteration(states[a], data, algorithms[a]);
            if (has_diverged(states[a])) trace.diverged_at = i + 1;
          } catch (const diffusion::DivergenceError&) {
            trace.diverged_at = i + 1;
          }
        }
        if (trace.diverged_at) {
          trace.msd[i] = sentinel;
          if (in_window) {
            for (auto& v : trace.node_sum) v += sentinel;
          }
          continue;
        }
        trace.msd[i] = network_msd(states[a].weights, model.true_weights).linear;
        if (in_window) {
          for (std::size_t k = 0; k < n; ++k) {
            trace.node_sum[k] += (model.true_weights - states[a].weights[k]).squaredNorm();
          }
        }
      }
    }
  });

  for (std::size_t a = 0; a < count; ++a) {
    AlgorithmResult out;
    out.name = algorithms[a].name();
    out.msd_linear.assign(iterations, 0.0);
    std::vector<double> node_sum(n, 0.0);
    for (std::size_t r = 0; r < runs; ++r) {
      const RunTrace& trace = traces[r][a];
      for (std::size_t i = 0; i < iterations; ++i) out.msd_linear[i] += trace.msd[i];
      for (std::size_t k = 0; k < n; ++k) node_sum[k] += trace.node_sum[k];
      out.diverged_at.push_back(trace.diverged_at);
      if (trace.diverged_at) ++out.diverged_runs;
      if (options.keep_per_run) out.per_run_msd.push_back(trace.msd);
    }
    for (double& v : out.msd_linear) v /= static_cast<double>(runs);
    for (double v : out.msd_linear) out.msd_db.push_back(msd_to_db(v));
    for (double v : node_sum) out.node_steady_db.push_back(msd_to_db(v / static_cast<double>(runs * window)));
    out.steady_db = steady_state_msd(out.msd_linear, window);
    result.algorithms.push_back(std::move(out));
  }

  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::span<const std::string_view> sweep_parameter_names() { return kSweepParameters; }

ExperimentConfig apply_parameter(ExperimentConfig config, const std::string& name, double value) {
  if (name == "sigma") {
    for (auto& a : config.algorithms) {
      a.params.sigma = value;
      a.sigma_per_node.clear();
    }
  } else if (name == "c") {
    config.noise.arrival_probability = value;
  } else if (name == "alpha") {
    const auto& s = config.noise.stable;
    config.noise.stable = signal::AlphaStableParams(value, s.beta(), s.lambda(), s.delta());
  } else if (name == "p") {
    for (auto& a : config.algorithms) a.params.p = value;
  } else if (name == "L") {
    if (!(value >= 1.0) || value != std::floor(value)) {
      throw std::invalid_argument(fmt::format("window length L must be a positive integer, got {}", value));
    }
    for (auto& a : config.algorithms) a.params.window = static_cast<std::size_t>(value);
  } else if (name == "eta") {
    for (auto& a : config.algorithms) {
      a.params.eta = value;
      a.eta_per_node.clear();
    }
  } else {
    throw UnknownParameterError(fmt::format("unknown sweep parameter '{}'", name));
  }
  return config;
}

SweepResult parameter_sweep(const ExperimentConfig& base, const SweepGrid& grid, const RunOptions& options) {
  for (const auto& [name, values] : grid) {
    if (std::find(kSweepParameters.begin(), kSweepParameters.end(), name) == kSweepParameters.end()) {
      throw UnknownParameterError(fmt::format("unknown sweep parameter '{}'", name));
    }
    if (values.empty()) throw std::invalid_argument(fmt::format("sweep parameter '{}' has no values", name));
  }
  SweepResult out;
  for (const auto& entry : grid) out.parameters.push_back(entry.first);

  std::vector<std::size_t> index(grid.size(), 0);
  while (true) {
    ExperimentConfig config = base;
    config.sweep.clear();
    std::vector<double> values;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      values.push_back(grid[g].second[index[g]]);
      config = apply_parameter(std::move(config), grid[g].first, values.back());
    }
    const RunResult result = run_monte_carlo(config, options);
    for (const auto& a : result.algorithms) out.rows.push_back(SweepRow{values, a.name, a.steady_db});

    // Odometer increment, last parameter fastest.
    std::size_t g = grid.size();
    while (g > 0) {
      --g;
      if (++index[g] < grid[g].second.size()) break;
      index[g] = 0;
      if (g == 0) return out;
    }
    if (grid.empty()) return out;
  }
}

analysis::StepMoments pilot_step_moments(const ExperimentConfig& config, std::size_t algorithm_index,
                                         std::size_t runs, std::uint64_t seed) {
  config.validate();
  if (algorithm_index >= config.algorithms.size()) throw std::out_of_range("algorithm index out of range");
  if (runs == 0) throw std::invalid_argument("pilot needs at least one run");
  const auto& algo_config = config.algorithms[algorithm_index];
  const Criterion criterion = algo_config.params.criterion;
  if (criterion != Criterion::mcc && criterion != Criterion::lms) {
    throw std::invalid_argument("step moments are defined for the mcc and lms criteria only");
  }

  const network::NetworkTopology topology = build_topology(config);
  const std::size_t n = topology.size();
  const std::size_t m = config.model.m;
  const std::size_t iterations = config.run.iterations;
  const DiffusionAlgorithm algorithm(algo_config, topology);
  const std::vector<double> variances = node_regressor_variances(config.model, n);
  const Vector shared_weights = signal::init_true_weights(m, true_weights_seed(config));

  analysis::StepMoments moments;
  moments.mean.assign(iterations, Vector::Zero(static_cast<Eigen::Index>(n)));
  moments.second.assign(iterations, Vector::Zero(static_cast<Eigen::Index>(n)));

  for (std::size_t r = 0; r < runs; ++r) {
    const std::uint64_t rs = run_seed(seed, r);
    signal::MeasurementModel model{
        config.model.regenerate_per_run ? signal::init_true_weights(m, derive_seed(rs, StreamTag::true_weights))
                                        : shared_weights,
        variances};
    signal::NetworkDataSource source(model, config.noise, rs);
    NetworkState state = NetworkState::zeros(n, m);
    std::vector<signal::NodeDatum> data;
    for (std::size_t i = 0; i < iterations; ++i) {
      source.next(data);
      for (std::size_t k = 0; k < n; ++k) {
        const Vector start = algorithm.mode() == Mode::cta ? diffusion::combine(state.weights, algorithm.beta(), k)
                                                           : state.weights[k];
        const auto& params = algorithm.node_params(k);
        const double e = data[k].d - start.dot(data[k].u);
        const double rho = criterion == Criterion::mcc ? diffusion::effective_step(e, params) : params.eta;
        moments.mean[i](static_cast<Eigen::Index>(k)) += rho;
        moments.second[i](static_cast<Eigen::Index>(k)) += rho * rho;
      }
      state = diffusion::run_iteration(state, data, algorithm);
    }
  }
  for (std::size_t i = 0; i < iterations; ++i) {
    moments.mean[i] /= static_cast<double>(runs);
    moments.second[i] /= static_cast<double>(runs);
  }
  return moments;
}

}  // namespace dmcc::experiment
