#include "dmcc/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace dmcc::diffusion {

using network::CombinationMatrix;
using network::CombinationRule;

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::mcc: return "mcc";
    case Criterion::lms: return "lms";
    case Criterion::lmp: return "lmp";
    case Criterion::mee: return "mee";
  }
  return "unknown";
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::atc: return "atc";
    case Mode::cta: return "cta";
    case Mode::general: return "general";
    case Mode::noncoop: return "noncoop";
  }
  return "unknown";
}

Criterion parse_criterion(std::string_view name) {
  if (name == "mcc") return Criterion::mcc;
  if (name == "lms") return Criterion::lms;
  if (name == "lmp") return Criterion::lmp;
  if (name == "mee") return Criterion::mee;
  throw std::invalid_argument(fmt::format("unknown criterion '{}'", name));
}

Mode parse_mode(std::string_view name) {
  if (name == "atc") return Mode::atc;
  if (name == "cta") return Mode::cta;
  if (name == "general") return Mode::general;
  if (name == "noncoop") return Mode::noncoop;
  throw std::invalid_argument(fmt::format("unknown diffusion mode '{}'", name));
}

void AdaptationParams::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("step size eta must be positive");
  if ((criterion == Criterion::mcc || criterion == Criterion::mee) && (!(sigma > 0.0) || !std::isfinite(sigma))) {
    throw std::invalid_argument("kernel size sigma must be positive");
  }
  if (criterion == Criterion::lmp && !(p >= 1.0 && p <= 2.0)) {
    throw std::invalid_argument("lmp power p must lie in [1, 2]");
  }
  if (criterion == Criterion::mee && window == 0) {
    throw std::invalid_argument("mee window length must be positive");
  }
}

double gaussian_kernel(double e, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("kernel size sigma must be positive");
  return std::exp(-e * e / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double effective_step(double e, const AdaptationParams& params) {
  return params.eta * gaussian_kernel(e, params.sigma);
}

void SampleWindow::push(const NodeDatum& sample) {
  if (capacity_ == 0) return;
  if (samples_.size() == capacity_) samples_.erase(samples_.begin());
  samples_.push_back(sample);
}

namespace {

double sign(double x) { return (x > 0.0) - (x < 0.0); }

// Gradient of the quadratic information potential
//   V(w) = (1/n^2) sum_i sum_j kappa_{sigma*sqrt(2)}(e_i - e_j)
// over the window samples, errors evaluated at w.
Vector information_potential_gradient(const Vector& w, std::span<const NodeDatum> past,
                                      const NodeDatum& current, double sigma) {
  std::vector<const NodeDatum*> window;
  window.reserve(past.size() + 1);
  for (const auto& s : past) window.push_back(&s);
  window.push_back(&current);

  const std::size_t n = window.size();
  std::vector<double> errors(n);
  for (std::size_t i = 0; i < n; ++i) errors[i] = window[i]->d - w.dot(window[i]->u);

  const double pair_sigma = sigma * std::numbers::sqrt2;
  const double pair_var = pair_sigma * pair_sigma;
  Vector grad = Vector::Zero(w.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double diff = errors[i] - errors[j];
      // (i, j) and (j, i) contribute identically.
      const double scale = 2.0 * gaussian_kernel(diff, pair_sigma) * diff / pair_var;
      grad.noalias() += scale * (window[i]->u - window[j]->u);
    }
  }
  return grad / static_cast<double>(n * n);
}

}  // namespace

Vector update_direction(const Vector& w, const Vector& u, double d, const AdaptationParams& params,
                        std::span<const NodeDatum> history) {
  if (w.size() != u.size()) {
    throw std::invalid_argument(fmt::format("dimension mismatch: w has {} entries, u has {}", w.size(), u.size()));
  }
  const double e = d - w.dot(u);
  switch (params.criterion) {
    case Criterion::mcc:
      return (gaussian_kernel(e, params.sigma) * e) * u;
    case Criterion::lms:
      return e * u;
    case Criterion::lmp:
      return (std::pow(std::abs(e), params.p - 1.0) * sign(e)) * u;
    case Criterion::mee: {
      const std::size_t keep = params.window > 0 ? params.window - 1 : 0;
      const auto past = history.size() > keep ? history.subspan(history.size() - keep) : history;
      return information_potential_gradient(w, past, NodeDatum{u, d}, params.sigma);
    }
  }
  return Vector::Zero(w.size());
}

Vector incremental_update(const Vector& w, const Vector& u, double d, const AdaptationParams& params,
                          std::span<const NodeDatum> history) {
  if (!w.allFinite() || !u.allFinite() || !std::isfinite(d)) {
    throw DivergenceError("non-finite input to the incremental update");
  }
  Vector out = w + params.eta * update_direction(w, u, d, params, history);
  if (!out.allFinite()) throw DivergenceError("incremental update produced non-finite weights");
  return out;
}

Vector combine(std::span<const Vector> estimates, const CombinationMatrix& weights, std::size_t k) {
  const auto& support = weights.support(k);
  Vector out = Vector::Zero(estimates[k].size());
  for (std::size_t l : support) out.noalias() += weights(l, k) * estimates[l];
  return out;
}

void AlgorithmConfig::validate(std::size_t nodes) const {
  params.validate();
  if (!eta_per_node.empty() && eta_per_node.size() != nodes) {
    throw std::invalid_argument(fmt::format("algorithm '{}': eta_per_node has {} entries for {} nodes", name,
                                            eta_per_node.size(), nodes));
  }
  if (!sigma_per_node.empty() && sigma_per_node.size() != nodes) {
    throw std::invalid_argument(fmt::format("algorithm '{}': sigma_per_node has {} entries for {} nodes", name,
                                            sigma_per_node.size(), nodes));
  }
}

namespace {

CombinationRule active_rule(CombinationRule rule, bool active) {
  return active ? rule : CombinationRule::identity;
}

}  // namespace

DiffusionAlgorithm::DiffusionAlgorithm(AlgorithmConfig config, const network::NetworkTopology& topology)
    : config_(std::move(config)),
      beta_(build_combination_matrix(
          topology, active_rule(config_.beta, config_.mode == Mode::cta || config_.mode == Mode::general))),
      alpha_(build_combination_matrix(topology, active_rule(config_.alpha, config_.mode == Mode::general))),
      delta_(build_combination_matrix(
          topology, active_rule(config_.delta, config_.mode == Mode::atc || config_.mode == Mode::general))) {
  config_.validate(topology.size());
  node_params_.assign(topology.size(), config_.params);
  for (std::size_t k = 0; k < topology.size(); ++k) {
    if (!config_.eta_per_node.empty()) node_params_[k].eta = config_.eta_per_node[k];
    if (!config_.sigma_per_node.empty()) node_params_[k].sigma = config_.sigma_per_node[k];
    node_params_[k].validate();
  }
}

NetworkState NetworkState::zeros(std::size_t nodes, std::size_t m, std::size_t window) {
  NetworkState state;
  state.weights.assign(nodes, Vector::Zero(static_cast<Eigen::Index>(m)));
  state.intermediates = state.weights;
  state.history.assign(nodes, SampleWindow(window));
  return state;
}

NetworkState run_iteration(const NetworkState& state, std::span<const NodeDatum> data,
                           const DiffusionAlgorithm& algorithm) {
  const std::size_t n = algorithm.nodes();
  if (state.weights.size() != n || data.size() != n) {
    throw std::invalid_argument(fmt::format("state/data cover {}/{} nodes, algorithm expects {}",
                                            state.weights.size(), data.size(), n));
  }
  const bool uses_history = algorithm.config().params.criterion == Criterion::mee;
  auto history_of = [&](std::size_t l) -> std::span<const NodeDatum> {
    if (!uses_history || state.history.size() != n) return {};
    return state.history[l].samples();
  };

  NetworkState next;
  next.iteration = state.iteration + 1;
  next.intermediates.resize(n);
  next.weights.resize(n);

  auto adapt = [&](std::size_t k, const Vector& start) {
    try {
      return incremental_update(start, data[k].u, data[k].d, algorithm.node_params(k), history_of(k));
    } catch (const DivergenceError& err) {
      throw DivergenceError(fmt::format("node {}: {}", k, err.what()), k);
    }
  };

  switch (algorithm.mode()) {
    case Mode::noncoop:
      for (std::size_t k = 0; k < n; ++k) {
        next.weights[k] = adapt(k, state.weights[k]);
        next.intermediates[k] = next.weights[k];
      }
      break;
    case Mode::atc:
      for (std::size_t k = 0; k < n; ++k) next.intermediates[k] = adapt(k, state.weights[k]);
      for (std::size_t k = 0; k < n; ++k) next.weights[k] = combine(next.intermediates, algorithm.delta(), k);
      break;
    case Mode::cta:
      for (std::size_t k = 0; k < n; ++k) next.intermediates[k] = combine(state.weights, algorithm.beta(), k);
      for (std::size_t k = 0; k < n; ++k) next.weights[k] = adapt(k, next.intermediates[k]);
      break;
    case Mode::general: {
      std::vector<Vector> prior(n);
      for (std::size_t k = 0; k < n; ++k) prior[k] = combine(state.weights, algorithm.beta(), k);
      for (std::size_t k = 0; k < n; ++k) {
        const auto& params = algorithm.node_params(k);
        Vector step = Vector::Zero(prior[k].size());
        for (std::size_t l : algorithm.alpha().support(k)) {
          if (!data[l].u.allFinite() || !std::isfinite(data[l].d) || !prior[k].allFinite()) {
            throw DivergenceError(fmt::format("node {}: non-finite input to the incremental update", k), k);
          }
          step.noalias() +=
              algorithm.alpha()(l, k) * update_direction(prior[k], data[l].u, data[l].d, params, history_of(l));
        }
        next.intermediates[k] = prior[k] + params.eta * step;
        if (!next.intermediates[k].allFinite()) {
          throw DivergenceError(fmt::format("node {}: incremental update produced non-finite weights", k), k);
        }
      }
      for (std::size_t k = 0; k < n; ++k) next.weights[k] = combine(next.intermediates, algorithm.delta(), k);
      break;
    }
  }

  if (uses_history) {
    next.history = state.history.size() == n
                       ? state.history
                       : std::vector<SampleWindow>(n, SampleWindow(algorithm.config().params.window));
    for (std::size_t k = 0; k < n; ++k) next.history[k].push(data[k]);
  }
  return next;
}

}  // namespace dmcc::diffusion
