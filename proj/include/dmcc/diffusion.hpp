#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dmcc/network.hpp"
#include "dmcc/signal.hpp"
#include "dmcc/types.hpp"

namespace dmcc::diffusion {

enum class Criterion { mcc, lms, lmp, mee };
enum class Mode { atc, cta, general, noncoop };

std::string_view to_string(Criterion c);
std::string_view to_string(Mode m);
Criterion parse_criterion(std::string_view name);
Mode parse_mode(std::string_view name);

/// Step and criterion constants used by one node. `eta` is the step applied
/// after the 1/sigma^2 scaling of the correntropy gradient.
struct AdaptationParams {
  Criterion criterion = Criterion::mcc;
  double eta = 0.06;
  double sigma = 1.0;       // kernel size (mcc, mee)
  double p = 1.2;           // power exponent (lmp)
  std::size_t window = 8;   // error window length (mee)

  void validate() const;
};

/// Raised when an update receives or produces non-finite values.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::optional<std::size_t> node = std::nullopt)
      : std::runtime_error(what), node_(node) {}
  std::optional<std::size_t> node() const { return node_; }

 private:
  std::optional<std::size_t> node_;
};

/// G_sigma(e) = exp(-e^2 / (2 sigma^2)) / (sigma sqrt(2 pi)).
double gaussian_kernel(double e, double sigma);

/// eta * G_sigma(e): the LMS step that reproduces one MCC update.
double effective_step(double e, const AdaptationParams& params);

using signal::NodeDatum;

/// Fixed-capacity FIFO of the most recent samples of one node (mee only).
class SampleWindow {
 public:
  explicit SampleWindow(std::size_t capacity = 0) : capacity_(capacity) {}

  void push(const NodeDatum& sample);
  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Oldest first.
  std::span<const NodeDatum> samples() const { return samples_; }

 private:
  std::size_t capacity_;
  std::vector<NodeDatum> samples_;
};

/// Unscaled ascent direction of the criterion at w for the current sample
/// (u, d). For mee, `history` holds the previous samples of the data source;
/// the most recent window-1 of them join the current one.
Vector update_direction(const Vector& w, const Vector& u, double d, const AdaptationParams& params,
                        std::span<const NodeDatum> history = {});

/// w + eta * update_direction(...). Throws DivergenceError on non-finite
/// inputs.
Vector incremental_update(const Vector& w, const Vector& u, double d, const AdaptationParams& params,
                          std::span<const NodeDatum> history = {});

/// sum_{l in N_k} weights(l, k) * estimates[l].
Vector combine(std::span<const Vector> estimates, const network::CombinationMatrix& weights,
               std::size_t k);

struct AlgorithmConfig {
  std::string name;
  Mode mode = Mode::atc;
  AdaptationParams params;
  std::vector<double> eta_per_node;    // optional overrides
  std::vector<double> sigma_per_node;  // optional overrides
  network::CombinationRule beta = network::CombinationRule::identity;   // diffusion I
  network::CombinationRule alpha = network::CombinationRule::identity;  // data sharing
  network::CombinationRule delta = network::CombinationRule::identity;  // diffusion II

  void validate(std::size_t nodes) const;
};

/// An AlgorithmConfig bound to a topology. The mode fixes the inactive
/// matrices to the identity: atc keeps delta, cta keeps beta, general keeps
/// all three, noncoop keeps none.
class DiffusionAlgorithm {
 public:
  DiffusionAlgorithm(AlgorithmConfig config, const network::NetworkTopology& topology);

  const AlgorithmConfig& config() const { return config_; }
  const std::string& name() const { return config_.name; }
  Mode mode() const { return config_.mode; }
  std::size_t nodes() const { return node_params_.size(); }
  const AdaptationParams& node_params(std::size_t k) const { return node_params_[k]; }

  const network::CombinationMatrix& beta() const { return beta_; }
  const network::CombinationMatrix& alpha() const { return alpha_; }
  const network::CombinationMatrix& delta() const { return delta_; }

 private:
  AlgorithmConfig config_;
  std::vector<AdaptationParams> node_params_;
  network::CombinationMatrix beta_;
  network::CombinationMatrix alpha_;
  network::CombinationMatrix delta_;
};

struct NetworkState {
  std::vector<Vector> weights;        // w_k(i)
  std::vector<Vector> intermediates;  // phi_k from the last incremental phase
  std::vector<SampleWindow> history;  // per-node data window (mee)
  std::size_t iteration = 0;

  static NetworkState zeros(std::size_t nodes, std::size_t m, std::size_t window = 0);
};

/// One diffusion iteration. Reads only `state` and `data`, returns a new
/// state with the iteration counter advanced.
NetworkState run_iteration(const NetworkState& state, std::span<const NodeDatum> data,
                           const DiffusionAlgorithm& algorithm);

}  // namespace dmcc::diffusion
