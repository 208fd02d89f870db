#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dmcc/rng.hpp"
#include "dmcc/types.hpp"

namespace dmcc::signal {

/// Parameters of the stable law with characteristic function
///   f(t) = exp{ j*delta*t - lambda*|t|^alpha * [1 + j*beta*sgn(t)*S(t, alpha)] },
///   S = tan(alpha*pi/2) for alpha != 1, (2/pi)*log|t| for alpha == 1.
/// lambda is the dispersion; the equivalent scale is lambda^(1/alpha).
class AlphaStableParams {
 public:
  AlphaStableParams(double alpha, double beta, double lambda, double delta);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double lambda() const { return lambda_; }
  double delta() const { return delta_; }

 private:
  double alpha_;
  double beta_;
  double lambda_;
  double delta_;
};

/// Chambers-Mallows-Stuck draw.
double sample_alpha_stable(const AlphaStableParams& params, Rng& rng);

enum class NoiseKind { gaussian, impulsive };

/// Either white Gaussian noise or the gated impulsive process
/// n = a * A with a ~ Bernoulli(c) and A alpha-stable.
struct NoiseModel {
  NoiseKind kind = NoiseKind::impulsive;
  double gaussian_variance = 0.0;
  double arrival_probability = 0.2;
  AlphaStableParams stable{1.2, 0.0, 1.0, 0.0};

  void validate() const;
};

double sample_noise(const NoiseModel& model, Rng& rng);

/// Entries drawn N(0, 1) and scaled by 1/sqrt(m).
Vector init_true_weights(std::size_t m, std::uint64_t seed);

struct MeasurementModel {
  Vector true_weights;
  std::vector<double> regressor_variance;  // one entry per node

  std::size_t m() const { return static_cast<std::size_t>(true_weights.size()); }
  std::size_t nodes() const { return regressor_variance.size(); }
  void validate() const;
};

struct NodeDatum {
  Vector u;
  double d = 0.0;
};

/// Independent random streams owned by one node.
struct NodeStreams {
  Rng regressor;
  Rng noise;
};

/// One (u, d) pair for node k: u ~ N(0, sigma_{u,k}^2 I), d = w_o^T u + n.
NodeDatum generate_node_datum(const MeasurementModel& model, const NoiseModel& noise, std::size_t k,
                              NodeStreams& streams);

/// Per-iteration snapshots for every node of the network. The stream is a
/// pure function of (model, noise, seed).
class NetworkDataSource {
 public:
  NetworkDataSource(const MeasurementModel& model, const NoiseModel& noise, std::uint64_t seed);

  /// Overwrites `out` with the data of the next time instant.
  void next(std::vector<NodeDatum>& out);

 private:
  const MeasurementModel* model_;
  const NoiseModel* noise_;
  std::vector<NodeStreams> streams_;
};

}  // namespace dmcc::signal
