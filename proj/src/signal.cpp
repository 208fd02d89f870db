#include "dmcc/signal.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace dmcc::signal {

namespace {

constexpr double kPi = std::numbers::pi;

// Uniform on the open interval (-pi/2, pi/2).
double open_uniform_angle(Rng& rng) {
  std::uniform_real_distribution<double> dist(-kPi / 2.0, kPi / 2.0);
  double v = dist(rng);
  while (v <= -kPi / 2.0) v = dist(rng);
  return v;
}

double positive_exponential(Rng& rng) {
  std::exponential_distribution<double> dist(1.0);
  double w = dist(rng);
  while (w <= 0.0) w = dist(rng);
  return w;
}

}  // namespace

AlphaStableParams::AlphaStableParams(double alpha, double beta, double lambda, double delta)
    : alpha_(alpha), beta_(beta), lambda_(lambda), delta_(delta) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw std::invalid_argument(fmt::format("alpha must lie in (0, 2], got {}", alpha));
  }
  if (!(beta >= -1.0 && beta <= 1.0)) {
    throw std::invalid_argument(fmt::format("beta must lie in [-1, 1], got {}", beta));
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument(fmt::format("dispersion lambda must be positive, got {}", lambda));
  }
  if (!std::isfinite(delta)) throw std::invalid_argument("location delta must be finite");
}

double sample_alpha_stable(const AlphaStableParams& params, Rng& rng) {
  const double alpha = params.alpha();
  const double scale = std::pow(params.lambda(), 1.0 / alpha);
  const double v = open_uniform_angle(rng);
  const double w = positive_exponential(rng);

  if (alpha == 1.0) {
    // The log-form skew term carries the same sign as the standard
    // parameterisation, so beta is used as is.
    const double beta = params.beta();
    const double half_pi_bv = kPi / 2.0 + beta * v;
    const double x =
        (2.0 / kPi) * (half_pi_bv * std::tan(v) - beta * std::log((kPi / 2.0) * w * std::cos(v) / half_pi_bv));
    return scale * x + (2.0 / kPi) * beta * scale * std::log(scale) + params.delta();
  }

  // The tan-form skew term enters with the opposite sign of the standard
  // parameterisation, hence the negated beta.
  const double beta = -params.beta();
  const double t = beta * std::tan(kPi * alpha / 2.0);
  const double b = std::atan(t) / alpha;
  const double s = std::pow(1.0 + t * t, 1.0 / (2.0 * alpha));
  const double x = s * std::sin(alpha * (v + b)) / std::pow(std::cos(v), 1.0 / alpha) *
                   std::pow(std::cos(v - alpha * (v + b)) / w, (1.0 - alpha) / alpha);
  return scale * x + params.delta();
}

void NoiseModel::validate() const {
  if (!(gaussian_variance >= 0.0)) throw std::invalid_argument("gaussian_variance must be nonnegative");
  if (!(arrival_probability >= 0.0 && arrival_probability <= 1.0)) {
    throw std::invalid_argument("arrival_probability must lie in [0, 1]");
  }
}

double sample_noise(const NoiseModel& model, Rng& rng) {
  if (model.kind == NoiseKind::gaussian) {
    if (model.gaussian_variance == 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, std::sqrt(model.gaussian_variance));
    return dist(rng);
  }
  std::bernoulli_distribution gate(model.arrival_probability);
  if (!gate(rng)) return 0.0;
  return sample_alpha_stable(model.stable, rng);
}

Vector init_true_weights(std::size_t m, std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("parameter dimension must be at least 1");
  Rng rng = make_rng(derive_seed(seed, StreamTag::true_weights));
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector w(static_cast<Eigen::Index>(m));
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = dist(rng) * scale;
  return w;
}

void MeasurementModel::validate() const {
  if (true_weights.size() == 0) throw std::invalid_argument("true weight vector is empty");
  if (!true_weights.allFinite()) throw std::invalid_argument("true weight vector is not finite");
  for (double v : regressor_variance) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("regressor variances must be positive");
  }
}

NodeDatum generate_node_datum(const MeasurementModel& model, const NoiseModel& noise, std::size_t k,
                              NodeStreams& streams) {
  NodeDatum datum;
  datum.u.resize(static_cast<Eigen::Index>(model.m()));
  std::normal_distribution<double> dist(0.0, std::sqrt(model.regressor_variance.at(k)));
  for (Eigen::Index i = 0; i < datum.u.size(); ++i) datum.u(i) = dist(streams.regressor);
  datum.d = model.true_weights.dot(datum.u) + sample_noise(noise, streams.noise);
  return datum;
}

NetworkDataSource::NetworkDataSource(const MeasurementModel& model, const NoiseModel& noise,
                                     std::uint64_t seed)
    : model_(&model), noise_(&noise) {
  streams_.reserve(model.nodes());
  for (std::size_t k = 0; k < model.nodes(); ++k) {
    streams_.push_back(NodeStreams{make_rng(derive_seed(seed, StreamTag::regressor, k)),
                                   make_rng(derive_seed(seed, StreamTag::noise, k))});
  }
}

void NetworkDataSource::next(std::vector<NodeDatum>& out) {
  out.resize(streams_.size());
  for (std::size_t k = 0; k < streams_.size(); ++k) {
    out[k] = generate_node_datum(*model_, *noise_, k, streams_[k]);
  }
}

}  // namespace dmcc::signal
