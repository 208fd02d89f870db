#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "dmcc/block_ops.hpp"
#include "dmcc/signal.hpp"
#include "dmcc/types.hpp"

namespace dmcc::analysis {

/// Block-diagonal R_U with node k's block sigma_{u,k}^2 * I_m.
Matrix regressor_autocorrelation(std::span<const double> variances, std::size_t m);

struct DegenerateErrors {
  double value = 0.0;
};
struct GaussianErrors {
  double variance = 1.0;
};
/// a * A with a ~ Bernoulli(arrival_probability), A alpha-stable.
struct GatedStableErrors {
  signal::AlphaStableParams stable{1.2, 0.0, 1.0, 0.0};
  double arrival_probability = 1.0;
};
using ErrorDistribution = std::variant<DegenerateErrors, GaussianErrors, GatedStableErrors>;

/// The error law at convergence when the estimate is exact: the noise itself.
ErrorDistribution error_distribution_from_noise(const signal::NoiseModel& noise);

/// Monte Carlo mean of G_sigma(e) over the given error law.
double estimate_kernel_expectation(const ErrorDistribution& errors, double sigma, std::size_t n_samples,
                                   std::uint64_t seed);

/// E[gamma] = G_sigma(0), its largest possible value.
struct WorstCaseKernel {};

/// E[gamma] estimated from an error law.
struct KernelFromErrors {
  ErrorDistribution errors;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

/// E[gamma] evaluated at the l1 error bound tau*||u||_1 + |d|, where every
/// estimate is assumed to have l1 norm at most tau.
struct KernelFromL1Bound {
  double tau = 1.0;
  Vector true_weights;
  double regressor_variance = 1.0;
  signal::NoiseModel noise;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

using KernelExpectationSpec = std::variant<WorstCaseKernel, KernelFromErrors, KernelFromL1Bound>;

struct StabilityBound {
  double lambda_max = 0.0;
  double kernel_expectation = 0.0;
  double eta_max = 0.0;  // 2 / (lambda_max * E[gamma])
};

StabilityBound mean_stability_bound(const Matrix& node_autocorrelation, double sigma,
                                    const KernelExpectationSpec& spec);

/// Network-wide linear model of the ATC recursion.
struct GlobalModel {
  std::size_t n = 0;
  std::size_t m = 0;
  Matrix combiner;        // B = Theta^T (x) I_m, so W(i) = B Psi(i)
  Matrix regressor_corr;  // R_U
  Vector expected_step;   // E[rho_k], one per node
  Vector noise_variance;  // sigma_{v,k}^2, one per node

  /// theta follows the CombinationMatrix convention: theta(l, k) is the weight
  /// node k gives node l.
  static GlobalModel build(const Matrix& theta, std::span<const double> regressor_variances, std::size_t m,
                           const Vector& expected_step, const Vector& noise_variance);

  /// E[Y] = diag{E[rho_k] I_m}.
  Matrix expected_step_matrix() const;
  /// B [I - E[Y] R_U].
  Matrix mean_transfer() const;
};

double spectral_radius(const Matrix& x);

struct MeanTrajectory {
  std::vector<Vector> mean_error;  // [0] is the initial error
  double spectral_radius = 0.0;
  bool stable = false;
};

/// Iterates E[W~(i)] = B [I - E[Y] R_U] E[W~(i-1)].
MeanTrajectory mean_error_recursion(const GlobalModel& model, const Vector& initial_error,
                                    std::size_t iterations);

/// Fourth-moment matrix for white Gaussian regressors, given each node's
/// eigenvalues. Block-diagonal over the N^2 bvec blocks; the block that maps
/// S_kl is Lambda_l (x) Lambda_k for k != l and
/// vec(Lambda_k) vec(Lambda_k)^T + 2 Lambda_k (x) Lambda_k for k == l.
Matrix build_fourth_moment_A(std::span<const Vector> eigenvalues);

/// Per-iteration step moments: mean[i][k] = E[rho_k(i+1)],
/// second[i][k] = E[rho_k(i+1)^2].
struct StepMoments {
  std::vector<Vector> mean;
  std::vector<Vector> second;

  std::size_t iterations() const { return mean.size(); }
  /// The same moments at every iteration.
  static StepMoments constant(const Vector& mean, const Vector& second, std::size_t iterations);
};

/// The matrices of the weighted-norm recursion at one iteration, in the
/// eigenbasis of R_U.
struct TransientModel {
  Vector eigenvalues;      // diagonal of Lambda (length MN)
  Matrix eigenvectors;     // Q, block diagonal
  Matrix fourth_moment;    // A
  Matrix combiner_kron;    // Bbar^T (.) Bbar^T
  Matrix transfer;         // F
  Vector drive;            // chi = bvec{R_v E[Y^2] Lambda}
  Vector msd_weighting;    // zeta = bvec{I} / N
};

TransientModel build_transient_model(const GlobalModel& model, const Vector& mean_step,
                                     const Vector& second_step);

struct TransientPrediction {
  std::vector<double> msd;     // linear network MSD after iterations 1..I
  std::vector<double> msd_db;
  double initial_msd = 0.0;
  double spectral_radius = 0.0;  // of F at the last iteration (NaN if not evaluated)
  bool stable = false;
};

/// Largest M^2 N^2 for which the dense transfer matrix is formed.
inline constexpr std::size_t kMaxTransferDimension = 2500;

/// Propagates bvec of the weight-error covariance through F(i):
///   E||W~(i)||^2_zeta = E||W~(i-1)||^2_{F(i) zeta} + chi(i)^T (B^T (.) B^T) zeta.
TransientPrediction transient_msd_model(const GlobalModel& model, const Vector& initial_error,
                                        const StepMoments& moments);

/// The same recursion written on the MN x MN covariance directly; no
/// Kronecker-structured matrices are formed, so it scales to large networks.
TransientPrediction transient_msd_matrix_form(const GlobalModel& model, const Vector& initial_error,
                                              const StepMoments& moments);

/// Steady-state bvec covariance p solving p = F^T p + (B^T (.) B^T)^T chi.
Vector transient_fixed_point(const TransientModel& transient);

}  // namespace dmcc::analysis
