#include "dmcc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "dmcc/diffusion.hpp"
#include "dmcc/rng.hpp"

namespace dmcc::analysis {

namespace {

constexpr double kEigenClamp = 1e-12;

double to_db(double linear) { return 10.0 * std::log10(std::max(linear, 1e-30)); }

// Eigen-decomposition of a symmetric block, eigenvalues within kEigenClamp of
// zero clamped to zero.
void symmetric_eigen(const Matrix& block, Vector& values, Matrix& vectors) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(block);
  values = solver.eigenvalues();
  vectors = solver.eigenvectors();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::abs(values(i)) < kEigenClamp) values(i) = 0.0;
  }
}

void check_model(const GlobalModel& model) {
  const auto mn = static_cast<Eigen::Index>(model.n * model.m);
  if (model.combiner.rows() != mn || model.combiner.cols() != mn || model.regressor_corr.rows() != mn ||
      model.regressor_corr.cols() != mn || model.expected_step.size() != static_cast<Eigen::Index>(model.n) ||
      model.noise_variance.size() != static_cast<Eigen::Index>(model.n)) {
    throw std::invalid_argument("global model dimensions are inconsistent");
  }
}

void check_moments(const GlobalModel& model, const StepMoments& moments) {
  if (moments.mean.size() != moments.second.size()) {
    throw std::invalid_argument("step moment sequences differ in length");
  }
  for (std::size_t i = 0; i < moments.mean.size(); ++i) {
    if (moments.mean[i].size() != static_cast<Eigen::Index>(model.n) ||
        moments.second[i].size() != static_cast<Eigen::Index>(model.n)) {
      throw std::invalid_argument(fmt::format("step moments at iteration {} do not cover {} nodes", i + 1, model.n));
    }
  }
  if (!model.noise_variance.allFinite()) {
    throw std::invalid_argument("transient model needs finite noise variances (Gaussian noise)");
  }
}

struct EigenBasis {
  Vector values;  // length MN
  Matrix q;       // block diagonal
  std::vector<Vector> per_node;
};

EigenBasis eigen_basis(const GlobalModel& model) {
  const auto m = static_cast<Eigen::Index>(model.m);
  const auto mn = static_cast<Eigen::Index>(model.n * model.m);
  EigenBasis basis;
  basis.values = Vector::Zero(mn);
  basis.q = Matrix::Zero(mn, mn);
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(model.n); ++k) {
    Vector values;
    Matrix vectors;
    symmetric_eigen(model.regressor_corr.block(k * m, k * m, m, m), values, vectors);
    basis.values.segment(k * m, m) = values;
    basis.q.block(k * m, k * m, m, m) = vectors;
    basis.per_node.push_back(values);
  }
  return basis;
}

}  // namespace

Matrix regressor_autocorrelation(std::span<const double> variances, std::size_t m) {
  const auto mi = static_cast<Eigen::Index>(m);
  const auto n = static_cast<Eigen::Index>(variances.size());
  Matrix r = Matrix::Zero(n * mi, n * mi);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v = variances[static_cast<std::size_t>(k)];
    if (!(v > 0.0)) throw std::invalid_argument("regressor variances must be positive");
    r.block(k * mi, k * mi, mi, mi).diagonal().setConstant(v);
  }
  return r;
}

ErrorDistribution error_distribution_from_noise(const signal::NoiseModel& noise) {
  if (noise.kind == signal::NoiseKind::gaussian) return GaussianErrors{noise.gaussian_variance};
  return GatedStableErrors{noise.stable, noise.arrival_probability};
}

double estimate_kernel_expectation(const ErrorDistribution& errors, double sigma, std::size_t n_samples,
                                   std::uint64_t seed) {
  if (n_samples == 0) throw std::invalid_argument("kernel expectation needs at least one sample");
  Rng rng = make_rng(derive_seed(seed, StreamTag::kernel));
  auto draw = [&]() -> double {
    return std::visit(
        [&](const auto& dist) -> double {
          using T = std::decay_t<decltype(dist)>;
          if constexpr (std::is_same_v<T, DegenerateErrors>) {
            return dist.value;
          } else if constexpr (std::is_same_v<T, GaussianErrors>) {
            if (dist.variance == 0.0) return 0.0;
            return std::normal_distribution<double>(0.0, std::sqrt(dist.variance))(rng);
          } else {
            if (!std::bernoulli_distribution(dist.arrival_probability)(rng)) return 0.0;
            return signal::sample_alpha_stable(dist.stable, rng);
          }
        },
        errors);
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) sum += diffusion::gaussian_kernel(draw(), sigma);
  return sum / static_cast<double>(n_samples);
}

StabilityBound mean_stability_bound(const Matrix& node_autocorrelation, double sigma,
                                    const KernelExpectationSpec& spec) {
  Vector values;
  Matrix vectors;
  symmetric_eigen(node_autocorrelation, values, vectors);
  StabilityBound out;
  out.lambda_max = values.maxCoeff();
  if (!(out.lambda_max > 0.0)) throw std::invalid_argument("lambda_max(R_u) must be positive");

  out.kernel_expectation = std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, WorstCaseKernel>) {
          return diffusion::gaussian_kernel(0.0, sigma);
        } else if constexpr (std::is_same_v<T, KernelFromErrors>) {
          return estimate_kernel_expectation(s.errors, sigma, s.samples, s.seed);
        } else {
          if (s.samples == 0) throw std::invalid_argument("kernel expectation needs at least one sample");
          Rng rng = make_rng(derive_seed(s.seed, StreamTag::kernel));
          std::normal_distribution<double> reg(0.0, std::sqrt(s.regressor_variance));
          Vector u(s.true_weights.size());
          double sum = 0.0;
          for (std::size_t i = 0; i < s.samples; ++i) {
            for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = reg(rng);
            const double d = s.true_weights.dot(u) + signal::sample_noise(s.noise, rng);
            sum += diffusion::gaussian_kernel(s.tau * u.lpNorm<1>() + std::abs(d), sigma);
          }
          return sum / static_cast<double>(s.samples);
        }
      },
      spec);
  out.eta_max = 2.0 / (out.lambda_max * out.kernel_expectation);
  return out;
}

GlobalModel GlobalModel::build(const Matrix& theta, std::span<const double> regressor_variances, std::size_t m,
                               const Vector& expected_step, const Vector& noise_variance) {
  GlobalModel model;
  model.n = static_cast<std::size_t>(theta.rows());
  model.m = m;
  // theta(l, k) is the weight node k gives node l, so row block k of B is column k of theta.
  model.combiner = kron(theta.transpose(), Matrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)));
  model.regressor_corr = regressor_autocorrelation(regressor_variances, m);
  model.expected_step = expected_step;
  model.noise_variance = noise_variance;
  check_model(model);
  return model;
}

Matrix GlobalModel::expected_step_matrix() const {
  const auto mi = static_cast<Eigen::Index>(m);
  Vector diag(static_cast<Eigen::Index>(n * m));
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) diag.segment(k * mi, mi).setConstant(expected_step(k));
  return diag.asDiagonal();
}

Matrix GlobalModel::mean_transfer() const {
  check_model(*this);
  const Matrix identity = Matrix::Identity(combiner.rows(), combiner.cols());
  return combiner * (identity - expected_step_matrix() * regressor_corr);
}

double spectral_radius(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> solver(x, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

MeanTrajectory mean_error_recursion(const GlobalModel& model, const Vector& initial_error,
                                    std::size_t iterations) {
  const Matrix transfer = model.mean_transfer();
  if (initial_error.size() != transfer.cols()) throw std::invalid_argument("initial error has the wrong length");
  MeanTrajectory out;
  out.mean_error.reserve(iterations + 1);
  out.mean_error.push_back(initial_error);
  for (std::size_t i = 0; i < iterations; ++i) out.mean_error.push_back(transfer * out.mean_error.back());
  out.spectral_radius = spectral_radius(transfer);
  out.stable = out.spectral_radius < 1.0;
  return out;
}

Matrix build_fourth_moment_A(std::span<const Vector> eigenvalues) {
  const auto n = static_cast<Eigen::Index>(eigenvalues.size());
  if (n == 0) return Matrix();
  const Eigen::Index m = eigenvalues.front().size();
  for (const auto& lk : eigenvalues) {
    if (lk.size() != m) throw std::invalid_argument("eigenvalue vectors differ in length");
    if ((lk.array() < 0.0).any()) throw std::invalid_argument("eigenvalues must be nonnegative");
  }
  const Eigen::Index mm = m * m;
  Matrix a = Matrix::Zero(n * n * mm, n * n * mm);
  for (Eigen::Index l = 0; l < n; ++l) {
    const Matrix lam_l = eigenvalues[static_cast<std::size_t>(l)].asDiagonal();
    for (Eigen::Index k = 0; k < n; ++k) {
      const Matrix lam_k = eigenvalues[static_cast<std::size_t>(k)].asDiagonal();
      auto block = a.block((l * n + k) * mm, (l * n + k) * mm, mm, mm);
      if (k == l) {
        const Vector vec_lam = Eigen::Map<const Vector>(lam_k.data(), mm);
        block = vec_lam * vec_lam.transpose() + 2.0 * kron(lam_k, lam_k);
      } else {
        block = kron(lam_l, lam_k);
      }
    }
  }
  return a;
}

StepMoments StepMoments::constant(const Vector& mean, const Vector& second, std::size_t iterations) {
  StepMoments out;
  out.mean.assign(iterations, mean);
  out.second.assign(iterations, second);
  return out;
}

TransientModel build_transient_model(const GlobalModel& model, const Vector& mean_step,
                                     const Vector& second_step) {
  check_model(model);
  const std::size_t n = model.n;
  const std::size_t m = model.m;
  const auto ni = static_cast<Eigen::Index>(n);
  const auto mi = static_cast<Eigen::Index>(m);
  const Eigen::Index mn = ni * mi;
  const Eigen::Index mm = mi * mi;
  const Eigen::Index dim = mn * mn;
  if (static_cast<std::size_t>(dim) > kMaxTransferDimension) {
    throw std::invalid_argument(fmt::format(
        "transfer matrix would be {0}x{0}; use the matrix-form recursion for networks this large", dim));
  }

  const EigenBasis basis = eigen_basis(model);
  TransientModel t;
  t.eigenvalues = basis.values;
  t.eigenvectors = basis.q;
  t.fourth_moment = build_fourth_moment_A(basis.per_node);

  const Matrix b_bar = basis.q.transpose() * model.combiner * basis.q;
  t.combiner_kron = block_kron(b_bar.transpose(), b_bar.transpose(), m);

  Vector step_diag(mn);
  for (Eigen::Index k = 0; k < ni; ++k) step_diag.segment(k * mi, mi).setConstant(mean_step(k));
  const Matrix lambda_step = (basis.values.cwiseProduct(step_diag)).asDiagonal();
  const Matrix identity = Matrix::Identity(mn, mn);

  // E[Y (.) Y]: bvec block (outer l, inner k) scaled by E[rho_k rho_l].
  Vector yy(dim);
  for (Eigen::Index l = 0; l < ni; ++l) {
    for (Eigen::Index k = 0; k < ni; ++k) {
      const double v = k == l ? second_step(k) : mean_step(k) * mean_step(l);
      yy.segment((l * ni + k) * mm, mm).setConstant(v);
    }
  }

  const Matrix inner = Matrix::Identity(dim, dim) - block_kron(identity, lambda_step, m) -
                       block_kron(lambda_step, identity, m) + yy.asDiagonal() * t.fourth_moment;
  t.transfer = inner * t.combiner_kron;

  Matrix drive = Matrix::Zero(mn, mn);
  for (Eigen::Index k = 0; k < ni; ++k) {
    drive.block(k * mi, k * mi, mi, mi) =
        (model.noise_variance(k) * second_step(k)) * basis.values.segment(k * mi, mi).asDiagonal();
  }
  t.drive = bvec(drive, m);
  t.msd_weighting = bvec(identity, m) / static_cast<double>(n);
  return t;
}

TransientPrediction transient_msd_model(const GlobalModel& model, const Vector& initial_error,
                                        const StepMoments& moments) {
  check_model(model);
  check_moments(model, moments);
  const Matrix q = eigen_basis(model).q;
  const Vector w_bar = q.transpose() * initial_error;
  Vector p = bvec(w_bar * w_bar.transpose(), model.m);

  TransientPrediction out;
  const Vector zeta = bvec(Matrix::Identity(w_bar.size(), w_bar.size()), model.m) / static_cast<double>(model.n);
  out.initial_msd = p.dot(zeta);
  for (std::size_t i = 0; i < moments.iterations(); ++i) {
    const TransientModel t = build_transient_model(model, moments.mean[i], moments.second[i]);
    p = (t.transfer.transpose() * p + t.combiner_kron.transpose() * t.drive).eval();
    out.msd.push_back(p.dot(t.msd_weighting));
    if (i + 1 == moments.iterations()) out.spectral_radius = spectral_radius(t.transfer);
  }
  out.stable = out.spectral_radius < 1.0;
  for (double v : out.msd) out.msd_db.push_back(to_db(v));
  return out;
}

TransientPrediction transient_msd_matrix_form(const GlobalModel& model, const Vector& initial_error,
                                              const StepMoments& moments) {
  check_model(model);
  check_moments(model, moments);
  const auto ni = static_cast<Eigen::Index>(model.n);
  const auto mi = static_cast<Eigen::Index>(model.m);
  const EigenBasis basis = eigen_basis(model);
  const Matrix b_bar = basis.q.transpose() * model.combiner * basis.q;
  const Vector w_bar = basis.q.transpose() * initial_error;
  Matrix cov = w_bar * w_bar.transpose();

  TransientPrediction out;
  out.initial_msd = cov.trace() / static_cast<double>(model.n);
  for (std::size_t i = 0; i < moments.iterations(); ++i) {
    const Vector& mean = moments.mean[i];
    const Vector& second = moments.second[i];
    Matrix next = cov;
    for (Eigen::Index k = 0; k < ni; ++k) {
      const Vector lam_k = basis.per_node[static_cast<std::size_t>(k)];
      for (Eigen::Index l = 0; l < ni; ++l) {
        const Vector lam_l = basis.per_node[static_cast<std::size_t>(l)];
        const Matrix c_kl = cov.block(k * mi, l * mi, mi, mi);
        // First-order terms: -E[rho_k] Lambda_k C_kl - E[rho_l] C_kl Lambda_l.
        Matrix blk = c_kl - mean(k) * lam_k.asDiagonal() * c_kl - mean(l) * c_kl * lam_l.asDiagonal();
        // Fourth-moment term E[rho_k rho_l u_k u_k^T C_kl u_l u_l^T].
        if (k == l) {
          const Matrix lam = lam_k.asDiagonal();
          blk += second(k) * (2.0 * lam * c_kl * lam + (lam * c_kl).trace() * lam);
          blk += (model.noise_variance(k) * second(k)) * lam;
        } else {
          blk += (mean(k) * mean(l)) * (lam_k.asDiagonal() * c_kl * lam_l.asDiagonal());
        }
        next.block(k * mi, l * mi, mi, mi) = blk;
      }
    }
    cov = b_bar * next * b_bar.transpose();
    out.msd.push_back(cov.trace() / static_cast<double>(model.n));
  }
  out.spectral_radius = std::numeric_limits<double>::quiet_NaN();
  out.stable = !out.msd.empty() && std::isfinite(out.msd.back());
  for (double v : out.msd) out.msd_db.push_back(to_db(v));
  return out;
}

Vector transient_fixed_point(const TransientModel& transient) {
  const Eigen::Index dim = transient.transfer.rows();
  const Matrix system = Matrix::Identity(dim, dim) - transient.transfer.transpose();
  const Vector rhs = transient.combiner_kron.transpose() * transient.drive;
  return system.partialPivLu().solve(rhs);
}

}  // namespace dmcc::analysis
