#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dmcc/analysis.hpp"
#include "dmcc/block_ops.hpp"
#include "dmcc/network.hpp"

using namespace dmcc;
using namespace dmcc::analysis;

namespace {

const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);

// Column convention: theta(l, k) is the weight node k gives node l.
Matrix path_uniform3() {
  Matrix t(3, 3);
  t << 0.5, 1.0 / 3.0, 0.0,
       0.5, 1.0 / 3.0, 0.5,
       0.0, 1.0 / 3.0, 0.5;
  return t;
}

// Plain ATC LMS on white Gaussian regressors; network MSD per iteration,
// averaged over runs.
std::vector<double> simulate_lms(const Matrix& theta, const std::vector<double>& var, Eigen::Index m, double mu,
                                 double noise_var, const Vector& w_o, int runs, int iters, std::uint64_t seed) {
  const auto n = theta.rows();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> msd(static_cast<std::size_t>(iters), 0.0);
  for (int r = 0; r < runs; ++r) {
    std::vector<Vector> w(static_cast<std::size_t>(n), Vector::Zero(m)), psi = w;
    for (int i = 0; i < iters; ++i) {
      for (Eigen::Index k = 0; k < n; ++k) {
        Vector u(m);
        for (Eigen::Index j = 0; j < m; ++j) u(j) = std::sqrt(var[static_cast<std::size_t>(k)]) * g(rng);
        const double d = w_o.dot(u) + std::sqrt(noise_var) * g(rng);
        const auto ks = static_cast<std::size_t>(k);
        psi[ks] = w[ks] + mu * (d - w[ks].dot(u)) * u;
      }
      double total = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        Vector next = Vector::Zero(m);
        for (Eigen::Index l = 0; l < n; ++l) next += theta(l, k) * psi[static_cast<std::size_t>(l)];
        w[static_cast<std::size_t>(k)] = next;
        total += (w_o - next).squaredNorm();
      }
      msd[static_cast<std::size_t>(i)] += total / static_cast<double>(n);
    }
  }
  for (auto& v : msd) v /= runs;
  return msd;
}

double db(double x) { return 10.0 * std::log10(x); }

GlobalModel model_for(const Matrix& theta, const std::vector<double>& var, std::size_t m, double mu, double nv) {
  const auto n = theta.rows();
  return GlobalModel::build(theta, var, m, Vector::Constant(n, mu), Vector::Constant(n, nv));
}

}  // namespace

TEST_CASE("regressor autocorrelation") {
  CHECK(regressor_autocorrelation(std::vector<double>{1, 1, 1}, 2) == Matrix::Identity(6, 6));
  const Matrix r = regressor_autocorrelation(std::vector<double>{2.0, 0.5}, 1);
  CHECK(r(0, 0) == 2.0);
  CHECK(r(1, 1) == 0.5);
  CHECK(r(0, 1) == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(regressor_autocorrelation(std::vector<double>{1.0, 3.0}, 2));
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(3.0));
  CHECK_THROWS_AS(regressor_autocorrelation(std::vector<double>{1.0, 0.0}, 2), std::invalid_argument);
}

TEST_CASE("kernel expectation") {
  CHECK(estimate_kernel_expectation(DegenerateErrors{0.0}, 1.5, 10, 1) == 1.0 / (1.5 * kSqrt2Pi));
  const double est = estimate_kernel_expectation(GaussianErrors{1.0}, 1.0, 200000, 2);
  CHECK(est == doctest::Approx(0.2820948).epsilon(0.01));
  for (double v : {0.1, 4.0}) {
    for (double s : {0.5, 2.0}) {
      const double closed = 1.0 / (kSqrt2Pi * std::sqrt(s * s + v));
      CHECK(estimate_kernel_expectation(GaussianErrors{v}, s, 200000, 3) == doctest::Approx(closed).epsilon(0.01));
    }
  }
  const double heavy = estimate_kernel_expectation(GatedStableErrors{{1.2, 0, 1, 0}, 1.0}, 1.0, 100000, 4);
  CHECK(heavy < 1.0 / kSqrt2Pi);
  CHECK(estimate_kernel_expectation(GaussianErrors{1.0}, 1.0, 1000, 9) ==
        estimate_kernel_expectation(GaussianErrors{1.0}, 1.0, 1000, 9));
}

TEST_CASE("mean stability bound") {
  const auto worst = mean_stability_bound(Matrix::Identity(3, 3), 1.0, WorstCaseKernel{});
  CHECK(worst.eta_max == doctest::Approx(2.0 * kSqrt2Pi).epsilon(1e-12));
  CHECK(worst.eta_max == doctest::Approx(5.0133).epsilon(1e-4));
  CHECK(mean_stability_bound(1e12 * Matrix::Identity(2, 2), 1.0, WorstCaseKernel{}).eta_max < 1e-11);

  // Any error law gives E[gamma] <= G(0), hence a looser bound.
  const Matrix r = 2.5 * Matrix::Identity(4, 4);
  for (double s : {0.5, 1.0, 3.0}) {
    const double floor = 2.0 * s * kSqrt2Pi / 2.5;
    CHECK(mean_stability_bound(r, s, KernelFromErrors{GaussianErrors{0.3}, 50000, 1}).eta_max >= floor);
    CHECK(mean_stability_bound(r, s, KernelFromErrors{GatedStableErrors{}, 50000, 1}).eta_max >= floor);
    signal::NoiseModel noise;
    CHECK(mean_stability_bound(r, s, KernelFromL1Bound{2.0, Vector::Constant(4, 0.5), 2.5, noise, 20000, 1}).eta_max >=
          floor);
  }
  CHECK_THROWS_AS(mean_stability_bound(Matrix::Zero(2, 2), 1.0, WorstCaseKernel{}), std::invalid_argument);
}

TEST_CASE("mean error recursion") {
  SUBCASE("no adaptation keeps the error") {
    const auto t = network::generate_topology(6, 1.2, 0.6, 2);
    const Matrix theta = network::build_combination_matrix(t, network::CombinationRule::metropolis).entries();
    const auto model = model_for(theta, std::vector<double>(6, 1.0), 2, 0.0, 0.0);
    const Vector w0 = Vector::Constant(12, 0.7);
    const auto traj = mean_error_recursion(model, w0, 10);
    for (const auto& e : traj.mean_error) CHECK((e - w0).norm() < 1e-12);
    CHECK(traj.spectral_radius <= 1.0 + 1e-12);
  }
  SUBCASE("scalar geometric decay") {
    const auto model = model_for(Matrix::Identity(1, 1), {1.0}, 1, 0.1, 0.0);
    const auto traj = mean_error_recursion(model, Vector::Ones(1), 30);
    for (std::size_t i = 0; i <= 30; ++i) CHECK(traj.mean_error[i](0) == doctest::Approx(std::pow(0.9, i)).epsilon(1e-13));
    CHECK(traj.spectral_radius == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(traj.stable);
  }
  SUBCASE("non-symmetric combiner matches a per-node recursion") {
    const Matrix theta = path_uniform3();
    const std::vector<double> var{0.5, 1.0, 2.0};
    const Vector mu = (Vector(3) << 0.1, 0.2, 0.05).finished();
    const auto model = GlobalModel::build(theta, var, 2, mu, Vector::Zero(3));
    Vector w0(6);
    w0 << 1, -1, 2, 0.5, -0.3, 0.8;
    const auto traj = mean_error_recursion(model, w0, 15);
    std::vector<Vector> e{w0.segment(0, 2), w0.segment(2, 2), w0.segment(4, 2)};
    for (std::size_t i = 1; i <= 15; ++i) {
      std::vector<Vector> psi(3), next(3, Vector::Zero(2));
      for (int k = 0; k < 3; ++k) psi[static_cast<std::size_t>(k)] = (1.0 - mu(k) * var[static_cast<std::size_t>(k)]) * e[static_cast<std::size_t>(k)];
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) next[static_cast<std::size_t>(k)] += theta(l, k) * psi[static_cast<std::size_t>(l)];
      e = next;
      for (int k = 0; k < 3; ++k) CHECK((traj.mean_error[i].segment(2 * k, 2) - e[static_cast<std::size_t>(k)]).norm() < 1e-14);
    }
  }
  SUBCASE("linearity") {
    const auto model = model_for(path_uniform3(), {1, 1, 1}, 2, 0.3, 0.0);
    const Vector w0 = Vector::LinSpaced(6, -1, 1);
    const auto a = mean_error_recursion(model, w0, 20), b = mean_error_recursion(model, 2.0 * w0, 20);
    for (std::size_t i = 0; i <= 20; ++i) CHECK(b.mean_error[i] == 2.0 * a.mean_error[i]);
  }
  SUBCASE("cooperation never increases the spectral radius") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto t = network::generate_topology(8, 1.2, 0.6, seed);
      const Matrix theta = network::build_combination_matrix(t, network::CombinationRule::metropolis).entries();
      std::vector<double> var(8);
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> u(0.2, 3.0);
      for (auto& v : var) v = u(rng);
      for (double mu : {0.1, 0.5, 1.2}) {
        const double coop = spectral_radius(model_for(theta, var, 2, mu, 0).mean_transfer());
        const double alone = spectral_radius(model_for(Matrix::Identity(8, 8), var, 2, mu, 0).mean_transfer());
        CHECK(coop <= alone + 1e-12);
      }
    }
  }
}

TEST_CASE("fourth-moment matrix") {
  const Vector one = Vector::Ones(1);
  CHECK(build_fourth_moment_A(std::vector<Vector>{one})(0, 0) == 3.0);
  const Matrix a2 = build_fourth_moment_A(std::vector<Vector>{one, one});
  CHECK(a2 == Vector((Vector(4) << 3, 1, 1, 3).finished()).asDiagonal().toDenseMatrix());
  CHECK(build_fourth_moment_A(std::vector<Vector>{Vector::Zero(3)}).isZero());
  CHECK_THROWS_AS(build_fourth_moment_A(std::vector<Vector>{-one}), std::invalid_argument);
}

TEST_CASE("fourth-moment matrix reproduces the Gaussian moments") {
  // Isserlis: E[u u^T S u u^T] = 2 L S L + tr(L S) L for u ~ N(0, L);
  // E[u_k u_k^T S u_l u_l^T] = L_k S L_l for independent u_k, u_l.
  const std::vector<Vector> lam{(Vector(3) << 0.5, 1.0, 2.0).finished(), (Vector(3) << 1.5, 0.2, 0.7).finished()};
  const Matrix a = build_fourth_moment_A(lam);
  Matrix s = Matrix::Random(6, 6);
  s = (s + s.transpose()).eval();
  const Vector got = a * bvec(s, 3);

  Matrix want = Matrix::Zero(6, 6);
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) {
      const Matrix lk = lam[static_cast<std::size_t>(k)].asDiagonal(), ll = lam[static_cast<std::size_t>(l)].asDiagonal();
      const Matrix skl = s.block(3 * k, 3 * l, 3, 3);
      want.block(3 * k, 3 * l, 3, 3) = k == l ? Matrix(2 * lk * skl * lk + (lk * skl).trace() * lk) : Matrix(lk * skl * ll);
    }
  }
  CHECK((got - bvec(want, 3)).norm() < 1e-12 * got.norm());

  // Sampled check of the diagonal block.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix sampled = Matrix::Zero(3, 3);
  const int n = 400000;
  const Matrix s00 = s.block(0, 0, 3, 3);
  for (int i = 0; i < n; ++i) {
    Vector u(3);
    for (int j = 0; j < 3; ++j) u(j) = std::sqrt(lam[0](j)) * g(rng);
    sampled += u * (u.transpose() * s00 * u) * u.transpose();
  }
  sampled /= n;
  CHECK((sampled - want.block(0, 0, 3, 3)).norm() < 0.05 * want.block(0, 0, 3, 3).norm());
}

TEST_CASE("transient model without adaptation is the identity") {
  const auto model = model_for(Matrix::Identity(3, 3), {1, 2, 3}, 2, 0.0, 0.1);
  const auto t = build_transient_model(model, Vector::Zero(3), Vector::Zero(3));
  CHECK(t.transfer.isIdentity(1e-15));
  CHECK(t.drive.isZero());
  const Vector w0 = Vector::LinSpaced(6, 0.1, 0.6);
  const auto pred = transient_msd_model(model, w0, StepMoments::constant(Vector::Zero(3), Vector::Zero(3), 20));
  for (double v : pred.msd) CHECK(v == doctest::Approx(w0.squaredNorm() / 3.0).epsilon(1e-14));
}

TEST_CASE("single-node model reduces to the LMS variance recursion") {
  const double mu = 0.05, nv = 0.01;
  const std::size_t m = 3;
  const auto model = model_for(Matrix::Identity(1, 1), {1.0}, m, mu, nv);
  const Vector w0 = Vector::Constant(3, 0.4);
  const auto pred = transient_msd_model(model, w0, StepMoments::constant(Vector::Constant(1, mu), Vector::Constant(1, mu * mu), 200));
  double msd = w0.squaredNorm();
  for (std::size_t i = 0; i < 200; ++i) {
    msd = (1.0 - 2.0 * mu + mu * mu * (m + 2.0)) * msd + mu * mu * m * nv;
    CHECK(pred.msd[i] == doctest::Approx(msd).epsilon(1e-12));
  }
}

TEST_CASE("transfer-matrix and covariance recursions agree") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 0.2);
  for (int trial = 0; trial < 4; ++trial) {
    const Matrix theta = trial % 2 == 0 ? path_uniform3()
                                        : network::build_combination_matrix(network::generate_topology(3, 1.0, 2.0, 1),
                                                                            network::CombinationRule::metropolis)
                                              .entries();
    const std::vector<double> var{0.5, 1.0, 1.7};
    StepMoments moments;
    for (int i = 0; i < 60; ++i) {
      Vector mean(3), second(3);
      for (int k = 0; k < 3; ++k) {
        mean(k) = u(rng);
        second(k) = mean(k) * mean(k) * (1.0 + u(rng));
      }
      moments.mean.push_back(mean);
      moments.second.push_back(second);
    }
    const auto model = GlobalModel::build(theta, var, 2, moments.mean.front(), (Vector(3) << 0.01, 0.02, 0.05).finished());
    const Vector w0 = Vector::LinSpaced(6, -1.0, 1.5);
    const auto a = transient_msd_model(model, w0, moments), b = transient_msd_matrix_form(model, w0, moments);
    REQUIRE(a.msd.size() == b.msd.size());
    for (std::size_t i = 0; i < a.msd.size(); ++i) CHECK(std::abs(a.msd[i] - b.msd[i]) <= 1e-10 * a.msd[i]);
  }
}

TEST_CASE("transient model against Monte Carlo LMS") {
  SUBCASE("one node, one tap") {
    const double mu = 0.05, nv = 0.01;
    const Vector w_o = Vector::Constant(1, 1.0);
    const auto sim = simulate_lms(Matrix::Identity(1, 1), {1.0}, 1, mu, nv, w_o, 500, 300, 5);
    const auto pred = transient_msd_model(model_for(Matrix::Identity(1, 1), {1.0}, 1, mu, nv), w_o,
                                          StepMoments::constant(Vector::Constant(1, mu), Vector::Constant(1, mu * mu), 300));
    double worst = 0.0;
    for (std::size_t i = 50; i < 300; ++i) worst = std::max(worst, std::abs(db(pred.msd[i]) - db(sim[i])));
    MESSAGE("max gap after iteration 50: ", worst, " dB");
    CHECK(worst < 2.0);
  }
  SUBCASE("three nodes, non-symmetric combiner") {
    const double mu = 0.04, nv = 0.01;
    const std::vector<double> var{0.6, 1.0, 1.4};
    const Vector w_o = (Vector(2) << 0.8, -0.5).finished();
    const Matrix theta = path_uniform3();
    const auto sim = simulate_lms(theta, var, 2, mu, nv, w_o, 2000, 250, 6);
    const auto model = GlobalModel::build(theta, var, 2, Vector::Constant(3, mu), Vector::Constant(3, nv));
    const auto pred = transient_msd_model(model, w_o.replicate(3, 1),
                                          StepMoments::constant(Vector::Constant(3, mu), Vector::Constant(3, mu * mu), 250));
    double worst = 0.0;
    for (std::size_t i = 0; i < 250; ++i) worst = std::max(worst, std::abs(db(pred.msd[i]) - db(sim[i])));
    MESSAGE("max gap: ", worst, " dB");
    CHECK(worst < 0.5);
  }
}

TEST_CASE("fixed point matches the long-run iteration") {
  const auto model = model_for(path_uniform3(), {1.0, 0.8, 1.2}, 2, 0.1, 0.02);
  const Vector mean = Vector::Constant(3, 0.1), second = Vector::Constant(3, 0.012);
  const auto t = build_transient_model(model, mean, second);
  const Vector p = transient_fixed_point(t);
  const auto pred = transient_msd_model(model, Vector::Ones(6), StepMoments::constant(mean, second, 3000));
  CHECK(pred.stable);
  CHECK(pred.spectral_radius < 1.0);
  CHECK(std::abs(pred.msd.back() - p.dot(t.msd_weighting)) <= 1e-10 * pred.msd.back());
}

TEST_CASE("unstable transfer is reported") {
  const auto model = model_for(Matrix::Identity(2, 2), {1.0, 1.0}, 2, 1.9, 0.01);
  const auto pred = transient_msd_model(model, Vector::Ones(4),
                                        StepMoments::constant(Vector::Constant(2, 1.9), Vector::Constant(2, 3.61), 50));
  CHECK_FALSE(pred.stable);
  CHECK(pred.spectral_radius >= 1.0);
  CHECK(pred.msd.back() > pred.msd.front());
}

TEST_CASE("oversized transfer matrices are refused") {
  const auto model = model_for(Matrix::Identity(10, 10), std::vector<double>(10, 1.0), 10, 0.01, 0.01);
  CHECK_THROWS_AS(build_transient_model(model, Vector::Constant(10, 0.01), Vector::Constant(10, 1e-4)), std::invalid_argument);
  const auto pred = transient_msd_matrix_form(model, Vector::Ones(100),
                                              StepMoments::constant(Vector::Constant(10, 0.01), Vector::Constant(10, 1e-4), 5));
  CHECK(pred.msd.size() == 5);
}
