#include "dmcc/block_ops.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace dmcc::analysis {

namespace {

void require_blocks(const Matrix& x, std::size_t m, const char* what) {
  if (m == 0) throw std::invalid_argument("block size must be positive");
  const auto mi = static_cast<Eigen::Index>(m);
  if (x.rows() % mi != 0 || x.cols() % mi != 0) {
    throw std::invalid_argument(
        fmt::format("{}: {}x{} matrix is not partitioned by {}x{} blocks", what, x.rows(), x.cols(), m, m));
  }
}

}  // namespace

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix block_kron(const Matrix& a, const Matrix& b, std::size_t m) {
  require_blocks(a, m, "block_kron lhs");
  require_blocks(b, m, "block_kron rhs");
  const auto mi = static_cast<Eigen::Index>(m);
  const Eigen::Index mm = mi * mi;
  const Eigen::Index ar = a.rows() / mi, ac = a.cols() / mi;
  const Eigen::Index br = b.rows() / mi, bc = b.cols() / mi;

  Matrix out = Matrix::Zero(ar * br * mm, ac * bc * mm);
  for (Eigen::Index i = 0; i < ar; ++i) {
    for (Eigen::Index j = 0; j < ac; ++j) {
      const Matrix aij = a.block(i * mi, j * mi, mi, mi);
      if (aij.isZero(0.0)) continue;
      for (Eigen::Index k = 0; k < br; ++k) {
        for (Eigen::Index l = 0; l < bc; ++l) {
          const Matrix bkl = b.block(k * mi, l * mi, mi, mi);
          out.block((i * br + k) * mm, (j * bc + l) * mm, mm, mm) = kron(aij, bkl);
        }
      }
    }
  }
  return out;
}

Vector bvec(const Matrix& x, std::size_t m) {
  require_blocks(x, m, "bvec");
  const auto mi = static_cast<Eigen::Index>(m);
  const Eigen::Index mm = mi * mi;
  const Eigen::Index br = x.rows() / mi, bc = x.cols() / mi;
  Vector out(x.size());
  for (Eigen::Index j = 0; j < bc; ++j) {
    for (Eigen::Index i = 0; i < br; ++i) {
      const Eigen::Index base = (j * br + i) * mm;
      for (Eigen::Index c = 0; c < mi; ++c) {
        for (Eigen::Index r = 0; r < mi; ++r) out(base + c * mi + r) = x(i * mi + r, j * mi + c);
      }
    }
  }
  return out;
}

Matrix unbvec(const Vector& v, std::size_t rows, std::size_t cols, std::size_t m) {
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  require_blocks(out, m, "unbvec");
  if (v.size() != out.size()) {
    throw std::invalid_argument(fmt::format("unbvec: vector of length {} cannot fill {}x{}", v.size(), rows, cols));
  }
  const auto mi = static_cast<Eigen::Index>(m);
  const Eigen::Index mm = mi * mi;
  const Eigen::Index br = out.rows() / mi, bc = out.cols() / mi;
  for (Eigen::Index j = 0; j < bc; ++j) {
    for (Eigen::Index i = 0; i < br; ++i) {
      const Eigen::Index base = (j * br + i) * mm;
      for (Eigen::Index c = 0; c < mi; ++c) {
        for (Eigen::Index r = 0; r < mi; ++r) out(i * mi + r, j * mi + c) = v(base + c * mi + r);
      }
    }
  }
  return out;
}

}  // namespace dmcc::analysis
