#include <doctest.h>

#include "dmcc/block_ops.hpp"

using namespace dmcc;
using namespace dmcc::analysis;

namespace {

// Element-level definition: block (i,j) of the result is [A_ij (x) B_kl]_{k,l}.
Matrix block_kron_oracle(const Matrix& a, const Matrix& b, Eigen::Index m) {
  const Eigen::Index ar = a.rows() / m, ac = a.cols() / m, br = b.rows() / m, bc = b.cols() / m;
  const Eigen::Index mm = m * m;
  Matrix out = Matrix::Zero(ar * br * mm, ac * bc * mm);
  for (Eigen::Index i = 0; i < ar; ++i)
    for (Eigen::Index j = 0; j < ac; ++j)
      for (Eigen::Index k = 0; k < br; ++k)
        for (Eigen::Index l = 0; l < bc; ++l)
          for (Eigen::Index ra = 0; ra < m; ++ra)
            for (Eigen::Index ca = 0; ca < m; ++ca)
              for (Eigen::Index rb = 0; rb < m; ++rb)
                for (Eigen::Index cb = 0; cb < m; ++cb) {
                  const Eigen::Index row = (i * br + k) * mm + ra * m + rb;
                  const Eigen::Index col = (j * bc + l) * mm + ca * m + cb;
                  out(row, col) = a(i * m + ra, j * m + ca) * b(k * m + rb, l * m + cb);
                }
  return out;
}

Vector bvec_oracle(const Matrix& x, Eigen::Index m) {
  const Eigen::Index rb = x.rows() / m, cb = x.cols() / m;
  Vector out(x.size());
  for (Eigen::Index j = 0; j < cb; ++j)
    for (Eigen::Index i = 0; i < rb; ++i)
      for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::Index r = 0; r < m; ++r) out((j * rb + i) * m * m + c * m + r) = x(i * m + r, j * m + c);
  return out;
}

Matrix rand(Eigen::Index r, Eigen::Index c) { return Matrix::Random(r, c); }

}  // namespace

TEST_CASE("ordinary kronecker product") {
  Matrix a(2, 2), b(1, 2);
  a << 1, 2, 3, 4;
  b << 5, 6;
  Matrix want(2, 4);
  want << 5, 6, 10, 12, 15, 18, 20, 24;
  CHECK(kron(a, b) == want);
}

TEST_CASE("block kronecker basics") {
  CHECK(block_kron(Matrix::Identity(4, 4), Matrix::Identity(4, 4), 2) == Matrix::Identity(16, 16));
  const Matrix a = rand(3, 2), b = rand(2, 4);
  CHECK(block_kron(a, b, 1) == kron(a, b));

  // diag(a,b) (.) diag(c,d) with 1x1 blocks: ordering (ac, ad, bc, bd).
  const Matrix x = Vector((Vector(2) << 2.0, 3.0).finished()).asDiagonal();
  const Matrix y = Vector((Vector(2) << 5.0, 7.0).finished()).asDiagonal();
  const Matrix want = Vector((Vector(4) << 10.0, 14.0, 15.0, 21.0).finished()).asDiagonal();
  CHECK(block_kron(x, y, 1) == want);
}

TEST_CASE("block kronecker against the index oracle") {
  for (Eigen::Index m : {1, 2, 3}) {
    CAPTURE(m);
    const Matrix a = rand(2 * m, 3 * m), b = rand(3 * m, 2 * m);
    CHECK((block_kron(a, b, static_cast<std::size_t>(m)) - block_kron_oracle(a, b, m)).cwiseAbs().maxCoeff() == 0.0);
  }
  Matrix d1 = Matrix::Zero(4, 4), d2 = Matrix::Zero(4, 4);
  d1.diagonal() << 1, 2, 3, 4;
  d2.diagonal() << 5, 6, 7, 8;
  const Matrix got = block_kron(d1, d2, 2);
  CHECK(got == block_kron_oracle(d1, d2, 2));
  CHECK(got.isDiagonal());
}

TEST_CASE("bvec against the index oracle and round trip") {
  Matrix x(4, 4);
  for (Eigen::Index i = 0; i < 16; ++i) x(i % 4, i / 4) = static_cast<double>(i);
  const Vector v = bvec(x, 2);
  CHECK(v == bvec_oracle(x, 2));
  // First block is the top-left 2x2, column-major; then the bottom-left one.
  CHECK(v.head(8) == (Vector(8) << 0, 1, 4, 5, 2, 3, 6, 7).finished());

  const Matrix y = rand(6, 9);
  CHECK(bvec(y, 3) == bvec_oracle(y, 3));
  CHECK(unbvec(bvec(y, 3), 6, 9, 3) == y);
  // Whole matrix as one block is ordinary vec.
  CHECK(bvec(y.leftCols(6), 6) == Eigen::Map<const Vector>(Matrix(y.leftCols(6)).data(), 36));
}

TEST_CASE("bvec(X S Y) = (Y^T (.) X) bvec(S)") {
  for (Eigen::Index m : {1, 2, 3}) {
    const Eigen::Index n = 3 * m;
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix x = rand(n, n), s = rand(n, n), y = rand(n, n);
      const Vector lhs = bvec(x * s * y, static_cast<std::size_t>(m));
      const Vector rhs = block_kron(y.transpose(), x, static_cast<std::size_t>(m)) * bvec(s, static_cast<std::size_t>(m));
      CHECK((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    }
  }
}

TEST_CASE("transpose distributes over the block kronecker product") {
  const Matrix a = rand(4, 4), b = rand(4, 4);
  CHECK((block_kron(a, b, 2).transpose() - block_kron(a.transpose(), b.transpose(), 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
  CHECK_THROWS_AS(block_kron(rand(3, 4), rand(4, 4), 2), std::invalid_argument);
  CHECK_THROWS_AS(bvec(rand(4, 5), 2), std::invalid_argument);
  CHECK_THROWS_AS(unbvec(Vector::Zero(15), 4, 4, 2), std::invalid_argument);
  CHECK_THROWS_AS(bvec(rand(4, 4), 0), std::invalid_argument);
}
