#pragma once

#include <cstddef>

#include "dmcc/types.hpp"

namespace dmcc::analysis {

/// Block Kronecker product of matrices partitioned into m x m blocks:
/// block (i, j) of the result is A_ij (x) B, itself partitioned as
/// [A_ij (x) B_kl]_{k,l}. With m = 1 this is the ordinary Kronecker product.
/// Satisfies bvec(X S Y) = (Y^T (.) X) bvec(S).
Matrix block_kron(const Matrix& a, const Matrix& b, std::size_t m);

/// Block-column-major stacking of the vec'd m x m blocks of x.
Vector bvec(const Matrix& x, std::size_t m);

/// Inverse of bvec for a rows x cols matrix.
Matrix unbvec(const Vector& v, std::size_t rows, std::size_t cols, std::size_t m);

/// Ordinary Kronecker product.
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace dmcc::analysis
