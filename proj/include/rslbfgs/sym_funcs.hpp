#pragma once

#include "rslbfgs/manifold.hpp"

#include <utility>

namespace rslbfgs {

/// Symmetric part (A + A^T)/2.
Matrix sym(const Matrix& A);

// Matrix functions of symmetric matrices, computed through a symmetric
// eigendecomposition and applied to the spectrum.  Every result is explicitly
// symmetrized so that tiny asymmetries cannot accumulate through repeated
// calls.  logm / sqrtm / invsqrtm require a positive definite input and throw
// std::domain_error otherwise (the message reports the offending eigenvalue).

Matrix sym_expm(const Matrix& A);
Matrix sym_logm(const Matrix& A);
Matrix sym_sqrtm(const Matrix& A);
Matrix sym_invsqrtm(const Matrix& A);

/// Both A^{1/2} and A^{-1/2} from a single eigendecomposition.
std::pair<Matrix, Matrix> sym_sqrt_invsqrt(const Matrix& A);

}  // namespace rslbfgs
