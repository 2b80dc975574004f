#include "rslbfgs/sym_funcs.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace rslbfgs {

namespace {

void check_square(const Matrix& A, const char* what) {
  if (A.rows() != A.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  }
}

Eigen::SelfAdjointEigenSolver<Matrix> decompose(const Matrix& A,
                                                const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error(std::string(what) +
                             ": symmetric eigendecomposition failed");
  }
  return es;
}

void require_positive(const Vector& evals, const char* what) {
  const double lo = evals.minCoeff();
  if (!(lo > 0.0)) {
    throw std::domain_error(std::string(what) +
                            ": input is not positive definite (min eigenvalue " +
                            std::to_string(lo) + ")");
  }
}

template <typename F>
Matrix recompose(const Eigen::SelfAdjointEigenSolver<Matrix>& es, F&& f) {
  Vector d = es.eigenvalues();
  for (Index i = 0; i < d.size(); ++i) d(i) = f(d(i));
  return sym(es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose());
}

}  // namespace

Matrix sym(const Matrix& A) { return 0.5 * (A + A.transpose()); }

Matrix sym_expm(const Matrix& A) {
  check_square(A, "sym_expm");
  auto es = decompose(A, "sym_expm");
  return recompose(es, [](double t) { return std::exp(t); });
}

Matrix sym_logm(const Matrix& A) {
  check_square(A, "sym_logm");
  auto es = decompose(A, "sym_logm");
  require_positive(es.eigenvalues(), "sym_logm");
  return recompose(es, [](double t) { return std::log(t); });
}

Matrix sym_sqrtm(const Matrix& A) {
  check_square(A, "sym_sqrtm");
  auto es = decompose(A, "sym_sqrtm");
  require_positive(es.eigenvalues(), "sym_sqrtm");
  return recompose(es, [](double t) { return std::sqrt(t); });
}

Matrix sym_invsqrtm(const Matrix& A) {
  check_square(A, "sym_invsqrtm");
  auto es = decompose(A, "sym_invsqrtm");
  require_positive(es.eigenvalues(), "sym_invsqrtm");
  return recompose(es, [](double t) { return 1.0 / std::sqrt(t); });
}

std::pair<Matrix, Matrix> sym_sqrt_invsqrt(const Matrix& A) {
  check_square(A, "sym_sqrt_invsqrt");
  auto es = decompose(A, "sym_sqrt_invsqrt");
  require_positive(es.eigenvalues(), "sym_sqrt_invsqrt");
  return {recompose(es, [](double t) { return std::sqrt(t); }),
          recompose(es, [](double t) { return 1.0 / std::sqrt(t); })};
}

}  // namespace rslbfgs
