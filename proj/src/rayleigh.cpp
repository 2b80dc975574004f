#include "rslbfgs/rayleigh.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace rslbfgs {

namespace {

/// Q factor of a Gaussian matrix, with the sign convention diag(R) > 0 so the
/// result is a deterministic function of the input.  Returns the thin d-column
/// factor when rows > cols.
Matrix gaussian_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      g(i, j) = gauss(rng);
    }
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Index j = 0; j < cols; ++j) {
    if (r(j, j) < 0.0) {
      q.col(j) = -q.col(j);
    }
  }
  return q;
}

}  // namespace

EigData gen_eig_data(Index d, Index n_samples, double gap,
                     std::uint64_t seed) {
  if (d < 2) {
    throw std::invalid_argument("gen_eig_data: need dimension >= 2");
  }
  if (n_samples < d) {
    throw std::invalid_argument("gen_eig_data: need at least d samples");
  }
  if (!(gap > 0.0 && gap < 1.0)) {
    throw std::invalid_argument("gen_eig_data: gap must lie in (0, 1)");
  }

  std::mt19937_64 rng(seed);
  const Matrix u = gaussian_orthonormal(d, d, rng);
  const Matrix v = gaussian_orthonormal(n_samples, d, rng);

  Vector mu(d);
  mu(0) = 1.0;
  mu(1) = 1.0 - gap;
  for (Index k = 2; k < d; ++k) {
    mu(k) = mu(k - 1) * 0.9;
  }

  EigData data;
  data.gap = gap;
  data.seed = seed;
  data.d_matrix = std::sqrt(double(n_samples)) * u *
                  mu.cwiseSqrt().asDiagonal() * v.transpose();
  return data;
}

namespace {

class RayleighEval final : public FiniteSumProblem::Eval {
 public:
  RayleighEval(const Matrix& d_matrix, Matrix z)
      : Eval(std::move(z)), d_matrix_(d_matrix) {
    if (base_.rows() != d_matrix_.rows() || base_.cols() != 1) {
      throw std::invalid_argument("RayleighProblem: point has wrong shape");
    }
  }

  double component_value(Index i) const override {
    const double c = d_matrix_.col(i).dot(base_.col(0));
    return -c * c;
  }

  Matrix component_grad_raw(Index i) const override {
    const double c = d_matrix_.col(i).dot(base_.col(0));
    return -2.0 * c * (d_matrix_.col(i) - c * base_.col(0));
  }

 private:
  const Matrix& d_matrix_;
};

}  // namespace

RayleighProblem::RayleighProblem(EigData data)
    : data_(std::move(data)), manifold_(data_.dim()) {
  if (!data_.d_matrix.allFinite()) {
    throw std::invalid_argument("RayleighProblem: data has non-finite entries");
  }
}

std::unique_ptr<FiniteSumProblem::Eval> RayleighProblem::eval_at(
    const Point& x) const {
  return std::make_unique<RayleighEval>(data_.d_matrix, x.value);
}

EigOracle top_eig_oracle(const EigData& data) {
  const Index n = data.count();
  const Matrix a =
      (data.d_matrix * data.d_matrix.transpose()) / double(n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("top_eig_oracle: eigendecomposition failed");
  }

  EigOracle oracle;
  oracle.value = es.eigenvalues()(data.dim() - 1);  // ascending order
  oracle.vector = es.eigenvectors().col(data.dim() - 1);

  Index imax = 0;
  oracle.vector.cwiseAbs().maxCoeff(&imax);
  if (oracle.vector(imax) < 0.0) {
    oracle.vector = -oracle.vector;
  }

  const double residual =
      (a * oracle.vector - oracle.value * oracle.vector).norm();
  if (!(residual <= 1e-12)) {
    std::ostringstream msg;
    msg << "top_eig_oracle: eigenpair residual " << residual
        << " exceeds 1e-12";
    throw std::runtime_error(msg.str());
  }
  return oracle;
}

double eig_error(const Point& z, const EigData& data, double estar) {
  if (z.value.rows() != data.dim() || z.value.cols() != 1) {
    throw std::invalid_argument("eig_error: point has wrong shape");
  }
  if (!(estar > 0.0)) {
    throw std::invalid_argument("eig_error: reference eigenvalue must be > 0");
  }
  const double rayleigh =
      (data.d_matrix.transpose() * z.value.col(0)).squaredNorm() /
      (double(data.count()) * estar);
  return std::max(0.0, 1.0 - rayleigh);
}

}  // namespace rslbfgs
