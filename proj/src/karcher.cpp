#include "rslbfgs/karcher.hpp"

#include "rslbfgs/sym_funcs.hpp"

#include <Eigen/QR>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace rslbfgs {

namespace {

Matrix random_gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = gauss(rng);
  return g;
}

/// Random orthogonal matrix: QR of a square Gaussian with the usual sign fix
/// (columns flipped so the R diagonal is positive), which makes the
/// distribution Haar and the result deterministic in the generator state.
Matrix random_orthogonal(Index n, std::mt19937_64& rng) {
  const Matrix g = random_gaussian(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Vector d = qr.matrixQR().diagonal();
  for (Index j = 0; j < n; ++j) {
    if (d(j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

}  // namespace

KarcherData gen_spd_data(Index n, Index count, double cond,
                         std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_spd_data: n must be >= 1");
  if (count < 1) throw std::invalid_argument("gen_spd_data: count must be >= 1");
  if (!(cond >= 1.0)) {
    throw std::invalid_argument("gen_spd_data: cond must be >= 1");
  }
  if (n == 1 && cond != 1.0) {
    throw std::invalid_argument(
        "gen_spd_data: a 1x1 matrix cannot have condition number > 1");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double log_cond = std::log(cond);

  KarcherData data;
  data.cond = cond;
  data.seed = seed;
  data.matrices.reserve(static_cast<size_t>(count));
  for (Index k = 0; k < count; ++k) {
    const Matrix q = random_orthogonal(n, rng);
    Vector lambda(n);
    lambda(0) = cond;  // pinned endpoints: condition number is exact
    if (n > 1) lambda(n - 1) = 1.0;
    for (Index i = 1; i + 1 < n; ++i) {
      lambda(i) = std::exp(unif(rng) * log_cond);
    }
    data.matrices.push_back(sym(q * lambda.asDiagonal() * q.transpose()));
  }
  return data;
}

namespace {

/// Caches W^{1/2}, W^{-1/2} so that each component costs one
/// eigendecomposition of W^{-1/2} X_i W^{-1/2}.
class KarcherEval final : public FiniteSumProblem::Eval {
 public:
  KarcherEval(const std::vector<Matrix>& xs, Matrix w)
      : Eval(std::move(w)), xs_(xs) {
    std::tie(rt_, irt_) = sym_sqrt_invsqrt(base_);
  }

  double component_value(Index i) const override {
    return sym_logm(sym(irt_ * xs_[static_cast<size_t>(i)] * irt_))
        .squaredNorm();
  }

  Matrix component_grad_raw(Index i) const override {
    // -2 log_W(X_i), written exactly as the manifold's log kernel computes it.
    return -2.0 *
           sym(rt_ * sym_logm(sym(irt_ * xs_[static_cast<size_t>(i)] * irt_)) *
               rt_);
  }

 private:
  const std::vector<Matrix>& xs_;
  Matrix rt_, irt_;
};

}  // namespace

KarcherProblem::KarcherProblem(KarcherData data)
    : data_(std::move(data)), manifold_(data_.n()) {
  if (data_.matrices.empty()) {
    throw std::invalid_argument("KarcherProblem: empty data set");
  }
  for (const Matrix& x : data_.matrices) {
    if (!manifold_.contains({x})) {
      throw std::invalid_argument(
          "KarcherProblem: data matrix is not symmetric positive definite");
    }
  }
}

std::unique_ptr<FiniteSumProblem::Eval> KarcherProblem::eval_at(
    const Point& x) const {
  return std::make_unique<KarcherEval>(data_.matrices, x.value);
}

Point spd_arithmetic_mean(const KarcherData& data) {
  if (data.matrices.empty()) {
    throw std::invalid_argument("spd_arithmetic_mean: empty data set");
  }
  Matrix acc = data.matrices.front();
  for (size_t k = 1; k < data.matrices.size(); ++k) acc += data.matrices[k];
  acc /= static_cast<double>(data.matrices.size());
  return {sym(acc)};
}

Point karcher_oracle(const KarcherData& data, double tol, int max_iters) {
  const SpdManifold manifold(data.n());
  Matrix w = spd_arithmetic_mean(data).value;
  for (int it = 0; it < max_iters; ++it) {
    const auto [rt, irt] = sym_sqrt_invsqrt(w);
    Matrix acc = Matrix::Zero(data.n(), data.n());
    for (const Matrix& x : data.matrices) {
      acc += sym_logm(sym(irt * x * irt));
    }
    acc /= static_cast<double>(data.matrices.size());
    // `acc` is the mean log pulled back to the identity frame, so its
    // Frobenius norm is exactly the metric norm of the mean log at w.
    if (acc.norm() <= tol) return {w};
    w = sym(rt * sym_expm(acc) * rt);
  }
  throw std::runtime_error(
      "karcher_oracle: fixed-point iteration did not reach tolerance " +
      std::to_string(tol) + " within " + std::to_string(max_iters) +
      " iterations");
}

double karcher_error(const Point& w, const Point& wstar) {
  return (w.value - wstar.value).squaredNorm();
}

}  // namespace rslbfgs
