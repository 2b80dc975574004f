#include "rslbfgs/spd.hpp"

#include "rslbfgs/sym_funcs.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace rslbfgs {

SpdManifold::SpdManifold(Index n) : n_(n) {
  if (n < 1) throw std::invalid_argument("SpdManifold: n must be >= 1");
}

std::string SpdManifold::name() const {
  return "spd(" + std::to_string(n_) + ")";
}

double SpdManifold::inner_raw(const Matrix& x, const Matrix& u,
                              const Matrix& v) const {
  Eigen::LLT<Matrix> llt(x);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("spd inner: base point is not positive definite");
  }
  const Matrix a = llt.solve(u);  // x^{-1} u
  const Matrix b = llt.solve(v);  // x^{-1} v
  // tr(a b) without forming the product.
  return (a.array() * b.transpose().array()).sum();
}

Matrix SpdManifold::retract_raw(const Matrix& x, const Matrix& v) const {
  const auto [rt, irt] = sym_sqrt_invsqrt(x);
  return sym(rt * sym_expm(sym(irt * v * irt)) * rt);
}

Matrix SpdManifold::log_raw(const Matrix& x, const Matrix& y) const {
  const auto [rt, irt] = sym_sqrt_invsqrt(x);
  return sym(rt * sym_logm(sym(irt * y * irt)) * rt);
}

Matrix SpdManifold::transport_raw(const Matrix& x, const Matrix& y,
                                  const Matrix& u) const {
  const auto [rt, irt] = sym_sqrt_invsqrt(x);
  const Matrix c = sym(irt * y * irt);
  const Matrix e = rt * sym_sqrtm(c) * irt;  // (y x^{-1})^{1/2}
  return sym(e * u * e.transpose());
}

double SpdManifold::dist_raw(const Matrix& x, const Matrix& y) const {
  const Matrix irt = sym_invsqrtm(x);
  return sym_logm(sym(irt * y * irt)).norm();
}

Matrix SpdManifold::project_raw(const Matrix& x, const Matrix& g) const {
  return sym(x * sym(g) * x);
}

bool SpdManifold::is_point_raw(const Matrix& x, double tol) const {
  if (!x.allFinite()) return false;
  const double scale = x.norm();
  if (!(scale > 0.0)) return false;
  if ((x - x.transpose()).norm() > tol * scale) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(x, Eigen::EigenvaluesOnly);
  return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0;
}

bool SpdManifold::is_tangent_raw(const Matrix&, const Matrix& v,
                                 double tol) const {
  // Tangents are the symmetric matrices; relative symmetry test (zero passes).
  return v.allFinite() && (v - v.transpose()).norm() <= tol * v.norm();
}

// Orthonormal basis of T_x: images of the symmetric unit matrices S_ii = E_ii
// and S_ij = (E_ij + E_ji)/sqrt(2) under T -> x^{1/2} T x^{1/2}.  These are
// exactly orthonormal under the affine-invariant metric, because
// <x^{1/2} A x^{1/2}, x^{1/2} B x^{1/2}>_x = tr(A B) = <A, B>_F.
Vector SpdManifold::tangent_coords_raw(const Matrix& x, const Matrix& u) const {
  const Matrix irt = sym_invsqrtm(x);
  const Matrix t = sym(irt * u * irt);
  Vector c(tangent_dim());
  Index k = 0;
  const double r2 = std::sqrt(2.0);
  for (Index i = 0; i < n_; ++i) {
    c(k++) = t(i, i);
    for (Index j = i + 1; j < n_; ++j) c(k++) = r2 * t(i, j);
  }
  return c;
}

Matrix SpdManifold::tangent_from_coords_raw(const Matrix& x,
                                            const Vector& c) const {
  Matrix t(n_, n_);
  Index k = 0;
  const double inv_r2 = 1.0 / std::sqrt(2.0);
  for (Index i = 0; i < n_; ++i) {
    t(i, i) = c(k++);
    for (Index j = i + 1; j < n_; ++j) {
      t(i, j) = t(j, i) = inv_r2 * c(k++);
    }
  }
  const Matrix rt = sym_sqrtm(x);
  return sym(rt * t * rt);
}

Matrix SpdManifold::random_point_raw(std::mt19937_64& rng) const {
  // expm of a random symmetric matrix: SPD with spread-out but tame spectrum.
  std::normal_distribution<double> gauss(0.0, 0.5);
  Matrix g(n_, n_);
  for (Index j = 0; j < n_; ++j)
    for (Index i = 0; i < n_; ++i) g(i, j) = gauss(rng);
  return sym_expm(sym(g));
}

Matrix SpdManifold::random_tangent_raw(const Matrix&,
                                       std::mt19937_64& rng) const {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(n_, n_);
  for (Index j = 0; j < n_; ++j)
    for (Index i = 0; i < n_; ++i) g(i, j) = gauss(rng);
  return sym(g);
}

namespace {

/// Transport along one geodesic: factor E = (y x^{-1})^{1/2} once, then each
/// tangent costs two matrix products.
class SpdTransporter final : public Manifold::Transporter {
 public:
  SpdTransporter(Matrix from, Matrix to)
      : Transporter(std::move(from), std::move(to)) {
    const auto [rt, irt] = sym_sqrt_invsqrt(from_);
    e_ = rt * sym_sqrtm(sym(irt * to_ * irt)) * irt;
  }

 protected:
  Matrix apply_raw(const Matrix& u) const override {
    return sym(e_ * u * e_.transpose());
  }

 private:
  Matrix e_;
};

}  // namespace

std::unique_ptr<Manifold::Transporter> SpdManifold::transporter(
    const Point& x, const Point& y) const {
  check_point_shape(x.value, "transporter");
  check_point_shape(y.value, "transporter");
  return std::make_unique<SpdTransporter>(x.value, y.value);
}

}  // namespace rslbfgs
