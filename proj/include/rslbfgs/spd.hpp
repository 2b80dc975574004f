#pragma once

#include "rslbfgs/manifold.hpp"

namespace rslbfgs {

/// Manifold of n x n symmetric positive definite matrices with the
/// affine-invariant metric  <u, v>_x = tr(x^{-1} u x^{-1} v).
///
/// Points are SPD matrices, tangents are symmetric matrices.  This geometry
/// has nonpositive sectional curvature (a Hadamard manifold): geodesics
/// between any two points are unique, so log/transport/dist are globally
/// defined.  All kernels are built from symmetric eigendecompositions and
/// explicitly symmetrize their results.
///
/// Closed forms used (x^{1/2}, x^{-1/2} from one eigendecomposition):
///   retract(x, v) = x^{1/2} expm(x^{-1/2} v x^{-1/2}) x^{1/2}
///   log(x, y)     = x^{1/2} logm(x^{-1/2} y x^{-1/2}) x^{1/2}
///   transport     = E u E^T with E = (y x^{-1})^{1/2}
///                   = x^{1/2} (x^{-1/2} y x^{-1/2})^{1/2} x^{-1/2}
///   dist(x, y)    = || logm(x^{-1/2} y x^{-1/2}) ||_F
class SpdManifold final : public Manifold {
 public:
  explicit SpdManifold(Index n);

  std::string name() const override;
  Index point_rows() const override { return n_; }
  Index point_cols() const override { return n_; }
  Index tangent_dim() const override { return n_ * (n_ + 1) / 2; }

  double inner_raw(const Matrix& x, const Matrix& u,
                   const Matrix& v) const override;
  Matrix retract_raw(const Matrix& x, const Matrix& v) const override;
  Matrix log_raw(const Matrix& x, const Matrix& y) const override;
  Matrix transport_raw(const Matrix& x, const Matrix& y,
                       const Matrix& u) const override;
  double dist_raw(const Matrix& x, const Matrix& y) const override;
  /// Ambient gradient G -> Riemannian gradient x sym(G) x.
  Matrix project_raw(const Matrix& x, const Matrix& g) const override;
  bool is_point_raw(const Matrix& x, double tol) const override;
  bool is_tangent_raw(const Matrix& x, const Matrix& v,
                      double tol) const override;
  Vector tangent_coords_raw(const Matrix& x, const Matrix& u) const override;
  Matrix tangent_from_coords_raw(const Matrix& x,
                                 const Vector& c) const override;
  Matrix random_point_raw(std::mt19937_64& rng) const override;
  Matrix random_tangent_raw(const Matrix& x,
                            std::mt19937_64& rng) const override;

  std::unique_ptr<Transporter> transporter(const Point& x,
                                           const Point& y) const override;

 private:
  Index n_;
};

}  // namespace rslbfgs
