#pragma once

#include "rslbfgs/manifold.hpp"

namespace rslbfgs {

/// Flat Euclidean space R^d with the usual dot product.
///
/// Retraction is translation, logs are differences, and parallel transport is
/// the identity.  Mostly used as the flat reference geometry in tests and
/// diagnostics (two-loop oracles, smoothness probes) and by the Euclidean
/// baseline optimizer.
class EuclideanManifold final : public Manifold {
 public:
  explicit EuclideanManifold(Index dim);

  std::string name() const override;
  Index point_rows() const override { return dim_; }
  Index point_cols() const override { return 1; }
  Index tangent_dim() const override { return dim_; }

  double inner_raw(const Matrix& x, const Matrix& u,
                   const Matrix& v) const override;
  Matrix retract_raw(const Matrix& x, const Matrix& v) const override;
  Matrix log_raw(const Matrix& x, const Matrix& y) const override;
  Matrix transport_raw(const Matrix& x, const Matrix& y,
                       const Matrix& u) const override;
  double dist_raw(const Matrix& x, const Matrix& y) const override;
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

 private:
  Index dim_;
};

}  // namespace rslbfgs
