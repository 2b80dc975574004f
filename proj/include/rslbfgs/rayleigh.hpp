#pragma once

#include "rslbfgs/problem.hpp"
#include "rslbfgs/sphere.hpp"

#include <cstdint>

namespace rslbfgs {

/// A d x N sample matrix plus the generator parameters that produced it.
/// The empirical second-moment matrix is A = (1/N) D D^T.
struct EigData {
  Matrix d_matrix;  // d x N, one sample per column
  double gap = 0.0;
  std::uint64_t seed = 0;

  Index dim() const { return d_matrix.rows(); }
  Index count() const { return d_matrix.cols(); }
};

/// Generates D = sqrt(N) U S V^T with U a random d x d orthogonal matrix, V a
/// random N x d matrix with orthonormal columns, and S = diag(sqrt(mu_k)) for
/// the planted spectrum  mu_1 = 1, mu_2 = 1 - gap, mu_k = (1-gap) 0.9^{k-2}.
/// By construction (1/N) D D^T = U diag(mu) U^T, so the leading eigenvalue is
/// 1 and the eigengap is exactly `gap` up to roundoff.  Requires N >= d.
/// Deterministic in the seed.
EigData gen_eig_data(Index d, Index n_samples, double gap, std::uint64_t seed);

/// Leading-eigenvalue problem on the sphere, written as minimization:
///   f(z)   = -(1/N) ||D^T z||^2 = -z^T A z
///   f_i(z) = -(d_i^T z)^2
/// with Riemannian component gradients  -2 (d_i^T z) (I - z z^T) d_i.
/// Nonconvex (saddle points at the non-leading eigenvectors).
class RayleighProblem final : public FiniteSumProblem {
 public:
  explicit RayleighProblem(EigData data);

  const Manifold& manifold() const override { return manifold_; }
  const SphereManifold& sphere() const { return manifold_; }
  Index size() const override { return data_.count(); }
  const EigData& data() const { return data_; }

  std::unique_ptr<Eval> eval_at(const Point& x) const override;

 private:
  EigData data_;
  SphereManifold manifold_;
};

/// Ground-truth dominant eigenpair of (1/N) D D^T via a dense symmetric
/// eigendecomposition.  Self-certifying: throws std::runtime_error unless the
/// residual ||A z - e z|| is <= 1e-12.  The sign is fixed so the entry of
/// largest magnitude is positive.
struct EigOracle {
  double value = 0.0;  // leading eigenvalue e*
  Vector vector;       // unit eigenvector z*
};
EigOracle top_eig_oracle(const EigData& data);

/// Relative eigenvalue suboptimality  1 - ||D^T z||^2 / (N e*), clamped at
/// zero against roundoff (mathematically nonnegative, and 0 at the optimum).
double eig_error(const Point& z, const EigData& data, double estar);

}  // namespace rslbfgs
