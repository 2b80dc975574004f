#pragma once

#include "rslbfgs/problem.hpp"
#include "rslbfgs/spd.hpp"

#include <cstdint>
#include <vector>

namespace rslbfgs {

/// A set of SPD matrices plus the generator parameters that produced it.
struct KarcherData {
  std::vector<Matrix> matrices;
  double cond = 1.0;
  std::uint64_t seed = 0;

  Index n() const { return matrices.empty() ? 0 : matrices.front().rows(); }
  Index count() const { return static_cast<Index>(matrices.size()); }
};

/// Generates `count` random n x n SPD matrices X_i = Q_i L_i Q_i^T with Q_i a
/// Haar-ish random orthogonal factor (QR of a Gaussian matrix, sign-fixed)
/// and L_i log-uniform in [1, cond] with the endpoint eigenvalues pinned to 1
/// and cond, so every matrix hits the target condition number exactly.
/// Deterministic in the seed.
KarcherData gen_spd_data(Index n, Index count, double cond, std::uint64_t seed);

/// Geometric (Karcher) mean objective on the SPD manifold:
///   f(W)   = (1/N) sum_i dist(W, X_i)^2
///   f_i(W) = || logm(W^{-1/2} X_i W^{-1/2}) ||_F^2
/// with Riemannian component gradients  -2 log_W(X_i).
/// Geodesically strongly convex; its unique minimizer is the Karcher mean.
class KarcherProblem final : public FiniteSumProblem {
 public:
  explicit KarcherProblem(KarcherData data);

  const Manifold& manifold() const override { return manifold_; }
  const SpdManifold& spd() const { return manifold_; }
  Index size() const override { return data_.count(); }
  const KarcherData& data() const { return data_; }

  std::unique_ptr<Eval> eval_at(const Point& x) const override;

 private:
  KarcherData data_;
  SpdManifold manifold_;
};

/// Arithmetic mean of the data matrices (the standard initializer).
Point spd_arithmetic_mean(const KarcherData& data);

/// Ground-truth Karcher mean via the batch Riemannian fixed-point iteration
///   W <- retract(W, (1/N) sum_i log_W(X_i))
/// from the arithmetic mean, until the mean-log metric norm drops to `tol`.
/// The returned point has full-gradient norm <= 2 tol.  Throws
/// std::runtime_error when the iteration has not converged after `max_iters`.
Point karcher_oracle(const KarcherData& data, double tol = 1e-12,
                     int max_iters = 10000);

/// Squared Frobenius error ||W - Wstar||_F^2 (the convergence metric used by
/// the experiment traces).
double karcher_error(const Point& w, const Point& wstar);

}  // namespace rslbfgs
