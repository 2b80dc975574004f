#pragma once

#include "rslbfgs/manifold.hpp"

#include <atomic>
#include <cstdint>

namespace rslbfgs {

/// Unit sphere S^{d-1} embedded in R^d, with the induced round metric.
///
/// Points are d x 1 unit vectors, tangents are d x 1 vectors orthogonal to
/// their base point.  Retraction is the exact exponential map (great-circle
/// arc), followed by a renormalization that keeps long iterate chains on the
/// sphere to machine precision.
///
/// The log map (and hence dist/transport) is undefined at the cut locus: for
/// y approaching -x the minimizing geodesic loses uniqueness.  Inputs with
/// x.y <= -1 + 1e-12 are rejected with std::domain_error; inputs with
/// x.y < -0.999 go through but are counted in near_antipodal_events() so
/// callers can surface how often they operate near the cut locus.
class SphereManifold final : public Manifold {
 public:
  explicit SphereManifold(Index dim);

  std::string name() const override;
  Index point_rows() const override { return dim_; }
  Index point_cols() const override { return 1; }
  Index tangent_dim() const override { return dim_ - 1; }

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

  std::unique_ptr<Transporter> transporter(const Point& x,
                                           const Point& y) const override;

  /// Number of log/dist/transport calls that came within x.y < -0.999 of the
  /// cut locus since construction (or the last reset).  Thread-safe.
  std::uint64_t near_antipodal_events() const { return near_antipodal_.load(); }
  void reset_near_antipodal_events() { near_antipodal_.store(0); }

 private:
  /// Cosine of the angle between x and y, clamped to [-1, 1]; rejects the
  /// cut locus and counts near-antipodal inputs.
  double checked_cosine(const Matrix& x, const Matrix& y) const;

  Index dim_;
  mutable std::atomic<std::uint64_t> near_antipodal_{0};
};

}  // namespace rslbfgs
