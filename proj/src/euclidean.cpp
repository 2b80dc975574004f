#include "rslbfgs/euclidean.hpp"

#include <cmath>

namespace rslbfgs {

EuclideanManifold::EuclideanManifold(Index dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("EuclideanManifold: dim must be >= 1");
}

std::string EuclideanManifold::name() const {
  return "euclidean(" + std::to_string(dim_) + ")";
}

double EuclideanManifold::inner_raw(const Matrix&, const Matrix& u,
                                    const Matrix& v) const {
  return (u.array() * v.array()).sum();
}

Matrix EuclideanManifold::retract_raw(const Matrix& x, const Matrix& v) const {
  return x + v;
}

Matrix EuclideanManifold::log_raw(const Matrix& x, const Matrix& y) const {
  return y - x;
}

Matrix EuclideanManifold::transport_raw(const Matrix&, const Matrix&,
                                        const Matrix& u) const {
  return u;
}

double EuclideanManifold::dist_raw(const Matrix& x, const Matrix& y) const {
  return (y - x).norm();
}

Matrix EuclideanManifold::project_raw(const Matrix&, const Matrix& g) const {
  return g;
}

bool EuclideanManifold::is_point_raw(const Matrix& x, double) const {
  return x.allFinite();
}

bool EuclideanManifold::is_tangent_raw(const Matrix&, const Matrix& v,
                                       double) const {
  return v.allFinite();
}

Vector EuclideanManifold::tangent_coords_raw(const Matrix&,
                                             const Matrix& u) const {
  return u.col(0);
}

Matrix EuclideanManifold::tangent_from_coords_raw(const Matrix&,
                                                  const Vector& c) const {
  return c;
}

Matrix EuclideanManifold::random_point_raw(std::mt19937_64& rng) const {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(dim_, 1);
  for (Index i = 0; i < dim_; ++i) x(i, 0) = gauss(rng);
  return x;
}

Matrix EuclideanManifold::random_tangent_raw(const Matrix&,
                                             std::mt19937_64& rng) const {
  return random_point_raw(rng);
}

}  // namespace rslbfgs
