#include "rslbfgs/sphere.hpp"

#include <algorithm>
#include <cmath>

namespace rslbfgs {

namespace {
constexpr double kCutLocusTol = 1e-12;
constexpr double kNearAntipodal = -0.999;

double dot(const Matrix& a, const Matrix& b) {
  return (a.array() * b.array()).sum();
}
}  // namespace

SphereManifold::SphereManifold(Index dim) : dim_(dim) {
  if (dim < 2) throw std::invalid_argument("SphereManifold: dim must be >= 2");
}

std::string SphereManifold::name() const {
  return "sphere(" + std::to_string(dim_) + ")";
}

double SphereManifold::inner_raw(const Matrix&, const Matrix& u,
                                 const Matrix& v) const {
  return dot(u, v);
}

Matrix SphereManifold::retract_raw(const Matrix& x, const Matrix& v) const {
  const double theta = v.norm();
  if (theta == 0.0) return x;
  Matrix out = std::cos(theta) * x + (std::sin(theta) / theta) * v;
  out /= out.norm();  // stay on the sphere over long iterate chains
  return out;
}

double SphereManifold::checked_cosine(const Matrix& x, const Matrix& y) const {
  const double c = std::clamp(dot(x, y), -1.0, 1.0);
  if (c <= -1.0 + kCutLocusTol) {
    throw std::domain_error(
        "sphere: points are (numerically) antipodal; the minimizing geodesic "
        "is not unique");
  }
  if (c < kNearAntipodal) near_antipodal_.fetch_add(1);
  return c;
}

Matrix SphereManifold::log_raw(const Matrix& x, const Matrix& y) const {
  const double c = checked_cosine(x, y);
  Matrix p = y - c * x;  // component of y orthogonal to x
  const double s = p.norm();
  if (s == 0.0) return Matrix::Zero(dim_, 1);
  return (std::acos(c) / s) * p;
}

Matrix SphereManifold::transport_raw(const Matrix& x, const Matrix& y,
                                     const Matrix& u) const {
  const Matrix v = log_raw(x, y);
  const double theta = v.norm();
  if (theta == 0.0) return u;
  const Matrix w = v / theta;
  const double k = dot(w, u);
  // Rotate the in-geodesic component; the orthogonal complement is untouched.
  Matrix out = u + (std::cos(theta) - 1.0) * k * w - std::sin(theta) * k * x;
  out -= dot(y, out) * y;  // re-project against rounding drift
  return out;
}

double SphereManifold::dist_raw(const Matrix& x, const Matrix& y) const {
  return std::acos(checked_cosine(x, y));
}

Matrix SphereManifold::project_raw(const Matrix& x, const Matrix& g) const {
  return g - dot(x, g) * x;
}

bool SphereManifold::is_point_raw(const Matrix& x, double tol) const {
  return x.allFinite() && std::abs(x.norm() - 1.0) <= tol;
}

bool SphereManifold::is_tangent_raw(const Matrix& x, const Matrix& v,
                                    double tol) const {
  return v.allFinite() && std::abs(dot(x, v)) <= tol * v.norm();
}

// Coordinates come from the Householder reflection H = I - 2ww^T/(w^Tw) with
// w = x + sign(x_0) e_1, for which H e_1 = -sign(x_0) x: the images of
// e_2, ..., e_d form an exactly orthonormal basis of the tangent space at x,
// and applying H costs O(d).
namespace {
struct HouseholderFrame {
  Vector w;
  double wtw;
  Vector apply(const Vector& v) const {
    return v - (2.0 * w.dot(v) / wtw) * w;
  }
};

HouseholderFrame frame_at(const Matrix& x) {
  Vector w = x.col(0);
  w(0) += (x(0, 0) >= 0.0) ? 1.0 : -1.0;
  return {w, w.squaredNorm()};
}
}  // namespace

Vector SphereManifold::tangent_coords_raw(const Matrix& x,
                                          const Matrix& u) const {
  const Vector h = frame_at(x).apply(u.col(0));
  return h.tail(dim_ - 1);
}

Matrix SphereManifold::tangent_from_coords_raw(const Matrix& x,
                                               const Vector& c) const {
  Vector v = Vector::Zero(dim_);
  v.tail(dim_ - 1) = c;
  return frame_at(x).apply(v);
}

Matrix SphereManifold::random_point_raw(std::mt19937_64& rng) const {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(dim_, 1);
  double n = 0.0;
  do {
    for (Index i = 0; i < dim_; ++i) x(i, 0) = gauss(rng);
    n = x.norm();
  } while (n < 1e-12);
  return x / n;
}

Matrix SphereManifold::random_tangent_raw(const Matrix& x,
                                          std::mt19937_64& rng) const {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(dim_, 1);
  for (Index i = 0; i < dim_; ++i) g(i, 0) = gauss(rng);
  return project_raw(x, g);
}

namespace {

/// Caches the geodesic data (direction at both ends) once per geodesic.
class SphereTransporter final : public Manifold::Transporter {
 public:
  SphereTransporter(const SphereManifold& m, Matrix from, Matrix to)
      : Transporter(std::move(from), std::move(to)) {
    const Matrix v = m.log_raw(from_, to_);
    theta_ = v.norm();
    if (theta_ > 0.0) w_ = v / theta_;
  }

 protected:
  Matrix apply_raw(const Matrix& u) const override {
    if (theta_ == 0.0) return u;
    const double k = (w_.array() * u.array()).sum();
    Matrix out =
        u + (std::cos(theta_) - 1.0) * k * w_ - std::sin(theta_) * k * from_;
    out -= (to_.array() * out.array()).sum() * to_;
    return out;
  }

 private:
  Matrix w_;
  double theta_ = 0.0;
};

}  // namespace

std::unique_ptr<Manifold::Transporter> SphereManifold::transporter(
    const Point& x, const Point& y) const {
  check_point_shape(x.value, "transporter");
  check_point_shape(y.value, "transporter");
  return std::make_unique<SphereTransporter>(*this, x.value, y.value);
}

}  // namespace rslbfgs
