#include "rslbfgs/manifold.hpp"

#include <utility>

namespace rslbfgs {

namespace detail {

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return (a.array() == b.array()).all();
}

}  // namespace detail

bool same_base(const Tangent& u, const Tangent& v) {
  return detail::bitwise_equal(u.base, v.base);
}

bool is_base(const Point& x, const Tangent& u) {
  return detail::bitwise_equal(x.value, u.base);
}

static void require_same_base(const Tangent& u, const Tangent& v,
                              const char* where) {
  if (!same_base(u, v)) {
    throw std::invalid_argument(std::string(where) +
                                ": tangents have different base points");
  }
}

Tangent operator+(const Tangent& u, const Tangent& v) {
  require_same_base(u, v, "tangent +");
  return {u.value + v.value, u.base};
}

Tangent operator-(const Tangent& u, const Tangent& v) {
  require_same_base(u, v, "tangent -");
  return {u.value - v.value, u.base};
}

Tangent operator*(double a, const Tangent& u) { return {a * u.value, u.base}; }

Tangent operator-(const Tangent& u) { return {-u.value, u.base}; }

void Manifold::check_point_shape(const Matrix& x, const char* where) const {
  if (x.rows() != point_rows() || x.cols() != point_cols()) {
    throw std::invalid_argument(
        std::string(where) + ": " + name() + " expects a " +
        std::to_string(point_rows()) + "x" + std::to_string(point_cols()) +
        " representation, got " + std::to_string(x.rows()) + "x" +
        std::to_string(x.cols()));
  }
}

void Manifold::check_tangent_at(const Point& x, const Tangent& u,
                                const char* where) const {
  check_point_shape(u.value, where);
  if (!is_base(x, u)) {
    throw std::invalid_argument(std::string(where) +
                                ": tangent is based at a different point");
  }
}

double Manifold::inner(const Point& x, const Tangent& u,
                       const Tangent& v) const {
  check_point_shape(x.value, "inner");
  check_tangent_at(x, u, "inner");
  check_tangent_at(x, v, "inner");
  return inner_raw(x.value, u.value, v.value);
}

double Manifold::norm(const Point& x, const Tangent& u) const {
  return std::sqrt(inner(x, u, u));
}

Point Manifold::retract(const Point& x, const Tangent& v) const {
  check_point_shape(x.value, "retract");
  check_tangent_at(x, v, "retract");
  if ((v.value.array() == 0.0).all()) return x;  // exact fixed point
  return {retract_raw(x.value, v.value)};
}

Tangent Manifold::log(const Point& x, const Point& y) const {
  check_point_shape(x.value, "log");
  check_point_shape(y.value, "log");
  if (detail::bitwise_equal(x.value, y.value)) {
    return zero_tangent(x);  // exact zero
  }
  return {log_raw(x.value, y.value), x.value};
}

Tangent Manifold::transport(const Point& x, const Point& y,
                            const Tangent& u) const {
  check_point_shape(x.value, "transport");
  check_point_shape(y.value, "transport");
  check_tangent_at(x, u, "transport");
  if (detail::bitwise_equal(x.value, y.value)) {
    return u;  // identity, exactly
  }
  return {transport_raw(x.value, y.value, u.value), y.value};
}

double Manifold::dist(const Point& x, const Point& y) const {
  check_point_shape(x.value, "dist");
  check_point_shape(y.value, "dist");
  if (detail::bitwise_equal(x.value, y.value)) return 0.0;
  return dist_raw(x.value, y.value);
}

Tangent Manifold::project(const Point& x, const Matrix& g) const {
  check_point_shape(x.value, "project");
  check_point_shape(g, "project");
  return {project_raw(x.value, g), x.value};
}

Tangent Manifold::zero_tangent(const Point& x) const {
  check_point_shape(x.value, "zero_tangent");
  return {Matrix::Zero(point_rows(), point_cols()), x.value};
}

bool Manifold::contains(const Point& x, double tol) const {
  if (x.value.rows() != point_rows() || x.value.cols() != point_cols()) {
    return false;
  }
  return is_point_raw(x.value, tol);
}

bool Manifold::is_tangent(const Tangent& u, double tol) const {
  if (u.value.rows() != point_rows() || u.value.cols() != point_cols()) {
    return false;
  }
  return is_tangent_raw(u.base, u.value, tol);
}

Point Manifold::random_point(std::mt19937_64& rng) const {
  return {random_point_raw(rng)};
}

Tangent Manifold::random_tangent(const Point& x, std::mt19937_64& rng) const {
  check_point_shape(x.value, "random_tangent");
  return {random_tangent_raw(x.value, rng), x.value};
}

Vector Manifold::tangent_coords(const Tangent& u) const {
  check_point_shape(u.base, "tangent_coords");
  check_point_shape(u.value, "tangent_coords");
  return tangent_coords_raw(u.base, u.value);
}

Tangent Manifold::tangent_from_coords(const Point& x, const Vector& c) const {
  check_point_shape(x.value, "tangent_from_coords");
  if (c.size() != tangent_dim()) {
    throw std::invalid_argument("tangent_from_coords: expected " +
                                std::to_string(tangent_dim()) +
                                " coordinates, got " + std::to_string(c.size()));
  }
  return {tangent_from_coords_raw(x.value, c), x.value};
}

Manifold::Transporter::Transporter(Matrix from, Matrix to)
    : from_(std::move(from)), to_(std::move(to)) {}

Tangent Manifold::Transporter::operator()(const Tangent& u) const {
  if (!detail::bitwise_equal(u.base, from_)) {
    throw std::invalid_argument(
        "transporter: tangent is not based at the geodesic start point");
  }
  if (detail::bitwise_equal(from_, to_)) return {u.value, to_};
  return {apply_raw(u.value), to_};
}

Matrix Manifold::Transporter::raw(const Matrix& u) const {
  if (detail::bitwise_equal(from_, to_)) return u;
  return apply_raw(u);
}

namespace {

/// Fallback transporter: one full transport_raw per tangent.
class GenericTransporter final : public Manifold::Transporter {
 public:
  GenericTransporter(const Manifold& m, Matrix from, Matrix to)
      : Transporter(std::move(from), std::move(to)), manifold_(m) {}

 protected:
  Matrix apply_raw(const Matrix& u) const override {
    return manifold_.transport_raw(from_, to_, u);
  }

 private:
  const Manifold& manifold_;
};

}  // namespace

std::unique_ptr<Manifold::Transporter> Manifold::transporter(
    const Point& x, const Point& y) const {
  check_point_shape(x.value, "transporter");
  check_point_shape(y.value, "transporter");
  return std::make_unique<GenericTransporter>(*this, x.value, y.value);
}

}  // namespace rslbfgs
