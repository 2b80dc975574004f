#pragma once

#include <Eigen/Core>

#include <memory>
#include <random>
#include <stdexcept>
#include <string>

namespace rslbfgs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Point on a manifold, stored as a dense matrix whose shape is fixed by the
/// owning manifold: a d x 1 unit vector on the sphere, an n x n symmetric
/// positive definite matrix on the SPD manifold.
struct Point {
  Matrix value;
};

/// Tangent vector together with the base point it is attached to.
///
/// Tangents living in different tangent spaces must never be combined, so all
/// operations that mix tangents compare base points for exact (bitwise)
/// equality and throw std::invalid_argument on mismatch.  Base points are
/// copies of the same computed iterate in normal use, which makes bitwise
/// comparison both cheap and reliable.
struct Tangent {
  Matrix value;
  Matrix base;
};

/// True when both tangents are attached to bitwise-identical base points.
bool same_base(const Tangent& u, const Tangent& v);

/// True when the tangent is attached to exactly this point.
bool is_base(const Point& x, const Tangent& u);

// Linear tangent-space arithmetic.  Same-base checked.
Tangent operator+(const Tangent& u, const Tangent& v);
Tangent operator-(const Tangent& u, const Tangent& v);
Tangent operator*(double a, const Tangent& u);
Tangent operator-(const Tangent& u);

/// Abstract Riemannian manifold.
///
/// Geometry kernels come in two layers:
///  - `*_raw` virtuals operate on plain matrices and perform no validation;
///    they are the extension points for concrete manifolds and are public for
///    performance-sensitive callers that manage base points themselves.
///  - the checked wrappers operate on Point/Tangent, validate shapes and base
///    points, and are the interface the optimizer and bindings use.
///
/// All operations are pure functions of their inputs and safe to call
/// concurrently.
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual std::string name() const = 0;
  /// Shape of the dense point representation.
  virtual Index point_rows() const = 0;
  virtual Index point_cols() const = 0;
  /// Intrinsic dimension of the tangent spaces.
  virtual Index tangent_dim() const = 0;

  // --- raw kernels (no validation) ---------------------------------------

  virtual double inner_raw(const Matrix& x, const Matrix& u,
                           const Matrix& v) const = 0;
  virtual Matrix retract_raw(const Matrix& x, const Matrix& v) const = 0;
  virtual Matrix log_raw(const Matrix& x, const Matrix& y) const = 0;
  virtual Matrix transport_raw(const Matrix& x, const Matrix& y,
                               const Matrix& u) const = 0;
  virtual double dist_raw(const Matrix& x, const Matrix& y) const = 0;
  /// Projects an ambient (Euclidean) gradient to the Riemannian gradient.
  virtual Matrix project_raw(const Matrix& x, const Matrix& g) const = 0;
  virtual bool is_point_raw(const Matrix& x, double tol) const = 0;
  virtual bool is_tangent_raw(const Matrix& x, const Matrix& v,
                              double tol) const = 0;

  /// Coordinates of a tangent vector in a fixed orthonormal basis of T_x
  /// (orthonormal under this manifold's metric).  The basis is implied by the
  /// manifold and depends smoothly on x; coordinates turn metric inner
  /// products into plain dot products, which the diagnostics rely on.
  virtual Vector tangent_coords_raw(const Matrix& x, const Matrix& u) const = 0;
  virtual Matrix tangent_from_coords_raw(const Matrix& x,
                                         const Vector& c) const = 0;

  virtual Matrix random_point_raw(std::mt19937_64& rng) const = 0;
  virtual Matrix random_tangent_raw(const Matrix& x,
                                    std::mt19937_64& rng) const = 0;

  // --- checked interface ---------------------------------------------------

  /// Metric inner product of two tangents at x.  Throws
  /// std::invalid_argument unless both tangents are based at x.
  double inner(const Point& x, const Tangent& u, const Tangent& v) const;
  double norm(const Point& x, const Tangent& u) const;
  /// Moves away from x along v (exponential map for both shipped manifolds).
  /// retract(x, 0) returns x exactly.
  Point retract(const Point& x, const Tangent& v) const;
  /// Inverse of retract: log(x, y) is the tangent at x pointing to y.
  /// log(x, x) is exactly zero.
  Tangent log(const Point& x, const Point& y) const;
  /// Parallel transport of u from T_x to T_y along the connecting geodesic.
  /// transport(x, x, u) returns u exactly.  Transport is a linear isometry.
  Tangent transport(const Point& x, const Point& y, const Tangent& u) const;
  /// Geodesic distance.
  double dist(const Point& x, const Point& y) const;
  /// Ambient gradient -> Riemannian gradient at x.
  Tangent project(const Point& x, const Matrix& g) const;
  Tangent zero_tangent(const Point& x) const;
  /// Membership predicate at tolerance `tol`.
  bool contains(const Point& x, double tol = 1e-10) const;
  bool is_tangent(const Tangent& u, double tol = 1e-10) const;
  Point random_point(std::mt19937_64& rng) const;
  Tangent random_tangent(const Point& x, std::mt19937_64& rng) const;
  Vector tangent_coords(const Tangent& u) const;
  Tangent tangent_from_coords(const Point& x, const Vector& c) const;

  /// Transports many tangents along the same geodesic x -> y.  Concrete
  /// manifolds override transporter() to hoist per-geodesic factorizations
  /// out of the per-tangent work.
  class Transporter {
   public:
    Transporter(Matrix from, Matrix to);
    virtual ~Transporter() = default;
    /// Transports u (based at `from`) to a tangent based at `to`.
    Tangent operator()(const Tangent& u) const;
    Matrix raw(const Matrix& u) const;
    const Matrix& from() const { return from_; }
    const Matrix& to() const { return to_; }

   protected:
    virtual Matrix apply_raw(const Matrix& u) const = 0;
    Matrix from_;
    Matrix to_;
  };

  virtual std::unique_ptr<Transporter> transporter(const Point& x,
                                                   const Point& y) const;

 protected:
  void check_point_shape(const Matrix& x, const char* where) const;
  void check_tangent_at(const Point& x, const Tangent& u,
                        const char* where) const;
};

namespace detail {
/// Bitwise equality of two equally-typed matrices (false on shape mismatch).
bool bitwise_equal(const Matrix& a, const Matrix& b);
}  // namespace detail

}  // namespace rslbfgs
