#include "doctest.h"

#include "rslbfgs/euclidean.hpp"
#include "rslbfgs/manifold.hpp"
#include "rslbfgs/sphere.hpp"
#include "rslbfgs/spd.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

using namespace rslbfgs;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Property pack shared by every manifold: transport isometry, exp/log
// inversion, zero cases, distance symmetry, and orthonormal-coordinate
// round trips.  Tolerances: isometry 1e-9 relative, inversion 1e-8 for
// ||v|| <= 1, zero cases 1e-12 (exact identities in the wrappers).
void check_geometry_properties(const Manifold& m, int trials,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int t = 0; t < trials; ++t) {
    const Point x = m.random_point(rng);
    const Point y = m.random_point(rng);
    Tangent u = m.random_tangent(x, rng);
    Tangent v = m.random_tangent(x, rng);

    // transport preserves the metric
    const double before = m.inner(x, u, v);
    const Tangent tu = m.transport(x, y, u);
    const Tangent tv = m.transport(x, y, v);
    const double after = m.inner(y, tu, tv);
    CHECK(std::abs(before - after) <= 1e-9 * (1.0 + std::abs(before)));

    // exp then log recovers the tangent (scaled into the injectivity-safe
    // range first)
    const double nu = m.norm(x, u);
    if (nu > 1.0) u = (1.0 / nu) * u;
    const Point ex = m.retract(x, u);
    const Tangent back = m.log(x, ex);
    CHECK(m.norm(x, back - u) <= 1e-8);

    // log then exp recovers the point (compared in the ambient space:
    // measuring the gap with dist() itself bottoms out at sqrt(eps) because
    // of the arccos/logm conditioning near coincident points)
    const Tangent w = m.log(x, y);
    const Point yy = m.retract(x, w);
    CHECK((yy.value - y.value).norm() <= 1e-8);

    // dist agrees with the log norm and is symmetric
    CHECK(m.dist(x, y) == doctest::Approx(m.norm(x, w)).epsilon(1e-9));
    CHECK(m.dist(x, y) == doctest::Approx(m.dist(y, x)).epsilon(1e-9));

    // zero cases are exact
    const Tangent zero = m.zero_tangent(x);
    CHECK(detail::bitwise_equal(m.retract(x, zero).value, x.value));
    CHECK(m.norm(x, m.log(x, x)) <= 1e-12);
    const Tangent same = m.transport(x, x, u);
    CHECK((same.value - u.value).norm() <= 1e-12);
    CHECK(m.dist(x, x) == 0.0);

    // orthonormal coordinates: dot products match the metric, round trip
    const Vector cu = m.tangent_coords(u);
    const Vector cv = m.tangent_coords(v);
    CHECK(cu.size() == m.tangent_dim());
    CHECK(cu.dot(cv) == doctest::Approx(m.inner(x, u, v)).epsilon(1e-9));
    const Tangent u2 = m.tangent_from_coords(x, cu);
    CHECK(m.norm(x, u2 - u) <= 1e-9 * (1.0 + m.norm(x, u)));

    // random outputs satisfy the membership predicates
    CHECK(m.contains(x));
    CHECK(m.is_tangent(u));
  }
}

void check_transporter_matches_transport(const Manifold& m,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int t = 0; t < 20; ++t) {
    const Point x = m.random_point(rng);
    const Point y = m.random_point(rng);
    const Tangent u = m.random_tangent(x, rng);
    const auto tr = m.transporter(x, y);
    CHECK(detail::bitwise_equal(tr->from(), x.value));
    CHECK(detail::bitwise_equal(tr->to(), y.value));
    const Tangent via_class = (*tr)(u);
    const Tangent direct = m.transport(x, y, u);
    CHECK((via_class.value - direct.value).norm() <=
          1e-12 * (1.0 + direct.value.norm()));
    CHECK(detail::bitwise_equal(via_class.base, y.value));
  }
}

}  // namespace

TEST_CASE("euclidean space is flat translation geometry") {
  EuclideanManifold m(7);
  CHECK(m.tangent_dim() == 7);
  check_geometry_properties(m, 100, 11);
  check_transporter_matches_transport(m, 12);

  std::mt19937_64 rng(5);
  const Point x = m.random_point(rng);
  const Point y = m.random_point(rng);
  const Tangent u = m.random_tangent(x, rng);
  // retract translates, log subtracts, transport is the identity on values
  CHECK((m.retract(x, u).value - (x.value + u.value)).norm() == 0.0);
  CHECK((m.log(x, y).value - (y.value - x.value)).norm() == 0.0);
  CHECK((m.transport(x, y, u).value - u.value).norm() == 0.0);
  CHECK(m.dist(x, y) == doctest::Approx((y.value - x.value).norm()));
}

TEST_CASE("sphere satisfies the shared geometry properties") {
  check_geometry_properties(SphereManifold(3), 200, 21);
  check_geometry_properties(SphereManifold(12), 200, 22);
  check_transporter_matches_transport(SphereManifold(12), 23);
}

TEST_CASE("sphere great-circle kernels match hand values") {
  SphereManifold m(3);
  Point e1{(Vector(3) << 1, 0, 0).finished()};
  Point e2{(Vector(3) << 0, 1, 0).finished()};

  // walking pi along (0,1,0) from e1 lands on -e1
  Tangent v_pi{(Vector(3) << 0, kPi, 0).finished(), e1.value};
  CHECK((m.retract(e1, v_pi).value - (-e1.value)).norm() <= 1e-12);

  // walking pi/4 lands at (cos pi/4, sin pi/4, 0)
  Tangent v_q{(Vector(3) << 0, kPi / 4, 0).finished(), e1.value};
  Vector expected(3);
  expected << std::sqrt(0.5), std::sqrt(0.5), 0;
  CHECK((m.retract(e1, v_q).value - expected).norm() <= 1e-12);

  // the tangent from e1 to e2 is (0, pi/2, 0)
  const Tangent l = m.log(e1, e2);
  CHECK((l.value - (Vector(3) << 0, kPi / 2, 0).finished()).norm() <= 1e-12);
  CHECK(m.dist(e1, e2) == doctest::Approx(kPi / 2).epsilon(1e-12));

  // transporting e3 along the e1->e2 quarter circle leaves it fixed
  Tangent e3t{(Vector(3) << 0, 0, 1).finished(), e1.value};
  CHECK((m.transport(e1, e2, e3t).value -
         (Vector(3) << 0, 0, 1).finished()).norm() <= 1e-12);

  // projection removes the radial component
  Matrix g = (Vector(3) << 2, 3, 4).finished();
  const Tangent pg = m.project(e1, g);
  CHECK((pg.value - (Vector(3) << 0, 3, 4).finished()).norm() <= 1e-14);
  CHECK(m.is_tangent(pg));
}

TEST_CASE("sphere retraction is periodic and distance is bounded by pi") {
  SphereManifold m(6);
  std::mt19937_64 rng(31);
  for (int t = 0; t < 200; ++t) {
    const Point x = m.random_point(rng);
    Tangent u = m.random_tangent(x, rng);
    const double n = m.norm(x, u);
    if (n < 1e-12) continue;
    // same direction, length shifted by a full period
    Tangent u_wrapped = ((n + 2 * kPi) / n) * u;
    CHECK((m.retract(x, u).value - m.retract(x, u_wrapped).value).norm() <=
          1e-9);

    const Point y = m.random_point(rng);
    CHECK(m.dist(x, y) <= kPi + 1e-12);
  }
}

TEST_CASE("sphere rejects the cut locus and counts near-antipodal calls") {
  SphereManifold m(4);
  Point x{(Vector(4) << 1, 0, 0, 0).finished()};
  Point anti{(Vector(4) << -1, 0, 0, 0).finished()};
  CHECK_THROWS_AS((void)m.log(x, anti), std::domain_error);
  CHECK_THROWS_AS((void)m.dist(x, anti), std::domain_error);

  m.reset_near_antipodal_events();
  CHECK(m.near_antipodal_events() == 0);
  // within the warning band but outside the rejection band
  const double c = -0.9995;
  Vector yv(4);
  yv << c, std::sqrt(1 - c * c), 0, 0;
  Point y{yv};
  (void)m.log(x, y);
  CHECK(m.near_antipodal_events() >= 1);
}

TEST_CASE("sphere membership predicates respect the tolerance") {
  SphereManifold m(5);
  Point good{(Vector(5) << 1, 0, 0, 0, 0).finished()};
  CHECK(m.contains(good));
  Point off{good.value * 1.001};
  CHECK_FALSE(m.contains(off));
  Tangent not_orth{(Vector(5) << 1, 1, 0, 0, 0).finished(), good.value};
  CHECK_FALSE(m.is_tangent(not_orth));
}

TEST_CASE("spd manifold satisfies the shared geometry properties") {
  check_geometry_properties(SpdManifold(2), 200, 41);
  check_geometry_properties(SpdManifold(5), 200, 42);
  check_transporter_matches_transport(SpdManifold(4), 43);
}

TEST_CASE("spd kernels match hand values at the identity") {
  SpdManifold m(2);
  const Matrix id = Matrix::Identity(2, 2);
  Point I{id};

  // exp at the identity is the matrix exponential of the tangent
  Matrix diag_log(2, 2);
  diag_log << std::log(2.0), 0, 0, std::log(3.0);
  Tangent v{diag_log, id};
  Matrix expect(2, 2);
  expect << 2, 0, 0, 3;
  CHECK((m.retract(I, v).value - expect).norm() <= 1e-12);

  // log at the identity is the matrix logarithm
  Matrix target(2, 2);
  target << std::exp(1.0), 0, 0, std::exp(-1.0);
  Matrix log_expect(2, 2);
  log_expect << 1, 0, 0, -1;
  CHECK((m.log(I, Point{target}).value - log_expect).norm() <= 1e-12);

  // dist(I, diag(e^2, 1)) = ||diag(2,0)||_F = 2
  Matrix d2(2, 2);
  d2 << std::exp(2.0), 0, 0, 1;
  CHECK(m.dist(I, Point{d2}) == doctest::Approx(2.0).epsilon(1e-12));

  // transport I -> 4I scales tangents by 4: E = (4I I^{-1})^{1/2} = 2I
  Point four{4.0 * id};
  Tangent u{id, id};
  CHECK((m.transport(I, four, u).value - 4.0 * id).norm() <= 1e-10);

  // the metric at the identity is the Frobenius inner product
  Matrix a(2, 2), b(2, 2);
  a << 1, 2, 2, -1;
  b << 0, 1, 1, 3;
  Tangent ta{a, id}, tb{b, id};
  CHECK(m.inner(I, ta, tb) ==
        doctest::Approx((a.transpose() * b).trace()).epsilon(1e-12));

  // ambient gradient G maps to x sym(G) x; at the identity that is sym(G)
  Matrix g(2, 2);
  g << 1, 4, 0, 2;
  Matrix symg = 0.5 * (g + g.transpose());
  CHECK((m.project(I, g).value - symg).norm() <= 1e-14);
}

TEST_CASE("spd membership rejects asymmetric and indefinite matrices") {
  SpdManifold m(3);
  std::mt19937_64 rng(55);
  const Point x = m.random_point(rng);
  CHECK(m.contains(x));

  Matrix asym = x.value;
  asym(0, 1) += 1e-3;
  CHECK_FALSE(m.contains(Point{asym}));

  Matrix indef = Matrix::Identity(3, 3);
  indef(2, 2) = -1;
  CHECK_FALSE(m.contains(Point{indef}));

  Tangent skew{Matrix::Zero(3, 3), x.value};
  skew.value(0, 1) = 1;
  skew.value(1, 0) = -1;
  CHECK_FALSE(m.is_tangent(skew));
}

TEST_CASE("spd distance is affine invariant") {
  SpdManifold m(3);
  std::mt19937_64 rng(66);
  std::normal_distribution<double> gauss;
  const Point x = m.random_point(rng);
  const Point y = m.random_point(rng);
  const double base = m.dist(x, y);
  for (int t = 0; t < 10; ++t) {
    Matrix g(3, 3);
    for (Index r = 0; r < 3; ++r)
      for (Index c = 0; c < 3; ++c) g(r, c) = gauss(rng);
    if (std::abs(g.determinant()) < 1e-3) continue;
    // congruence by the same invertible g is an isometry of this metric
    Matrix sx = g * x.value * g.transpose();
    sx = 0.5 * (sx + sx.transpose());
    Matrix sy = g * y.value * g.transpose();
    sy = 0.5 * (sy + sy.transpose());
    CHECK(m.dist(Point{sx}, Point{sy}) ==
          doctest::Approx(base).epsilon(1e-7));
  }
}

TEST_CASE("tangent arithmetic enforces matching base points") {
  SphereManifold m(4);
  std::mt19937_64 rng(77);
  const Point x = m.random_point(rng);
  const Point y = m.random_point(rng);
  const Tangent u = m.random_tangent(x, rng);
  const Tangent v = m.random_tangent(x, rng);
  const Tangent w = m.random_tangent(y, rng);

  CHECK(same_base(u, v));
  CHECK_FALSE(same_base(u, w));
  CHECK(is_base(x, u));
  CHECK_FALSE(is_base(y, u));

  const Tangent s = u + v;
  CHECK((s.value - (u.value + v.value)).norm() == 0.0);
  const Tangent d = u - v;
  CHECK((d.value - (u.value - v.value)).norm() == 0.0);
  const Tangent neg = -u;
  CHECK((neg.value + u.value).norm() == 0.0);
  const Tangent sc = 2.5 * u;
  CHECK((sc.value - 2.5 * u.value).norm() == 0.0);

  CHECK_THROWS_AS((void)(u + w), std::invalid_argument);
  CHECK_THROWS_AS((void)m.inner(x, u, w), std::invalid_argument);
  CHECK_THROWS_AS((void)m.retract(x, w), std::invalid_argument);
}
