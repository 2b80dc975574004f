#include "doctest.h"
#include "test_support.hpp"

#include "rslbfgs/karcher.hpp"
#include "rslbfgs/rayleigh.hpp"
#include "rslbfgs/verification.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace rslbfgs;
using rslbfgs::testing::all_indices;

TEST_CASE("spd data generator pins the condition number and the seed") {
  const KarcherData data = gen_spd_data(6, 12, 50.0, 123);
  CHECK(data.n() == 6);
  CHECK(data.count() == 12);
  CHECK(data.cond == 50.0);

  for (const Matrix& x : data.matrices) {
    CHECK((x - x.transpose()).norm() <= 1e-12 * x.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> es(x);
    const Vector ev = es.eigenvalues();
    CHECK(ev.minCoeff() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(ev.maxCoeff() == doctest::Approx(50.0).epsilon(1e-10));
  }

  const KarcherData again = gen_spd_data(6, 12, 50.0, 123);
  for (Index i = 0; i < data.count(); ++i)
    CHECK(detail::bitwise_equal(data.matrices[size_t(i)],
                                again.matrices[size_t(i)]));

  const KarcherData other = gen_spd_data(6, 12, 50.0, 124);
  CHECK_FALSE(detail::bitwise_equal(data.matrices[0], other.matrices[0]));
}

TEST_CASE("karcher objective and gradients match their closed forms") {
  const KarcherData data = gen_spd_data(4, 10, 20.0, 7);
  KarcherProblem prob(data);
  CHECK(prob.size() == 10);

  std::mt19937_64 rng(9);
  const Point w = prob.manifold().random_point(rng);

  // value is the mean squared geodesic distance to the data
  double mean_sq = 0.0;
  for (const Matrix& x : data.matrices) {
    const double d = prob.manifold().dist(w, Point{x});
    mean_sq += d * d;
  }
  mean_sq /= double(data.count());
  CHECK(prob.value(w) == doctest::Approx(mean_sq).epsilon(1e-12));

  // component gradient is -2 log_w(X_i)
  for (Index i = 0; i < prob.size(); ++i) {
    const Tangent g = prob.component_grad(w, i);
    const Tangent l = prob.manifold().log(w, Point{data.matrices[size_t(i)]});
    CHECK((g.value + 2.0 * l.value).norm() <= 1e-10 * (1.0 + g.value.norm()));
  }

  // directional finite differences agree with the gradients
  const DiagnosticReport fd = fd_gradient_check(prob, w, 25, 99);
  CHECK(fd.all_pass());

  // the full gradient is exactly the all-indices batch mean
  const auto idx = all_indices(prob.size());
  const Tangent full = prob.full_grad(w);
  const Tangent mean = prob.mean_grad(w, idx);
  CHECK(detail::bitwise_equal(full.value, mean.value));
}

TEST_CASE("karcher oracle is a stationary point of the mean objective") {
  const KarcherData data = gen_spd_data(5, 20, 100.0, 31);
  const Point wstar = karcher_oracle(data, 1e-12);
  KarcherProblem prob(data);
  CHECK(prob.manifold().contains(wstar));
  CHECK(prob.manifold().norm(wstar, prob.full_grad(wstar)) <= 2e-12);

  // identical inputs collapse the mean onto that input
  KarcherData trivial = gen_spd_data(4, 6, 1.0, 5);
  for (const Matrix& x : trivial.matrices)
    CHECK((x - Matrix::Identity(4, 4)).norm() <= 1e-12);
  const Point id_star = karcher_oracle(trivial, 1e-13);
  CHECK((id_star.value - Matrix::Identity(4, 4)).norm() <= 1e-10);
}

TEST_CASE("karcher error is the squared frobenius distance") {
  Matrix a = Matrix::Identity(2, 2);
  Matrix b(2, 2);
  b << 2, 0, 0, 1;
  CHECK(karcher_error(Point{a}, Point{b}) == doctest::Approx(1.0));
  CHECK(karcher_error(Point{a}, Point{a}) == 0.0);

  const KarcherData data = gen_spd_data(5, 8, 30.0, 77);
  const Point wstar = karcher_oracle(data);
  CHECK(karcher_error(wstar, wstar) == 0.0);
}

TEST_CASE("arithmetic mean initializer averages the inputs") {
  KarcherData data;
  Matrix a = Matrix::Identity(3, 3);
  Matrix b = 3.0 * Matrix::Identity(3, 3);
  data.matrices = {a, b};
  const Point mean = spd_arithmetic_mean(data);
  CHECK((mean.value - 2.0 * Matrix::Identity(3, 3)).norm() <= 1e-15);
}

TEST_CASE("eig data generator plants the requested spectrum") {
  const Index d = 8, n = 60;
  const double gap = 0.2;
  const EigData data = gen_eig_data(d, n, gap, 42);
  CHECK(data.dim() == d);
  CHECK(data.count() == n);
  CHECK(data.gap == gap);

  const Matrix a = data.d_matrix * data.d_matrix.transpose() / double(n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  Vector ev = es.eigenvalues().reverse();
  CHECK(ev(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ev(1) == doctest::Approx(1.0 - gap).epsilon(1e-9));
  for (Index k = 2; k < d; ++k)
    CHECK(ev(k) == doctest::Approx((1.0 - gap) * std::pow(0.9, double(k - 1)))
                       .epsilon(1e-6));

  const EigData again = gen_eig_data(d, n, gap, 42);
  CHECK(detail::bitwise_equal(data.d_matrix, again.d_matrix));
  const EigData other = gen_eig_data(d, n, gap, 43);
  CHECK_FALSE(detail::bitwise_equal(data.d_matrix, other.d_matrix));

  CHECK_THROWS_AS((void)gen_eig_data(1, 10, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)gen_eig_data(8, 4, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)gen_eig_data(8, 60, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)gen_eig_data(8, 60, 1.0, 0), std::invalid_argument);
}

TEST_CASE("rayleigh objective and gradients match their closed forms") {
  const EigData data = gen_eig_data(10, 80, 0.3, 13);
  RayleighProblem prob(data);
  CHECK(prob.size() == 80);

  std::mt19937_64 rng(14);
  const Point z = prob.manifold().random_point(rng);

  const Matrix a =
      data.d_matrix * data.d_matrix.transpose() / double(data.count());
  const double quad = (z.value.transpose() * a * z.value)(0, 0);
  CHECK(prob.value(z) == doctest::Approx(-quad).epsilon(1e-12));

  // component i: f_i = -(d_i^T z)^2, grad = -2 (d_i^T z) (I - zz^T) d_i
  for (Index i : {Index(0), Index(7), Index(79)}) {
    const Vector di = data.d_matrix.col(i);
    const double dot = di.dot(z.value.col(0));
    CHECK(prob.component_value(z, i) == doctest::Approx(-dot * dot));
    const Vector expect =
        -2.0 * dot * (di - z.value.col(0) * dot);
    const Tangent g = prob.component_grad(z, i);
    CHECK((g.value.col(0) - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
  }

  const DiagnosticReport fd = fd_gradient_check(prob, z, 25, 98);
  CHECK(fd.all_pass());

  const auto idx = all_indices(prob.size());
  CHECK(detail::bitwise_equal(prob.full_grad(z).value,
                              prob.mean_grad(z, idx).value));
}

TEST_CASE("top eigenpair oracle certifies itself") {
  const EigData data = gen_eig_data(12, 100, 0.15, 55);
  const EigOracle oracle = top_eig_oracle(data);
  CHECK(oracle.value == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(oracle.vector.norm() == doctest::Approx(1.0).epsilon(1e-12));

  const Matrix a =
      data.d_matrix * data.d_matrix.transpose() / double(data.count());
  CHECK((a * oracle.vector - oracle.value * oracle.vector).norm() <= 1e-12);

  // sign convention: the largest-magnitude entry is positive
  Index big = 0;
  oracle.vector.cwiseAbs().maxCoeff(&big);
  CHECK(oracle.vector(big) > 0.0);
}

TEST_CASE("eigenvalue error metric vanishes only at the top eigenvector") {
  // hand-built data: all samples along e1, so A = e1 e1^T exactly
  EigData data;
  data.d_matrix = Matrix::Zero(2, 4);
  data.d_matrix.row(0).setOnes();
  data.gap = 1.0;

  const EigOracle oracle = top_eig_oracle(data);
  CHECK(oracle.value == doctest::Approx(1.0));
  CHECK((oracle.vector - (Vector(2) << 1, 0).finished()).norm() <= 1e-12);

  Point top{(Vector(2) << 1, 0).finished()};
  Point bottom{(Vector(2) << 0, 1).finished()};
  CHECK(eig_error(top, data, oracle.value) == 0.0);
  CHECK(eig_error(bottom, data, oracle.value) == doctest::Approx(1.0));
  // clamped against tiny negative roundoff
  CHECK(eig_error(top, data, oracle.value) >= 0.0);

  const EigData gen = gen_eig_data(9, 50, 0.4, 3);
  const EigOracle o2 = top_eig_oracle(gen);
  CHECK(eig_error(Point{o2.vector}, gen, o2.value) <= 1e-14);
}

TEST_CASE("quadratic fixture exposes its own minimizer") {
  rslbfgs::testing::QuadraticProblem prob(6, 15, 2024);
  const Vector wstar = prob.minimizer();
  const Point x{wstar};
  CHECK(prob.manifold().norm(x, prob.full_grad(x)) <= 1e-10);

  const DiagnosticReport fd = fd_gradient_check(prob, x, 20, 97);
  CHECK(fd.all_pass());
}
