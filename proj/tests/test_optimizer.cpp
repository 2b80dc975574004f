#include "doctest.h"
#include "test_support.hpp"

#include "rslbfgs/karcher.hpp"
#include "rslbfgs/optimizer.hpp"
#include "rslbfgs/rayleigh.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

using namespace rslbfgs;
using rslbfgs::testing::QuadraticProblem;
using rslbfgs::testing::all_indices;
using rslbfgs::testing::fit_line;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("config validation rejects out-of-range fields") {
  OptimizerConfig cfg;
  cfg.minibatch = 10;
  CHECK_NOTHROW(cfg.validate(40));

  OptimizerConfig bad = cfg;
  bad.minibatch = 0;
  CHECK_THROWS_AS(bad.validate(40), std::invalid_argument);
  bad = cfg;
  bad.minibatch = 41;
  CHECK_THROWS_AS(bad.validate(40), std::invalid_argument);
  bad = cfg;
  bad.eta1 = 0.0;
  CHECK_THROWS_AS(bad.validate(40), std::invalid_argument);
  bad = cfg;
  bad.eta2 = -1.0;
  CHECK_THROWS_AS(bad.validate(40), std::invalid_argument);
  bad = cfg;
  bad.pair_interval = 0;
  CHECK_THROWS_AS(bad.validate(40), std::invalid_argument);
  bad = cfg;
  bad.memory_depth = 0;
  CHECK_THROWS_AS(bad.validate(40), std::invalid_argument);
  bad = cfg;
  bad.epochs = -1;
  CHECK_THROWS_AS(bad.validate(40), std::invalid_argument);

  CHECK(cfg.effective_inner_iters(40) == 4);
  CHECK(cfg.effective_inner_iters(41) == 5);
  OptimizerConfig fixed = cfg;
  fixed.inner_iters = 7;
  CHECK(fixed.effective_inner_iters(40) == 7);
}

TEST_CASE("lbfgs memory is a curvature-filtered ring buffer") {
  EuclideanManifold m(4);
  std::mt19937_64 rng(3);
  const Point x = m.random_point(rng);
  LbfgsMemory mem(m, 2);
  CHECK(mem.empty());
  CHECK(mem.depth() == 2);

  const Tangent a = m.random_tangent(x, rng);
  const Tangent b = m.random_tangent(x, rng);
  const Tangent c = m.random_tangent(x, rng);

  // pairs with z == y trivially pass the curvature test
  CHECK(mem.push(a, a));
  CHECK(mem.push(b, b));
  CHECK(mem.size() == 2);
  CHECK(mem.push(c, c));  // evicts the oldest
  CHECK(mem.size() == 2);
  CHECK(mem.total_accepted() == 3);
  CHECK((mem.pair(0).z.value - b.value).norm() == 0.0);
  CHECK((mem.pair(1).z.value - c.value).norm() == 0.0);

  // negative and zero curvature are filtered out
  CHECK_FALSE(mem.push(a, -a));
  CHECK_FALSE(mem.push(m.zero_tangent(x), a));
  CHECK(mem.size() == 2);
  CHECK(mem.total_accepted() == 3);

  // cached inner products match the metric
  CHECK(mem.pair(1).yz == doctest::Approx(m.inner(x, c, c)));
  CHECK(mem.pair(1).yy == doctest::Approx(m.inner(x, c, c)));

  // pairs based elsewhere are rejected structurally
  const Point y = m.random_point(rng);
  const Tangent w = m.random_tangent(y, rng);
  CHECK_THROWS_AS((void)mem.push(w, w), std::invalid_argument);
}

TEST_CASE("two-loop on a single aligned pair is the negated input") {
  EuclideanManifold m(5);
  std::mt19937_64 rng(4);
  const Point x = m.random_point(rng);
  const Tangent v = m.random_tangent(x, rng);

  LbfgsMemory mem(m, 3);
  CHECK(mem.push(v, v));
  const Tangent dir = two_loop(mem, v);
  // gamma = 1 and the recursion telescopes exactly
  CHECK((dir.value + v.value).norm() == 0.0);

  LbfgsMemory empty(m, 3);
  CHECK_THROWS_AS((void)two_loop(empty, v), std::logic_error);

  const Point y = m.random_point(rng);
  const Tangent w = m.random_tangent(y, rng);
  CHECK_THROWS_AS((void)two_loop(mem, w), std::invalid_argument);
}

TEST_CASE("memory rebase transports pairs and keeps cached products") {
  SphereManifold m(6);
  std::mt19937_64 rng(8);
  const Point x = m.random_point(rng);
  const Point y = m.random_point(rng);

  LbfgsMemory mem(m, 4);
  std::vector<double> yz_before, yy_before;
  for (int k = 0; k < 3; ++k) {
    Tangent z = m.random_tangent(x, rng);
    Tangent yv = z + 0.1 * m.random_tangent(x, rng);
    REQUIRE(mem.push(z, yv));
    yz_before.push_back(mem.pair(k).yz);
    yy_before.push_back(mem.pair(k).yy);
  }

  const Tangent v = m.random_tangent(x, rng);
  const Tangent dir_before = two_loop(mem, v);

  const auto tr = m.transporter(Point{x.value}, Point{y.value});
  mem.rebase(*tr);
  for (int k = 0; k < 3; ++k) {
    CHECK(detail::bitwise_equal(mem.pair(k).z.base, y.value));
    // caches are carried over untouched; transport being an isometry keeps
    // them consistent with a recomputation
    CHECK(mem.pair(k).yz == yz_before[size_t(k)]);
    const double recomputed = m.inner(y, mem.pair(k).y, mem.pair(k).z);
    CHECK(std::abs(recomputed - yz_before[size_t(k)]) <=
          1e-9 * (1.0 + std::abs(recomputed)));
  }

  // the two-loop output commutes with transport
  const Tangent dir_after = two_loop(mem, (*tr)(v));
  const Tangent moved = (*tr)(dir_before);
  CHECK(m.norm(y, dir_after - moved) <= 1e-9 * (1.0 + m.norm(y, moved)));
}

TEST_CASE("variance-reduced gradient reduces to the full gradient") {
  const KarcherData data = gen_spd_data(4, 12, 30.0, 17);
  KarcherProblem prob(data);
  std::mt19937_64 rng(18);
  const Point anchor = prob.manifold().random_point(rng);
  const Point x = prob.manifold().retract(
      anchor, 0.3 * prob.manifold().random_tangent(anchor, rng));
  const Tangent full_anchor = prob.full_grad(anchor);
  const auto idx = all_indices(prob.size());

  // full-index batch: the correction cancels exactly
  const Tangent nu = vr_gradient(prob, x, anchor, full_anchor, idx);
  const Tangent exact = prob.full_grad(x);
  CHECK((nu.value - exact.value).cwiseAbs().maxCoeff() <= 1e-13);

  // current point == anchor: both batch terms cancel
  std::vector<Index> batch = {0, 3, 7};
  const Tangent nu2 = vr_gradient(prob, anchor, anchor, full_anchor, batch);
  CHECK((nu2.value - full_anchor.value).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("full-batch runs keep the vr gradient exact every inner step") {
  RunControls ctl;
  ctl.check_vr_exactness = true;

  OptimizerConfig cfg;
  cfg.eta1 = 0.05;
  cfg.eta2 = 0.5;
  cfg.pair_interval = 1;
  cfg.memory_depth = 2;
  cfg.epochs = 4;
  cfg.inner_iters = 5;
  cfg.seed = 1;

  SUBCASE("karcher") {
    const KarcherData data = gen_spd_data(5, 16, 50.0, 21);
    KarcherProblem prob(data);
    cfg.minibatch = prob.size();
    const RunTrace t =
        run_rsv_lbfgs(prob, spd_arithmetic_mean(data), cfg, ctl, {});
    REQUIRE(t.status == RunStatus::Ok);
    REQUIRE(!t.epoch_stats.empty());
    for (const EpochStats& s : t.epoch_stats) CHECK(s.vr_dev_max <= 1e-15);
  }

  SUBCASE("rayleigh") {
    const EigData data = gen_eig_data(10, 40, 0.3, 22);
    RayleighProblem prob(data);
    cfg.eta1 = 0.01;
    cfg.minibatch = prob.size();
    std::mt19937_64 rng(23);
    const Point x0 = prob.manifold().random_point(rng);
    const RunTrace t = run_rsv_lbfgs(prob, x0, cfg, ctl, {});
    REQUIRE(t.status == RunStatus::Ok);
    for (const EpochStats& s : t.epoch_stats) CHECK(s.vr_dev_max <= 1e-15);
  }
}

TEST_CASE("svrg baseline converges linearly on a strongly convex quadratic") {
  QuadraticProblem prob(8, 40, 101);
  const Vector wstar = prob.minimizer();
  const MeasureFn err = [&](const Point& x) {
    return (x.value.col(0) - wstar).squaredNorm();
  };

  OptimizerConfig cfg;
  cfg.eta1 = 0.15;
  cfg.minibatch = 10;
  cfg.epochs = 30;
  cfg.seed = 5;

  const Point x0{Vector::Zero(8)};
  const RunTrace t = run_rsvrg(prob, x0, cfg, {}, err);
  REQUIRE(t.status == RunStatus::Ok);
  REQUIRE(t.records.size() == size_t(cfg.epochs) + 1);
  CHECK(t.records.back().error <= 1e-10);

  // log-error decay is close to a straight line (linear convergence);
  // drop the tail where the reference minimizer's own accuracy dominates
  std::vector<double> xs, ys;
  for (const TraceRecord& r : t.records) {
    if (r.error > 1e-24) {
      xs.push_back(r.passes);
      ys.push_back(std::log10(r.error));
    }
  }
  REQUIRE(xs.size() >= 5);
  const auto fit = fit_line(xs, ys);
  CHECK(fit.slope < 0.0);
  CHECK(fit.r2 >= 0.95);

  // pass accounting: one anchor sweep plus one epoch of minibatches each
  for (size_t k = 0; k < t.records.size(); ++k)
    CHECK(t.records[k].passes == 2.0 * double(k));
  // 40 anchor gradients + 4 iterations x 2 x 10 per epoch
  CHECK(t.grad_evals == std::uint64_t(cfg.epochs) * 120u);
}

TEST_CASE("quasi-newton runs converge on quadratic and karcher objectives") {
  SUBCASE("euclidean quadratic, transported-step pairs") {
    QuadraticProblem prob(8, 40, 202);
    const Vector wstar = prob.minimizer();
    const MeasureFn err = [&](const Point& x) {
      return (x.value.col(0) - wstar).squaredNorm();
    };
    OptimizerConfig cfg;
    cfg.eta1 = 0.05;
    cfg.eta2 = 1.0;
    cfg.pair_interval = 1;
    cfg.memory_depth = 5;
    cfg.minibatch = 10;
    cfg.epochs = 25;
    cfg.seed = 6;
    const RunTrace t = run_rsv_lbfgs(prob, Point{Vector::Zero(8)}, cfg, {}, err);
    REQUIRE(t.status == RunStatus::Ok);
    CHECK(t.records.back().error <= 1e-12);

    // pair events fired and mostly passed the curvature filter
    Index accepted = 0;
    for (const EpochStats& s : t.epoch_stats) accepted += s.pairs_accepted;
    CHECK(accepted > 0);

    // stored-event accounting: every event after the first bills one batch
    const Index m_iters = cfg.effective_inner_iters(prob.size());
    const std::uint64_t expect =
        std::uint64_t(cfg.epochs) * (40u + 2u * 10u * std::uint64_t(m_iters)) +
        (std::uint64_t(cfg.epochs) * std::uint64_t(m_iters) - 1u) * 10u;
    CHECK(t.grad_evals == expect);
  }

  SUBCASE("karcher mean, transported-step pairs") {
    const KarcherData data = gen_spd_data(6, 24, 100.0, 33);
    KarcherProblem prob(data);
    const Point wstar = karcher_oracle(data);
    const MeasureFn err = [&](const Point& x) {
      return karcher_error(x, wstar);
    };
    OptimizerConfig cfg;
    cfg.eta1 = 0.05;
    cfg.eta2 = 1.0;
    cfg.pair_interval = 1;
    cfg.memory_depth = 2;
    cfg.minibatch = 6;
    cfg.epochs = 15;
    cfg.seed = 7;
    const RunTrace t =
        run_rsv_lbfgs(prob, spd_arithmetic_mean(data), cfg, {}, err);
    REQUIRE(t.status == RunStatus::Ok);
    CHECK(t.records.back().error <= 1e-10);

    // with a pair event at every step, the stored displacement matches the
    // between-events geodesic.  The recorded gap is relative to the step
    // norm, so it is only resolvable while steps sit above the arithmetic
    // noise floor; below that the absolute gap (relative gap times step
    // scale) is the meaningful quantity.
    double min_dir = kInf;
    for (const EpochStats& s : t.epoch_stats)
      if (s.dir_count > 0) min_dir = std::min(min_dir, s.dir_norm_min);
    for (const EpochStats& s : t.epoch_stats) {
      if (s.dir_count > 0 && s.dir_norm_min >= 1e-5) {
        CHECK(s.z_gap_max <= 1e-8);
      }
      CHECK(s.z_gap_max * min_dir <= 1e-12);
    }
  }
}

TEST_CASE("runs are deterministic given the seed") {
  const KarcherData data = gen_spd_data(4, 12, 20.0, 44);
  KarcherProblem prob(data);
  OptimizerConfig cfg;
  cfg.eta1 = 0.05;
  cfg.minibatch = 4;
  cfg.epochs = 6;
  cfg.seed = 99;

  const Point x0 = spd_arithmetic_mean(data);
  const RunTrace a = run_rsvrg(prob, x0, cfg, {}, {});
  const RunTrace b = run_rsvrg(prob, x0, cfg, {}, {});
  REQUIRE(a.records.size() == b.records.size());
  for (size_t k = 0; k < a.records.size(); ++k) {
    CHECK(a.records[k].passes == b.records[k].passes);
    CHECK(a.records[k].objective == b.records[k].objective);
  }
  CHECK(detail::bitwise_equal(a.final_point, b.final_point));
  CHECK(a.grad_evals == b.grad_evals);

  OptimizerConfig other = cfg;
  other.seed = 100;
  const RunTrace c = run_rsvrg(prob, x0, other, {}, {});
  CHECK_FALSE(detail::bitwise_equal(a.final_point, c.final_point));
}

TEST_CASE("oversized steps trip the divergence guard") {
  QuadraticProblem prob(6, 30, 303);
  OptimizerConfig cfg;
  cfg.eta1 = 10.0;  // far beyond 2/L for this spectrum
  cfg.minibatch = 10;
  cfg.epochs = 50;
  cfg.seed = 8;
  const RunTrace t = run_rsvrg(prob, Point{Vector::Zero(6)}, cfg, {}, {});
  CHECK(t.status == RunStatus::Diverged);
  CHECK(!t.message.empty());
  CHECK(t.records.size() < size_t(cfg.epochs) + 1);
}

TEST_CASE("error stop ends the run before the epoch budget") {
  QuadraticProblem prob(8, 40, 404);
  const Vector wstar = prob.minimizer();
  const MeasureFn err = [&](const Point& x) {
    return (x.value.col(0) - wstar).squaredNorm();
  };
  OptimizerConfig cfg;
  cfg.eta1 = 0.08;
  cfg.minibatch = 10;
  cfg.epochs = 200;
  cfg.seed = 9;
  RunControls ctl;
  ctl.error_stop = 1e-6;
  const RunTrace t = run_rsvrg(prob, Point{Vector::Zero(8)}, cfg, ctl, err);
  REQUIRE(t.status == RunStatus::Ok);
  CHECK(t.records.back().error <= 1e-6);
  CHECK(t.records.size() < 201);
}

TEST_CASE("pair snapshots are capped and live on the manifold") {
  const KarcherData data = gen_spd_data(5, 20, 60.0, 55);
  KarcherProblem prob(data);
  OptimizerConfig cfg;
  cfg.eta1 = 0.05;
  cfg.eta2 = 1.0;
  cfg.pair_interval = 1;
  cfg.memory_depth = 2;
  cfg.minibatch = 5;
  cfg.epochs = 6;
  cfg.seed = 10;
  RunControls ctl;
  ctl.max_pair_snapshots = 4;
  const RunTrace t =
      run_rsv_lbfgs(prob, spd_arithmetic_mean(data), cfg, ctl, {});
  REQUIRE(t.status == RunStatus::Ok);
  REQUIRE(!t.snapshots.empty());
  CHECK(t.snapshots.size() <= 4);
  for (const PairSnapshot& s : t.snapshots) {
    CHECK(s.counter >= 2);
    CHECK(prob.manifold().contains(Point{s.base}));
    CHECK(!s.pairs.empty());
    CHECK(Index(s.pairs.size()) <= cfg.memory_depth);
    for (const auto& [z, y] : s.pairs) {
      CHECK(z.allFinite());
      CHECK(y.allFinite());
    }
  }
}

TEST_CASE("svrg run on the sphere reaches the top eigenvector") {
  const EigData data = gen_eig_data(20, 400, 0.3, 66);
  RayleighProblem prob(data);
  const EigOracle oracle = top_eig_oracle(data);
  const MeasureFn err = [&](const Point& z) {
    return eig_error(z, data, oracle.value);
  };
  OptimizerConfig cfg;
  cfg.eta1 = 0.1;
  cfg.minibatch = 40;
  cfg.epochs = 40;
  cfg.seed = 12;
  std::mt19937_64 rng(13);
  const Point x0 = prob.manifold().random_point(rng);
  const RunTrace t = run_rsvrg(prob, x0, cfg, {}, err);
  REQUIRE(t.status == RunStatus::Ok);
  CHECK(t.records.back().error <= 1e-9);
}

TEST_CASE("vr-pca baseline holds its fixed point and converges") {
  const EigData data = gen_eig_data(20, 400, 0.3, 77);
  const EigOracle oracle = top_eig_oracle(data);
  const MeasureFn err = [&](const Point& z) {
    return eig_error(z, data, oracle.value);
  };

  OptimizerConfig cfg;
  cfg.eta1 = 0.5;
  cfg.minibatch = 40;
  cfg.epochs = 30;
  cfg.seed = 14;

  SUBCASE("started at the solution it stays put") {
    const RunTrace t = run_vr_pca(data, Point{oracle.vector}, cfg, {}, err);
    REQUIRE(t.status == RunStatus::Ok);
    for (const TraceRecord& r : t.records) CHECK(r.error <= 1e-10);
  }

  SUBCASE("from a random start it converges") {
    std::mt19937_64 rng(15);
    SphereManifold sphere(20);
    const Point x0 = sphere.random_point(rng);
    const RunTrace t = run_vr_pca(data, x0, cfg, {}, err);
    REQUIRE(t.status == RunStatus::Ok);
    CHECK(t.records.back().error <= 1e-8);
    // deterministic like the other runners
    const RunTrace again = run_vr_pca(data, x0, cfg, {}, err);
    CHECK(detail::bitwise_equal(t.final_point, again.final_point));
  }
}

TEST_CASE("runs reject start points off the manifold") {
  const EigData data = gen_eig_data(8, 40, 0.2, 88);
  RayleighProblem prob(data);
  OptimizerConfig cfg;
  cfg.minibatch = 8;
  Point off{Vector::Ones(8)};  // not unit norm
  CHECK_THROWS_AS((void)run_rsvrg(prob, off, cfg, {}, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)run_vr_pca(data, off, cfg, {}, {}),
                  std::invalid_argument);
}
