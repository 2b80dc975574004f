#include "rslbfgs/verification.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <utility>

namespace rslbfgs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_cell(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string fmt_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

/// Unit-norm random tangent at x.
Tangent random_unit_tangent(const Manifold& m, const Point& x,
                            std::mt19937_64& rng) {
  for (;;) {
    Tangent u = m.random_tangent(x, rng);
    const double n = m.norm(x, u);
    if (n > 1e-12) {
      return (1.0 / n) * u;
    }
  }
}

}  // namespace

void DiagnosticReport::add(std::string check, std::string name,
                           double measured, double bound, bool pass) {
  checks.push_back(
      DiagnosticCheck{std::move(check), std::move(name), measured, bound, pass});
}

void DiagnosticReport::append(const DiagnosticReport& other) {
  if (context.empty()) {
    context = other.context;
  } else if (!other.context.empty() && other.context != context) {
    context += "; " + other.context;
  }
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

bool DiagnosticReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const DiagnosticCheck& c) { return c.pass; });
}

void write_diagnostics_text(std::ostream& out, const DiagnosticReport& report) {
  if (!report.context.empty()) {
    out << "context: " << report.context << "\n";
  }
  size_t wc = 5, wn = 4;
  for (const DiagnosticCheck& c : report.checks) {
    wc = std::max(wc, c.check.size());
    wn = std::max(wn, c.name.size());
  }
  const auto pad = [&out](const std::string& s, size_t w) {
    out << s;
    for (size_t i = s.size(); i < w + 2; ++i) {
      out << ' ';
    }
  };
  pad("check", wc);
  pad("name", wn);
  pad("measured", 14);
  pad("bound", 14);
  out << "result\n";
  size_t failed = 0;
  for (const DiagnosticCheck& c : report.checks) {
    pad(c.check, wc);
    pad(c.name, wn);
    pad(fmt_cell(c.measured), 14);
    pad(fmt_cell(c.bound), 14);
    out << (c.pass ? "PASS" : "FAIL") << "\n";
    if (!c.pass) {
      ++failed;
    }
  }
  out << report.checks.size() << " checks, " << failed << " failed\n";
}

void write_diagnostics_csv(std::ostream& out, const DiagnosticReport& report) {
  out << "check,name,measured,bound,pass\n";
  for (const DiagnosticCheck& c : report.checks) {
    out << c.check << ',' << c.name << ',' << fmt_full(c.measured) << ','
        << fmt_full(c.bound) << ',' << (c.pass ? 1 : 0) << "\n";
  }
}

DiagnosticReport fd_gradient_check(const FiniteSumProblem& prob,
                                   const Point& x, Index trials,
                                   std::uint64_t seed) {
  if (trials < 1) {
    throw std::invalid_argument("fd_gradient_check: trials must be >= 1");
  }
  const Manifold& m = prob.manifold();
  DiagnosticReport rep;
  rep.context = "fd_gradient_check seed=" + std::to_string(seed);
  std::mt19937_64 rng(seed);
  constexpr double kStep = 1e-6;
  constexpr double kTol = 1e-4;

  auto ev = prob.eval_at(x);
  std::uniform_int_distribution<Index> component(0, prob.size() - 1);
  for (Index k = 0; k < trials; ++k) {
    const Index i = component(rng);
    const Tangent v = random_unit_tangent(m, x, rng);
    const Point xt = m.retract(x, kStep * v);
    const double fd =
        (prob.component_value(xt, i) - ev->component_value(i)) / kStep;
    const double an =
        m.inner_raw(x.value, ev->component_grad_raw(i), v.value);
    const double rel = std::abs(fd - an) / (1.0 + std::abs(an));
    rep.add("fd_grad", "component_" + std::to_string(k), rel, kTol,
            rel <= kTol);
  }

  const Tangent v = random_unit_tangent(m, x, rng);
  const Point xt = m.retract(x, kStep * v);
  const double fd = (prob.value(xt) - prob.value(x)) / kStep;
  const double an = m.inner(x, prob.full_grad(*ev), v);
  const double rel = std::abs(fd - an) / (1.0 + std::abs(an));
  rep.add("fd_grad", "full_gradient", rel, kTol, rel <= kTol);
  return rep;
}

namespace {

struct CoordPair {
  Vector z;
  Vector y;
  double yz = 0.0;
  double yy = 0.0;
  double zz = 0.0;
};

}  // namespace

DiagnosticReport lemma1_check(const Manifold& manifold,
                              const std::vector<CorrectionPair>& pairs,
                              Index memory_depth) {
  if (memory_depth < 1) {
    throw std::invalid_argument("lemma1_check: memory depth must be >= 1");
  }
  DiagnosticReport rep;
  rep.add("lemma1", "pairs_total", double(pairs.size()), kNaN, true);
  for (const CorrectionPair& p : pairs) {
    if (!same_base(p.z, p.y) ||
        !detail::bitwise_equal(p.z.base, pairs.front().z.base)) {
      throw std::invalid_argument("lemma1_check: pairs share no base point");
    }
  }

  // Orthonormal coordinates turn metric inner products into dot products.
  std::vector<CoordPair> usable;
  Index filtered = 0;
  for (const CorrectionPair& p : pairs) {
    CoordPair cp;
    cp.z = manifold.tangent_coords(p.z);
    cp.y = manifold.tangent_coords(p.y);
    cp.yz = cp.y.dot(cp.z);
    cp.yy = cp.y.squaredNorm();
    cp.zz = cp.z.squaredNorm();
    if (!(cp.yz > 0.0) || !(cp.zz > 0.0)) {
      ++filtered;  // mirrors the optimizer's curvature safeguard
      continue;
    }
    usable.push_back(std::move(cp));
  }
  rep.add("lemma1", "pairs_filtered", double(filtered), kNaN, true);
  rep.add("lemma1", "pairs_usable", double(usable.size()), kNaN, true);
  if (usable.empty()) {
    return rep;
  }

  double lambda_hat = std::numeric_limits<double>::infinity();
  double big_lambda_hat = 0.0;
  for (const CoordPair& p : usable) {
    lambda_hat = std::min(lambda_hat, p.yz / p.zz);
    big_lambda_hat = std::max(big_lambda_hat, p.yy / p.yz);
  }
  rep.add("lemma1", "lambda_hat", lambda_hat, 0.0, lambda_hat > 0.0);
  // Cauchy-Schwarz forces lambda_hat <= Lambda_hat.
  rep.add("lemma1", "Lambda_hat", big_lambda_hat, lambda_hat,
          big_lambda_hat >= lambda_hat * (1.0 - 1e-12));

  const Index window = std::min<Index>(memory_depth, Index(usable.size()));
  const Index dim = manifold.tangent_dim();
  const CoordPair& newest = usable.back();
  const double sigma = newest.yy / newest.yz;
  Matrix b = sigma * Matrix::Identity(dim, dim);
  const double tr0 = double(dim) * sigma;
  const double logdet0 = double(dim) * std::log(sigma);

  bool trace_ok = true;
  bool logdet_ok = true;
  bool pd_ok = true;
  double trace_meas = tr0, trace_bound = tr0;
  double logdet_meas = logdet0, logdet_bound = logdet0;
  double eig_min = sigma, eig_max = sigma;

  for (Index k = 1; k <= window; ++k) {
    const CoordPair& p = usable[usable.size() - size_t(window) + size_t(k) - 1];
    const Vector bz = b * p.z;
    const double zbz = p.z.dot(bz);
    if (!(zbz > 0.0)) {
      pd_ok = false;
      break;
    }
    b += -(bz * bz.transpose()) / zbz + (p.y * p.y.transpose()) / p.yz;
    b = 0.5 * (b + b.transpose());

    trace_meas = b.trace();
    trace_bound = tr0 + double(k) * big_lambda_hat;
    if (trace_meas > trace_bound + 1e-9 * (1.0 + std::abs(trace_bound))) {
      trace_ok = false;
    }

    Eigen::SelfAdjointEigenSolver<Matrix> es(b);
    if (es.info() != Eigen::Success) {
      pd_ok = false;
      break;
    }
    eig_min = es.eigenvalues().minCoeff();
    eig_max = es.eigenvalues().maxCoeff();
    if (!(eig_min > 0.0)) {
      pd_ok = false;
    }
    logdet_meas = es.eigenvalues().array().abs().log().sum();
    logdet_bound = logdet0 + double(k) * std::log(lambda_hat) -
                   double(k) * std::log(tr0 + big_lambda_hat * double(k));
    if (logdet_meas < logdet_bound - 1e-9 * (1.0 + std::abs(logdet_bound))) {
      logdet_ok = false;
    }
  }

  rep.add("lemma1", "pairs_applied", double(window), kNaN, true);
  rep.add("lemma1", "trace_bound", trace_meas, trace_bound, trace_ok);
  rep.add("lemma1", "logdet_bound", logdet_meas, logdet_bound, logdet_ok);
  rep.add("lemma1", "pd_min_eigenvalue", eig_min, 0.0, pd_ok && eig_min > 0.0);
  if (pd_ok && eig_min > 0.0) {
    rep.add("lemma1", "gamma_hat", 1.0 / eig_max, kNaN, true);
    rep.add("lemma1", "Gamma_hat", 1.0 / eig_min, kNaN, true);
  }
  return rep;
}

DiagnosticReport lemma1_check(const Manifold& manifold,
                              const PairSnapshot& snapshot,
                              Index memory_depth) {
  std::vector<CorrectionPair> pairs;
  pairs.reserve(snapshot.pairs.size());
  for (const auto& [z, y] : snapshot.pairs) {
    CorrectionPair p;
    p.z = Tangent{z, snapshot.base};
    p.y = Tangent{y, snapshot.base};
    p.yz = manifold.inner_raw(snapshot.base, y, z);
    p.yy = manifold.inner_raw(snapshot.base, y, y);
    pairs.push_back(std::move(p));
  }
  DiagnosticReport rep = lemma1_check(manifold, pairs, memory_depth);
  rep.context = "pair snapshot at iteration " + std::to_string(snapshot.counter);
  return rep;
}

DiagnosticReport two_loop_vs_dense(const LbfgsMemory& memory,
                                   const Tangent& v) {
  const Manifold& m = memory.manifold();
  DiagnosticReport rep;
  rep.add("two_loop", "memory_size", double(memory.size()), kNaN, true);
  if (memory.empty()) {
    // Both formulations degenerate to the identity scaling.
    rep.add("two_loop", "rel_error", 0.0, 1e-10, true);
    return rep;
  }

  const Index dim = m.tangent_dim();
  const CorrectionPair& newest = memory.pair(memory.size() - 1);
  Matrix h = (newest.yz / newest.yy) * Matrix::Identity(dim, dim);
  for (Index k = 0; k < memory.size(); ++k) {
    const CorrectionPair& p = memory.pair(k);
    const Vector zc = m.tangent_coords(p.z);
    const Vector yc = m.tangent_coords(p.y);
    const double rho = 1.0 / p.yz;
    const Matrix vk = Matrix::Identity(dim, dim) - rho * (zc * yc.transpose());
    h = vk * h * vk.transpose() + rho * (zc * zc.transpose());
  }
  const Vector dense_dir = -(h * m.tangent_coords(v));
  const Vector loop_dir = m.tangent_coords(two_loop(memory, v));
  const double rel =
      (dense_dir - loop_dir).norm() / std::max(dense_dir.norm(), 1e-300);
  rep.add("two_loop", "rel_error", rel, 1e-10, rel <= 1e-10);
  return rep;
}

DiagnosticReport triangle_check(const Manifold& manifold, double c_delta,
                                Index trials, double radius,
                                std::uint64_t seed) {
  if (trials < 1) {
    throw std::invalid_argument("triangle_check: trials must be >= 1");
  }
  if (!(radius > 0.0)) {
    throw std::invalid_argument("triangle_check: radius must be > 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  double worst = -std::numeric_limits<double>::infinity();
  Index labelings = 0;
  for (Index t = 0; t < trials; ++t) {
    const Point center = manifold.random_point(rng);
    Point vertex[3];
    for (Point& p : vertex) {
      const Tangent dir = random_unit_tangent(manifold, center, rng);
      p = manifold.retract(center, (radius * unit(rng)) * dir);
    }
    for (int ia = 0; ia < 3; ++ia) {
      for (int swap = 0; swap < 2; ++swap) {
        const Point& px = vertex[ia];
        const Point& py = vertex[(ia + 1 + swap) % 3];
        const Point& pz = vertex[(ia + 2 - swap) % 3];
        const double a = manifold.dist(py, pz);
        const double b = manifold.dist(px, py);
        const double c = manifold.dist(px, pz);
        double cos_a = 0.0;
        const Tangent ly = manifold.log(px, py);
        const Tangent lz = manifold.log(px, pz);
        const double ny = manifold.norm(px, ly);
        const double nz = manifold.norm(px, lz);
        if (ny > 1e-300 && nz > 1e-300) {
          cos_a = manifold.inner(px, ly, lz) / (ny * nz);
          cos_a = std::clamp(cos_a, -1.0, 1.0);
        }
        const double lhs = a * a;
        const double rhs =
            zeta_of(c_delta, c) * b * b + c * c - 2.0 * b * c * cos_a;
        const double scale = 1.0 + a * a + b * b + c * c;
        worst = std::max(worst, (lhs - rhs) / scale);
        ++labelings;
      }
    }
  }
  DiagnosticReport rep;
  rep.context = "triangle_check seed=" + std::to_string(seed);
  rep.add("triangle", "labelings_checked", double(labelings), kNaN, true);
  rep.add("triangle", "max_scaled_violation", worst, 1e-9, worst <= 1e-9);
  return rep;
}

ConvergenceConstants smoothness_convexity_probe(
    const FiniteSumProblem& prob, Index trials, std::uint64_t seed,
    const std::optional<Point>& center, double radius) {
  if (trials < 1) {
    throw std::invalid_argument(
        "smoothness_convexity_probe: trials must be >= 1");
  }
  const Manifold& m = prob.manifold();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto sample = [&]() -> Point {
    if (center) {
      const Tangent dir = random_unit_tangent(m, *center, rng);
      return m.retract(*center, (radius * unit(rng)) * dir);
    }
    return m.random_point(rng);
  };

  double l_hat = 0.0;
  double s_hat = std::numeric_limits<double>::infinity();
  for (Index t = 0; t < trials; ++t) {
    const Point x = sample();
    const Point y = sample();
    const double d = m.dist(x, y);
    if (d < 1e-9) {
      continue;  // quotients below are 0/0 on coincident samples
    }
    const Tangent gx = prob.full_grad(x);
    const Tangent gy = prob.full_grad(y);
    l_hat = std::max(l_hat, m.norm(x, gx - m.transport(y, x, gy)) / d);
    const double gap = prob.value(y) - prob.value(x) -
                       m.inner(x, gx, m.log(x, y));
    s_hat = std::min(s_hat, 2.0 * gap / (d * d));
  }

  ConvergenceConstants consts;
  consts.L = l_hat;
  consts.S = s_hat;
  if (s_hat > 0.0 && std::isfinite(s_hat)) {
    consts.kappa = s_hat;  // strong convexity implies gradient dominance
  }
  return consts;
}

RateReport prop1_rate_report(const ConvergenceConstants& consts, double eta2,
                             Index epochs) {
  RateReport report;
  const double l = consts.L;
  const double s = consts.S;
  const double kappa = consts.kappa;
  const double gamma = consts.gamma_lo;
  const double big_gamma = consts.Gamma_hi;
  if (!std::isfinite(l) || !std::isfinite(s) || !std::isfinite(kappa) ||
      !std::isfinite(gamma) || !std::isfinite(big_gamma) || s <= 0.0 ||
      eta2 < 0.0 || epochs < 1) {
    return report;
  }
  const double l3g2 = l * l * l * big_gamma * big_gamma;
  report.p = l / s + (2.0 * eta2 / s) * (2.0 * eta2 * l3g2 - s * kappa * gamma);
  report.q_prime = 6.0 * eta2 * eta2 * l3g2 / s;
  if (!(report.p < 1.0)) {
    return report;  // rate formula inapplicable
  }
  report.beta = (report.q_prime + std::pow(report.p, double(epochs)) *
                                      (1.0 - report.p - report.q_prime)) /
                (1.0 - report.p);
  report.applicable = std::isfinite(report.beta);
  return report;
}

double zeta_of(double c_delta, double d_diam) {
  if (d_diam < 0.0) {
    throw std::invalid_argument("zeta_of: diameter must be >= 0");
  }
  if (!(c_delta < 0.0) || d_diam == 0.0) {
    return 1.0;
  }
  const double s = d_diam * std::sqrt(-c_delta);
  return s / std::tanh(s);
}

}  // namespace rslbfgs
