#pragma once

#include "rslbfgs/optimizer.hpp"
#include "rslbfgs/problem.hpp"
#include "rslbfgs/trace.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rslbfgs {

/// Convergence-analysis constants, empirical or hand-set.  NaN = not
/// populated.  L/S are smoothness and strong-convexity constants, kappa the
/// gradient-dominance constant, gamma_lo/Gamma_hi the inverse-Hessian
/// operator bounds, lambda_lo/Lambda_hi the Hessian-side bounds, c_delta a
/// sectional-curvature lower bound, d_diam a diameter bound, zeta the
/// curvature distortion factor, and p_const/q_prime/beta_rate the linear-rate
/// ingredients.  mu0/alpha1/alpha2/eps are reserved for the nonconvex-rate
/// constants (carried, never asserted).
struct ConvergenceConstants {
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  double L = kNaN;
  double S = kNaN;
  double kappa = kNaN;
  double gamma_lo = kNaN;
  double Gamma_hi = kNaN;
  double lambda_lo = kNaN;
  double Lambda_hi = kNaN;
  double c_delta = kNaN;
  double d_diam = kNaN;
  double zeta = kNaN;
  double beta_rate = kNaN;
  double p_const = kNaN;
  double q_prime = kNaN;
  double mu0 = kNaN;
  double alpha1 = kNaN;
  double alpha2 = kNaN;
  double eps = kNaN;
};

/// One verdict row of a diagnostic report.
struct DiagnosticCheck {
  std::string check;  // family, e.g. "lemma1"
  std::string name;   // row within the family
  double measured = std::numeric_limits<double>::quiet_NaN();
  double bound = std::numeric_limits<double>::quiet_NaN();
  bool pass = true;
};

struct DiagnosticReport {
  std::string context;  // provenance: dataset/run identifiers, seeds
  std::vector<DiagnosticCheck> checks;

  void add(std::string check, std::string name, double measured, double bound,
           bool pass);
  void append(const DiagnosticReport& other);
  bool all_pass() const;
};

/// Plain-text table (context line, aligned columns, per-family summary).
void write_diagnostics_text(std::ostream& out, const DiagnosticReport& report);
/// Machine-readable table with header check,name,measured,bound,pass.
void write_diagnostics_csv(std::ostream& out, const DiagnosticReport& report);

/// Compares directional finite differences (f(retract(x, t v)) - f(x))/t at
/// t = 1e-6 against inner(grad, v) for `trials` random component/direction
/// picks plus one full-gradient row; relative error must stay within 1e-4.
DiagnosticReport fd_gradient_check(const FiniteSumProblem& prob,
                                   const Point& x, Index trials,
                                   std::uint64_t seed = 0);

/// Curvature-pair bounds check.  Expresses the pairs in an orthonormal
/// tangent basis, computes the empirical spectral ratios
///   lambda_hat = min inner(y,z)/||z||^2,   Lambda_hat = max ||y||^2/inner(y,z)
/// over pairs passing inner(y,z) > 0 (others are reported as filtered),
/// reconstructs the dense Hessian approximation by the direct BFGS recursion
/// (initial matrix: identity scaled by the newest pair's ||y||^2/inner(y,z))
/// over the last `memory_depth` usable pairs, and asserts at every prefix
/// length k:
///   trace(B_k)  <=  trace(B_0) + k * Lambda_hat
///   logdet(B_k) >=  logdet(B_0) + k log(lambda_hat)
///                   - k log(trace(B_0) + k * Lambda_hat)
/// plus positive definiteness; the extreme eigenvalues of the final inverse
/// are reported as empirical gamma/Gamma.
DiagnosticReport lemma1_check(const Manifold& manifold,
                              const std::vector<CorrectionPair>& pairs,
                              Index memory_depth);
/// Same, on a pair snapshot captured by a run.
DiagnosticReport lemma1_check(const Manifold& manifold,
                              const PairSnapshot& snapshot,
                              Index memory_depth);

/// Cross-validates the two-loop recursion against a dense reconstruction of
/// the inverse update
///   H_+ = (I - rho z y^T) H (I - rho y z^T) + rho z z^T,   rho = 1/inner(y,z)
/// applied oldest to newest in orthonormal tangent coordinates; requires
/// relative agreement within 1e-10.  Empty memory compares identity scalings
/// and passes trivially.
DiagnosticReport two_loop_vs_dense(const LbfgsMemory& memory, const Tangent& v);

/// Curvature-corrected law of cosines on random geodesic triangles: for every
/// labeling (a; b, c, A) of each sampled triple,
///   a^2 <= zeta_of(c_delta, c) * b^2 + c^2 - 2 b c cos(A)
/// within 1e-9 * (1 + a^2 + b^2 + c^2).  Vertices are sampled within
/// geodesic radius `radius` of a random center.
DiagnosticReport triangle_check(const Manifold& manifold, double c_delta,
                                Index trials, double radius,
                                std::uint64_t seed = 0);

/// Samples random point pairs and reports the extreme empirical constants
///   L = max ||grad f(x) - transport grad f(y)|| / dist(x, y)
///   S = min  2 (f(y) - f(x) - inner(grad f(x), log(x,y))) / dist(x, y)^2
/// (plus kappa = S when S > 0: strong convexity implies gradient dominance
/// with that constant).  These are observed values, not certified bounds.
/// When `center` is given, points are sampled within geodesic `radius` of it;
/// otherwise they come from the manifold's ambient sampler.
ConvergenceConstants smoothness_convexity_probe(
    const FiniteSumProblem& prob, Index trials, std::uint64_t seed = 0,
    const std::optional<Point>& center = std::nullopt, double radius = 0.5);

/// Linear-rate ingredients:
///   p    = L/S + (2 eta2 / S) (2 eta2 L^3 Gamma^2 - S kappa gamma)
///   q'   = 6 eta2^2 L^3 Gamma^2 / S
///   beta = (q' + p^T (1 - p - q')) / (1 - p)
/// evaluated verbatim from the constants; `applicable` is false (and beta
/// NaN) when p >= 1 or any needed constant is missing.
struct RateReport {
  double p = std::numeric_limits<double>::quiet_NaN();
  double q_prime = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  bool applicable = false;
};
RateReport prop1_rate_report(const ConvergenceConstants& consts, double eta2,
                             Index epochs);

/// Curvature distortion factor: d sqrt(|c|) / tanh(d sqrt(|c|)) for c < 0
/// (continued by its limit 1 at d = 0), and 1 for c >= 0.
double zeta_of(double c_delta, double d_diam);

}  // namespace rslbfgs
