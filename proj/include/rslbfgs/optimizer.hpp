#pragma once

#include "rslbfgs/problem.hpp"
#include "rslbfgs/rayleigh.hpp"
#include "rslbfgs/trace.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <span>

namespace rslbfgs {

/// How the displacement half z of a correction pair is sourced.
enum class CorrectionOption {
  TransportedStep = 1,        // z = transported most recent update step
  TransportedVrGradient = 2,  // z = transported -eta1 * (vr gradient at the
                              //     previous pair event)
};

struct OptimizerConfig {
  double eta1 = 0.001;      // first-order step size
  double eta2 = 0.1;        // quasi-Newton step size
  Index pair_interval = 1;  // inner iterations between correction-pair events
  Index memory_depth = 5;   // retained pair count
  Index minibatch = 10;
  Index inner_iters = 0;  // per-epoch iteration count; 0 = ceil(N / minibatch)
  Index epochs = 30;
  CorrectionOption option = CorrectionOption::TransportedStep;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a field is out of range for a data set
  /// of `data_size` components.
  void validate(Index data_size) const;
  Index effective_inner_iters(Index data_size) const;
};

/// One correction pair, both vectors currently expressed in the same tangent
/// space.  The inner products are cached at storage time; transports are
/// isometries, so rebasing leaves them valid.
struct CorrectionPair {
  Tangent z;
  Tangent y;
  double yz = 0.0;
  double yy = 0.0;
};

/// Ring buffer of at most `depth` correction pairs, oldest evicted first.
/// All retained pairs are kept in one tangent space; `rebase` moves them to a
/// new iterate in one sweep.
class LbfgsMemory {
 public:
  LbfgsMemory(const Manifold& manifold, Index depth);

  const Manifold& manifold() const { return *manifold_; }
  Index size() const { return Index(pairs_.size()); }
  Index depth() const { return depth_; }
  /// Pairs ever accepted (not reduced by eviction).
  Index total_accepted() const { return total_; }
  bool empty() const { return pairs_.empty(); }
  /// k = 0 is the oldest retained pair, k = size()-1 the newest.
  const CorrectionPair& pair(Index k) const { return pairs_.at(size_t(k)); }

  /// Appends (z, y) if it passes the curvature test
  /// inner(y, z) > curvature_tol * ||y|| ||z||, evicting the oldest pair when
  /// full.  Returns whether the pair was accepted.  Throws
  /// std::invalid_argument when z and y are not based at the same point or
  /// their base differs from the retained pairs'.
  bool push(const Tangent& z, const Tangent& y, double curvature_tol = 1e-8);

  /// Re-expresses every retained pair at the transporter's target point.
  void rebase(const Manifold::Transporter& t);

  void clear() { pairs_.clear(); }

 private:
  const Manifold* manifold_;
  Index depth_;
  std::deque<CorrectionPair> pairs_;
  Index total_ = 0;
};

/// Two-loop recursion over the stored pairs.  Returns the descent direction
/// rho = -H v where H approximates the inverse Hessian with initial scaling
/// (yz/yy) of the newest pair, so the iterate update is retract(x, eta2*rho).
/// All inner products use the manifold metric.  Throws std::logic_error on
/// empty memory and std::invalid_argument on base mismatch.
Tangent two_loop(const LbfgsMemory& memory, const Tangent& v);

/// Variance-reduced stochastic gradient at x_cur:
///   nu = mean grad over `batch` at x_cur
///        - transport_{anchor->cur}(mean grad over `batch` at anchor
///                                  - full_grad_at_anchor),
/// both minibatch gradients over the same index set.  With batch = all
/// indices, or with x_cur = x_anchor, nu equals the exact full gradient.
Tangent vr_gradient(const FiniteSumProblem& prob, const Point& x_cur,
                    const Point& x_anchor, const Tangent& full_grad_at_anchor,
                    std::span<const Index> batch);

/// Hot-loop variant reusing caller-owned evaluation handles and a prebuilt
/// transporter from the anchor to the current point.
Tangent vr_gradient(const FiniteSumProblem& prob,
                    const FiniteSumProblem::Eval& cur,
                    const FiniteSumProblem::Eval& anchor,
                    const Tangent& full_grad_at_anchor,
                    std::span<const Index> batch,
                    const Manifold::Transporter& anchor_to_cur);

/// Inputs to a correction-pair event.  The optional evaluation handles avoid
/// recomputing factorizations the inner loop already holds; when absent they
/// are created on demand.
struct PairContext {
  Point u_prev;       // iterate at the previous pair event
  Tangent step_prev;  // most recent update step, step size included
  Tangent nu_prev;    // vr gradient captured at the previous pair event
  double eta1 = 0.0;  // scales nu_prev for the TransportedVrGradient option
  std::span<const Index> minibatch;  // current minibatch (shared with nu)
  const FiniteSumProblem::Eval* eval_new = nullptr;   // eval at x_new
  const FiniteSumProblem::Eval* eval_prev = nullptr;  // eval at u_prev
  const Tangent* batch_grad_new = nullptr;  // mean grad at x_new over minibatch
};

/// Performs one correction-pair event at x_new: forms
///   z = transport to x_new of (step_prev)                 [TransportedStep]
///       or of (-eta1 * nu_prev)                           [TransportedVrGradient]
///   y = mean grad at x_new - transported mean grad at u_prev,
/// both over ctx.minibatch, re-expresses any retained pairs at x_new, and
/// appends (z, y) subject to the curvature test.  Returns whether the pair
/// was accepted.
bool update_memory(const FiniteSumProblem& prob, LbfgsMemory& memory,
                   CorrectionOption option, const Point& x_new,
                   const PairContext& ctx);

/// Problem-specific error measure for trace records (NaN = unknown).
using MeasureFn = std::function<double(const Point&)>;

/// Optional knobs shared by all run functions.
struct RunControls {
  /// Stop once a measurement's error falls at or below this (ignored if < 0).
  double error_stop = -1.0;
  /// Capture up to this many L-BFGS memory snapshots right after accepted
  /// pair events.
  Index max_pair_snapshots = 0;
  /// Compare every inner iteration's vr gradient against the exact full
  /// gradient and record the worst deviation per epoch.  Expensive; meant for
  /// full-batch exactness checks.
  bool check_vr_exactness = false;
  /// Record a trace row after every inner iteration, not just per epoch.
  bool measure_every_iterate = false;
};

/// Variance-reduced Riemannian L-BFGS (warmup of 2*pair_interval first-order
/// steps, then two-loop steps; correction pairs every pair_interval
/// iterations; anchor moves to the last inner iterate each epoch).
RunTrace run_rsv_lbfgs(const FiniteSumProblem& prob, const Point& x0,
                       const OptimizerConfig& cfg, const RunControls& ctl = {},
                       const MeasureFn& error_fn = {});

/// Variance-reduced Riemannian gradient descent: identical epoch structure,
/// every step x <- retract(x, -eta1 * nu).
RunTrace run_rsvrg(const FiniteSumProblem& prob, const Point& x0,
                   const OptimizerConfig& cfg, const RunControls& ctl = {},
                   const MeasureFn& error_fn = {});

/// Euclidean variance-reduced power-style baseline for the leading-eigenvector
/// problem: per epoch, u_tilde = (1/N) D D^T w_tilde; inner step
///   w <- w + eta1 * (mean over I of d_i (d_i^T w - d_i^T w_tilde) + u_tilde),
/// then w <- w / ||w||.  Uses eta1, minibatch, inner_iters, epochs, seed.
RunTrace run_vr_pca(const EigData& data, const Point& x0,
                    const OptimizerConfig& cfg, const RunControls& ctl = {},
                    const MeasureFn& error_fn = {});

}  // namespace rslbfgs
