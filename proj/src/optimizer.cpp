#include "rslbfgs/optimizer.hpp"

#include "rslbfgs/sphere.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace rslbfgs {

void OptimizerConfig::validate(Index data_size) const {
  if (data_size < 1) {
    throw std::invalid_argument("OptimizerConfig: empty problem");
  }
  if (!(eta1 > 0.0)) {
    throw std::invalid_argument("OptimizerConfig: eta1 must be > 0");
  }
  if (!(eta2 > 0.0)) {
    throw std::invalid_argument("OptimizerConfig: eta2 must be > 0");
  }
  if (pair_interval < 1) {
    throw std::invalid_argument("OptimizerConfig: pair interval must be >= 1");
  }
  if (memory_depth < 1) {
    throw std::invalid_argument("OptimizerConfig: memory depth must be >= 1");
  }
  if (minibatch < 1 || minibatch > data_size) {
    throw std::invalid_argument(
        "OptimizerConfig: minibatch must lie in [1, data size]");
  }
  if (inner_iters < 0) {
    throw std::invalid_argument("OptimizerConfig: inner iteration count < 0");
  }
  if (epochs < 0) {
    throw std::invalid_argument("OptimizerConfig: epoch count < 0");
  }
  if (option != CorrectionOption::TransportedStep &&
      option != CorrectionOption::TransportedVrGradient) {
    throw std::invalid_argument("OptimizerConfig: unknown correction option");
  }
}

Index OptimizerConfig::effective_inner_iters(Index data_size) const {
  if (inner_iters > 0) {
    return inner_iters;
  }
  return (data_size + minibatch - 1) / minibatch;
}

namespace {

std::string summarize_config(const OptimizerConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "eta1=" << cfg.eta1 << " eta2=" << cfg.eta2
     << " R=" << cfg.pair_interval << " M=" << cfg.memory_depth
     << " mb=" << cfg.minibatch << " m=" << cfg.inner_iters
     << " T=" << cfg.epochs << " option=" << int(cfg.option)
     << " seed=" << cfg.seed;
  return os.str();
}

}  // namespace

LbfgsMemory::LbfgsMemory(const Manifold& manifold, Index depth)
    : manifold_(&manifold), depth_(depth) {
  if (depth < 1) {
    throw std::invalid_argument("LbfgsMemory: depth must be >= 1");
  }
}

bool LbfgsMemory::push(const Tangent& z, const Tangent& y,
                       double curvature_tol) {
  if (!same_base(z, y)) {
    throw std::invalid_argument("LbfgsMemory: z and y based at different points");
  }
  if (!pairs_.empty() && !detail::bitwise_equal(pairs_.back().z.base, z.base)) {
    throw std::invalid_argument(
        "LbfgsMemory: new pair is based away from the retained pairs");
  }
  const double yz = manifold_->inner_raw(z.base, y.value, z.value);
  const double yy = manifold_->inner_raw(z.base, y.value, y.value);
  const double zz = manifold_->inner_raw(z.base, z.value, z.value);
  if (!(yz > curvature_tol * std::sqrt(yy) * std::sqrt(zz))) {
    return false;  // flat or negative curvature along z: skip the pair
  }
  if (Index(pairs_.size()) == depth_) {
    pairs_.pop_front();
  }
  pairs_.push_back(CorrectionPair{z, y, yz, yy});
  ++total_;
  return true;
}

void LbfgsMemory::rebase(const Manifold::Transporter& t) {
  for (CorrectionPair& p : pairs_) {
    // Transport is an isometry, so the cached inner products carry over.
    p.z = t(p.z);
    p.y = t(p.y);
  }
}

Tangent two_loop(const LbfgsMemory& memory, const Tangent& v) {
  if (memory.empty()) {
    throw std::logic_error("two_loop: empty correction-pair memory");
  }
  const Manifold& m = memory.manifold();
  const Index n = memory.size();
  const Matrix& base = memory.pair(0).z.base;
  if (!detail::bitwise_equal(base, v.base)) {
    throw std::invalid_argument(
        "two_loop: input tangent based away from the stored pairs");
  }

  Matrix q = v.value;
  std::vector<double> a(static_cast<std::size_t>(n));
  for (Index k = n - 1; k >= 0; --k) {
    const CorrectionPair& p = memory.pair(k);
    a[size_t(k)] = m.inner_raw(base, p.z.value, q) / p.yz;
    q -= a[size_t(k)] * p.y.value;
  }
  const CorrectionPair& newest = memory.pair(n - 1);
  q *= newest.yz / newest.yy;
  for (Index k = 0; k < n; ++k) {
    const CorrectionPair& p = memory.pair(k);
    const double b = m.inner_raw(base, p.y.value, q) / p.yz;
    q += (a[size_t(k)] - b) * p.z.value;
  }
  return Tangent{-q, base};
}

Tangent vr_gradient(const FiniteSumProblem& prob,
                    const FiniteSumProblem::Eval& cur,
                    const FiniteSumProblem::Eval& anchor,
                    const Tangent& full_grad_at_anchor,
                    std::span<const Index> batch,
                    const Manifold::Transporter& anchor_to_cur) {
  Tangent batch_cur = prob.mean_grad(cur, batch);
  Tangent batch_anchor = prob.mean_grad(anchor, batch);
  return batch_cur - anchor_to_cur(batch_anchor - full_grad_at_anchor);
}

Tangent vr_gradient(const FiniteSumProblem& prob, const Point& x_cur,
                    const Point& x_anchor, const Tangent& full_grad_at_anchor,
                    std::span<const Index> batch) {
  auto cur = prob.eval_at(x_cur);
  auto anchor = prob.eval_at(x_anchor);
  auto t = prob.manifold().transporter(x_anchor, x_cur);
  return vr_gradient(prob, *cur, *anchor, full_grad_at_anchor, batch, *t);
}

bool update_memory(const FiniteSumProblem& prob, LbfgsMemory& memory,
                   CorrectionOption option, const Point& x_new,
                   const PairContext& ctx) {
  const Manifold& m = prob.manifold();

  // Any pairs still expressed at an older iterate follow the move first.
  if (!memory.empty() &&
      !detail::bitwise_equal(memory.pair(0).z.base, x_new.value)) {
    auto shift = m.transporter(Point{memory.pair(0).z.base}, x_new);
    memory.rebase(*shift);
  }

  auto prev_to_new = m.transporter(ctx.u_prev, x_new);

  Tangent z;
  switch (option) {
    case CorrectionOption::TransportedStep:
      if (detail::bitwise_equal(ctx.step_prev.base, x_new.value)) {
        z = ctx.step_prev;
      } else {
        auto shift = m.transporter(Point{ctx.step_prev.base}, x_new);
        z = (*shift)(ctx.step_prev);
      }
      break;
    case CorrectionOption::TransportedVrGradient:
      z = (*prev_to_new)((-ctx.eta1) * ctx.nu_prev);
      break;
    default:
      throw std::invalid_argument("update_memory: unknown correction option");
  }

  Tangent grad_new = ctx.batch_grad_new
                         ? *ctx.batch_grad_new
                         : (ctx.eval_new
                                ? prob.mean_grad(*ctx.eval_new, ctx.minibatch)
                                : prob.mean_grad(x_new, ctx.minibatch));
  Tangent grad_prev = ctx.eval_prev
                          ? prob.mean_grad(*ctx.eval_prev, ctx.minibatch)
                          : prob.mean_grad(ctx.u_prev, ctx.minibatch);
  Tangent y = grad_new - (*prev_to_new)(grad_prev);

  return memory.push(z, y);
}

namespace {

constexpr double kFeasibilityTol = 1e-10;

/// Draws `mb` distinct indices by a partial Fisher-Yates pass over `pool`,
/// then sorts them so minibatch sums always accumulate in canonical index
/// order (this makes the full-index minibatch reproduce full_grad exactly).
void draw_minibatch(std::mt19937_64& rng, std::vector<Index>& pool, Index mb,
                    std::vector<Index>& batch) {
  const Index n = Index(pool.size());
  for (Index j = 0; j < mb; ++j) {
    std::uniform_int_distribution<Index> pick(j, n - 1);
    std::swap(pool[size_t(j)], pool[size_t(pick(rng))]);
  }
  batch.assign(pool.begin(), pool.begin() + mb);
  std::sort(batch.begin(), batch.end());
}

struct DirStats {
  void add(EpochStats& s, double norm) const {
    if (s.dir_count == 0) {
      s.dir_norm_min = norm;
      s.dir_norm_max = norm;
    } else {
      s.dir_norm_min = std::min(s.dir_norm_min, norm);
      s.dir_norm_max = std::max(s.dir_norm_max, norm);
    }
    s.dir_norm_sum += norm;
    ++s.dir_count;
  }
};

RunTrace run_variance_reduced(const FiniteSumProblem& prob, const Point& x0,
                              const OptimizerConfig& cfg,
                              const RunControls& ctl, const MeasureFn& error_fn,
                              bool use_lbfgs, const char* name) {
  const Manifold& m = prob.manifold();
  const Index n = prob.size();
  cfg.validate(n);
  if (!m.contains(x0, kFeasibilityTol)) {
    throw std::invalid_argument(std::string(name) +
                                ": start point is not on the manifold");
  }

  const Index mb = cfg.minibatch;
  const Index inner = cfg.effective_inner_iters(n);

  RunTrace trace;
  trace.name = name;
  trace.config_summary = summarize_config(cfg);

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  Point x = x0;
  // Billed in integers so the standard epoch (inner*mb == n) contributes
  // exactly 2.0 to the passes column.
  std::uint64_t full_sweeps = 0;
  std::uint64_t billed_minibatch = 0;
  const auto passes_now = [&] {
    return double(full_sweeps) + double(billed_minibatch) / double(n);
  };

  const auto measure = [&](Index epoch) -> TraceRecord {
    TraceRecord rec;
    rec.epoch = epoch;
    rec.passes = passes_now();
    rec.objective = prob.value(x);
    rec.error =
        error_fn ? error_fn(x) : std::numeric_limits<double>::quiet_NaN();
    rec.seconds = elapsed();
    trace.records.push_back(rec);
    return rec;
  };
  const auto finalize = [&] {
    trace.final_point = x.value;
    trace.seconds = elapsed();
    return trace;
  };

  const TraceRecord first = measure(0);
  if (!std::isfinite(first.objective)) {
    trace.status = RunStatus::Diverged;
    trace.message = "objective is not finite at the start point";
    return finalize();
  }
  const double f_cap =
      first.objective + 1e6 * (1.0 + std::abs(first.objective));
  if (ctl.error_stop >= 0.0 && std::isfinite(first.error) &&
      first.error <= ctl.error_stop) {
    return finalize();
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index(0));
  std::vector<Index> batch;

  LbfgsMemory memory(m, cfg.memory_depth);
  Index counter = 1;  // global inner-iteration counter, never reset
  Index events = 0;   // correction-pair events so far
  Point u_prev;       // iterate at the last pair event
  Tangent nu_prev;    // vr gradient captured there
  std::unique_ptr<FiniteSumProblem::Eval> u_prev_eval;
  Tangent last_step;  // most recent update step, expressed at the new iterate
  bool have_last_step = false;
  const DirStats dir;

  for (Index epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    if (ctl.check_vr_exactness) {
      stats.vr_dev_max = 0.0;
    }
    bool aborted = false;

    try {
      const Point anchor = x;
      auto anchor_eval = prob.eval_at(anchor);
      const Tangent anchor_full = prob.full_grad(*anchor_eval);
      trace.grad_evals += std::uint64_t(n);
      ++full_sweeps;

      for (Index it = 0; it < inner && !aborted; ++it, ++counter) {
        draw_minibatch(rng, pool, mb, batch);

        auto cur_eval = prob.eval_at(x);
        Tangent batch_cur = prob.mean_grad(*cur_eval, batch);
        Tangent batch_anchor = prob.mean_grad(*anchor_eval, batch);
        auto anchor_to_x = m.transporter(anchor, x);
        Tangent nu = batch_cur - (*anchor_to_x)(batch_anchor - anchor_full);
        trace.grad_evals += 2 * std::uint64_t(mb);

        if (ctl.check_vr_exactness) {
          // Instrumentation only; not billed to grad_evals or passes.
          const Tangent exact = prob.full_grad(*cur_eval);
          const double dev = (nu.value - exact.value).cwiseAbs().maxCoeff();
          stats.vr_dev_max = std::max(stats.vr_dev_max, dev);
        }

        if (use_lbfgs && counter % cfg.pair_interval == 0) {
          ++events;
          if (events >= 2) {
            if (!have_last_step) {
              throw std::logic_error(
                  "pair event before any step was taken");
            }
            PairContext ctx;
            ctx.u_prev = u_prev;
            ctx.step_prev = last_step;
            ctx.nu_prev = nu_prev;
            ctx.eta1 = cfg.eta1;
            ctx.minibatch = batch;
            ctx.eval_new = cur_eval.get();
            ctx.eval_prev = u_prev_eval.get();
            ctx.batch_grad_new = &batch_cur;
            const bool accepted =
                update_memory(prob, memory, cfg.option, x, ctx);
            trace.grad_evals += std::uint64_t(mb);
            if (accepted) {
              ++stats.pairs_accepted;
            } else {
              ++stats.pairs_rejected;
            }

            if (cfg.option == CorrectionOption::TransportedStep) {
              // How far the stored z (one transported step) falls from the
              // exact between-events displacement; grows with the pair
              // interval, ~0 at interval 1.
              try {
                const Tangent ideal = -m.log(x, u_prev);
                const double scale =
                    std::max(m.norm(x, ideal), m.norm(x, last_step));
                if (scale > 1e-300) {
                  const double gap = m.norm(x, last_step - ideal) / scale;
                  stats.z_gap_max = std::max(stats.z_gap_max, gap);
                }
              } catch (const std::domain_error&) {
                // cut locus between events: no comparable displacement
              }
            }

            if (accepted && !memory.empty() &&
                Index(trace.snapshots.size()) < ctl.max_pair_snapshots) {
              PairSnapshot snap;
              snap.counter = counter;
              snap.base = x.value;
              for (Index k = 0; k < memory.size(); ++k) {
                snap.pairs.emplace_back(memory.pair(k).z.value,
                                        memory.pair(k).y.value);
              }
              trace.snapshots.push_back(std::move(snap));
            }
          }
          u_prev = x;
          nu_prev = nu;
          u_prev_eval = std::move(cur_eval);  // cur_eval is dead from here on
        }

        Tangent step;
        if (use_lbfgs && counter >= 2 * cfg.pair_interval && !memory.empty()) {
          step = cfg.eta2 * two_loop(memory, nu);
        } else {
          // Warmup phase, plain variance-reduced descent, or (rarely) a
          // quasi-Newton iteration whose every pair failed the curvature test.
          step = (-cfg.eta1) * nu;
        }
        if (!step.value.allFinite()) {
          trace.status = RunStatus::Diverged;
          std::ostringstream msg;
          msg << "non-finite step tangent at iteration " << counter;
          trace.message = msg.str();
          aborted = true;
          break;
        }
        dir.add(stats, m.norm(x, step));

        const Point x_next = m.retract(x, step);
        if (!m.contains(x_next, kFeasibilityTol)) {
          trace.status = RunStatus::InfeasibleIterate;
          std::ostringstream msg;
          msg << "iterate left the manifold at iteration " << counter;
          trace.message = msg.str();
          aborted = true;
          break;
        }
        auto shift = m.transporter(x, x_next);
        if (use_lbfgs) {
          memory.rebase(*shift);
        }
        last_step = (*shift)(step);
        have_last_step = true;
        x = x_next;
        billed_minibatch += std::uint64_t(mb);

        if (ctl.measure_every_iterate) {
          measure(epoch);
        }
      }
    } catch (const std::domain_error& e) {
      // Geometry boundary event (cut locus, loss of positive definiteness
      // inside a matrix function): report as divergence, keep the trace.
      trace.status = RunStatus::Diverged;
      trace.message = std::string("geometry domain error: ") + e.what();
      aborted = true;
    }

    trace.epoch_stats.push_back(stats);
    if (aborted) {
      return finalize();
    }

    TraceRecord rec;
    try {
      rec = measure(epoch);
    } catch (const std::domain_error& e) {
      trace.status = RunStatus::Diverged;
      trace.message = std::string("geometry domain error: ") + e.what();
      return finalize();
    }
    if (!std::isfinite(rec.objective) || rec.objective > f_cap) {
      trace.status = RunStatus::Diverged;
      std::ostringstream msg;
      msg << "objective " << rec.objective << " exceeded the divergence cap "
          << f_cap << " at epoch " << epoch;
      trace.message = msg.str();
      return finalize();
    }
    if (ctl.error_stop >= 0.0 && std::isfinite(rec.error) &&
        rec.error <= ctl.error_stop) {
      break;
    }
  }
  return finalize();
}

}  // namespace

RunTrace run_rsv_lbfgs(const FiniteSumProblem& prob, const Point& x0,
                       const OptimizerConfig& cfg, const RunControls& ctl,
                       const MeasureFn& error_fn) {
  return run_variance_reduced(prob, x0, cfg, ctl, error_fn, /*use_lbfgs=*/true,
                              "rsvlbfgs");
}

RunTrace run_rsvrg(const FiniteSumProblem& prob, const Point& x0,
                   const OptimizerConfig& cfg, const RunControls& ctl,
                   const MeasureFn& error_fn) {
  return run_variance_reduced(prob, x0, cfg, ctl, error_fn,
                              /*use_lbfgs=*/false, "rsvrg");
}

RunTrace run_vr_pca(const EigData& data, const Point& x0,
                    const OptimizerConfig& cfg, const RunControls& ctl,
                    const MeasureFn& error_fn) {
  const Index n = data.count();
  const Index d = data.dim();
  cfg.validate(n);
  SphereManifold sphere(d);
  if (!sphere.contains(x0, kFeasibilityTol)) {
    throw std::invalid_argument("vrpca: start point is not a unit vector");
  }

  const Matrix& dm = data.d_matrix;
  const Index mb = cfg.minibatch;
  const Index inner = cfg.effective_inner_iters(n);

  RunTrace trace;
  trace.name = "vrpca";
  trace.config_summary = summarize_config(cfg);

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  Vector w = x0.value.col(0);
  std::uint64_t full_sweeps = 0;
  std::uint64_t billed_minibatch = 0;
  const auto passes_now = [&] {
    return double(full_sweeps) + double(billed_minibatch) / double(n);
  };

  const auto objective = [&](const Vector& v) {
    return -(dm.transpose() * v).squaredNorm() / double(n);
  };
  const auto measure = [&](Index epoch) -> TraceRecord {
    TraceRecord rec;
    rec.epoch = epoch;
    rec.passes = passes_now();
    rec.objective = objective(w);
    rec.error = error_fn ? error_fn(Point{w})
                         : std::numeric_limits<double>::quiet_NaN();
    rec.seconds = elapsed();
    trace.records.push_back(rec);
    return rec;
  };
  const auto finalize = [&] {
    trace.final_point = w;
    trace.seconds = elapsed();
    return trace;
  };

  const TraceRecord first = measure(0);
  if (!std::isfinite(first.objective)) {
    trace.status = RunStatus::Diverged;
    trace.message = "objective is not finite at the start point";
    return finalize();
  }
  const double f_cap =
      first.objective + 1e6 * (1.0 + std::abs(first.objective));
  if (ctl.error_stop >= 0.0 && std::isfinite(first.error) &&
      first.error <= ctl.error_stop) {
    return finalize();
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index(0));
  std::vector<Index> batch;
  const DirStats dir;

  for (Index epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    bool aborted = false;

    const Vector w_anchor = w;
    const Vector u_tilde = dm * (dm.transpose() * w_anchor) / double(n);
    trace.grad_evals += std::uint64_t(n);
    ++full_sweeps;

    for (Index it = 0; it < inner; ++it) {
      draw_minibatch(rng, pool, mb, batch);
      Vector acc = Vector::Zero(d);
      for (Index i : batch) {
        const auto col = dm.col(i);
        acc += (col.dot(w) - col.dot(w_anchor)) * col;
      }
      trace.grad_evals += std::uint64_t(mb);
      const Vector step = cfg.eta1 * (acc / double(mb) + u_tilde);

      if (!step.allFinite()) {
        trace.status = RunStatus::Diverged;
        trace.message = "non-finite step";
        aborted = true;
        break;
      }
      dir.add(stats, step.norm());

      w += step;
      const double norm = w.norm();
      if (!(norm > 0.0) || !w.allFinite()) {
        trace.status = RunStatus::Diverged;
        trace.message = "iterate collapsed to zero or went non-finite";
        aborted = true;
        break;
      }
      w /= norm;
      billed_minibatch += std::uint64_t(mb);

      if (ctl.measure_every_iterate) {
        measure(epoch);
      }
    }

    trace.epoch_stats.push_back(stats);
    if (aborted) {
      return finalize();
    }

    const TraceRecord rec = measure(epoch);
    if (!std::isfinite(rec.objective) || rec.objective > f_cap) {
      trace.status = RunStatus::Diverged;
      std::ostringstream msg;
      msg << "objective " << rec.objective << " exceeded the divergence cap "
          << f_cap << " at epoch " << epoch;
      trace.message = msg.str();
      return finalize();
    }
    if (ctl.error_stop >= 0.0 && std::isfinite(rec.error) &&
        rec.error <= ctl.error_stop) {
      break;
    }
  }
  return finalize();
}

}  // namespace rslbfgs
