#pragma once

#include "rslbfgs/manifold.hpp"

#include <memory>
#include <span>

namespace rslbfgs {

/// A finite-sum objective f(x) = (1/N) sum_i f_i(x) over a manifold.
///
/// Concrete problems implement per-component values and Riemannian gradients
/// through an Eval handle that may cache factorizations of the evaluation
/// point (e.g. x^{1/2}, x^{-1/2} on the SPD manifold), so that evaluating many
/// components at the same point pays the point-dependent cost once.
///
/// The mean over a batch is always accumulated component by component in
/// index order and divided once, so `full_grad` is exactly the mean of
/// `component_grad` results: the same values summed the same way.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual const Manifold& manifold() const = 0;
  /// Number of components N.
  virtual Index size() const = 0;

  /// Repeated-evaluation handle at one fixed point.
  class Eval {
   public:
    explicit Eval(Matrix base) : base_(std::move(base)) {}
    virtual ~Eval() = default;
    const Matrix& base() const { return base_; }
    virtual double component_value(Index i) const = 0;
    /// Riemannian gradient of f_i at the evaluation point (raw tangent rep).
    virtual Matrix component_grad_raw(Index i) const = 0;

   protected:
    Matrix base_;
  };

  virtual std::unique_ptr<Eval> eval_at(const Point& x) const = 0;

  /// Objective value f(x): mean of the component values.
  double value(const Point& x) const;
  double component_value(const Point& x, Index i) const;
  Tangent component_grad(const Point& x, Index i) const;
  /// Mean gradient over a batch of component indices (fixed-order sum).
  Tangent mean_grad(const Point& x, std::span<const Index> batch) const;
  Tangent mean_grad(const Eval& ev, std::span<const Index> batch) const;
  /// Full Riemannian gradient: mean over all components.
  Tangent full_grad(const Point& x) const;
  Tangent full_grad(const Eval& ev) const;

 protected:
  void require_index(Index i) const;
};

}  // namespace rslbfgs
