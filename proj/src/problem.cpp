#include "rslbfgs/problem.hpp"

#include <numeric>
#include <vector>

namespace rslbfgs {

void FiniteSumProblem::require_index(Index i) const {
  if (i < 0 || i >= size()) {
    throw std::out_of_range("component index " + std::to_string(i) +
                            " out of range [0, " + std::to_string(size()) +
                            ")");
  }
}

double FiniteSumProblem::value(const Point& x) const {
  const auto ev = eval_at(x);
  double acc = 0.0;
  for (Index i = 0; i < size(); ++i) acc += ev->component_value(i);
  return acc / static_cast<double>(size());
}

double FiniteSumProblem::component_value(const Point& x, Index i) const {
  require_index(i);
  return eval_at(x)->component_value(i);
}

Tangent FiniteSumProblem::component_grad(const Point& x, Index i) const {
  require_index(i);
  const auto ev = eval_at(x);
  return {ev->component_grad_raw(i), ev->base()};
}

Tangent FiniteSumProblem::mean_grad(const Eval& ev,
                                    std::span<const Index> batch) const {
  if (batch.empty()) {
    throw std::invalid_argument("mean_grad: empty batch");
  }
  for (Index i : batch) require_index(i);
  Matrix acc = ev.component_grad_raw(batch[0]);
  for (size_t k = 1; k < batch.size(); ++k) {
    acc += ev.component_grad_raw(batch[k]);
  }
  acc /= static_cast<double>(batch.size());
  return {std::move(acc), ev.base()};
}

Tangent FiniteSumProblem::mean_grad(const Point& x,
                                    std::span<const Index> batch) const {
  return mean_grad(*eval_at(x), batch);
}

Tangent FiniteSumProblem::full_grad(const Eval& ev) const {
  std::vector<Index> all(static_cast<size_t>(size()));
  std::iota(all.begin(), all.end(), Index{0});
  return mean_grad(ev, all);
}

Tangent FiniteSumProblem::full_grad(const Point& x) const {
  return full_grad(*eval_at(x));
}

}  // namespace rslbfgs
