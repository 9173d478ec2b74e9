#include "ual/nn/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "ual/errors.hpp"

namespace ual::nn {
namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape &shape) {
  std::size_t n = 1;
  for (int d : shape)
    n *= static_cast<std::size_t>(d);
  return n;
}

std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i)
    os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), Real(0)); }

Tensor Tensor::full(Shape shape, Real value) {
  auto n = numel(shape);
  return from(std::move(shape), std::vector<Real>(n, value));
}

Tensor Tensor::from(Shape shape, std::vector<Real> values) {
  if (numel(shape) != values.size())
    throw DimensionError("tensor " + shape_str(shape) + " given " +
                         std::to_string(values.size()) + " values");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Shape shape, std::vector<Real> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

Real Tensor::item() const {
  if (node_->value.size() != 1)
    throw DimensionError("item() on tensor " + shape_str(node_->shape));
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty())
    std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
}

Tensor Tensor::detach() const { return from(node_->shape, node_->value); }

void Tensor::backward() const {
  if (node_->value.size() != 1)
    throw DimensionError("backward() needs a scalar, got " + shape_str(node_->shape));
  if (!node_->requires_grad)
    return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto &[n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node *child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second)
        stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node &n = **it;
    if (n.backward && !n.grad.empty())
      n.backward(n);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(Shape shape, std::vector<Real> value, std::vector<Tensor> inputs,
                   BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = std::any_of(inputs.begin(), inputs.end(),
                           [](const Tensor &t) { return t.defined() && t.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      for (auto &t : inputs)
        if (t.defined())
          node->inputs.push_back(t.node_ptr());
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

} // namespace ual::nn
