#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ual::nn {

#ifdef UAL_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

using Shape = std::vector<int>;

std::size_t numel(const Shape &shape);
std::string shape_str(const Shape &shape);

struct Node;
using BackwardFn = std::function<void(Node &self)>;

/// One value in the computation graph. `backward` reads `self.grad` and
/// accumulates into the grads of `inputs`.
struct Node {
  Shape shape;
  std::vector<Real> value;
  std::vector<Real> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  std::vector<Real> &ensure_grad() {
    if (grad.size() != value.size())
      grad.assign(value.size(), Real(0));
    return grad;
  }
};

/// Shared handle to a graph node. Copies alias the same storage.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, Real value);
  static Tensor from(Shape shape, std::vector<Real> values);
  /// Leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<Real> values);

  [[nodiscard]] bool defined() const { return node_ != nullptr; }
  [[nodiscard]] const Shape &shape() const { return node_->shape; }
  [[nodiscard]] int dim(std::size_t i) const { return node_->shape.at(i); }
  [[nodiscard]] std::size_t rank() const { return node_->shape.size(); }
  [[nodiscard]] std::size_t size() const { return node_->value.size(); }

  [[nodiscard]] std::span<const Real> values() const { return node_->value; }
  [[nodiscard]] std::span<Real> mutable_values() { return node_->value; }
  /// Empty until a backward pass has reached this node.
  [[nodiscard]] std::span<const Real> grad() const { return node_->grad; }
  [[nodiscard]] std::span<Real> mutable_grad() { return node_->ensure_grad(); }
  [[nodiscard]] Real item() const;

  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  void zero_grad();

  /// Reverse-mode sweep from this scalar.
  void backward() const;

  /// Same values, cut from the graph.
  [[nodiscard]] Tensor detach() const;

  [[nodiscard]] Node *node() const { return node_.get(); }
  [[nodiscard]] const std::shared_ptr<Node> &node_ptr() const { return node_; }

private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

private:
  bool previous_;
};

bool grad_enabled();

/// Builds an op result. The backward closure is attached only when
/// recording is on and some input requires a gradient.
Tensor make_result(Shape shape, std::vector<Real> value, std::vector<Tensor> inputs,
                   BackwardFn backward);

} // namespace ual::nn
