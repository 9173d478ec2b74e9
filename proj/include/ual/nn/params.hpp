#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ual/nn/tensor.hpp"

namespace ual::nn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Ordered collection of named trainable tensors.
class ParamList {
public:
  Tensor add(std::string name, Tensor t);
  /// Fan-in scaled uniform init in [-gain/sqrt(fan_in), gain/sqrt(fan_in)].
  Tensor add_uniform(std::string name, Shape shape, int fan_in, std::mt19937_64 &rng,
                     double gain = 1.0);
  Tensor add_zeros(std::string name, Shape shape);

  void append(const ParamList &other);

  [[nodiscard]] const std::vector<NamedTensor> &items() const { return items_; }
  [[nodiscard]] std::vector<NamedTensor> &items() { return items_; }
  [[nodiscard]] std::size_t tensor_count() const { return items_.size(); }
  [[nodiscard]] std::size_t scalar_count() const;
  [[nodiscard]] const Tensor *find(const std::string &name) const;

  void zero_grad();
  void set_requires_grad(bool on);

private:
  std::vector<NamedTensor> items_;
};

class Optimizer {
public:
  virtual ~Optimizer() = default;
  /// Applies one update from the accumulated grads. Params without a grad are left alone.
  virtual void step(ParamList &params) = 0;
  /// Optimizer state as named tensors, for checkpoints.
  [[nodiscard]] virtual std::vector<NamedTensor> state() const = 0;
  virtual void load_state(const std::vector<NamedTensor> &state) = 0;
};

/// theta <- theta - lr * grad
class Sgd final : public Optimizer {
public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(ParamList &params) override;
  [[nodiscard]] std::vector<NamedTensor> state() const override { return {}; }
  void load_state(const std::vector<NamedTensor> &) override {}

private:
  double lr_;
};

class Adam final : public Optimizer {
public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParamList &params) override;
  [[nodiscard]] std::vector<NamedTensor> state() const override;
  void load_state(const std::vector<NamedTensor> &state) override;

private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<Real>> m_, v_;
};

} // namespace ual::nn
