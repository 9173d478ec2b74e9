#include "ual/nn/params.hpp"

#include <algorithm>
#include <cmath>

#include "ual/errors.hpp"

namespace ual::nn {

Tensor ParamList::add(std::string name, Tensor t) {
  t.set_requires_grad(true);
  items_.push_back({std::move(name), t});
  return t;
}

Tensor ParamList::add_uniform(std::string name, Shape shape, int fan_in, std::mt19937_64 &rng,
                              double gain) {
  const double bound = gain / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<Real> values(numel(shape));
  for (auto &v : values)
    v = static_cast<Real>(dist(rng));
  return add(std::move(name), Tensor::parameter(std::move(shape), std::move(values)));
}

Tensor ParamList::add_zeros(std::string name, Shape shape) {
  auto n = numel(shape);
  return add(std::move(name), Tensor::parameter(std::move(shape), std::vector<Real>(n, 0)));
}

void ParamList::append(const ParamList &other) {
  items_.insert(items_.end(), other.items_.begin(), other.items_.end());
}

std::size_t ParamList::scalar_count() const {
  std::size_t n = 0;
  for (const auto &p : items_)
    n += p.tensor.size();
  return n;
}

const Tensor *ParamList::find(const std::string &name) const {
  auto it = std::find_if(items_.begin(), items_.end(),
                         [&](const NamedTensor &p) { return p.name == name; });
  return it == items_.end() ? nullptr : &it->tensor;
}

void ParamList::zero_grad() {
  for (auto &p : items_)
    p.tensor.zero_grad();
}

void ParamList::set_requires_grad(bool on) {
  for (auto &p : items_)
    p.tensor.set_requires_grad(on);
}

void Sgd::step(ParamList &params) {
  for (auto &p : params.items()) {
    auto g = p.tensor.grad();
    if (g.empty())
      continue;
    auto v = p.tensor.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] -= static_cast<Real>(lr_ * g[i]);
  }
}

void Adam::step(ParamList &params) {
  auto &items = params.items();
  if (m_.empty()) {
    for (const auto &p : items) {
      names_.push_back(p.name);
      m_.emplace_back(p.tensor.size(), Real(0));
      v_.emplace_back(p.tensor.size(), Real(0));
    }
  }
  if (m_.size() != items.size())
    throw ConfigError("Adam: parameter list changed size between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < items.size(); ++k) {
    auto g = items[k].tensor.grad();
    if (g.empty())
      continue;
    auto val = items[k].tensor.mutable_values();
    auto &m = m_[k];
    auto &v = v_[k];
    for (std::size_t i = 0; i < val.size(); ++i) {
      const double gi = g[i];
      m[i] = static_cast<Real>(beta1_ * m[i] + (1.0 - beta1_) * gi);
      v[i] = static_cast<Real>(beta2_ * v[i] + (1.0 - beta2_) * gi * gi);
      const double mh = m[i] / c1, vh = v[i] / c2;
      val[i] -= static_cast<Real>(lr_ * mh / (std::sqrt(vh) + eps_));
    }
  }
}

std::vector<NamedTensor> Adam::state() const {
  std::vector<NamedTensor> out;
  out.push_back({"adam/t", Tensor::from({1}, {static_cast<Real>(t_)})});
  for (std::size_t k = 0; k < names_.size(); ++k) {
    const int n = static_cast<int>(m_[k].size());
    out.push_back({"adam/m/" + names_[k], Tensor::from({n}, m_[k])});
    out.push_back({"adam/v/" + names_[k], Tensor::from({n}, v_[k])});
  }
  return out;
}

void Adam::load_state(const std::vector<NamedTensor> &state) {
  names_.clear();
  m_.clear();
  v_.clear();
  t_ = 0;
  for (const auto &s : state) {
    if (s.name == "adam/t") {
      t_ = static_cast<std::int64_t>(std::llround(s.tensor.item()));
    } else if (s.name.rfind("adam/m/", 0) == 0) {
      names_.push_back(s.name.substr(7));
      m_.emplace_back(s.tensor.values().begin(), s.tensor.values().end());
    } else if (s.name.rfind("adam/v/", 0) == 0) {
      v_.emplace_back(s.tensor.values().begin(), s.tensor.values().end());
    }
  }
  if (m_.size() != v_.size())
    throw FormatError("Adam state: unpaired moment tensors");
}

} // namespace ual::nn
