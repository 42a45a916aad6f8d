#include "tensor/param_store.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "common/error.hpp"

namespace inttravel::tensor {

Tensor ParameterStore::add(const std::string& name, Shape shape, std::vector<double> init) {
  if (name.empty()) fail(ErrorCode::kInvalidArgument, "parameter name must be non-empty");
  if (contains(name)) fail(ErrorCode::kInvalidArgument, "duplicate parameter name: " + name);
  Tensor t = Tensor::from(std::move(shape), std::move(init), /*requires_grad=*/true);
  Parameter p;
  p.name = name;
  p.value = t;
  p.m.assign(t.numel(), 0.0);
  p.v.assign(t.numel(), 0.0);
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return t;
}

const Tensor& ParameterStore::get(const std::string& name) const { return param(name).value; }

Parameter& ParameterStore::param(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::kInvalidArgument, "unknown parameter: " + name);
  return params_[it->second];
}

const Parameter& ParameterStore::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::kInvalidArgument, "unknown parameter: " + name);
  return params_[it->second];
}

std::size_t ParameterStore::total_values() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (Parameter& p : params_) p.value.zero_grad();
}

std::vector<std::string> adam_step(ParameterStore& store, const AdamConfig& config) {
  std::vector<std::string> skipped;
  for (Parameter& p : store.params()) {
    if (!p.value.has_grad()) {
      skipped.push_back(p.name);
      continue;
    }
    ++p.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(p.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(p.step));
    auto g = p.value.grad();
    auto w = p.value.mutable_values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      p.m[i] = config.beta1 * p.m[i] + (1.0 - config.beta1) * g[i];
      p.v[i] = config.beta2 * p.v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double mhat = p.m[i] / bc1;
      const double vhat = p.v[i] / bc2;
      w[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
    ensure_finite(p.value, p.name.c_str());
    p.value.zero_grad();
  }
  if (!skipped.empty()) {
    spdlog::debug("adam_step: {} parameter(s) without gradient skipped (first: {})", skipped.size(),
                  skipped.front());
  }
  return skipped;
}

}  // namespace inttravel::tensor
