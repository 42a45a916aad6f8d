#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tensor/tensor.hpp"

namespace inttravel::tensor {

struct Parameter {
  std::string name;
  Tensor value;  // grad-tracked leaf; its gradient buffer is the accumulator
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

// Named parameter registry in registration order.
class ParameterStore {
 public:
  Tensor add(const std::string& name, Shape shape, std::vector<double> init);
  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const Tensor& get(const std::string& name) const;
  Parameter& param(const std::string& name);
  const Parameter& param(const std::string& name) const;

  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t total_values() const;

  void zero_grad();

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter holding a gradient;
// gradients are cleared afterwards. Returns names skipped for lack of a
// gradient.
std::vector<std::string> adam_step(ParameterStore& store, const AdamConfig& config);

}  // namespace inttravel::tensor
