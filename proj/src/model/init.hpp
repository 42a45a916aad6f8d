#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "common/rng.hpp"
#include "tensor/tensor.hpp"

namespace inttravel::model {

inline std::vector<double> normal_values(std::size_t n, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(n);
  for (double& x : v) x = stddev > 0.0 ? dist(rng) : 0.0;
  return v;
}

// N(0, gain²/fan_in) for a fan_in × fan_out weight.
inline std::vector<double> lecun_values(std::size_t fan_in, std::size_t fan_out, Rng& rng, double gain = 1.0) {
  return normal_values(fan_in * fan_out, gain / std::sqrt(static_cast<double>(fan_in)), rng);
}

// Gradient accumulator of parent i, or nullptr when it is untracked.
inline double* parent_grad(tensor::Node& n, std::size_t i) {
  tensor::Node* p = n.parents[i].get();
  return p->requires_grad ? p->grad_buffer().data() : nullptr;
}

}  // namespace inttravel::model
