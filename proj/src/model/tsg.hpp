#pragma once

#include <span>
#include <string>

#include "model/tip.hpp"

namespace inttravel::model {

// Two-layer MLP C → C (SiLU) → L producing raw per-layer gates.
struct GateMlp {
  Tensor w1, b1, w2, b2;
  std::size_t depth = 0;

  // Output bias starts at 1 and the output weights small, so s ≈ 1.
  static GateMlp create(ParameterStore& store, const std::string& prefix, std::size_t width, std::size_t depth,
                        Rng& rng);
};

Tensor aggregate_streams(const HyperState& x);  // mean over streams

// s_{·,k} = MLP(e_k) as 1 × L; task_embedding is 1 × C.
Tensor compute_layer_gates(const GateMlp& mlp, const Tensor& task_embedding);

// mean_l s_l · z_l. An undefined `gates` means s ≡ 1.
Tensor gate_and_pool(std::span<const Tensor> layer_outputs, const Tensor& gates);

}  // namespace inttravel::model
