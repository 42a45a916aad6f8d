#pragma once

#include <string>
#include <vector>

#include "model/hstu.hpp"

namespace inttravel::model {

// Global expert bank: shared experts first, then each task's private experts.
// Weights are stored input-major (z̃ · W̃_e).
struct ExpertBank {
  std::size_t shared = 2;
  std::size_t private_per_task = 1;
  std::size_t task_slots = 4;
  std::vector<Tensor> w;  // C × C
  std::vector<Tensor> b;  // 1 × C

  std::size_t count() const { return shared + private_per_task * task_slots; }
  std::vector<std::size_t> experts_for(std::size_t task) const;
  std::vector<std::size_t> private_of(std::size_t task) const;
};

struct TsfParams {
  std::size_t width = 0;          // C
  std::size_t context_width = 0;  // C + C_p
  Tensor beta_w1, beta_b1, beta_w2, beta_b2;  // (C + C_p) → C → |bank|
  Tensor gate_w1, gate_b1, gate_w2, gate_b2;  // (2C + C_p) → C → C
  ExpertBank bank;

  static TsfParams create(ParameterStore& store, const std::string& prefix, std::size_t width,
                          std::size_t profile_width, std::size_t shared, std::size_t private_per_task,
                          std::size_t task_slots, Rng& rng);
};

struct ComposedHead {
  Tensor w;  // C × C
  Tensor b;  // 1 × C
};

// R_k per row: [e_k, p_row]. task_embedding is 1 × C, profiles rows × C_p.
Tensor context_rows(const Tensor& task_embedding, const Tensor& profiles);

// β = 2σ(MLP(R)) for every bank slot: rows × |bank|.
Tensor expert_weights(const TsfParams& params, const Tensor& context);

// W_k = Σ β_e W̃_e, b_k = Σ β_e b̃_e over the task's experts; beta is one row.
ComposedHead compose_parameters(const TsfParams& params, const Tensor& beta, std::size_t task);

// z ⊙ σ(MLP([z, R])).
Tensor filter_features(const TsfParams& params, const Tensor& z, const Tensor& context);

// ŷ_k = W_k z̃_k + b_k per row, with W_k composed from that row's context.
Tensor tsf_forward(const TsfParams& params, std::size_t task, const Tensor& z, const Tensor& context);

// Shared two-layer head C → C (SiLU) → C used when TSF is ablated.
struct MlpHead {
  Tensor w1, b1, w2, b2;
  static MlpHead create(ParameterStore& store, const std::string& prefix, std::size_t width, Rng& rng);
  Tensor forward(const Tensor& z) const;
};

}  // namespace inttravel::model
