#pragma once

#include <span>
#include <string>
#include <vector>

#include "model/hstu.hpp"

namespace inttravel::model {

// n stream tensors, each tokens × C. Stream i of every token lives in
// streams[i].
using HyperState = std::vector<Tensor>;

struct HcLayer {
  std::size_t streams = 0;  // n
  std::size_t width = 0;    // C
  Tensor b_pre, b_post;     // 1 × n
  Tensor b_res;             // 1 × n², row-major H[i][j] at i·n + j
  Tensor theta_pre, theta_post;  // 1 × C
  Tensor theta_res;              // n × C
  Tensor alpha_pre, alpha_post, alpha_res;  // 1 × 1
  std::vector<Tensor> gamma;  // per task slot, 1 × n

  // b_res = I, b_pre = b_post = e₁, α = 0, γ = 1, θ ~ N(0, theta_std²).
  static HcLayer create(ParameterStore& store, const std::string& prefix, std::size_t width,
                        std::size_t streams, std::size_t task_slots, Rng& rng, double theta_std = 0.02);
};

// Per-token HC matrices laid out one token per row: pre/post are tokens × n,
// res is tokens × n² with H^res[i][j] at column i·n + j.
struct HcMatrices {
  Tensor pre, post, res;
};

struct GatedMatrices {
  Tensor pre, res;
};

struct TipOptions {
  bool gate_pre = true;  // false: J^pre_k := H^pre
  bool gate_res = true;  // false: J^res_k := H^res
  bool use_time_bias = true;
};

HyperState init_streams(const Tensor& embeddings, std::size_t n);
HcMatrices compute_hc_matrices(const HcLayer& layer, const HyperState& x);
GatedMatrices apply_task_gates(const HcMatrices& h, const Tensor& gamma);

// Mixes each output stream i as Σ_j m[:, i·n + j] ⊙ x_j (m is tokens × n·k,
// k = output streams).
std::vector<Tensor> mix_streams(const Tensor& m, const HyperState& x, std::size_t outputs);

// One multi-task HC layer around `block`; `tasks` lists the γ slots averaged
// by Agg.
HyperState tip_layer_forward(const HcLayer& layer, const HyperState& x, const HstuLayer& block,
                             const TokenLayout& layout, std::span<const std::size_t> tasks,
                             const TipOptions& options = {});

// x + HSTU(x).
Tensor residual_hstu_forward(const HstuLayer& block, const Tensor& x, const TokenLayout& layout,
                             bool use_time_bias = true);

}  // namespace inttravel::model
