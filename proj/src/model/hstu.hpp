#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "seq/batch.hpp"
#include "tensor/param_store.hpp"

namespace inttravel::model {

using tensor::ParameterStore;
using tensor::Tensor;

inline constexpr std::size_t kTimeBuckets = 32;
inline constexpr std::int64_t kMaxDeltaMs = 90LL * 86'400'000LL;

// Bucket 0 holds Δt ≤ 0; buckets 1..31 are log₂-spaced over [1 ms, 90 days],
// saturating at 31.
std::size_t time_bucket(std::int64_t delta_ms);
// Offset i − j mapped into [0, 2·max_len − 1).
std::size_t position_bucket(std::int64_t offset, std::size_t max_len);

// Row layout of a flattened batch: sequence s occupies rows
// [offsets[s], offsets[s] + lengths[s]). Rows not covered are padding.
struct TokenLayout {
  std::size_t sequences = 0;
  std::size_t max_len = 0;  // longest admissible sequence
  std::size_t total_rows = 0;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> offsets;
  std::vector<std::int64_t> positions;   // per row
  std::vector<std::int64_t> timestamps;  // per row

  std::size_t rows() const { return total_rows; }
  // Same sequences with padding removed. `gather` lists the source row of each
  // packed row; `scatter` maps every source row to its packed row or −1.
  TokenLayout packed(std::vector<std::int64_t>& gather, std::vector<std::int64_t>& scatter) const;

  // Padded layout: offsets[s] = s·batch.max_len.
  static TokenLayout of(const seq::Batch& batch);
  static TokenLayout single(std::vector<std::int64_t> timestamps);
};

struct HstuLayer {
  std::size_t width = 0;     // C
  std::size_t heads = 1;
  std::size_t head_dim = 0;  // d_h
  std::size_t max_len = 0;   // sizes the positional table
  Tensor f1_w, f1_b;         // C → 4·d_h·heads, split as U, V, Q, K
  Tensor f2_w, f2_b;         // d_h·heads → C
  Tensor pos_bias;           // heads × (2·max_len − 1)
  Tensor time_bias;          // heads × kTimeBuckets

  static HstuLayer create(ParameterStore& store, const std::string& prefix, std::size_t width,
                          std::size_t heads, std::size_t max_len, Rng& rng);
  std::size_t inner() const { return heads * head_dim; }
};

// rab^p + rab^t for one sequence: heads × T × T (rank-3, forward only).
Tensor relative_bias(const HstuLayer& layer, std::span<const std::int64_t> positions,
                     std::span<const std::int64_t> timestamps, bool use_time_bias = true);

// SiLU pointwise attention with relative biases and causal masking. Masked
// scores are exactly 0 after the activation; each query's sum is divided by
// its number of visible keys. Padding queries yield 0.
Tensor pointwise_attention(const Tensor& q, const Tensor& k, const Tensor& v, const HstuLayer& layer,
                           const TokenLayout& layout, bool use_time_bias);

// f₂(LayerNorm(attention) ⊙ U); the residual is added by the caller.
Tensor hstu_layer_forward(const HstuLayer& layer, const Tensor& x, const TokenLayout& layout,
                          bool use_time_bias = true);

}  // namespace inttravel::model
