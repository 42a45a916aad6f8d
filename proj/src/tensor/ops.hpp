#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tensor/tensor.hpp"

// Differentiable primitives. All operate on rank-2 tensors (rank-1 inputs are
// read as a single row) and return rank-2 results.
namespace inttravel::tensor::ops {

inline constexpr double kRmsNormEps = 1e-6;
inline constexpr double kLayerNormEps = 1e-6;

Tensor matmul(const Tensor& a, const Tensor& b);     // a·b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a·bᵀ

// Elementwise with 2-D broadcasting: each extent must match or be 1.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

// Same-shape sum / mean of a non-empty list.
Tensor add_n(std::span<const Tensor> xs);
Tensor mean_n(std::span<const Tensor> xs);

Tensor silu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

// x / sqrt(mean(x²) + eps) per row, no gain.
Tensor rms_norm_rows(const Tensor& a, double eps = kRmsNormEps);
// (x − mean) / sqrt(var + eps) per row, no affine.
Tensor layer_norm_rows(const Tensor& a, double eps = kLayerNormEps);

Tensor concat_cols(std::span<const Tensor> xs);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len);

Tensor sum(const Tensor& a);   // 1×1
Tensor mean(const Tensor& a);  // 1×1
Tensor logsumexp_rows(const Tensor& a);  // m×1

// Row lookup; id −1 yields a zero row.
Tensor gather_rows(const Tensor& table, std::span<const std::int64_t> ids);
// Multiplies row i by mask[i] ∈ {0, 1}.
Tensor mask_rows(const Tensor& a, std::span<const std::uint8_t> mask);

// logits[p, m] = ⟨query_p, table[candidates[p·width + m]]⟩; id −1 is padding
// and yields 0.
Tensor score_candidates(const Tensor& query, const Tensor& table,
                        std::span<const std::int64_t> candidates, std::size_t width);

// Mean over rows with counts[r] ≥ 1 of logsumexp(row[0..counts[r])) − row[0];
// column 0 holds the positive. Rows with count 0 contribute nothing.
Tensor infonce(const Tensor& logits, std::span<const std::size_t> counts);

}  // namespace inttravel::tensor::ops

namespace inttravel::tensor::testing {

// Scales the upstream gradient entering every backward rule of the named op
// while alive. Negative-control fixture for gradient checking.
class ScopedBackwardFault {
 public:
  ScopedBackwardFault(const char* op, double factor);
  ~ScopedBackwardFault();
  ScopedBackwardFault(const ScopedBackwardFault&) = delete;
  ScopedBackwardFault& operator=(const ScopedBackwardFault&) = delete;
};

}  // namespace inttravel::tensor::testing
