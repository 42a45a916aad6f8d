#include "model/tsg.hpp"

#include "common/error.hpp"
#include "model/init.hpp"
#include "tensor/ops.hpp"

namespace inttravel::model {

namespace ops = tensor::ops;

GateMlp GateMlp::create(ParameterStore& store, const std::string& prefix, std::size_t width, std::size_t depth,
                        Rng& rng) {
  if (depth == 0) fail(ErrorCode::kInvalidArgument, "gate MLP depth must be positive");
  GateMlp m;
  m.depth = depth;
  m.w1 = store.add(prefix + ".w1", {width, width}, lecun_values(width, width, rng));
  m.b1 = store.add(prefix + ".b1", {1, width}, std::vector<double>(width, 0.0));
  m.w2 = store.add(prefix + ".w2", {width, depth}, lecun_values(width, depth, rng, 0.1));
  m.b2 = store.add(prefix + ".b2", {1, depth}, std::vector<double>(depth, 1.0));
  return m;
}

Tensor aggregate_streams(const HyperState& x) {
  if (x.empty()) fail(ErrorCode::kInvalidArgument, "aggregate_streams: no streams");
  return ops::mean_n(x);
}

Tensor compute_layer_gates(const GateMlp& mlp, const Tensor& task_embedding) {
  if (task_embedding.rows() != 1 || task_embedding.cols() != mlp.w1.rows()) {
    fail(ErrorCode::kShape, "compute_layer_gates: task embedding must be 1 × " + std::to_string(mlp.w1.rows()));
  }
  const Tensor h = ops::silu(ops::add(ops::matmul(task_embedding, mlp.w1), mlp.b1));
  return ops::add(ops::matmul(h, mlp.w2), mlp.b2);
}

Tensor gate_and_pool(std::span<const Tensor> layer_outputs, const Tensor& gates) {
  if (layer_outputs.empty()) fail(ErrorCode::kInvalidArgument, "gate_and_pool: no layer outputs");
  if (!gates.defined()) return ops::mean_n(layer_outputs);
  if (gates.numel() != layer_outputs.size()) {
    fail(ErrorCode::kShape, "gate_and_pool: " + std::to_string(gates.numel()) + " gates for " +
                                std::to_string(layer_outputs.size()) + " layers");
  }
  std::vector<Tensor> gated;
  for (std::size_t l = 0; l < layer_outputs.size(); ++l) {
    gated.push_back(ops::mul(layer_outputs[l], ops::slice_cols(gates, l, 1)));
  }
  return ops::mean_n(gated);
}

}  // namespace inttravel::model
