#include "model/tip.hpp"

#include "common/error.hpp"
#include "model/init.hpp"
#include "tensor/ops.hpp"

namespace inttravel::model {

namespace ops = tensor::ops;

HcLayer HcLayer::create(ParameterStore& store, const std::string& prefix, std::size_t width, std::size_t streams,
                        std::size_t task_slots, Rng& rng, double theta_std) {
  if (streams == 0) fail(ErrorCode::kInvalidArgument, "stream count must be at least 1");
  HcLayer l;
  l.streams = streams;
  l.width = width;
  const std::size_t n = streams;
  std::vector<double> e1(n, 0.0);
  e1[0] = 1.0;
  std::vector<double> eye(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
  l.b_pre = store.add(prefix + ".b_pre", {1, n}, e1);
  l.b_post = store.add(prefix + ".b_post", {1, n}, e1);
  l.b_res = store.add(prefix + ".b_res", {1, n * n}, eye);
  l.theta_pre = store.add(prefix + ".theta_pre", {1, width}, normal_values(width, theta_std, rng));
  l.theta_post = store.add(prefix + ".theta_post", {1, width}, normal_values(width, theta_std, rng));
  l.theta_res = store.add(prefix + ".theta_res", {n, width}, normal_values(n * width, theta_std, rng));
  l.alpha_pre = store.add(prefix + ".alpha_pre", {1, 1}, {0.0});
  l.alpha_post = store.add(prefix + ".alpha_post", {1, 1}, {0.0});
  l.alpha_res = store.add(prefix + ".alpha_res", {1, 1}, {0.0});
  for (std::size_t k = 0; k < task_slots; ++k) {
    l.gamma.push_back(store.add(prefix + ".gamma." + std::to_string(k), {1, n}, std::vector<double>(n, 1.0)));
  }
  return l;
}

HyperState init_streams(const Tensor& embeddings, std::size_t n) {
  if (n == 0) fail(ErrorCode::kInvalidArgument, "init_streams: n must be at least 1");
  return HyperState(n, embeddings);
}

HcMatrices compute_hc_matrices(const HcLayer& layer, const HyperState& x) {
  const std::size_t n = layer.streams;
  if (x.size() != n) {
    fail(ErrorCode::kShape, "compute_hc_matrices: " + std::to_string(x.size()) + " streams, layer expects " +
                                std::to_string(n));
  }
  std::vector<Tensor> pre_cols, post_cols, res_by_source;
  for (const Tensor& xj : x) {
    const Tensor xn = ops::rms_norm_rows(xj);
    pre_cols.push_back(ops::matmul_nt(xn, layer.theta_pre));
    post_cols.push_back(ops::matmul_nt(xn, layer.theta_post));
    res_by_source.push_back(ops::matmul_nt(xn, layer.theta_res));  // column i holds H^res[i][j]
  }
  std::vector<Tensor> res_cols;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) res_cols.push_back(ops::slice_cols(res_by_source[j], i, 1));
  }
  auto finish = [](std::vector<Tensor>& cols, const Tensor& alpha, const Tensor& bias) {
    return ops::add(ops::mul(ops::tanh(ops::concat_cols(cols)), alpha), bias);
  };
  return HcMatrices{finish(pre_cols, layer.alpha_pre, layer.b_pre), finish(post_cols, layer.alpha_post, layer.b_post),
                    finish(res_cols, layer.alpha_res, layer.b_res)};
}

GatedMatrices apply_task_gates(const HcMatrices& h, const Tensor& gamma) {
  const std::size_t n = h.pre.cols();
  if (gamma.numel() != n) {
    fail(ErrorCode::kShape, "apply_task_gates: γ has " + std::to_string(gamma.numel()) + " entries, expected " +
                                std::to_string(n));
  }
  std::vector<Tensor> tiled(n, gamma);  // column i·n + j ↦ γ[j]
  return GatedMatrices{ops::mul(h.pre, gamma), ops::mul(h.res, ops::concat_cols(tiled))};
}

std::vector<Tensor> mix_streams(const Tensor& m, const HyperState& x, std::size_t outputs) {
  const std::size_t n = x.size();
  if (m.cols() != outputs * n) fail(ErrorCode::kShape, "mix_streams: mixing matrix width mismatch");
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < outputs; ++i) {
    std::vector<Tensor> terms;
    for (std::size_t j = 0; j < n; ++j) terms.push_back(ops::mul(ops::slice_cols(m, i * n + j, 1), x[j]));
    out.push_back(ops::add_n(terms));
  }
  return out;
}

HyperState tip_layer_forward(const HcLayer& layer, const HyperState& x, const HstuLayer& block,
                             const TokenLayout& layout, std::span<const std::size_t> tasks, const TipOptions& options) {
  if (tasks.empty()) fail(ErrorCode::kInvalidArgument, "tip_layer_forward: empty task set");
  const std::size_t n = layer.streams;
  const HcMatrices h = compute_hc_matrices(layer, x);
  std::vector<Tensor> pres, ress;
  for (std::size_t k : tasks) {
    if (k >= layer.gamma.size()) fail(ErrorCode::kInvalidArgument, "tip_layer_forward: unknown task slot");
    const GatedMatrices g = apply_task_gates(h, layer.gamma[k]);
    pres.push_back(options.gate_pre ? g.pre : h.pre);
    ress.push_back(options.gate_res ? g.res : h.res);
  }
  // Stream mixing is linear in J, so averaging the matrices equals averaging
  // the mixed streams.
  const Tensor pre = ops::mean_n(pres);
  const Tensor res = ops::mean_n(ress);

  const Tensor block_in = mix_streams(pre, x, 1).front();
  const Tensor block_out = hstu_layer_forward(block, block_in, layout, options.use_time_bias);
  std::vector<Tensor> carried = mix_streams(res, x, n);
  HyperState next;
  next.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    next.push_back(ops::add(carried[i], ops::mul(ops::slice_cols(h.post, i, 1), block_out)));
  }
  return next;
}

Tensor residual_hstu_forward(const HstuLayer& block, const Tensor& x, const TokenLayout& layout, bool use_time_bias) {
  return ops::add(x, hstu_layer_forward(block, x, layout, use_time_bias));
}

}  // namespace inttravel::model
