#include "model/tsf.hpp"

#include <cmath>

#include "common/error.hpp"
#include "model/init.hpp"
#include "tensor/ops.hpp"

namespace inttravel::model {

namespace ops = tensor::ops;

std::vector<std::size_t> ExpertBank::private_of(std::size_t task) const {
  if (task >= task_slots) fail(ErrorCode::kInvalidArgument, "expert bank: unknown task slot " + std::to_string(task));
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < private_per_task; ++p) out.push_back(shared + task * private_per_task + p);
  return out;
}

std::vector<std::size_t> ExpertBank::experts_for(std::size_t task) const {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < shared; ++e) out.push_back(e);
  for (std::size_t e : private_of(task)) out.push_back(e);
  return out;
}

TsfParams TsfParams::create(ParameterStore& store, const std::string& prefix, std::size_t width,
                            std::size_t profile_width, std::size_t shared, std::size_t private_per_task,
                            std::size_t task_slots, Rng& rng) {
  TsfParams p;
  p.width = width;
  p.context_width = width + profile_width;
  p.bank.shared = shared;
  p.bank.private_per_task = private_per_task;
  p.bank.task_slots = task_slots;
  const std::size_t experts = p.bank.count();
  if (shared + private_per_task == 0) fail(ErrorCode::kInvalidArgument, "TSF needs at least one expert per task");

  const std::size_t cw = p.context_width;
  p.beta_w1 = store.add(prefix + ".beta.w1", {cw, width}, lecun_values(cw, width, rng));
  p.beta_b1 = store.add(prefix + ".beta.b1", {1, width}, std::vector<double>(width, 0.0));
  p.beta_w2 = store.add(prefix + ".beta.w2", {width, experts}, lecun_values(width, experts, rng, 0.1));
  p.beta_b2 = store.add(prefix + ".beta.b2", {1, experts}, std::vector<double>(experts, 0.0));

  const std::size_t gw = width + cw;
  p.gate_w1 = store.add(prefix + ".gate.w1", {gw, width}, lecun_values(gw, width, rng));
  p.gate_b1 = store.add(prefix + ".gate.b1", {1, width}, std::vector<double>(width, 0.0));
  p.gate_w2 = store.add(prefix + ".gate.w2", {width, width}, lecun_values(width, width, rng, 0.1));
  p.gate_b2 = store.add(prefix + ".gate.b2", {1, width}, std::vector<double>(width, 0.0));

  // β ≈ 1 at init, so scale each expert to keep W_k at unit gain.
  const double gain = 1.0 / std::sqrt(static_cast<double>(shared + private_per_task));
  for (std::size_t e = 0; e < experts; ++e) {
    const std::string name = prefix + ".expert." + std::to_string(e);
    p.bank.w.push_back(store.add(name + ".w", {width, width}, lecun_values(width, width, rng, gain)));
    p.bank.b.push_back(store.add(name + ".b", {1, width}, std::vector<double>(width, 0.0)));
  }
  return p;
}

Tensor context_rows(const Tensor& task_embedding, const Tensor& profiles) {
  if (task_embedding.rows() != 1) fail(ErrorCode::kShape, "context_rows: task embedding must be a single row");
  const std::vector<std::int64_t> zeros(profiles.rows(), 0);
  const Tensor e = ops::gather_rows(task_embedding, zeros);
  const std::vector<Tensor> parts = {e, profiles};
  return ops::concat_cols(parts);
}

Tensor expert_weights(const TsfParams& params, const Tensor& context) {
  if (context.cols() != params.context_width) {
    fail(ErrorCode::kShape, "expert_weights: context width " + std::to_string(context.cols()) + ", expected " +
                                std::to_string(params.context_width));
  }
  const Tensor h = ops::silu(ops::add(ops::matmul(context, params.beta_w1), params.beta_b1));
  const Tensor logits = ops::add(ops::matmul(h, params.beta_w2), params.beta_b2);
  return ops::scale(ops::sigmoid(logits), 2.0);
}

ComposedHead compose_parameters(const TsfParams& params, const Tensor& beta, std::size_t task) {
  if (beta.rows() != 1 || beta.cols() != params.bank.count()) {
    fail(ErrorCode::kShape, "compose_parameters: β must be 1 × " + std::to_string(params.bank.count()));
  }
  std::vector<Tensor> ws, bs;
  for (std::size_t e : params.bank.experts_for(task)) {
    const Tensor be = ops::slice_cols(beta, e, 1);
    ws.push_back(ops::mul(params.bank.w[e], be));
    bs.push_back(ops::mul(params.bank.b[e], be));
  }
  return ComposedHead{ops::add_n(ws), ops::add_n(bs)};
}

Tensor filter_features(const TsfParams& params, const Tensor& z, const Tensor& context) {
  if (z.rows() != context.rows() || z.cols() != params.width) {
    fail(ErrorCode::kShape, "filter_features: z " + tensor::shape_str(z.shape()) + " vs context " +
                                tensor::shape_str(context.shape()));
  }
  const std::vector<Tensor> parts = {z, context};
  const Tensor h = ops::silu(ops::add(ops::matmul(ops::concat_cols(parts), params.gate_w1), params.gate_b1));
  const Tensor gate = ops::sigmoid(ops::add(ops::matmul(h, params.gate_w2), params.gate_b2));
  return ops::mul(z, gate);
}

Tensor tsf_forward(const TsfParams& params, std::size_t task, const Tensor& z, const Tensor& context) {
  const Tensor beta = expert_weights(params, context);
  const Tensor zf = filter_features(params, z, context);
  // Σ_e β_e (z̃ W̃_e + b̃_e) row by row equals z̃ W_k + b_k with per-row W_k.
  std::vector<Tensor> terms;
  for (std::size_t e : params.bank.experts_for(task)) {
    const Tensor out = ops::add(ops::matmul(zf, params.bank.w[e]), params.bank.b[e]);
    terms.push_back(ops::mul(out, ops::slice_cols(beta, e, 1)));
  }
  return ops::add_n(terms);
}

MlpHead MlpHead::create(ParameterStore& store, const std::string& prefix, std::size_t width, Rng& rng) {
  MlpHead h;
  h.w1 = store.add(prefix + ".w1", {width, width}, lecun_values(width, width, rng));
  h.b1 = store.add(prefix + ".b1", {1, width}, std::vector<double>(width, 0.0));
  h.w2 = store.add(prefix + ".w2", {width, width}, lecun_values(width, width, rng));
  h.b2 = store.add(prefix + ".b2", {1, width}, std::vector<double>(width, 0.0));
  return h;
}

Tensor MlpHead::forward(const Tensor& z) const {
  return ops::add(ops::matmul(ops::silu(ops::add(ops::matmul(z, w1), b1)), w2), b2);
}

}  // namespace inttravel::model
