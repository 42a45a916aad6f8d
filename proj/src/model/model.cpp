#include "model/model.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "model/init.hpp"
#include "tensor/ops.hpp"

namespace inttravel::model {

namespace ops = tensor::ops;
using seq::Batch;
using seq::TaskTargets;

namespace {

constexpr std::array<std::pair<Variant, const char*>, 12> kVariantNames = {{
    {Variant::kFull, "full"},
    {Variant::kNoJpre, "no_Jpre"},
    {Variant::kNoJres, "no_Jres"},
    {Variant::kNoJpreJres, "no_Jpre_Jres"},
    {Variant::kNoTip, "no_TIP"},
    {Variant::kNoHiddenStates, "no_hidden_states"},
    {Variant::kNoTaskGating, "no_task_gating"},
    {Variant::kNoTsf, "no_TSF"},
    {Variant::kNoWhen, "no_When"},
    {Variant::kNoHow, "no_How"},
    {Variant::kNoWhere, "no_Where"},
    {Variant::kNoVia, "no_Via"},
}};

}  // namespace

const char* variant_name(Variant v) {
  for (const auto& [var, name] : kVariantNames) {
    if (var == v) return name;
  }
  return "?";
}

std::optional<Variant> variant_from_name(const std::string& name) {
  for (const auto& [var, n] : kVariantNames) {
    if (name == n) return var;
  }
  return std::nullopt;
}

const std::vector<Variant>& ablation_variants() {
  static const std::vector<Variant> all = [] {
    std::vector<Variant> v;
    for (const auto& [var, name] : kVariantNames) {
      if (var != Variant::kFull) v.push_back(var);
    }
    return v;
  }();
  return all;
}

std::string ablation_list() {
  std::string s;
  for (Variant v : ablation_variants()) {
    if (!s.empty()) s += ", ";
    s += variant_name(v);
  }
  return s;
}

VariantFlags VariantFlags::of(Variant v) {
  VariantFlags f;
  switch (v) {
    case Variant::kFull: break;
    case Variant::kNoJpre: f.gate_pre = false; break;
    case Variant::kNoJres: f.gate_res = false; break;
    case Variant::kNoJpreJres: f.gate_pre = f.gate_res = false; break;
    case Variant::kNoTip: f.tip = false; break;
    case Variant::kNoHiddenStates: f.hidden_states = false; break;
    case Variant::kNoTaskGating: f.task_gating = false; break;
    case Variant::kNoTsf: f.tsf = false; break;
    case Variant::kNoWhen:
      f.when_features = false;
      f.loss_tasks[seq::task_index(Task::kWhen)] = false;
      break;
    case Variant::kNoHow:
      f.how_features = false;
      f.loss_tasks[seq::task_index(Task::kHow)] = false;
      break;
    case Variant::kNoWhere:
      f.where_features = false;
      f.loss_tasks[seq::task_index(Task::kWhere)] = false;
      break;
    case Variant::kNoVia: f.loss_tasks[seq::task_index(Task::kVia)] = false; break;
  }
  return f;
}

Model::Model(const ModelConfig& config, const seq::Vocabulary& vocab, ParameterStore& store, std::uint64_t seed)
    : Model(config, VariantFlags::of(config.variant), vocab, store, seed) {}

Model::Model(const ModelConfig& config, const VariantFlags& flags, const seq::Vocabulary& vocab,
             ParameterStore& store, std::uint64_t seed)
    : config_(config), flags_(flags), mode_classes_(vocab.mode_classes()) {
  const std::size_t c = config.width;
  if (c == 0 || config.depth == 0 || config.streams == 0 || config.max_len < 3 || config.heads == 0) {
    fail(ErrorCode::kInvalidArgument, "model dimensions must be positive (max_len ≥ 3)");
  }
  if (vocab.pois == 0) fail(ErrorCode::kInvalidArgument, "model needs a non-empty POI vocabulary");
  for (std::size_t k = 0; k < seq::kTaskCount; ++k) {
    if (config.tasks[k]) model_tasks_.push_back(k);
  }
  if (model_tasks_.empty()) fail(ErrorCode::kInvalidArgument, "model needs at least one task");

  // Every parameter is created in a fixed order whatever the variant, so the
  // same seed gives every variant the same weights.
  Rng rng(derive_seed(seed, {0x6d6f64656cULL}));
  const double es = config.embedding_std;
  auto table = [&](const std::string& name, std::size_t rows, std::size_t width, double std) {
    return store.add(name, {rows, width}, normal_values(rows * width, std, rng));
  };
  poi_emb_ = table("emb.poi", vocab.pois, c, es);
  gid_emb_ = table("emb.gid", vocab.gid_rows(), c, es);
  arid_emb_ = table("emb.arid", vocab.arid_rows(), c, es);
  weather_emb_ = table("emb.weather", vocab.weather_rows(), c, es);
  bucket_emb_ = table("emb.bucket", vocab.bucket_rows(), c, es);
  action_emb_ = table("emb.action", vocab.action_rows(), c, es);
  mode_emb_ = table("emb.mode", vocab.mode_rows(), c, es);
  const std::size_t cp = config.effective_profile_width();
  for (std::size_t f = 0; f < data::kProfileFeatures; ++f) {
    profile_emb_.push_back(table("emb.profile." + std::to_string(f), vocab.profile_rows(f), cp, es));
  }
  task_emb_ = table("emb.task", seq::kTaskCount, c, 1.0);

  for (std::size_t l = 0; l < config.depth; ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    blocks_.push_back(HstuLayer::create(store, prefix + ".hstu", c, config.heads, config.max_len, rng));
    hc_.push_back(HcLayer::create(store, prefix + ".hc", c, config.streams, seq::kTaskCount, rng));
  }
  gates_ = GateMlp::create(store, "tsg", c, config.depth, rng);
  tsf_ = TsfParams::create(store, "tsf", c, cp, config.shared_experts, config.private_experts, seq::kTaskCount, rng);
  head_ = MlpHead::create(store, "head", c, rng);
  when_table_ = table("cand.when", static_cast<std::size_t>(seq::kWhenBuckets), c, es);
  how_table_ = table("cand.how", std::max<std::size_t>(1, mode_classes_), c, es);
}

bool Model::loss_task(Task t) const {
  const std::size_t k = seq::task_index(t);
  if (!config_.tasks[k] || !flags_.loss_tasks[k]) return false;
  return t != Task::kHow || mode_classes_ > 0;
}

Tensor Model::embed(const Batch& batch) const {
  std::vector<Tensor> parts = {ops::gather_rows(gid_emb_, batch.gid), ops::gather_rows(arid_emb_, batch.arid),
                               ops::gather_rows(weather_emb_, batch.weather),
                               ops::gather_rows(poi_emb_, batch.poi), ops::gather_rows(action_emb_, batch.action)};
  if (flags_.when_features) parts.push_back(ops::gather_rows(bucket_emb_, batch.bucket));
  if (flags_.how_features) parts.push_back(ops::gather_rows(mode_emb_, batch.mode));
  Tensor e = ops::add_n(parts);
  if (!flags_.where_features) {
    std::vector<std::uint8_t> keep(batch.tokens());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = batch.kind[i] != seq::TokenKind::kItem;
    e = ops::mask_rows(e, keep);
  }
  return e;
}

std::vector<Tensor> Model::encode(const Batch& batch) const {
  // Layers run on the packed non-padding rows; outputs are scattered back to
  // the padded layout with zero rows at padding.
  std::vector<std::int64_t> gather, scatter;
  const TokenLayout layout = TokenLayout::of(batch).packed(gather, scatter);
  const bool time_bias = flags_.when_features;
  const Tensor e = ops::gather_rows(embed(batch), gather);
  std::vector<Tensor> layers;
  if (!flags_.tip) {
    Tensor x = e;
    for (const HstuLayer& block : blocks_) {
      x = residual_hstu_forward(block, x, layout, time_bias);
      layers.push_back(ops::gather_rows(x, scatter));
    }
    return layers;
  }
  const TipOptions options{flags_.gate_pre, flags_.gate_res, time_bias};
  HyperState x = init_streams(e, config_.streams);
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    x = tip_layer_forward(hc_[l], x, blocks_[l], layout, model_tasks_, options);
    layers.push_back(ops::gather_rows(aggregate_streams(x), scatter));
  }
  return layers;
}

Tensor Model::profile_embedding(const Batch& batch) const {
  std::vector<Tensor> parts;
  for (std::size_t f = 0; f < data::kProfileFeatures; ++f) {
    std::vector<std::int64_t> ids(batch.sequences);
    for (std::size_t s = 0; s < batch.sequences; ++s) ids[s] = batch.profile[s][f];
    parts.push_back(ops::gather_rows(profile_emb_[f], ids));
  }
  return ops::add_n(parts);
}

Tensor Model::task_embedding(Task t) const {
  const std::int64_t id = static_cast<std::int64_t>(seq::task_index(t));
  return ops::gather_rows(task_emb_, std::span(&id, 1));
}

Tensor Model::layer_gates(Task t) const {
  if (!flags_.task_gating) return {};
  return compute_layer_gates(gates_, task_embedding(t));
}

Tensor Model::task_query(const std::vector<Tensor>& layers, const Tensor& profiles, const Batch& batch, Task t,
                         std::span<const std::int64_t> rows) const {
  if (rows.empty()) fail(ErrorCode::kInvalidArgument, "task_query: no rows");
  std::vector<Tensor> z;
  Tensor gates = layer_gates(t);
  if (flags_.hidden_states) {
    for (const Tensor& layer : layers) z.push_back(ops::gather_rows(layer, rows));
  } else {
    z.push_back(ops::gather_rows(layers.back(), rows));
    if (gates.defined()) gates = ops::slice_cols(gates, layers.size() - 1, 1);
  }
  const Tensor zk = gate_and_pool(z, gates);
  if (!flags_.tsf) return head_.forward(zk);

  std::vector<std::int64_t> seq_of(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) seq_of[i] = rows[i] / static_cast<std::int64_t>(batch.max_len);
  const Tensor ctx = context_rows(task_embedding(t), ops::gather_rows(profiles, seq_of));
  return tsf_forward(tsf_, seq::task_index(t), zk, ctx);
}

Tensor Model::token_queries(const Batch& batch, Task t) const {
  std::vector<std::int64_t> rows(batch.tokens());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::int64_t>(i);
  return task_query(encode(batch), profile_embedding(batch), batch, t, rows);
}

Tensor Model::candidate_table(Task t) const {
  switch (t) {
    case Task::kWhen: return when_table_;
    case Task::kHow: return how_table_;
    case Task::kWhere:
    case Task::kVia: return poi_emb_;
  }
  return {};
}

std::size_t Model::candidate_vocab(Task t) const {
  switch (t) {
    case Task::kWhen: return static_cast<std::size_t>(seq::kWhenBuckets);
    case Task::kHow: return mode_classes_;
    case Task::kWhere:
    case Task::kVia: return poi_emb_.rows();
  }
  return 0;
}

Tensor Model::logits(const Tensor& query, const TaskTargets& targets, Task t) const {
  if (targets.width == 0 || targets.candidates.size() != targets.size() * targets.width) {
    fail(ErrorCode::kInvalidArgument, std::string("no candidates attached for task ") + seq::task_name(t));
  }
  return ops::score_candidates(query, candidate_table(t), targets.candidates, targets.width);
}

LossResult Model::loss(const Batch& batch, const std::array<double, seq::kTaskCount>& weights) const {
  LossResult out;
  std::vector<Task> todo;
  for (Task t : seq::kAllTasks) {
    const TaskTargets& tt = batch.target(t);
    if (!loss_task(t) || tt.size() == 0) continue;
    auto& tl = out.tasks[seq::task_index(t)];
    tl.excluded = static_cast<std::size_t>(std::count(tt.counts.begin(), tt.counts.end(), std::size_t{0}));
    tl.rows = tt.size() - tl.excluded;
    if (tt.counts.size() != tt.size()) {
      fail(ErrorCode::kInvalidArgument, std::string("no candidates attached for task ") + seq::task_name(t));
    }
    if (tl.rows > 0) todo.push_back(t);
  }
  if (todo.empty()) {
    out.total = Tensor::scalar(0.0);
    return out;
  }
  const std::vector<Tensor> layers = encode(batch);
  const Tensor profiles = profile_embedding(batch);
  std::vector<Tensor> terms;
  for (Task t : todo) {
    const TaskTargets& tt = batch.target(t);
    const Tensor q = task_query(layers, profiles, batch, t, tt.rows);
    const Tensor l = ops::infonce(logits(q, tt, t), tt.counts);
    out.tasks[seq::task_index(t)].value = l.item();
    terms.push_back(ops::scale(l, weights[seq::task_index(t)]));
  }
  out.total = ops::add_n(terms);
  return out;
}

}  // namespace inttravel::model
