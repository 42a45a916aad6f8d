#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "model/tip.hpp"
#include "model/tsf.hpp"
#include "model/tsg.hpp"
#include "seq/batch.hpp"

namespace inttravel::model {

using seq::Task;

enum class Variant {
  kFull,
  kNoJpre,
  kNoJres,
  kNoJpreJres,
  kNoTip,
  kNoHiddenStates,
  kNoTaskGating,
  kNoTsf,
  kNoWhen,
  kNoHow,
  kNoWhere,
  kNoVia,
};

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);
// The eleven ablations, in table order.
const std::vector<Variant>& ablation_variants();
std::string ablation_list();  // comma-separated names, for error messages

// Component switches. A variant differs from the full model only in these.
struct VariantFlags {
  bool gate_pre = true;
  bool gate_res = true;
  bool tip = true;
  bool hidden_states = true;  // false: pool only the last layer
  bool task_gating = true;    // false: s ≡ 1
  bool tsf = true;            // false: shared MLP head
  bool when_features = true;  // departure buckets and temporal bias
  bool how_features = true;   // travel modes
  bool where_features = true; // false: I-token embeddings are zero
  std::array<bool, seq::kTaskCount> loss_tasks{true, true, true, true};

  static VariantFlags of(Variant v);
};

struct ModelConfig {
  std::size_t width = 96;
  std::size_t max_len = seq::kDefaultMaxLen;
  std::size_t depth = 3;
  std::size_t streams = 2;
  std::size_t heads = 1;
  std::size_t shared_experts = 2;
  std::size_t private_experts = 1;
  std::size_t profile_width = 0;  // 0 means width / 2
  double embedding_std = 0.05;
  Variant variant = Variant::kFull;
  // Tasks the model is built for; ablations remove loss terms on top.
  std::array<bool, seq::kTaskCount> tasks{true, true, true, true};

  std::size_t effective_profile_width() const { return profile_width ? profile_width : std::max<std::size_t>(1, width / 2); }
};

struct TaskLoss {
  double value = 0.0;
  std::size_t rows = 0;      // labelled rows scored
  std::size_t excluded = 0;  // labelled rows without candidates
};

struct LossResult {
  Tensor total;
  std::array<TaskLoss, seq::kTaskCount> tasks;
};

class Model {
 public:
  // Parameter creation and initialization depend only on (config without the
  // variant, vocabulary, seed), so variants share their common weights.
  Model(const ModelConfig& config, const seq::Vocabulary& vocab, ParameterStore& store, std::uint64_t seed);
  Model(const ModelConfig& config, const VariantFlags& flags, const seq::Vocabulary& vocab, ParameterStore& store,
        std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const VariantFlags& flags() const { return flags_; }
  // Tasks whose γ slots enter TIP aggregation.
  const std::vector<std::size_t>& model_tasks() const { return model_tasks_; }
  bool loss_task(Task t) const;

  Tensor embed(const seq::Batch& batch) const;                  // tokens × C
  std::vector<Tensor> encode(const seq::Batch& batch) const;    // z_l per layer, tokens × C
  Tensor profile_embedding(const seq::Batch& batch) const;      // sequences × C_p
  Tensor task_embedding(Task t) const;                          // 1 × C
  Tensor layer_gates(Task t) const;                             // 1 × L, undefined when s ≡ 1
  // ŷ_k at the given flattened token rows.
  Tensor task_query(const std::vector<Tensor>& layers, const Tensor& profiles, const seq::Batch& batch, Task t,
                    std::span<const std::int64_t> rows) const;
  // ŷ_k at every token row (padding included).
  Tensor token_queries(const seq::Batch& batch, Task t) const;

  Tensor candidate_table(Task t) const;
  std::size_t candidate_vocab(Task t) const;
  Tensor logits(const Tensor& query, const seq::TaskTargets& targets, Task t) const;

  // Σ_k w_k · InfoNCE_k over tasks with loss enabled. Candidates must have
  // been attached to the batch.
  LossResult loss(const seq::Batch& batch, const std::array<double, seq::kTaskCount>& weights = {1, 1, 1, 1}) const;

  const TsfParams& tsf() const { return tsf_; }

 private:
  ModelConfig config_;
  VariantFlags flags_;
  std::vector<std::size_t> model_tasks_;
  std::size_t mode_classes_ = 0;

  Tensor poi_emb_, gid_emb_, arid_emb_, weather_emb_, bucket_emb_, action_emb_, mode_emb_;
  std::vector<Tensor> profile_emb_;
  Tensor task_emb_;
  std::vector<HstuLayer> blocks_;
  std::vector<HcLayer> hc_;
  GateMlp gates_;
  TsfParams tsf_;
  MlpHead head_;
  Tensor when_table_, how_table_;
};

}  // namespace inttravel::model
