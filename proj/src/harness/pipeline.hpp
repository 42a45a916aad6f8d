#pragma once

#include <array>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "data/negatives.hpp"
#include "data/split.hpp"
#include "harness/checkpoint.hpp"
#include "harness/config.hpp"
#include "model/model.hpp"
#include "objective/metrics.hpp"

namespace inttravel::harness {

enum class Split { kValidation, kTest };
const char* split_name(Split s);
std::optional<Split> split_from_name(const std::string& name);

// Dataset plus everything derived from it deterministically. Not movable: the
// sampler refers to the dataset.
struct PreparedData {
  data::Dataset dataset;
  seq::Vocabulary vocab;
  data::DatasetSplit split;
  std::vector<seq::LabeledSequence> train;  // every train interaction labelled
  std::vector<seq::LabeledSequence> validation;  // only the held-out event labelled
  std::vector<seq::LabeledSequence> test;
  std::unique_ptr<data::NegativeSampler> sampler;
  std::unordered_map<std::int64_t, std::int64_t> category_of;  // poi_id → cid

  PreparedData() = default;
  PreparedData(const PreparedData&) = delete;
  PreparedData& operator=(const PreparedData&) = delete;

  const std::vector<seq::LabeledSequence>& sequences(Split s) const {
    return s == Split::kTest ? test : validation;
  }
};

std::shared_ptr<const PreparedData> prepare_data(data::Dataset dataset, std::size_t max_len);

// Σ_k mean over labelled rows of ln|candidates| for the tasks the model
// trains on: the loss of uniform logits.
double uniform_loss(const seq::Batch& batch, const model::Model& model);

struct StepRecord {
  std::uint64_t step = 0;
  double total = 0.0;
  std::array<double, seq::kTaskCount> task{};
  double uniform = 0.0;
};

std::string format_step(const StepRecord& r);  // one tab-separated log line
inline constexpr const char* kLossLogHeader = "step\ttotal\twhen\thow\twhere\tvia";

class Trainer {
 public:
  Trainer(const RunConfig& config, std::shared_ptr<const PreparedData> data);

  const RunConfig& config() const { return config_; }
  const PreparedData& data() const { return *data_; }
  model::Model& model() { return *model_; }
  const model::Model& model() const { return *model_; }
  tensor::ParameterStore& store() { return store_; }

  std::size_t batches_per_epoch() const;
  std::uint64_t total_steps() const;
  std::uint64_t current_step() const { return step_; }

  // A pure function of (seed, step): epoch-seeded shuffle, then a chunk.
  seq::Batch batch_for_step(std::uint64_t step) const;

  // One Adam step on the next batch.
  StepRecord step();
  // Loss of the next batch without updating.
  StepRecord peek() const;

  void save(const std::filesystem::path& path) const;
  void resume(const Checkpoint& checkpoint);

 private:
  RunConfig config_;
  std::shared_ptr<const PreparedData> data_;
  tensor::ParameterStore store_;
  std::unique_ptr<model::Model> model_;
  std::uint64_t step_ = 0;
};

struct TrainSummary {
  std::uint64_t steps = 0;
  std::vector<StepRecord> log;
  bool stopped_by_budget = false;
  double seconds = 0.0;
  std::filesystem::path checkpoint;
};

using StepCallback = std::function<void(const StepRecord&)>;

// Runs until total_steps() or the time budget, writing the loss log to
// <out_dir>/loss_log.tsv and the final checkpoint. On a non-finite loss the
// pre-step parameters are checkpointed and the error is rethrown.
TrainSummary train(Trainer& trainer, const StepCallback& on_step = {});

objective::MetricsReport evaluate(const model::Model& model, const PreparedData& data, Split split,
                                  const RunConfig& config);

}  // namespace inttravel::harness
