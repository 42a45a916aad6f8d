#include "harness/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "objective/loss.hpp"
#include "tensor/ops.hpp"

namespace inttravel::harness {

using seq::Task;

const char* split_name(Split s) { return s == Split::kTest ? "test" : "validation"; }

std::optional<Split> split_from_name(const std::string& name) {
  if (name == "test") return Split::kTest;
  if (name == "validation" || name == "val") return Split::kValidation;
  return std::nullopt;
}

std::shared_ptr<const PreparedData> prepare_data(data::Dataset dataset, std::size_t max_len) {
  auto out = std::make_shared<PreparedData>();
  out->dataset = std::move(dataset);
  const data::Dataset& ds = out->dataset;
  out->vocab = seq::Vocabulary::build(ds);
  out->split = data::temporal_split(ds);
  out->sampler = std::make_unique<data::NegativeSampler>(ds);
  for (const data::PoiRecord& p : ds.pois()) out->category_of.emplace(p.poi_id, p.cid);

  const auto& all = ds.interactions();
  auto gather = [&all](const std::vector<std::size_t>& idx) {
    std::vector<data::InteractionRecord> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(all[i]);
    return out;
  };
  for (std::size_t u = 0; u < ds.users().size(); ++u) {
    const data::UserRecord& user = ds.users()[u];
    const data::UserSplit& us = out->split.users[u];
    std::vector<std::size_t> history = us.train;
    if (!history.empty()) out->train.push_back(seq::build_labeled_sequence(user, gather(history), max_len));
    if (us.validation) {
      history.push_back(*us.validation);
      seq::LabeledSequence s = seq::build_labeled_sequence(user, gather(history), max_len);
      seq::keep_last_interaction_labels(s);
      out->validation.push_back(std::move(s));
    }
    if (us.test) {
      history.push_back(*us.test);
      seq::LabeledSequence s = seq::build_labeled_sequence(user, gather(history), max_len);
      seq::keep_last_interaction_labels(s);
      out->test.push_back(std::move(s));
    }
  }
  return out;
}

double uniform_loss(const seq::Batch& batch, const model::Model& model) {
  double total = 0.0;
  for (Task t : seq::kAllTasks) {
    const seq::TaskTargets& tt = batch.target(t);
    if (!model.loss_task(t)) continue;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t c : tt.counts) {
      if (c == 0) continue;
      sum += std::log(static_cast<double>(c));
      ++n;
    }
    if (n) total += sum / static_cast<double>(n);
  }
  return total;
}

std::string format_step(const StepRecord& r) {
  std::string s = std::to_string(r.step) + "\t" + objective::format_double(r.total);
  for (double v : r.task) s += "\t" + objective::format_double(v);
  return s;
}

Trainer::Trainer(const RunConfig& config, std::shared_ptr<const PreparedData> data)
    : config_(config), data_(std::move(data)) {
  validate_config(config_);
  if (data_->train.empty()) fail(ErrorCode::kValidation, "no training sequences in the dataset");
  model_ = std::make_unique<model::Model>(config_.model, data_->vocab, store_, config_.seed);
}

std::size_t Trainer::batches_per_epoch() const {
  return (data_->train.size() + config_.batch_size - 1) / config_.batch_size;
}

std::uint64_t Trainer::total_steps() const {
  return config_.steps > 0 ? config_.steps : config_.epochs * batches_per_epoch();
}

seq::Batch Trainer::batch_for_step(std::uint64_t step) const {
  const std::size_t per_epoch = batches_per_epoch();
  const std::uint64_t epoch = step / per_epoch;
  const std::size_t chunk = static_cast<std::size_t>(step % per_epoch);
  std::vector<std::size_t> order(data_->train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(config_.seed, {0x7368756666ULL, epoch}));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t begin = chunk * config_.batch_size;
  const std::size_t end = std::min(order.size(), begin + config_.batch_size);
  std::vector<const seq::LabeledSequence*> picked;
  for (std::size_t i = begin; i < end; ++i) picked.push_back(&data_->train[order[i]]);
  seq::Batch batch = seq::make_batch(picked, data_->dataset, data_->vocab);
  objective::attach_candidates(batch, data_->dataset, *data_->sampler, data_->vocab,
                               {config_.seed, config_.negatives, epoch});
  return batch;
}

namespace {

StepRecord record_of(std::uint64_t step, const model::LossResult& loss, double uniform) {
  StepRecord r;
  r.step = step;
  r.total = loss.total.item();
  for (std::size_t k = 0; k < seq::kTaskCount; ++k) r.task[k] = loss.tasks[k].value;
  r.uniform = uniform;
  return r;
}

}  // namespace

StepRecord Trainer::peek() const {
  const seq::Batch batch = batch_for_step(step_);
  return record_of(step_, model_->loss(batch, config_.task_weights), uniform_loss(batch, *model_));
}

StepRecord Trainer::step() {
  const seq::Batch batch = batch_for_step(step_);
  const model::LossResult loss = model_->loss(batch, config_.task_weights);
  tensor::backward(loss.total);
  StepRecord r = record_of(step_, loss, uniform_loss(batch, *model_));
  tensor::adam_step(store_, tensor::AdamConfig{config_.lr});
  ++step_;
  return r;
}

void Trainer::save(const std::filesystem::path& path) const { save_checkpoint(path, config_, step_, store_); }

void Trainer::resume(const Checkpoint& checkpoint) {
  restore_parameters(checkpoint, store_);
  step_ = checkpoint.step;
}

TrainSummary train(Trainer& trainer, const StepCallback& on_step) {
  const RunConfig& config = trainer.config();
  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path log_path = std::filesystem::path(config.out_dir) / "loss_log.tsv";
  const bool fresh = trainer.current_step() == 0;
  std::ofstream log(log_path, fresh ? std::ios::trunc : std::ios::app);
  if (!log) fail(ErrorCode::kIo, "cannot write " + log_path.string());
  if (fresh) log << kLossLogHeader << "\n";

  TrainSummary summary;
  summary.checkpoint = config.checkpoint_path();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  while (trainer.current_step() < trainer.total_steps()) {
    if (config.time_budget_seconds > 0 && elapsed() >= config.time_budget_seconds) {
      summary.stopped_by_budget = true;
      spdlog::info("time budget of {} s reached at step {}", config.time_budget_seconds, trainer.current_step());
      break;
    }
    StepRecord r;
    try {
      r = trainer.step();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonFinite) throw;
      // Parameters are only touched after a finite loss and gradient, so a
      // failure before the update leaves them intact.
      if (tensor::ParameterStore& store = trainer.store(); std::all_of(
              store.params().begin(), store.params().end(), [](const tensor::Parameter& p) {
                return std::all_of(p.value.values().begin(), p.value.values().end(),
                                   [](double v) { return std::isfinite(v); });
              })) {
        trainer.save(summary.checkpoint);
      }
      fail(ErrorCode::kNonFinite, "training aborted at step " + std::to_string(trainer.current_step()) + ": " +
                                      e.what() + "; last good checkpoint: " + summary.checkpoint.string());
    }
    log << format_step(r) << "\n";
    summary.log.push_back(r);
    if (on_step) on_step(r);
    if (config.log_every > 0 && r.step % config.log_every == 0) {
      spdlog::info("step {} loss {:.6f} (when {:.4f} how {:.4f} where {:.4f} via {:.4f})", r.step, r.total, r.task[0],
                   r.task[1], r.task[2], r.task[3]);
    }
    if (config.checkpoint_every > 0 && trainer.current_step() % config.checkpoint_every == 0) {
      trainer.save(summary.checkpoint);
    }
  }
  log.flush();
  trainer.save(summary.checkpoint);
  summary.steps = summary.log.size();
  summary.seconds = elapsed();
  return summary;
}

namespace {

struct TaskEval {
  std::vector<std::int64_t> predictions, labels;
  std::vector<std::vector<std::int64_t>> rankings, popularity;
  double chance = 0.0;
};

}  // namespace

objective::MetricsReport evaluate(const model::Model& model, const PreparedData& data, Split split,
                                  const RunConfig& config) {
  const auto& sequences = data.sequences(split);
  if (sequences.empty()) fail(ErrorCode::kValidation, std::string("the ") + split_name(split) + " split is empty");
  const auto& pois = data.dataset.pois();
  std::array<TaskEval, seq::kTaskCount> ev;
  std::array<std::size_t, seq::kTaskCount> excluded{};

  for (const seq::Batch& const_batch : seq::batchify(sequences, config.batch_size, data.dataset, data.vocab)) {
    seq::Batch batch = const_batch;
    objective::attach_candidates(batch, data.dataset, *data.sampler, data.vocab,
                                 {config.seed, objective::NegativeRefresh::kPerExample, 0});
    std::vector<Task> tasks;
    for (Task t : seq::kAllTasks) {
      if (model.config().tasks[seq::task_index(t)] && model.candidate_vocab(t) > 0 && batch.target(t).size() > 0) {
        tasks.push_back(t);
      }
    }
    if (tasks.empty()) continue;
    const std::vector<tensor::Tensor> layers = model.encode(batch);
    const tensor::Tensor profiles = model.profile_embedding(batch);
    for (Task t : tasks) {
      const seq::TaskTargets& tt = batch.target(t);
      const tensor::Tensor logits = model.logits(model.task_query(layers, profiles, batch, t, tt.rows), tt, t);
      TaskEval& e = ev[seq::task_index(t)];
      for (std::size_t r = 0; r < tt.size(); ++r) {
        const std::size_t count = tt.counts[r];
        if (count == 0) {
          ++excluded[seq::task_index(t)];
          continue;
        }
        const std::span<const std::int64_t> ids(tt.candidates.data() + r * tt.width, count);
        const std::span<const double> scores(logits.values().data() + r * tt.width, count);
        e.chance += 1.0 / static_cast<double>(count);
        std::vector<std::int64_t> ranked;
        if (t == Task::kWhere || t == Task::kVia) {
          std::vector<double> pop(count);
          std::vector<std::int64_t> poi_ids(count);
          for (std::size_t c = 0; c < count; ++c) {
            pop[c] = pois[static_cast<std::size_t>(ids[c])].nscore;
            poi_ids[c] = pois[static_cast<std::size_t>(ids[c])].poi_id;
          }
          ranked = objective::rank_candidates(scores, poi_ids);
          e.popularity.push_back(objective::rank_candidates(pop, poi_ids));
          e.labels.push_back(poi_ids[0]);
        } else {
          ranked = objective::rank_candidates(scores, ids);
          e.labels.push_back(ids[0]);
        }
        e.predictions.push_back(ranked.front());
        e.rankings.push_back(std::move(ranked));
      }
    }
  }

  objective::MetricsReport report;
  const std::array<std::size_t, 2> ns = {1, 5};
  for (Task t : seq::kAllTasks) {
    const std::size_t k = seq::task_index(t);
    if (!model.config().tasks[k]) continue;
    const std::string p = seq::task_name(t);
    const TaskEval& e = ev[k];
    report.set(p + ".samples", static_cast<double>(e.labels.size()));
    report.set(p + ".excluded", static_cast<double>(excluded[k]));
    report.set(p + ".trained", model.loss_task(t) ? 1.0 : 0.0);
    if (e.labels.empty()) continue;
    const double n = static_cast<double>(e.labels.size());
    switch (t) {
      case Task::kWhen: {
        const auto m = objective::classification_metrics(e.predictions, e.labels, e.rankings,
                                                         config.mae_circular ? std::optional<std::int64_t>(seq::kWhenBuckets)
                                                                             : std::nullopt);
        report.set(p + ".acc", m.acc);
        report.set(p + ".mae", m.mae);
        break;
      }
      case Task::kHow: {
        const auto m = objective::classification_metrics(e.predictions, e.labels, e.rankings);
        report.set(p + ".acc", m.acc);
        report.set(p + ".bcr", m.bcr);
        break;
      }
      case Task::kWhere:
      case Task::kVia: {
        const auto m = objective::retrieval_metrics(e.rankings, e.labels, data.category_of, ns);
        report.set(p + ".hr@1", m.hr(1));
        report.set(p + ".hr@5", m.hr(5));
        report.set(p + ".cir", m.cir);
        const auto b = objective::retrieval_metrics(e.popularity, e.labels, data.category_of, ns);
        report.set("baseline.popularity." + p + ".hr@1", b.hr(1));
        report.set("baseline.popularity." + p + ".hr@5", b.hr(5));
        report.set("baseline.popularity." + p + ".cir", b.cir);
        break;
      }
    }
    report.set("baseline.chance." + p + ".hr@1", e.chance / n);
  }
  return report;
}

}  // namespace inttravel::harness
