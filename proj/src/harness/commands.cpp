#include "harness/commands.hpp"

#include <chrono>
#include <fstream>

#include <spdlog/spdlog.h>

#include "common/error.hpp"
#include "data/synthetic.hpp"
#include "data/tsv_io.hpp"
#include "model/init.hpp"
#include "objective/loss.hpp"

namespace inttravel::harness {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "failed writing " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) fail(ErrorCode::kIo, "cannot create directory " + dir.string());
}

std::shared_ptr<const PreparedData> load_prepared(const RunConfig& config) {
  return prepare_data(data::load_dataset(config.data_dir), config.model.max_len);
}

struct Training {
  std::unique_ptr<Trainer> trainer;
  TrainResult result;
};

Training run_training(const RunConfig& requested, const std::filesystem::path& resume_from) {
  RunConfig config = requested;
  std::optional<Checkpoint> ck;
  if (!resume_from.empty()) {
    ck = load_checkpoint(resume_from);
    // The checkpoint fixes the model and data semantics; run length and
    // output locations come from the request.
    RunConfig stored = ck->config;
    stored.steps = requested.steps;
    stored.epochs = requested.epochs;
    stored.time_budget_seconds = requested.time_budget_seconds;
    stored.out_dir = requested.out_dir;
    stored.checkpoint = requested.checkpoint;
    stored.data_dir = requested.data_dir;
    stored.log_every = requested.log_every;
    stored.checkpoint_every = requested.checkpoint_every;
    stored.validate = requested.validate;
    config = stored;
  }
  validate_config(config);
  ensure_dir(config.out_dir);
  Training t;
  t.trainer = std::make_unique<Trainer>(config, load_prepared(config));
  if (ck) t.trainer->resume(*ck);
  write_text(std::filesystem::path(config.out_dir) / "config.txt", config_to_text(config));
  spdlog::info("training {} for {} steps ({} sequences, {} parameters)", model::variant_name(config.model.variant),
               t.trainer->total_steps(), t.trainer->data().train.size(), t.trainer->store().total_values());
  t.result.summary = train(*t.trainer);
  if (config.validate && !t.trainer->data().validation.empty()) {
    t.result.validation = evaluate(t.trainer->model(), t.trainer->data(), Split::kValidation, config);
    write_text(std::filesystem::path(config.out_dir) / "metrics_validation.txt", t.result.validation.to_text());
  }
  return t;
}

}  // namespace

void cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir) {
  ensure_dir(out_dir);
  const data::Dataset ds = data::generate_synthetic(config.generator, config.seed);
  data::save_dataset(ds, out_dir);
  write_text(out_dir / "stats.txt", data::dataset_stats(ds));
}

TrainResult cmd_train(const RunConfig& config, const std::filesystem::path& resume_from) {
  return std::move(run_training(config, resume_from).result);
}

objective::MetricsReport cmd_eval(const RunConfig& config, const std::filesystem::path& checkpoint, Split split) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  RunConfig run = ck.config;
  run.data_dir = config.data_dir;
  run.out_dir = config.out_dir;
  run.mae_circular = config.mae_circular;
  auto data = load_prepared(run);
  tensor::ParameterStore store;
  const model::Model model(run.model, data->vocab, store, run.seed);
  restore_parameters(ck, store);
  objective::MetricsReport report = evaluate(model, *data, split, run);
  ensure_dir(run.out_dir);
  write_text(std::filesystem::path(run.out_dir) / (std::string("metrics_") + split_name(split) + ".txt"), report.to_text());
  return report;
}

objective::MetricsReport cmd_ablate(const RunConfig& config, const std::string& variant) {
  const auto v = model::variant_from_name(variant);
  if (!v || *v == model::Variant::kFull) {
    fail(ErrorCode::kInvalidArgument, "unknown ablation variant '" + variant + "'; valid: " + model::ablation_list());
  }
  RunConfig run = config;
  run.model.variant = *v;
  run.out_dir = (std::filesystem::path(config.out_dir) / variant).string();
  run.checkpoint.clear();
  Training t = run_training(run, {});
  objective::MetricsReport report = evaluate(t.trainer->model(), t.trainer->data(), Split::kTest, run);
  report.set("train.steps", static_cast<double>(t.result.summary.steps));
  if (!t.result.summary.log.empty()) {
    report.set("train.first_loss", t.result.summary.log.front().total);
    report.set("train.last_loss", t.result.summary.log.back().total);
  }
  write_text(std::filesystem::path(run.out_dir) / "metrics_test.txt", report.to_text());
  return report;
}

std::string GradCheckResult::to_text() const {
  std::string out = "parameter\tworst_rel_error\tprobed\n";
  for (const auto& p : report.per_param) {
    out += p.name + "\t" + objective::format_double(p.worst) + "\t" + std::to_string(p.probed) + "\n";
  }
  out += "worst = " + objective::format_double(report.worst) + " (" + report.worst_param + ")\n";
  out += "tolerance = " + objective::format_double(tolerance) + "\n";
  out += std::string("result = ") + (passed() ? "pass" : "fail") + "\n";
  return out;
}

// Two users over a 20-POI corpus: a six-token sequence and a padded three-token
// one. Every parameter is randomized so no gate sits at its identity value.
std::shared_ptr<TinyProblem> make_tiny_problem(std::uint64_t seed, tensor::ParameterStore& store) {
  auto p = std::make_shared<TinyProblem>();
  Rng rng(derive_seed(seed, {0x74696e79ULL}));
  std::vector<data::PoiRecord> pois;
  for (std::int64_t i = 0; i < 20; ++i) {
    pois.push_back({100 + i, 0.05 * static_cast<double>(i), i % 3, i % 4, i % 2, 0.1 * static_cast<double>(i), 1.0});
  }
  std::vector<data::UserRecord> users(2);
  users[0].user_id = 1;
  users[1].user_id = 2;
  users[0].profile = {1, 2, 3, std::nullopt, 5, 6};
  users[1].profile = {2, std::nullopt, 3, 4, 5, 7};
  const std::int64_t day = seq::kDayMs;
  std::vector<data::InteractionRecord> log = {
      {1, 3 * day + 15 * seq::kBucketMs, 0, 103, 0, 0, 1, 1, 108},
      {1, 5 * day + 30 * seq::kBucketMs, 1, 111, 2, 1, 2, 2, std::nullopt},
      {2, 4 * day + 7 * seq::kBucketMs, 2, 117, 1, 1, 0, std::nullopt, 104},
  };
  p->dataset = data::Dataset(std::move(pois), std::move(users), std::move(log));
  const seq::Vocabulary vocab = seq::Vocabulary::build(p->dataset);

  model::ModelConfig mc;
  mc.width = 8;
  mc.depth = 2;
  mc.streams = 2;
  mc.max_len = 6;
  mc.tasks = {true, false, true, false};  // When and Where
  p->model = std::make_unique<model::Model>(mc, vocab, store, seed);
  for (tensor::Parameter& param : store.params()) {
    auto w = param.value.mutable_values();
    const auto noise = model::normal_values(w.size(), 0.3, rng);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += noise[i];
  }

  std::vector<seq::LabeledSequence> seqs;
  for (std::size_t u = 0; u < 2; ++u) {
    std::vector<data::InteractionRecord> hist;
    for (std::size_t i : p->dataset.user_history(u)) hist.push_back(p->dataset.interactions()[i]);
    seqs.push_back(seq::build_labeled_sequence(p->dataset.users()[u], hist, mc.max_len));
  }
  const std::vector<const seq::LabeledSequence*> ptrs = {&seqs[0], &seqs[1]};
  p->batch = seq::make_batch(ptrs, p->dataset, vocab);
  const data::NegativeSampler sampler(p->dataset);
  objective::attach_candidates(p->batch, p->dataset, sampler, vocab, {seed});
  return p;
}

tensor::Tensor tiny_problem_loss(const TinyProblem& problem) { return problem.model->loss(problem.batch).total; }

GradCheckResult cmd_gradcheck(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  tensor::ParameterStore store;
  auto problem = make_tiny_problem(config.seed, store);
  GradCheckResult out;
  out.tolerance = config.gradcheck_tolerance;
  out.report = tensor::grad_check([&problem] { return tiny_problem_loss(*problem); }, store,
                                  {config.gradcheck_h, config.gradcheck_samples, config.seed});
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace inttravel::harness
