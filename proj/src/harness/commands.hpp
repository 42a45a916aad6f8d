#pragma once

#include <filesystem>
#include <string>

#include "harness/pipeline.hpp"
#include "tensor/grad_check.hpp"

namespace inttravel::harness {

// Writes pois.tsv, users.tsv, interactions.tsv and stats.txt to out_dir.
void cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir);

struct TrainResult {
  TrainSummary summary;
  objective::MetricsReport validation;  // empty when validation is off
};

// Trains from scratch, or resumes when `resume_from` names a checkpoint.
TrainResult cmd_train(const RunConfig& config, const std::filesystem::path& resume_from = {});

// Loads the checkpoint (its stored config defines the model), evaluates the
// split, and writes <out_dir>/metrics_<split>.txt.
objective::MetricsReport cmd_eval(const RunConfig& config, const std::filesystem::path& checkpoint, Split split);

// Train + test evaluation of one variant in <out_dir>/<variant>/.
objective::MetricsReport cmd_ablate(const RunConfig& config, const std::string& variant);

struct GradCheckResult {
  tensor::GradCheckReport report;
  double tolerance = 0.0;
  double seconds = 0.0;

  bool passed() const { return report.passed(tolerance); }
  std::string to_text() const;
};

// Central-difference check of the tiny full model (C = 8, L = 2, n = 2, six
// tokens, two tasks) with randomized parameters.
GradCheckResult cmd_gradcheck(const RunConfig& config);

// The tiny model's loss as a closure over `store`, for reuse by tests.
struct TinyProblem {
  data::Dataset dataset;
  std::unique_ptr<model::Model> model;
  seq::Batch batch;
};
std::shared_ptr<TinyProblem> make_tiny_problem(std::uint64_t seed, tensor::ParameterStore& store);
tensor::Tensor tiny_problem_loss(const TinyProblem& problem);

}  // namespace inttravel::harness
