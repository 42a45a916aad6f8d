#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "data/synthetic.hpp"
#include "model/model.hpp"
#include "objective/loss.hpp"

namespace inttravel::harness {

struct RunConfig {
  std::uint64_t seed = 42;
  std::string data_dir = "data";
  std::string out_dir = "run";
  std::string checkpoint;  // eval input / resume source; empty → <out_dir>/model.ckpt

  data::GeneratorConfig generator;
  model::ModelConfig model;

  std::size_t batch_size = 64;
  double lr = 1e-3;
  std::size_t epochs = 1;
  std::size_t steps = 0;            // > 0 overrides epochs
  double time_budget_seconds = 0;   // 0: unlimited
  std::size_t log_every = 10;       // console cadence; the log file gets every step
  std::size_t checkpoint_every = 0; // 0: final checkpoint only
  bool validate = true;             // validation metrics after training
  objective::NegativeRefresh negatives = objective::NegativeRefresh::kPerExample;
  std::array<double, seq::kTaskCount> task_weights{1, 1, 1, 1};
  bool mae_circular = false;

  // gradcheck
  double gradcheck_h = 1e-5;
  std::size_t gradcheck_samples = 8;
  double gradcheck_tolerance = 1e-4;

  std::filesystem::path checkpoint_path() const;
};

// Applies `key = value`; throws kInvalidArgument on unknown keys or values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& config, const std::string& key);
std::vector<std::string> config_keys();

// Flat text: one `key = value` per line, `#` starts a comment.
RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
std::string config_to_text(const RunConfig& config);

void validate_config(const RunConfig& config);

}  // namespace inttravel::harness
