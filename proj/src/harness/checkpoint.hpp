#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "harness/config.hpp"
#include "tensor/param_store.hpp"

namespace inttravel::harness {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct SavedParameter {
  std::string name;
  tensor::Shape shape;
  std::vector<double> value, m, v;
  std::int64_t step = 0;
};

struct Checkpoint {
  RunConfig config;
  std::uint64_t step = 0;  // optimizer steps taken
  std::vector<SavedParameter> params;
};

// Written to a temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, std::uint64_t step,
                     const tensor::ParameterStore& store);

// Rejects bad magic, other format versions, and truncation.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies values and optimizer state into `store`; the parameter sets must
// match by name and shape.
void restore_parameters(const Checkpoint& checkpoint, tensor::ParameterStore& store);

}  // namespace inttravel::harness
