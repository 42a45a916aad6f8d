#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "data/synthetic.hpp"
#include "harness/config.hpp"
#include "harness/pipeline.hpp"
#include "tensor/tensor.hpp"

namespace fixture {

using inttravel::tensor::Tensor;

std::vector<double> randn(std::size_t n, std::mt19937_64& rng, double std = 1.0);
Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool requires_grad = false,
                     double std = 1.0);

// Small generator settings: few users, a few hundred POIs, short histories.
inttravel::data::GeneratorConfig small_generator(std::size_t users = 40, std::size_t pois = 300);

// Model small enough for per-test training runs.
inttravel::model::ModelConfig small_model();

inttravel::harness::RunConfig small_run(const std::filesystem::path& data_dir, const std::filesystem::path& out_dir);

// Removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

// Prepared small dataset (small_generator, max_len 45).
std::shared_ptr<const inttravel::harness::PreparedData> small_data(std::uint64_t seed = 3);

// Train sequences [first, first + count) batched, with candidates attached.
inttravel::seq::Batch train_batch(const inttravel::harness::PreparedData& data, std::size_t first, std::size_t count,
                                  std::uint64_t seed = 1);

// Generates and saves a dataset under dir, returning it.
inttravel::data::Dataset write_dataset(const std::filesystem::path& dir, const inttravel::data::GeneratorConfig& g,
                                       std::uint64_t seed);

}  // namespace fixture
