#include "support/fixtures.hpp"

#include <atomic>
#include <unistd.h>

#include "data/tsv_io.hpp"

namespace fixture {

std::vector<double> randn(std::size_t n, std::mt19937_64& rng, double std) {
  std::normal_distribution<double> d(0.0, std);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool requires_grad, double std) {
  return Tensor::from({rows, cols}, randn(rows * cols, rng, std), requires_grad);
}

inttravel::data::GeneratorConfig small_generator(std::size_t users, std::size_t pois) {
  inttravel::data::GeneratorConfig g;
  g.users = users;
  g.pois = pois;
  g.gids = 20;
  g.categories = 6;
  g.arids = 5;
  g.interactions_mean = 8.0;
  g.interactions_median = 7.0;
  g.max_interactions = 15;
  return g;
}

inttravel::model::ModelConfig small_model() {
  inttravel::model::ModelConfig m;
  m.width = 8;
  m.depth = 2;
  m.streams = 2;
  m.max_len = 45;
  return m;
}

inttravel::harness::RunConfig small_run(const std::filesystem::path& data_dir, const std::filesystem::path& out_dir) {
  inttravel::harness::RunConfig c;
  c.data_dir = data_dir.string();
  c.out_dir = out_dir.string();
  c.model = small_model();
  c.batch_size = 16;
  c.log_every = 0;
  c.seed = 5;
  return c;
}

std::shared_ptr<const inttravel::harness::PreparedData> small_data(std::uint64_t seed) {
  return inttravel::harness::prepare_data(inttravel::data::generate_synthetic(small_generator(), seed), 45);
}

inttravel::seq::Batch train_batch(const inttravel::harness::PreparedData& data, std::size_t first, std::size_t count,
                                  std::uint64_t seed) {
  std::vector<const inttravel::seq::LabeledSequence*> picked;
  for (std::size_t i = first; i < data.train.size() && picked.size() < count; ++i) {
    if (data.train[i].size() > 0) picked.push_back(&data.train[i]);
  }
  inttravel::seq::Batch b = inttravel::seq::make_batch(picked, data.dataset, data.vocab);
  inttravel::objective::attach_candidates(b, data.dataset, *data.sampler, data.vocab, {seed});
  return b;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("inttravel_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

inttravel::data::Dataset write_dataset(const std::filesystem::path& dir, const inttravel::data::GeneratorConfig& g,
                                       std::uint64_t seed) {
  inttravel::data::Dataset ds = inttravel::data::generate_synthetic(g, seed);
  inttravel::data::save_dataset(ds, dir);
  return ds;
}

}  // namespace fixture
