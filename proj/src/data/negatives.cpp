#include "data/negatives.hpp"

#include <algorithm>
#include <unordered_set>

#include "common/error.hpp"

namespace inttravel::data {

NegativeSampler::NegativeSampler(const Dataset& dataset, NegativeSamplingConfig config)
    : dataset_(dataset), config_(config) {
  if (dataset_.pois().size() <= config_.uniform + 1) {
    fail(ErrorCode::kInvalidArgument, "negative sampling needs more than " + std::to_string(config_.uniform + 1) +
                                          " POIs, corpus has " + std::to_string(dataset_.pois().size()));
  }
}

std::vector<std::int64_t> NegativeSampler::sample(std::int64_t positive_poi_id, Rng& rng) const {
  if (!dataset_.has_poi(positive_poi_id)) {
    fail(ErrorCode::kInvalidArgument, "negative sampling: positive poi_id " + std::to_string(positive_poi_id) +
                                          " is not in the corpus");
  }
  const auto& pois = dataset_.pois();
  const std::size_t positive = dataset_.poi_row(positive_poi_id);

  // Same-GID pool: all of it when small, otherwise a uniform subset.
  std::vector<std::size_t> pool;
  for (std::size_t row : dataset_.gid_members(pois[positive].gid)) {
    if (row != positive) pool.push_back(row);
  }
  if (pool.size() > config_.hard) {
    for (std::size_t i = 0; i < config_.hard; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(config_.hard);
  }

  // Uniform draws exclude the positive and the hard set so the two pools
  // never overlap.
  std::unordered_set<std::size_t> taken(pool.begin(), pool.end());
  taken.insert(positive);
  std::vector<std::size_t> uniform;
  const std::size_t available = pois.size() - taken.size();
  if (available <= config_.uniform) {
    for (std::size_t row = 0; row < pois.size(); ++row) {
      if (!taken.count(row)) uniform.push_back(row);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, pois.size() - 1);
    while (uniform.size() < config_.uniform) {
      const std::size_t row = pick(rng);
      if (taken.insert(row).second) uniform.push_back(row);
    }
  }

  std::vector<std::int64_t> out;
  out.reserve(uniform.size() + pool.size());
  for (std::size_t row : uniform) out.push_back(pois[row].poi_id);
  for (std::size_t row : pool) out.push_back(pois[row].poi_id);
  return out;
}

}  // namespace inttravel::data
