#pragma once

#include <cstdint>
#include <vector>

#include "common/rng.hpp"
#include "data/records.hpp"

namespace inttravel::data {

struct NegativeSamplingConfig {
  std::size_t uniform = 14;
  std::size_t hard = 50;  // same-GID cap
};

// Hybrid uniform + same-GID sampler over the POI corpus.
class NegativeSampler {
 public:
  explicit NegativeSampler(const Dataset& dataset, NegativeSamplingConfig config = {});

  // Returns negative poi_ids: the uniform draws followed by the same-GID
  // draws. Never contains the positive; never repeats an id.
  std::vector<std::int64_t> sample(std::int64_t positive_poi_id, Rng& rng) const;

  const NegativeSamplingConfig& config() const { return config_; }

 private:
  const Dataset& dataset_;
  NegativeSamplingConfig config_;
};

}  // namespace inttravel::data
