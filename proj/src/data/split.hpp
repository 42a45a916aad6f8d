#pragma once

#include <optional>
#include <vector>

#include "data/records.hpp"

namespace inttravel::data {

struct UserSplit {
  std::vector<std::size_t> train;  // interaction indexes, chronological
  std::optional<std::size_t> validation;
  std::optional<std::size_t> test;
};

// Indexed by user row.
struct DatasetSplit {
  std::vector<UserSplit> users;
};

// Per user with ≥ 3 interactions: last → test, second-to-last → validation,
// the rest → train. Shorter histories go entirely to train.
DatasetSplit temporal_split(const Dataset& dataset);

}  // namespace inttravel::data
