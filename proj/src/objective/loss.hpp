#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "data/negatives.hpp"
#include "seq/batch.hpp"
#include "tensor/tensor.hpp"

namespace inttravel::objective {

using seq::Task;

// Negatives are fixed per labelled event by default; per-epoch refresh mixes
// the epoch into the seed.
enum class NegativeRefresh { kPerExample, kPerEpoch };

struct CandidateOptions {
  std::uint64_t seed = 0;
  NegativeRefresh refresh = NegativeRefresh::kPerExample;
  std::uint64_t epoch = 0;
};

// Dense candidate ids for one labelled event: positive first.
struct CandidateSet {
  Task task = Task::kWhere;
  std::int64_t positive = 0;
  std::vector<std::int64_t> negatives;

  std::size_t size() const { return 1 + negatives.size(); }
};

// When/How: the whole class vocabulary. Where/Via: sampled POI rows.
CandidateSet make_candidate_set(Task task, std::int64_t positive, std::int64_t user_id, std::int64_t event_time,
                                const data::Dataset& dataset, const data::NegativeSampler& sampler,
                                const seq::Vocabulary& vocab, const CandidateOptions& options);

// Fills candidates/width/counts of every task in the batch.
void attach_candidates(seq::Batch& batch, const data::Dataset& dataset, const data::NegativeSampler& sampler,
                       const seq::Vocabulary& vocab, const CandidateOptions& options);

}  // namespace inttravel::objective
