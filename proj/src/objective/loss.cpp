#include "objective/loss.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace inttravel::objective {

namespace {

std::vector<std::int64_t> full_vocabulary(std::int64_t positive, std::size_t classes) {
  std::vector<std::int64_t> neg;
  for (std::size_t c = 0; c < classes; ++c) {
    if (static_cast<std::int64_t>(c) != positive) neg.push_back(static_cast<std::int64_t>(c));
  }
  return neg;
}

}  // namespace

CandidateSet make_candidate_set(Task task, std::int64_t positive, std::int64_t user_id, std::int64_t event_time,
                                const data::Dataset& dataset, const data::NegativeSampler& sampler,
                                const seq::Vocabulary& vocab, const CandidateOptions& options) {
  CandidateSet set;
  set.task = task;
  set.positive = positive;
  switch (task) {
    case Task::kWhen:
      if (positive < 0 || positive >= seq::kWhenBuckets) fail(ErrorCode::kInvalidArgument, "When label out of range");
      set.negatives = full_vocabulary(positive, static_cast<std::size_t>(seq::kWhenBuckets));
      break;
    case Task::kHow:
      if (positive < 0 || static_cast<std::size_t>(positive) >= vocab.mode_classes()) {
        fail(ErrorCode::kInvalidArgument, "How label out of range");
      }
      set.negatives = full_vocabulary(positive, vocab.mode_classes());
      break;
    case Task::kWhere:
    case Task::kVia: {
      if (positive < 0 || static_cast<std::size_t>(positive) >= dataset.pois().size()) {
        fail(ErrorCode::kInvalidArgument, "POI label out of range");
      }
      std::uint64_t seed = derive_seed(options.seed, {static_cast<std::uint64_t>(user_id),
                                                      static_cast<std::uint64_t>(event_time),
                                                      static_cast<std::uint64_t>(seq::task_index(task))});
      if (options.refresh == NegativeRefresh::kPerEpoch) seed = derive_seed(seed, {options.epoch});
      Rng rng(seed);
      for (std::int64_t id : sampler.sample(dataset.pois()[static_cast<std::size_t>(positive)].poi_id, rng)) {
        set.negatives.push_back(static_cast<std::int64_t>(dataset.poi_row(id)));
      }
      break;
    }
  }
  return set;
}

void attach_candidates(seq::Batch& batch, const data::Dataset& dataset, const data::NegativeSampler& sampler,
                       const seq::Vocabulary& vocab, const CandidateOptions& options) {
  for (Task t : seq::kAllTasks) {
    seq::TaskTargets& tt = batch.target(t);
    std::vector<CandidateSet> sets;
    sets.reserve(tt.size());
    std::size_t width = 0;
    for (std::size_t r = 0; r < tt.size(); ++r) {
      sets.push_back(make_candidate_set(t, tt.labels[r], tt.user_ids[r], tt.event_times[r], dataset, sampler, vocab,
                                        options));
      width = std::max(width, sets.back().size());
    }
    tt.width = width;
    tt.candidates.assign(tt.size() * width, -1);
    tt.counts.assign(tt.size(), 0);
    for (std::size_t r = 0; r < tt.size(); ++r) {
      std::int64_t* row = tt.candidates.data() + r * width;
      row[0] = sets[r].positive;
      std::copy(sets[r].negatives.begin(), sets[r].negatives.end(), row + 1);
      tt.counts[r] = sets[r].size();
    }
  }
}

}  // namespace inttravel::objective
