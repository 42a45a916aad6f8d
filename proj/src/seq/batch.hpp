#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "data/records.hpp"
#include "seq/sequence.hpp"

namespace inttravel::seq {

// Raw id → dense index. Ids unseen at build time map to oov().
class IdMap {
 public:
  IdMap() = default;
  explicit IdMap(std::vector<std::int64_t> ids);  // sorted and deduplicated

  std::int64_t lookup(std::int64_t raw) const;
  std::int64_t oov() const { return static_cast<std::int64_t>(ids_.size()); }
  std::size_t known() const { return ids_.size(); }
  std::int64_t raw(std::size_t index) const { return ids_[index]; }

 private:
  std::vector<std::int64_t> ids_;
  std::unordered_map<std::int64_t, std::int64_t> index_;
};

// Dense vocabularies derived deterministically from a dataset. POI indexes are
// table rows.
struct Vocabulary {
  std::size_t pois = 0;
  IdMap gid, arid, weather, action, mode;
  std::array<IdMap, data::kProfileFeatures> profile;

  static Vocabulary build(const data::Dataset& dataset);

  // Embedding table extents.
  std::size_t gid_rows() const { return gid.known() + 1; }
  std::size_t arid_rows() const { return arid.known() + 1; }
  std::size_t weather_rows() const { return weather.known() + 1; }
  std::size_t bucket_rows() const { return kWhenBuckets + 1; }  // + "no previous journey"
  std::size_t action_rows() const { return action.known() + 1; }
  std::size_t mode_rows() const { return mode.known() + 2; }  // + oov, + missing
  std::size_t profile_rows(std::size_t f) const { return profile[f].known() + 2; }
  std::int64_t missing_mode() const { return static_cast<std::int64_t>(mode.known()) + 1; }
  std::int64_t missing_profile(std::size_t f) const { return static_cast<std::int64_t>(profile[f].known()) + 1; }
  // Candidate-space sizes.
  std::size_t mode_classes() const { return mode.known(); }
};

// Labelled rows of one task within a batch.
struct TaskTargets {
  std::vector<std::int64_t> rows;       // flattened token index seq·max_len + pos
  std::vector<std::int64_t> labels;     // dense: bucket, mode index, or POI row
  std::vector<std::int64_t> user_ids;   // for deterministic candidate seeding
  std::vector<std::int64_t> event_times;
  // Filled by attach_candidates: rows.size() × width, column 0 is the
  // positive, −1 pads. counts[r] is the number of real candidates.
  std::vector<std::int64_t> candidates;
  std::size_t width = 0;
  std::vector<std::size_t> counts;

  std::size_t size() const { return rows.size(); }
};

// Right-padded batch, token-major within each sequence. −1 marks an absent
// feature; padding tokens carry −1 everywhere and no labels.
struct Batch {
  std::size_t sequences = 0;
  std::size_t max_len = 0;

  std::vector<std::uint8_t> valid;
  std::vector<TokenKind> kind;
  std::vector<std::int64_t> position;
  std::vector<std::int64_t> timestamp;
  std::vector<std::int64_t> gid, arid, weather, bucket, poi, action, mode;

  std::vector<std::size_t> lengths;
  std::vector<std::int64_t> user_ids;
  std::vector<std::array<std::int64_t, data::kProfileFeatures>> profile;

  std::array<TaskTargets, kTaskCount> targets;

  std::size_t tokens() const { return sequences * max_len; }
  TaskTargets& target(Task t) { return targets[task_index(t)]; }
  const TaskTargets& target(Task t) const { return targets[task_index(t)]; }
};

Batch make_batch(std::span<const LabeledSequence* const> sequences, const data::Dataset& dataset,
                 const Vocabulary& vocab);

// Chunks sequences in the given order into batches of batch_size, each padded
// to its own longest sequence. Empty sequences are skipped.
std::vector<Batch> batchify(std::span<const LabeledSequence> sequences, std::size_t batch_size,
                            const data::Dataset& dataset, const Vocabulary& vocab);

}  // namespace inttravel::seq
