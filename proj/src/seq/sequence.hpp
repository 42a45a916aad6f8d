#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "data/records.hpp"

namespace inttravel::seq {

inline constexpr std::int64_t kWhenBuckets = 48;  // half-hours of the day
inline constexpr std::int64_t kBucketMs = 1'800'000;
inline constexpr std::int64_t kDayMs = 86'400'000;
inline constexpr std::size_t kDefaultMaxLen = 120;

enum class Task : std::uint8_t { kWhen = 0, kHow = 1, kWhere = 2, kVia = 3 };
inline constexpr std::size_t kTaskCount = 4;
inline constexpr std::array<Task, kTaskCount> kAllTasks = {Task::kWhen, Task::kHow, Task::kWhere, Task::kVia};

const char* task_name(Task t);
std::optional<Task> task_from_name(const std::string& name);
inline std::size_t task_index(Task t) { return static_cast<std::size_t>(t); }

enum class TokenKind : std::uint8_t { kScenario, kItem, kFeedback };

// One token of the S/I/F stream. Only the fields of its kind are meaningful.
struct Token {
  TokenKind kind = TokenKind::kScenario;
  std::int64_t timestamp = 0;  // time at which the token's content is known
  std::size_t interaction = 0; // index into the interaction list it came from
  // S: location context of the upcoming journey and the last known departure
  // bucket (nullopt for the first interaction).
  std::int64_t gid = 0;
  std::int64_t arid = 0;
  std::int64_t weather = 0;
  std::optional<std::int64_t> last_bucket;
  // I
  std::int64_t poi_id = 0;
  // F
  std::int64_t action_type = 0;
  std::optional<std::int64_t> travel_mode;
};

struct TaskLabels {
  std::int64_t when = 0;  // half-hour bucket
  std::optional<std::int64_t> how;
  std::int64_t where = 0;
  std::optional<std::int64_t> via;
};

std::int64_t when_bucket(std::int64_t timestamp_ms);
TaskLabels derive_labels(const data::InteractionRecord& r);

// Tokens plus one optional label per position per task; a label's presence is
// its validity mask. label_time holds the timestamp of the labelled event.
struct LabeledSequence {
  std::int64_t user_id = 0;
  std::vector<Token> tokens;
  std::array<std::vector<std::optional<std::int64_t>>, kTaskCount> labels;
  std::vector<std::int64_t> label_time;

  std::size_t size() const { return tokens.size(); }
  const std::vector<std::optional<std::int64_t>>& channel(Task t) const { return labels[task_index(t)]; }
  std::size_t label_count(Task t) const;
};

// Emits [S, I, F] per interaction for the most recent ⌊max_len/3⌋ of them.
// When/How/Where labels sit on S tokens, Via labels on I tokens.
LabeledSequence build_labeled_sequence(const data::UserRecord& user,
                                       std::span<const data::InteractionRecord> interactions,
                                       std::size_t max_len = kDefaultMaxLen);

// Keeps only the labels belonging to the final interaction (evaluation).
void keep_last_interaction_labels(LabeledSequence& seq);

}  // namespace inttravel::seq
