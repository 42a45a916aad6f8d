#include "seq/sequence.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace inttravel::seq {

const char* task_name(Task t) {
  switch (t) {
    case Task::kWhen: return "when";
    case Task::kHow: return "how";
    case Task::kWhere: return "where";
    case Task::kVia: return "via";
  }
  return "?";
}

std::optional<Task> task_from_name(const std::string& name) {
  for (Task t : kAllTasks) {
    if (name == task_name(t)) return t;
  }
  return std::nullopt;
}

std::int64_t when_bucket(std::int64_t timestamp_ms) {
  const std::int64_t in_day = ((timestamp_ms % kDayMs) + kDayMs) % kDayMs;
  return in_day / kBucketMs;
}

TaskLabels derive_labels(const data::InteractionRecord& r) {
  return TaskLabels{when_bucket(r.timestamp), r.travel_mode, r.target_poi_id, r.via_poi_id};
}

std::size_t LabeledSequence::label_count(Task t) const {
  const auto& ch = channel(t);
  return static_cast<std::size_t>(std::count_if(ch.begin(), ch.end(), [](const auto& l) { return l.has_value(); }));
}

LabeledSequence build_labeled_sequence(const data::UserRecord& user,
                                       std::span<const data::InteractionRecord> interactions,
                                       std::size_t max_len) {
  if (max_len < 3) fail(ErrorCode::kInvalidArgument, "max_len must be at least 3");
  LabeledSequence seq;
  seq.user_id = user.user_id;
  const std::size_t keep = std::min(interactions.size(), max_len / 3);
  const std::size_t first = interactions.size() - keep;
  seq.tokens.reserve(3 * keep);
  for (auto& ch : seq.labels) ch.reserve(3 * keep);

  auto push = [&seq](Token tok, std::optional<std::int64_t> when, std::optional<std::int64_t> how,
                     std::optional<std::int64_t> where, std::optional<std::int64_t> via, std::int64_t event_time) {
    seq.tokens.push_back(tok);
    seq.labels[task_index(Task::kWhen)].push_back(when);
    seq.labels[task_index(Task::kHow)].push_back(how);
    seq.labels[task_index(Task::kWhere)].push_back(where);
    seq.labels[task_index(Task::kVia)].push_back(via);
    seq.label_time.push_back(event_time);
  };

  for (std::size_t i = first; i < interactions.size(); ++i) {
    const data::InteractionRecord& r = interactions[i];
    const TaskLabels lab = derive_labels(r);

    // The S token must predate its own interaction: it is stamped with the
    // previous interaction's time (or just before this one).
    Token s;
    s.kind = TokenKind::kScenario;
    s.interaction = i;
    s.gid = r.gid;
    s.arid = r.arid;
    s.weather = r.weather;
    if (i > 0) {
      s.last_bucket = when_bucket(interactions[i - 1].timestamp);
      s.timestamp = std::min(interactions[i - 1].timestamp, r.timestamp - 1);
    } else {
      s.timestamp = r.timestamp - 1;
    }
    push(s, lab.when, lab.how, lab.where, std::nullopt, r.timestamp);

    Token it;
    it.kind = TokenKind::kItem;
    it.interaction = i;
    it.timestamp = r.timestamp;
    it.poi_id = r.target_poi_id;
    push(it, std::nullopt, std::nullopt, std::nullopt, lab.via, r.timestamp);

    Token f;
    f.kind = TokenKind::kFeedback;
    f.interaction = i;
    f.timestamp = r.timestamp;
    f.action_type = r.action_type;
    f.travel_mode = r.travel_mode;
    push(f, std::nullopt, std::nullopt, std::nullopt, std::nullopt, r.timestamp);
  }
  return seq;
}

void keep_last_interaction_labels(LabeledSequence& seq) {
  if (seq.tokens.empty()) return;
  const std::size_t last = seq.tokens.back().interaction;
  for (std::size_t p = 0; p < seq.tokens.size(); ++p) {
    if (seq.tokens[p].interaction == last) continue;
    for (auto& ch : seq.labels) ch[p].reset();
  }
}

}  // namespace inttravel::seq
