#include "seq/batch.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace inttravel::seq {

IdMap::IdMap(std::vector<std::int64_t> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], static_cast<std::int64_t>(i));
}

std::int64_t IdMap::lookup(std::int64_t raw) const {
  auto it = index_.find(raw);
  return it == index_.end() ? oov() : it->second;
}

Vocabulary Vocabulary::build(const data::Dataset& dataset) {
  std::vector<std::int64_t> gids, arids, weather, actions, modes;
  std::array<std::vector<std::int64_t>, data::kProfileFeatures> prof;
  for (const auto& p : dataset.pois()) {
    gids.push_back(p.gid);
    arids.push_back(p.arid);
  }
  for (const auto& r : dataset.interactions()) {
    gids.push_back(r.gid);
    arids.push_back(r.arid);
    weather.push_back(r.weather);
    actions.push_back(r.action_type);
    if (r.travel_mode) modes.push_back(*r.travel_mode);
  }
  for (const auto& u : dataset.users()) {
    for (std::size_t f = 0; f < data::kProfileFeatures; ++f) {
      if (u.profile[f]) prof[f].push_back(*u.profile[f]);
    }
  }
  Vocabulary v;
  v.pois = dataset.pois().size();
  v.gid = IdMap(std::move(gids));
  v.arid = IdMap(std::move(arids));
  v.weather = IdMap(std::move(weather));
  v.action = IdMap(std::move(actions));
  v.mode = IdMap(std::move(modes));
  for (std::size_t f = 0; f < data::kProfileFeatures; ++f) v.profile[f] = IdMap(std::move(prof[f]));
  return v;
}

Batch make_batch(std::span<const LabeledSequence* const> sequences, const data::Dataset& dataset,
                 const Vocabulary& vocab) {
  if (sequences.empty()) fail(ErrorCode::kInvalidArgument, "make_batch: no sequences");
  Batch b;
  b.sequences = sequences.size();
  for (const LabeledSequence* s : sequences) b.max_len = std::max(b.max_len, s->size());
  if (b.max_len == 0) fail(ErrorCode::kInvalidArgument, "make_batch: all sequences are empty");
  const std::size_t n = b.tokens();
  b.valid.assign(n, 0);
  b.kind.assign(n, TokenKind::kScenario);
  b.position.assign(n, 0);
  b.timestamp.assign(n, 0);
  for (auto* field : {&b.gid, &b.arid, &b.weather, &b.bucket, &b.poi, &b.action, &b.mode}) field->assign(n, -1);

  for (std::size_t si = 0; si < sequences.size(); ++si) {
    const LabeledSequence& s = *sequences[si];
    b.lengths.push_back(s.size());
    b.user_ids.push_back(s.user_id);
    const data::UserRecord& user = dataset.users()[dataset.user_row(s.user_id)];
    std::array<std::int64_t, data::kProfileFeatures> prof{};
    for (std::size_t f = 0; f < data::kProfileFeatures; ++f) {
      prof[f] = user.profile[f] ? vocab.profile[f].lookup(*user.profile[f]) : vocab.missing_profile(f);
    }
    b.profile.push_back(prof);

    for (std::size_t p = 0; p < s.size(); ++p) {
      const std::size_t row = si * b.max_len + p;
      const Token& tok = s.tokens[p];
      b.valid[row] = 1;
      b.kind[row] = tok.kind;
      b.position[row] = static_cast<std::int64_t>(p);
      b.timestamp[row] = tok.timestamp;
      switch (tok.kind) {
        case TokenKind::kScenario:
          b.gid[row] = vocab.gid.lookup(tok.gid);
          b.arid[row] = vocab.arid.lookup(tok.arid);
          b.weather[row] = vocab.weather.lookup(tok.weather);
          b.bucket[row] = tok.last_bucket ? *tok.last_bucket : kWhenBuckets;
          break;
        case TokenKind::kItem:
          b.poi[row] = static_cast<std::int64_t>(dataset.poi_row(tok.poi_id));
          break;
        case TokenKind::kFeedback:
          b.action[row] = vocab.action.lookup(tok.action_type);
          b.mode[row] = tok.travel_mode ? vocab.mode.lookup(*tok.travel_mode) : vocab.missing_mode();
          break;
      }
      for (Task t : kAllTasks) {
        const auto& label = s.channel(t)[p];
        if (!label) continue;
        std::int64_t dense = 0;
        switch (t) {
          case Task::kWhen: dense = *label; break;
          case Task::kHow:
            dense = vocab.mode.lookup(*label);
            if (dense == vocab.mode.oov()) continue;  // unseen mode cannot be a candidate
            break;
          case Task::kWhere:
          case Task::kVia: dense = static_cast<std::int64_t>(dataset.poi_row(*label)); break;
        }
        TaskTargets& tt = b.target(t);
        tt.rows.push_back(static_cast<std::int64_t>(row));
        tt.labels.push_back(dense);
        tt.user_ids.push_back(s.user_id);
        tt.event_times.push_back(s.label_time[p]);
      }
    }
  }
  return b;
}

std::vector<Batch> batchify(std::span<const LabeledSequence> sequences, std::size_t batch_size,
                            const data::Dataset& dataset, const Vocabulary& vocab) {
  if (batch_size == 0) fail(ErrorCode::kInvalidArgument, "batch_size must be positive");
  std::vector<const LabeledSequence*> nonempty;
  for (const LabeledSequence& s : sequences) {
    if (s.size() > 0) nonempty.push_back(&s);
  }
  std::vector<Batch> out;
  for (std::size_t i = 0; i < nonempty.size(); i += batch_size) {
    const std::size_t end = std::min(nonempty.size(), i + batch_size);
    out.push_back(make_batch(std::span(nonempty).subspan(i, end - i), dataset, vocab));
  }
  return out;
}

}  // namespace inttravel::seq
