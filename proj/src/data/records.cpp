#include "data/records.hpp"

#include <algorithm>
#include <string>

#include "common/error.hpp"

namespace inttravel::data {

Dataset::Dataset(std::vector<PoiRecord> pois, std::vector<UserRecord> users,
                 std::vector<InteractionRecord> interactions)
    : pois_(std::move(pois)), users_(std::move(users)), interactions_(std::move(interactions)) {
  build_indexes();
}

void Dataset::build_indexes() {
  for (std::size_t i = 0; i < pois_.size(); ++i) {
    const PoiRecord& p = pois_[i];
    if (p.poi_id < 0) fail(ErrorCode::kValidation, "pois row " + std::to_string(i + 1) + ": negative poi_id");
    if (!(p.nscore >= 0.0 && p.nscore <= 1.0)) {
      fail(ErrorCode::kValidation, "pois row " + std::to_string(i + 1) + ": nscore outside [0, 1]");
    }
    if (!poi_rows_.emplace(p.poi_id, i).second) {
      fail(ErrorCode::kValidation,
           "pois row " + std::to_string(i + 1) + ": duplicate poi_id " + std::to_string(p.poi_id));
    }
    gid_members_[p.gid].push_back(i);
  }
  for (std::size_t i = 0; i < users_.size(); ++i) {
    if (!user_rows_.emplace(users_[i].user_id, i).second) {
      fail(ErrorCode::kValidation, "users row " + std::to_string(i + 1) + ": duplicate user_id " +
                                       std::to_string(users_[i].user_id));
    }
  }
  histories_.assign(users_.size(), {});
  for (std::size_t i = 0; i < interactions_.size(); ++i) {
    const InteractionRecord& r = interactions_[i];
    const std::string row = "interactions row " + std::to_string(i + 1);
    auto u = user_rows_.find(r.user_id);
    if (u == user_rows_.end()) fail(ErrorCode::kValidation, row + ": dangling user_id " + std::to_string(r.user_id));
    if (!poi_rows_.count(r.target_poi_id)) {
      fail(ErrorCode::kValidation, row + ": dangling target_poi_id " + std::to_string(r.target_poi_id));
    }
    if (r.via_poi_id && !poi_rows_.count(*r.via_poi_id)) {
      fail(ErrorCode::kValidation, row + ": dangling via_poi_id " + std::to_string(*r.via_poi_id));
    }
    histories_[u->second].push_back(i);
  }
  for (auto& h : histories_) {
    std::stable_sort(h.begin(), h.end(), [this](std::size_t a, std::size_t b) {
      return interactions_[a].timestamp < interactions_[b].timestamp;
    });
  }
}

std::size_t Dataset::poi_row(std::int64_t poi_id) const {
  auto it = poi_rows_.find(poi_id);
  if (it == poi_rows_.end()) fail(ErrorCode::kInvalidArgument, "unknown poi_id " + std::to_string(poi_id));
  return it->second;
}

std::size_t Dataset::user_row(std::int64_t user_id) const {
  auto it = user_rows_.find(user_id);
  if (it == user_rows_.end()) fail(ErrorCode::kInvalidArgument, "unknown user_id " + std::to_string(user_id));
  return it->second;
}

const std::vector<std::size_t>& Dataset::gid_members(std::int64_t gid) const {
  static const std::vector<std::size_t> kEmpty;
  auto it = gid_members_.find(gid);
  return it == gid_members_.end() ? kEmpty : it->second;
}

}  // namespace inttravel::data
