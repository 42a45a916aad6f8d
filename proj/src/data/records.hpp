#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace inttravel::data {

inline constexpr std::size_t kProfileFeatures = 6;

struct PoiRecord {
  std::int64_t poi_id = 0;
  double nscore = 0.0;  // popularity-like score in [0, 1]
  std::int64_t gid = 0;
  std::int64_t cid = 0;
  std::int64_t arid = 0;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const PoiRecord&) const = default;
};

struct UserRecord {
  std::int64_t user_id = 0;
  std::array<std::optional<std::int64_t>, kProfileFeatures> profile{};

  bool operator==(const UserRecord&) const = default;
};

struct InteractionRecord {
  std::int64_t user_id = 0;
  std::int64_t timestamp = 0;  // milliseconds
  std::int64_t action_type = 0;
  std::int64_t target_poi_id = 0;
  std::int64_t gid = 0;   // where the user was located
  std::int64_t arid = 0;
  std::int64_t weather = 0;
  std::optional<std::int64_t> travel_mode;
  std::optional<std::int64_t> via_poi_id;

  bool operator==(const InteractionRecord&) const = default;
};

// Raw tables plus lookup indexes. Table rows keep file order; per-user
// interaction lists are sorted by timestamp with ties kept in file order.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<PoiRecord> pois, std::vector<UserRecord> users,
          std::vector<InteractionRecord> interactions);

  const std::vector<PoiRecord>& pois() const { return pois_; }
  const std::vector<UserRecord>& users() const { return users_; }
  const std::vector<InteractionRecord>& interactions() const { return interactions_; }

  // Row of a poi_id / user_id; throws on unknown ids.
  std::size_t poi_row(std::int64_t poi_id) const;
  std::size_t user_row(std::int64_t user_id) const;
  bool has_poi(std::int64_t poi_id) const { return poi_rows_.count(poi_id) > 0; }

  // Interaction indexes of user row u, chronological.
  const std::vector<std::size_t>& user_history(std::size_t user_row) const { return histories_[user_row]; }

  // POI rows grouped by gid, in table order.
  const std::vector<std::size_t>& gid_members(std::int64_t gid) const;

  bool operator==(const Dataset& other) const {
    return pois_ == other.pois_ && users_ == other.users_ && interactions_ == other.interactions_;
  }

 private:
  void build_indexes();

  std::vector<PoiRecord> pois_;
  std::vector<UserRecord> users_;
  std::vector<InteractionRecord> interactions_;
  std::unordered_map<std::int64_t, std::size_t> poi_rows_;
  std::unordered_map<std::int64_t, std::size_t> user_rows_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> gid_members_;
  std::vector<std::vector<std::size_t>> histories_;
};

}  // namespace inttravel::data
