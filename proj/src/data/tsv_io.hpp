#pragma once

#include <filesystem>

#include "data/records.hpp"

namespace inttravel::data {

inline constexpr const char* kPoiFile = "pois.tsv";
inline constexpr const char* kUserFile = "users.tsv";
inline constexpr const char* kInteractionFile = "interactions.tsv";

// Tab-separated, header row, LF endings; optional values are empty fields.
// Referential integrity is validated and errors name the offending row.
Dataset load_store_tables(const std::filesystem::path& pois, const std::filesystem::path& users,
                          const std::filesystem::path& interactions);
Dataset load_dataset(const std::filesystem::path& dir);

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Exposed for tests: single-row parsers (row is 1-based, for messages).
PoiRecord parse_poi_row(const std::string& line, std::size_t row);
UserRecord parse_user_row(const std::string& line, std::size_t row);
InteractionRecord parse_interaction_row(const std::string& line, std::size_t row);

}  // namespace inttravel::data
