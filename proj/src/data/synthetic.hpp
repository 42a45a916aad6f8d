#pragma once

#include <cstdint>
#include <string>

#include "data/records.hpp"

namespace inttravel::data {

// Scale knobs and planted-structure strengths for the synthetic log.
struct GeneratorConfig {
  std::size_t users = 1000;
  std::size_t pois = 5000;
  std::size_t gids = 250;
  std::size_t categories = 20;
  std::size_t arids = 40;
  std::size_t action_types = 8;
  std::size_t travel_modes = 5;
  std::size_t weather_types = 10;

  // Per-user interaction counts are log-normal with this mean and median,
  // clamped to [1, max_interactions].
  double interactions_mean = 25.0;
  double interactions_median = 21.0;
  std::size_t max_interactions = 50;

  double p_fav = 0.6;    // post-first interactions hit the favorite POI
  double p_mode = 0.9;   // dominant travel mode
  double p_time = 0.7;   // preferred departure half-hour
  double p_via = 0.5;    // via POI drawn from the destination's GID
  double via_rate = 0.3;           // fraction of interactions with a via POI
  double missing_mode_rate = 0.1;  // travel_mode left empty
  double p_home_location = 0.7;    // user located in the home GID

  std::size_t min_pois = 15;  // uniform negatives + 1
};

Dataset generate_synthetic(const GeneratorConfig& config, std::uint64_t seed);

// Plain-text distribution summary (per-category, per-GID, per-action counts).
std::string dataset_stats(const Dataset& dataset);

}  // namespace inttravel::data
