#include "data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "seq/sequence.hpp"

namespace inttravel::data {

namespace {

constexpr std::int64_t kDayMs = 86'400'000;
constexpr std::int64_t kHalfHourMs = 1'800'000;
constexpr std::array<std::size_t, kProfileFeatures> kProfileVocab = {2, 3, 8, 6, 5, 4};
constexpr std::array<double, kProfileFeatures> kProfileMissing = {0.02, 0.05, 0.1, 0.45, 0.3, 0.5};

double round_to(double v, double unit) { return std::round(v / unit) * unit; }

std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
  return w;
}

void validate(const GeneratorConfig& c) {
  if (c.pois < c.min_pois) {
    fail(ErrorCode::kInvalidArgument, "generator: need at least " + std::to_string(c.min_pois) +
                                          " POIs for negative sampling, got " + std::to_string(c.pois));
  }
  if (c.users == 0 || c.gids == 0 || c.categories == 0 || c.arids == 0 || c.action_types == 0 ||
      c.travel_modes < 2 || c.weather_types == 0 || c.max_interactions == 0) {
    fail(ErrorCode::kInvalidArgument, "generator: vocabulary sizes must be positive (travel_modes ≥ 2)");
  }
  for (double p : {c.p_fav, c.p_mode, c.p_time, c.p_via, c.via_rate, c.missing_mode_rate, c.p_home_location}) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kInvalidArgument, "generator: probabilities must lie in [0, 1]");
  }
  if (!(c.interactions_median > 0.0 && c.interactions_mean >= c.interactions_median)) {
    fail(ErrorCode::kInvalidArgument, "generator: need 0 < interactions_median ≤ interactions_mean");
  }
}

}  // namespace

Dataset generate_synthetic(const GeneratorConfig& c, std::uint64_t seed) {
  validate(c);
  Rng rng(derive_seed(seed, {0x73796e74ULL}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Geography: each GID lives in one ARID and has a centre on the plane.
  std::vector<std::int64_t> gid_arid(c.gids);
  std::vector<std::pair<double, double>> gid_centre(c.gids);
  std::uniform_int_distribution<std::size_t> pick_arid(0, c.arids - 1);
  std::uniform_real_distribution<double> plane(0.0, 50'000.0);
  for (std::size_t g = 0; g < c.gids; ++g) {
    gid_arid[g] = static_cast<std::int64_t>(pick_arid(rng));
    gid_centre[g] = {plane(rng), plane(rng)};
  }

  // POIs: long-tailed GID and category sizes, skewed popularity.
  auto gid_w = zipf_weights(c.gids, 0.8);
  auto cid_w = zipf_weights(c.categories, 1.0);
  std::discrete_distribution<std::size_t> pick_gid(gid_w.begin(), gid_w.end());
  std::discrete_distribution<std::size_t> pick_cid(cid_w.begin(), cid_w.end());
  std::normal_distribution<double> jitter(0.0, 40.0);
  std::vector<PoiRecord> pois(c.pois);
  std::vector<std::vector<std::size_t>> members(c.gids);
  for (std::size_t i = 0; i < c.pois; ++i) {
    const std::size_t g = pick_gid(rng);
    PoiRecord& p = pois[i];
    p.poi_id = static_cast<std::int64_t>(i);
    const double u = unit(rng);
    p.nscore = round_to(u * u, 1e-6);
    p.gid = static_cast<std::int64_t>(g);
    p.cid = static_cast<std::int64_t>(pick_cid(rng));
    p.arid = gid_arid[g];
    p.x = round_to(gid_centre[g].first + jitter(rng), 0.01);
    p.y = round_to(gid_centre[g].second + jitter(rng), 0.01);
    members[g].push_back(i);
  }
  std::vector<double> pop_w(c.pois);
  for (std::size_t i = 0; i < c.pois; ++i) pop_w[i] = pois[i].nscore + 1e-3;
  std::discrete_distribution<std::size_t> pick_popular(pop_w.begin(), pop_w.end());
  std::vector<double> home_w(c.gids);
  for (std::size_t g = 0; g < c.gids; ++g) home_w[g] = static_cast<double>(members[g].size());
  std::discrete_distribution<std::size_t> pick_home(home_w.begin(), home_w.end());

  std::vector<double> action_w = zipf_weights(c.action_types, 0.7);
  std::discrete_distribution<std::int64_t> pick_action(action_w.begin(), action_w.end());
  std::uniform_int_distribution<std::int64_t> pick_mode(0, static_cast<std::int64_t>(c.travel_modes) - 1);
  std::uniform_int_distribution<std::int64_t> pick_other_mode(0, static_cast<std::int64_t>(c.travel_modes) - 2);
  std::uniform_int_distribution<std::int64_t> pick_weather(0, static_cast<std::int64_t>(c.weather_types) - 1);
  std::uniform_int_distribution<std::int64_t> pick_bucket(0, seq::kWhenBuckets - 1);
  std::uniform_int_distribution<std::int64_t> pick_offset(0, kHalfHourMs - 1);
  std::geometric_distribution<std::int64_t> day_gap(0.5);

  const double mu = std::log(c.interactions_median);
  const double sigma = std::sqrt(2.0 * std::log(c.interactions_mean / c.interactions_median));
  std::lognormal_distribution<double> count_dist(mu, sigma);

  std::vector<UserRecord> users(c.users);
  std::vector<InteractionRecord> interactions;
  interactions.reserve(static_cast<std::size_t>(c.users * c.interactions_mean * 1.1));
  for (std::size_t u = 0; u < c.users; ++u) {
    UserRecord& user = users[u];
    user.user_id = static_cast<std::int64_t>(u);
    for (std::size_t f = 0; f < kProfileFeatures; ++f) {
      std::uniform_int_distribution<std::int64_t> v(0, static_cast<std::int64_t>(kProfileVocab[f]) - 1);
      const std::int64_t value = v(rng);
      if (unit(rng) >= kProfileMissing[f]) user.profile[f] = value;
    }

    // Latent preferences.
    const std::size_t home = pick_home(rng);
    const auto& home_members = members[home];
    std::uniform_int_distribution<std::size_t> pick_member(0, home_members.size() - 1);
    const std::size_t favorite = home_members[pick_member(rng)];
    const std::int64_t dominant_mode = pick_mode(rng);
    std::normal_distribution<double> daytime(28.0, 7.0);
    const std::int64_t preferred_bucket =
        std::clamp<std::int64_t>(std::llround(daytime(rng)), 0, seq::kWhenBuckets - 1);

    const auto drawn = static_cast<std::size_t>(std::llround(count_dist(rng)));
    const std::size_t count = std::clamp<std::size_t>(drawn, 1, c.max_interactions);

    std::int64_t day = std::uniform_int_distribution<std::int64_t>(0, 9)(rng);
    std::size_t last_target = favorite;
    for (std::size_t k = 0; k < count; ++k) {
      if (k > 0) day += 1 + day_gap(rng);
      InteractionRecord r;
      r.user_id = user.user_id;
      const std::int64_t bucket = unit(rng) < c.p_time ? preferred_bucket : pick_bucket(rng);
      r.timestamp = day * kDayMs + bucket * kHalfHourMs + pick_offset(rng);
      r.action_type = pick_action(rng);

      const std::size_t target = (k > 0 && unit(rng) < c.p_fav) ? favorite : pick_popular(rng);
      r.target_poi_id = pois[target].poi_id;

      const std::size_t here =
          (k == 0 || unit(rng) < c.p_home_location) ? home : static_cast<std::size_t>(pois[last_target].gid);
      r.gid = static_cast<std::int64_t>(here);
      r.arid = gid_arid[here];
      r.weather = pick_weather(rng);

      if (unit(rng) >= c.missing_mode_rate) {
        if (unit(rng) < c.p_mode) {
          r.travel_mode = dominant_mode;
        } else {
          const std::int64_t other = pick_other_mode(rng);
          r.travel_mode = other >= dominant_mode ? other + 1 : other;
        }
      }

      if (unit(rng) < c.via_rate) {
        const auto& dest_members = members[static_cast<std::size_t>(pois[target].gid)];
        std::size_t via = target;
        if (dest_members.size() > 1 && unit(rng) < c.p_via) {
          std::uniform_int_distribution<std::size_t> pick_dest(0, dest_members.size() - 2);
          via = dest_members[pick_dest(rng)];
          if (via == target) via = dest_members.back();
        } else {
          while (via == target) via = pick_popular(rng);
        }
        r.via_poi_id = pois[via].poi_id;
      }

      last_target = target;
      interactions.push_back(r);
    }
  }
  return Dataset(std::move(pois), std::move(users), std::move(interactions));
}

std::string dataset_stats(const Dataset& d) {
  std::ostringstream out;
  const auto& inter = d.interactions();
  std::vector<std::size_t> per_user;
  per_user.reserve(d.users().size());
  for (std::size_t u = 0; u < d.users().size(); ++u) per_user.push_back(d.user_history(u).size());
  std::sort(per_user.begin(), per_user.end());
  const double mean = per_user.empty() ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(per_user.size());
  const std::size_t median = per_user.empty() ? 0 : per_user[per_user.size() / 2];

  out << "users\t" << d.users().size() << '\n';
  out << "pois\t" << d.pois().size() << '\n';
  out << "interactions\t" << inter.size() << '\n';
  out << "interactions_per_user_mean\t" << mean << '\n';
  out << "interactions_per_user_median\t" << median << '\n';

  std::map<std::int64_t, std::size_t> per_cid, per_gid, per_arid, per_action, per_mode;
  std::size_t missing_mode = 0, with_via = 0;
  for (const PoiRecord& p : d.pois()) {
    ++per_cid[p.cid];
    ++per_gid[p.gid];
    ++per_arid[p.arid];
  }
  for (const InteractionRecord& r : inter) {
    ++per_action[r.action_type];
    if (r.travel_mode) ++per_mode[*r.travel_mode]; else ++missing_mode;
    if (r.via_poi_id) ++with_via;
  }
  out << "interactions_with_via\t" << with_via << '\n';
  out << "gids\t" << per_gid.size() << '\n';
  out << "arids\t" << per_arid.size() << '\n';
  for (const auto& [k, v] : per_cid) out << "pois_per_cid\t" << k << '\t' << v << '\n';

  // Top-50 GIDs / ARIDs by POI count, largest first.
  auto top = [&out](const std::map<std::int64_t, std::size_t>& m, const char* label) {
    std::vector<std::pair<std::int64_t, std::size_t>> v(m.begin(), m.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (v.size() > 50) v.resize(50);
    for (const auto& [k, n] : v) out << label << '\t' << k << '\t' << n << '\n';
  };
  top(per_gid, "pois_per_gid");
  top(per_arid, "pois_per_arid");
  for (const auto& [k, v] : per_action) out << "interactions_per_action\t" << k << '\t' << v << '\n';
  for (const auto& [k, v] : per_mode) out << "interactions_per_mode\t" << k << '\t' << v << '\n';
  out << "interactions_per_mode\t/\t" << missing_mode << '\n';
  return out.str();
}

}  // namespace inttravel::data
