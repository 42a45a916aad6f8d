#include "data/tsv_io.hpp"

#include <charconv>
#include <fstream>
#include <string_view>

#include "common/error.hpp"

namespace inttravel::data {

namespace {

constexpr std::string_view kPoiHeader = "poi_id\tnscore\tgid\tcid\tarid\tcoordinates";
constexpr std::string_view kUserHeader = "user_id\tf1\tf2\tf3\tf4\tf5\tf6";
constexpr std::string_view kInteractionHeader =
    "user_id\ttimestamp\taction_type\ttarget_poi_id\tgid\tarid\tweather\ttravel_mode\tvia_poi_id";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void bad_field(const char* table, std::size_t row, const char* column, std::string_view text) {
  fail(ErrorCode::kParse, std::string(table) + " row " + std::to_string(row) + ": malformed " + column +
                              " field '" + std::string(text) + "'");
}

std::int64_t to_int(std::string_view s, const char* table, std::size_t row, const char* column) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_field(table, row, column, s);
  return v;
}

std::optional<std::int64_t> to_opt_int(std::string_view s, const char* table, std::size_t row,
                                       const char* column) {
  if (s.empty()) return std::nullopt;
  return to_int(s, table, row, column);
}

double to_double(std::string_view s, const char* table, std::size_t row, const char* column) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) bad_field(table, row, column, s);
  return v;
}

std::vector<std::string_view> fields_of(const std::string& line, std::size_t expected, const char* table,
                                        std::size_t row) {
  auto f = split_tabs(line);
  if (f.size() != expected) {
    fail(ErrorCode::kParse, std::string(table) + " row " + std::to_string(row) + ": expected " +
                                std::to_string(expected) + " columns, found " + std::to_string(f.size()));
  }
  return f;
}

template <typename Row, typename Parse>
std::vector<Row> read_table(const std::filesystem::path& path, std::string_view header, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kParse, path.string() + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    fail(ErrorCode::kParse, path.string() + ": unexpected header '" + line + "', expected '" +
                                std::string(header) + "'");
  }
  std::vector<Row> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(parse(line, row));
  }
  return rows;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt_opt(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string(); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

}  // namespace

PoiRecord parse_poi_row(const std::string& line, std::size_t row) {
  constexpr const char* t = "pois";
  auto f = fields_of(line, 6, t, row);
  PoiRecord p;
  p.poi_id = to_int(f[0], t, row, "poi_id");
  p.nscore = to_double(f[1], t, row, "nscore");
  p.gid = to_int(f[2], t, row, "gid");
  p.cid = to_int(f[3], t, row, "cid");
  p.arid = to_int(f[4], t, row, "arid");
  const std::size_t comma = f[5].find(',');
  if (comma == std::string_view::npos) bad_field(t, row, "coordinates", f[5]);
  p.x = to_double(f[5].substr(0, comma), t, row, "coordinates");
  p.y = to_double(f[5].substr(comma + 1), t, row, "coordinates");
  if (!(p.nscore >= 0.0 && p.nscore <= 1.0)) bad_field(t, row, "nscore", f[1]);
  return p;
}

UserRecord parse_user_row(const std::string& line, std::size_t row) {
  constexpr const char* t = "users";
  auto f = fields_of(line, 1 + kProfileFeatures, t, row);
  UserRecord u;
  u.user_id = to_int(f[0], t, row, "user_id");
  for (std::size_t i = 0; i < kProfileFeatures; ++i) u.profile[i] = to_opt_int(f[1 + i], t, row, "profile");
  return u;
}

InteractionRecord parse_interaction_row(const std::string& line, std::size_t row) {
  constexpr const char* t = "interactions";
  auto f = fields_of(line, 9, t, row);
  InteractionRecord r;
  r.user_id = to_int(f[0], t, row, "user_id");
  r.timestamp = to_int(f[1], t, row, "timestamp");
  r.action_type = to_int(f[2], t, row, "action_type");
  r.target_poi_id = to_int(f[3], t, row, "target_poi_id");
  r.gid = to_int(f[4], t, row, "gid");
  r.arid = to_int(f[5], t, row, "arid");
  r.weather = to_int(f[6], t, row, "weather");
  r.travel_mode = to_opt_int(f[7], t, row, "travel_mode");
  r.via_poi_id = to_opt_int(f[8], t, row, "via_poi_id");
  return r;
}

Dataset load_store_tables(const std::filesystem::path& pois, const std::filesystem::path& users,
                          const std::filesystem::path& interactions) {
  auto p = read_table<PoiRecord>(pois, kPoiHeader, parse_poi_row);
  auto u = read_table<UserRecord>(users, kUserHeader, parse_user_row);
  auto i = read_table<InteractionRecord>(interactions, kInteractionHeader, parse_interaction_row);
  return Dataset(std::move(p), std::move(u), std::move(i));
}

Dataset load_dataset(const std::filesystem::path& dir) {
  return load_store_tables(dir / kPoiFile, dir / kUserFile, dir / kInteractionFile);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create directory " + dir.string() + ": " + ec.message());

  {
    auto out = open_out(dir / kPoiFile);
    out << kPoiHeader << '\n';
    for (const PoiRecord& p : dataset.pois()) {
      out << p.poi_id << '\t' << fmt_double(p.nscore) << '\t' << p.gid << '\t' << p.cid << '\t' << p.arid
          << '\t' << fmt_double(p.x) << ',' << fmt_double(p.y) << '\n';
    }
    if (!out) fail(ErrorCode::kIo, "write failed: " + (dir / kPoiFile).string());
  }
  {
    auto out = open_out(dir / kUserFile);
    out << kUserHeader << '\n';
    for (const UserRecord& u : dataset.users()) {
      out << u.user_id;
      for (const auto& f : u.profile) out << '\t' << fmt_opt(f);
      out << '\n';
    }
    if (!out) fail(ErrorCode::kIo, "write failed: " + (dir / kUserFile).string());
  }
  {
    auto out = open_out(dir / kInteractionFile);
    out << kInteractionHeader << '\n';
    for (const InteractionRecord& r : dataset.interactions()) {
      out << r.user_id << '\t' << r.timestamp << '\t' << r.action_type << '\t' << r.target_poi_id << '\t'
          << r.gid << '\t' << r.arid << '\t' << r.weather << '\t' << fmt_opt(r.travel_mode) << '\t'
          << fmt_opt(r.via_poi_id) << '\n';
    }
    if (!out) fail(ErrorCode::kIo, "write failed: " + (dir / kInteractionFile).string());
  }
}

}  // namespace inttravel::data
