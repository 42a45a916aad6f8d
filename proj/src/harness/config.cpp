#include "harness/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "common/error.hpp"
#include "objective/metrics.hpp"

namespace inttravel::harness {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  fail(ErrorCode::kInvalidArgument, "config " + key + ": '" + value + "' is not " + expected);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* expected) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, expected);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "a boolean");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Getters read through the same accessor on a copy.
template <typename T>
T read(const RunConfig& c, const std::function<T&(RunConfig&)>& ref) {
  RunConfig copy = c;
  return ref(copy);
}

Field size_field(const char* key, std::function<std::size_t&(RunConfig&)> ref) {
  return {key,
          [key, ref](RunConfig& c, const std::string& v) { ref(c) = parse_number<std::size_t>(key, v, "a count"); },
          [ref](const RunConfig& c) { return std::to_string(read(c, ref)); }};
}

Field double_field(const char* key, std::function<double&(RunConfig&)> ref) {
  return {key, [key, ref](RunConfig& c, const std::string& v) { ref(c) = parse_number<double>(key, v, "a number"); },
          [ref](const RunConfig& c) { return objective::format_double(read(c, ref)); }};
}

Field bool_field(const char* key, std::function<bool&(RunConfig&)> ref) {
  return {key, [key, ref](RunConfig& c, const std::string& v) { ref(c) = parse_bool(key, v); },
          [ref](const RunConfig& c) { return std::string(read(c, ref) ? "true" : "false"); }};
}

Field string_field(const char* key, std::function<std::string&(RunConfig&)> ref) {
  return {key, [ref](RunConfig& c, const std::string& v) { ref(c) = v; },
          [ref](const RunConfig& c) { return read(c, ref); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"seed",
                 [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v, "a seed"); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.push_back(string_field("data_dir", [](RunConfig& c) -> std::string& { return c.data_dir; }));
    f.push_back(string_field("out_dir", [](RunConfig& c) -> std::string& { return c.out_dir; }));
    f.push_back(string_field("checkpoint", [](RunConfig& c) -> std::string& { return c.checkpoint; }));

    f.push_back(size_field("gen.users", [](RunConfig& c) -> std::size_t& { return c.generator.users; }));
    f.push_back(size_field("gen.pois", [](RunConfig& c) -> std::size_t& { return c.generator.pois; }));
    f.push_back(size_field("gen.gids", [](RunConfig& c) -> std::size_t& { return c.generator.gids; }));
    f.push_back(size_field("gen.categories", [](RunConfig& c) -> std::size_t& { return c.generator.categories; }));
    f.push_back(size_field("gen.arids", [](RunConfig& c) -> std::size_t& { return c.generator.arids; }));
    f.push_back(size_field("gen.action_types", [](RunConfig& c) -> std::size_t& { return c.generator.action_types; }));
    f.push_back(size_field("gen.travel_modes", [](RunConfig& c) -> std::size_t& { return c.generator.travel_modes; }));
    f.push_back(size_field("gen.weather_types", [](RunConfig& c) -> std::size_t& { return c.generator.weather_types; }));
    f.push_back(double_field("gen.interactions_mean", [](RunConfig& c) -> double& { return c.generator.interactions_mean; }));
    f.push_back(double_field("gen.interactions_median", [](RunConfig& c) -> double& { return c.generator.interactions_median; }));
    f.push_back(size_field("gen.max_interactions", [](RunConfig& c) -> std::size_t& { return c.generator.max_interactions; }));
    f.push_back(double_field("gen.p_fav", [](RunConfig& c) -> double& { return c.generator.p_fav; }));
    f.push_back(double_field("gen.p_mode", [](RunConfig& c) -> double& { return c.generator.p_mode; }));
    f.push_back(double_field("gen.p_time", [](RunConfig& c) -> double& { return c.generator.p_time; }));
    f.push_back(double_field("gen.p_via", [](RunConfig& c) -> double& { return c.generator.p_via; }));
    f.push_back(double_field("gen.via_rate", [](RunConfig& c) -> double& { return c.generator.via_rate; }));
    f.push_back(double_field("gen.missing_mode_rate", [](RunConfig& c) -> double& { return c.generator.missing_mode_rate; }));
    f.push_back(double_field("gen.p_home_location", [](RunConfig& c) -> double& { return c.generator.p_home_location; }));

    f.push_back(size_field("model.width", [](RunConfig& c) -> std::size_t& { return c.model.width; }));
    f.push_back(size_field("model.max_len", [](RunConfig& c) -> std::size_t& { return c.model.max_len; }));
    f.push_back(size_field("model.depth", [](RunConfig& c) -> std::size_t& { return c.model.depth; }));
    f.push_back(size_field("model.streams", [](RunConfig& c) -> std::size_t& { return c.model.streams; }));
    f.push_back(size_field("model.heads", [](RunConfig& c) -> std::size_t& { return c.model.heads; }));
    f.push_back(size_field("model.shared_experts", [](RunConfig& c) -> std::size_t& { return c.model.shared_experts; }));
    f.push_back(size_field("model.private_experts", [](RunConfig& c) -> std::size_t& { return c.model.private_experts; }));
    f.push_back(size_field("model.profile_width", [](RunConfig& c) -> std::size_t& { return c.model.profile_width; }));
    f.push_back(double_field("model.embedding_std", [](RunConfig& c) -> double& { return c.model.embedding_std; }));
    f.push_back({"model.variant",
                 [](RunConfig& c, const std::string& v) {
                   auto var = model::variant_from_name(v);
                   if (!var) {
                     fail(ErrorCode::kInvalidArgument,
                          "unknown variant '" + v + "'; expected full or one of: " + model::ablation_list());
                   }
                   c.model.variant = *var;
                 },
                 [](const RunConfig& c) { return std::string(model::variant_name(c.model.variant)); }});
    f.push_back({"model.tasks",
                 [](RunConfig& c, const std::string& v) {
                   std::array<bool, seq::kTaskCount> on{};
                   for (const std::string& name : split_list(v)) {
                     auto t = seq::task_from_name(name);
                     if (!t) bad_value("model.tasks", v, "a list drawn from when,how,where,via");
                     on[seq::task_index(*t)] = true;
                   }
                   c.model.tasks = on;
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (seq::Task t : seq::kAllTasks) {
                     if (!c.model.tasks[seq::task_index(t)]) continue;
                     if (!s.empty()) s += ",";
                     s += seq::task_name(t);
                   }
                   return s;
                 }});

    f.push_back(size_field("train.batch_size", [](RunConfig& c) -> std::size_t& { return c.batch_size; }));
    f.push_back(double_field("train.lr", [](RunConfig& c) -> double& { return c.lr; }));
    f.push_back(size_field("train.epochs", [](RunConfig& c) -> std::size_t& { return c.epochs; }));
    f.push_back(size_field("train.steps", [](RunConfig& c) -> std::size_t& { return c.steps; }));
    f.push_back(double_field("train.time_budget_seconds", [](RunConfig& c) -> double& { return c.time_budget_seconds; }));
    f.push_back(size_field("train.log_every", [](RunConfig& c) -> std::size_t& { return c.log_every; }));
    f.push_back(size_field("train.checkpoint_every", [](RunConfig& c) -> std::size_t& { return c.checkpoint_every; }));
    f.push_back(bool_field("train.validate", [](RunConfig& c) -> bool& { return c.validate; }));
    f.push_back({"train.negatives",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "per_example") c.negatives = objective::NegativeRefresh::kPerExample;
                   else if (v == "per_epoch") c.negatives = objective::NegativeRefresh::kPerEpoch;
                   else bad_value("train.negatives", v, "per_example or per_epoch");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.negatives == objective::NegativeRefresh::kPerEpoch ? "per_epoch" : "per_example");
                 }});
    f.push_back({"train.task_weights",
                 [](RunConfig& c, const std::string& v) {
                   const auto parts = split_list(v);
                   if (parts.size() != seq::kTaskCount) bad_value("train.task_weights", v, "four comma-separated weights");
                   for (std::size_t k = 0; k < seq::kTaskCount; ++k) {
                     c.task_weights[k] = parse_number<double>("train.task_weights", parts[k], "a number");
                   }
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (std::size_t k = 0; k < seq::kTaskCount; ++k) {
                     if (k) s += ",";
                     s += objective::format_double(c.task_weights[k]);
                   }
                   return s;
                 }});
    f.push_back(bool_field("eval.mae_circular", [](RunConfig& c) -> bool& { return c.mae_circular; }));

    f.push_back(double_field("gradcheck.h", [](RunConfig& c) -> double& { return c.gradcheck_h; }));
    f.push_back(size_field("gradcheck.samples", [](RunConfig& c) -> std::size_t& { return c.gradcheck_samples; }));
    f.push_back(double_field("gradcheck.tolerance", [](RunConfig& c) -> double& { return c.gradcheck_tolerance; }));
    return f;
  }();
  return table;
}

const Field& field(const std::string& key) {
  for (const Field& f : fields()) {
    if (key == f.key) return f;
  }
  fail(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
}

}  // namespace

std::filesystem::path RunConfig::checkpoint_path() const {
  return checkpoint.empty() ? std::filesystem::path(out_dir) / "model.ckpt" : std::filesystem::path(checkpoint);
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  field(key).set(config, value);
}

std::string get_config_value(const RunConfig& config, const std::string& key) { return field(key).get(config); }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.emplace_back(f.key);
  return keys;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kParse, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      set_config_value(base, key, trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(e.code(), "config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate_config(base);
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string config_to_text(const RunConfig& config) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

void validate_config(const RunConfig& c) {
  auto positive = [](const char* what, double v) {
    if (!(v > 0)) fail(ErrorCode::kInvalidArgument, std::string(what) + " must be positive");
  };
  positive("model.width", static_cast<double>(c.model.width));
  positive("model.max_len", static_cast<double>(c.model.max_len));
  positive("model.depth", static_cast<double>(c.model.depth));
  positive("model.streams", static_cast<double>(c.model.streams));
  positive("model.heads", static_cast<double>(c.model.heads));
  positive("model.embedding_std", c.model.embedding_std);
  positive("train.batch_size", static_cast<double>(c.batch_size));
  positive("train.lr", c.lr);
  positive("gradcheck.samples", static_cast<double>(c.gradcheck_samples));
  positive("gradcheck.tolerance", c.gradcheck_tolerance);
  if (c.model.max_len < 3) fail(ErrorCode::kInvalidArgument, "model.max_len must be at least 3");
  if (c.model.width % c.model.heads != 0) fail(ErrorCode::kInvalidArgument, "model.width must be divisible by model.heads");
  if (c.model.shared_experts + c.model.private_experts == 0) {
    fail(ErrorCode::kInvalidArgument, "at least one expert per task is required");
  }
  if (c.epochs == 0 && c.steps == 0) fail(ErrorCode::kInvalidArgument, "train.epochs or train.steps must be positive");
  bool any = false;
  for (bool t : c.model.tasks) any = any || t;
  if (!any) fail(ErrorCode::kInvalidArgument, "model.tasks must name at least one task");
}

}  // namespace inttravel::harness
