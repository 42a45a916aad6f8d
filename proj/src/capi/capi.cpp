#include "inttravel/inttravel.h"

#include <exception>
#include <new>
#include <string>

#include <spdlog/spdlog.h>

#include "common/error.hpp"
#include "harness/commands.hpp"

struct it_config {
  inttravel::harness::RunConfig value;
};

struct it_report {
  inttravel::objective::MetricsReport metrics;
  std::string text;
};

namespace {

thread_local std::string g_last_error;

it_status to_status(inttravel::ErrorCode code) { return static_cast<it_status>(static_cast<int>(code)); }

template <typename F>
it_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return IT_OK;
  } catch (const inttravel::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return IT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return IT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return IT_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) inttravel::fail(inttravel::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

it_report* make_report(inttravel::objective::MetricsReport metrics, std::string text = {}) {
  auto* r = new it_report{std::move(metrics), std::move(text)};
  if (r->text.empty()) r->text = r->metrics.to_text();
  return r;
}

}  // namespace

extern "C" {

const char* it_version(void) { return "0.1.0"; }

const char* it_status_name(it_status status) {
  if (status == IT_OK) return "ok";
  if (status < IT_ERR_INVALID_ARGUMENT || status > IT_ERR_INTERNAL) return "unknown";
  return inttravel::error_code_name(static_cast<inttravel::ErrorCode>(status));
}

const char* it_last_error(void) { return g_last_error.c_str(); }

void it_set_verbosity(int level) {
  spdlog::set_level(level <= 0 ? spdlog::level::warn : level == 1 ? spdlog::level::info : spdlog::level::debug);
}

it_status it_config_create(it_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new it_config{};
  });
}

it_status it_config_load(const char* path, it_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new it_config{inttravel::harness::load_config(path)};
  });
}

it_status it_config_set(it_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    inttravel::harness::RunConfig next = config->value;
    inttravel::harness::set_config_value(next, key, value);
    config->value = next;
  });
}

it_status it_config_to_text(const it_config* config, it_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    *out = make_report({}, inttravel::harness::config_to_text(config->value));
  });
}

void it_config_destroy(it_config* config) { delete config; }

size_t it_report_size(const it_report* report) { return report ? report->metrics.entries().size() : 0; }

const char* it_report_key(const it_report* report, size_t index) {
  if (!report || index >= report->metrics.entries().size()) return nullptr;
  return report->metrics.entries()[index].first.c_str();
}

double it_report_value(const it_report* report, size_t index) {
  if (!report || index >= report->metrics.entries().size()) return 0.0;
  return report->metrics.entries()[index].second;
}

int it_report_get(const it_report* report, const char* key, double* value) {
  if (!report || !key) return 0;
  const auto v = report->metrics.get(key);
  if (!v) return 0;
  if (value) *value = *v;
  return 1;
}

const char* it_report_text(const it_report* report) { return report ? report->text.c_str() : ""; }

void it_report_destroy(it_report* report) { delete report; }

it_status it_generate(const it_config* config, const char* out_dir) {
  return guarded([&] {
    require(config, "config");
    require(out_dir, "out_dir");
    inttravel::harness::cmd_generate(config->value, out_dir);
  });
}

it_status it_train(const it_config* config, const char* resume_checkpoint, it_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    inttravel::harness::validate_config(config->value);
    const auto result = inttravel::harness::cmd_train(config->value, resume_checkpoint ? resume_checkpoint : "");
    inttravel::objective::MetricsReport m;
    m.set("train.steps", static_cast<double>(result.summary.steps));
    m.set("train.seconds", result.summary.seconds);
    m.set("train.stopped_by_budget", result.summary.stopped_by_budget ? 1.0 : 0.0);
    if (!result.summary.log.empty()) {
      m.set("train.first_step", static_cast<double>(result.summary.log.front().step));
      m.set("train.first_loss", result.summary.log.front().total);
      m.set("train.last_loss", result.summary.log.back().total);
    }
    for (const auto& [k, v] : result.validation.entries()) m.set("validation." + k, v);
    *out = make_report(std::move(m));
  });
}

it_status it_eval(const it_config* config, const char* checkpoint, const char* split, it_report** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    require(split, "split");
    const auto s = inttravel::harness::split_from_name(split);
    if (!s) {
      inttravel::fail(inttravel::ErrorCode::kInvalidArgument,
                      std::string("unknown split '") + split + "'; expected validation or test");
    }
    const std::filesystem::path ck = checkpoint ? std::filesystem::path(checkpoint) : config->value.checkpoint_path();
    *out = make_report(inttravel::harness::cmd_eval(config->value, ck, *s));
  });
}

it_status it_ablate(const it_config* config, const char* variant, it_report** out) {
  return guarded([&] {
    require(config, "config");
    require(variant, "variant");
    require(out, "out");
    *out = make_report(inttravel::harness::cmd_ablate(config->value, variant));
  });
}

it_status it_gradcheck(const it_config* config, it_report** out, int* passed) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    const auto result = inttravel::harness::cmd_gradcheck(config->value);
    inttravel::objective::MetricsReport m;
    for (const auto& p : result.report.per_param) m.set(p.name, p.worst);
    m.set("worst", result.report.worst);
    m.set("seconds", result.seconds);
    *out = make_report(std::move(m), result.to_text());
    if (passed) *passed = result.passed() ? 1 : 0;
  });
}

}  // extern "C"
