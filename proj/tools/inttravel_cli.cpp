// Command-line front end over the C API.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "inttravel/inttravel.h"

namespace {

struct ConfigDeleter {
  void operator()(it_config* c) const { it_config_destroy(c); }
};
struct ReportDeleter {
  void operator()(it_report* r) const { it_report_destroy(r); }
};
using ConfigPtr = std::unique_ptr<it_config, ConfigDeleter>;
using ReportPtr = std::unique_ptr<it_report, ReportDeleter>;

class Failure {
 public:
  explicit Failure(it_status s) : status(s) {}
  it_status status;
};

void check(it_status s) {
  if (s != IT_OK) throw Failure(s);
}

struct Options {
  std::string config_path;
  std::string seed;
  std::string out;
  std::string variant;
  std::vector<std::string> overrides;  // key=value
};

ConfigPtr build_config(const Options& opt, const char* out_key) {
  it_config* raw = nullptr;
  check(opt.config_path.empty() ? it_config_create(&raw) : it_config_load(opt.config_path.c_str(), &raw));
  ConfigPtr cfg(raw);
  for (const std::string& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      throw Failure(IT_ERR_INVALID_ARGUMENT);
    }
    check(it_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
  if (!opt.seed.empty()) check(it_config_set(cfg.get(), "seed", opt.seed.c_str()));
  if (!opt.out.empty() && out_key) check(it_config_set(cfg.get(), out_key, opt.out.c_str()));
  if (!opt.variant.empty()) check(it_config_set(cfg.get(), "model.variant", opt.variant.c_str()));
  return cfg;
}

// Training allocates and frees megabyte-sized buffers at a high rate; keep
// them in the heap instead of round-tripping through mmap.
void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

void print_report(const it_report* r) { std::fputs(it_report_text(r), stdout); }

void add_common(CLI::App* cmd, Options& opt, bool with_variant) {
  cmd->add_option("--config", opt.config_path, "flat key = value config file");
  cmd->add_option("--seed", opt.seed, "run seed");
  cmd->add_option("--set", opt.overrides, "config override key=value (repeatable)");
  if (with_variant) cmd->add_option("--variant", opt.variant, "model variant");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task travel intention model: data generation, training, evaluation"};
  app.require_subcommand(1);
  int verbosity = 1;
  app.add_option("--verbosity", verbosity, "0 quiet, 1 info, 2 debug")->capture_default_str();

  Options opt;
  std::string checkpoint, split = "test", resume;

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(gen, opt, false);
  gen->add_option("--out", opt.out, "output directory")->required();

  auto* train = app.add_subcommand("train", "train and checkpoint a model");
  add_common(train, opt, true);
  train->add_option("--out", opt.out, "run directory");
  train->add_option("--resume", resume, "checkpoint to resume from");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, opt, false);
  eval->add_option("--out", opt.out, "directory for the metrics file");
  eval->add_option("--checkpoint", checkpoint, "checkpoint (default <out_dir>/model.ckpt)");
  eval->add_option("--split", split, "validation or test")->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "train and evaluate one ablation variant");
  add_common(ablate, opt, false);
  ablate->add_option("--variant", opt.variant, "ablation variant")->required();
  ablate->add_option("--out", opt.out, "parent run directory");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the tiny model");
  add_common(grad, opt, false);

  CLI11_PARSE(app, argc, argv);
  tune_allocator();
  it_set_verbosity(verbosity);

  try {
    if (gen->parsed()) {
      ConfigPtr cfg = build_config(opt, "data_dir");
      check(it_generate(cfg.get(), opt.out.c_str()));
      std::printf("wrote dataset to %s\n", opt.out.c_str());
    } else if (train->parsed()) {
      ConfigPtr cfg = build_config(opt, "out_dir");
      it_report* raw = nullptr;
      check(it_train(cfg.get(), resume.empty() ? nullptr : resume.c_str(), &raw));
      print_report(ReportPtr(raw).get());
    } else if (eval->parsed()) {
      ConfigPtr cfg = build_config(opt, "out_dir");
      it_report* raw = nullptr;
      check(it_eval(cfg.get(), checkpoint.empty() ? nullptr : checkpoint.c_str(), split.c_str(), &raw));
      print_report(ReportPtr(raw).get());
    } else if (ablate->parsed()) {
      const std::string variant = opt.variant;
      opt.variant.clear();  // passed to it_ablate, not as a config override
      ConfigPtr cfg = build_config(opt, "out_dir");
      it_report* raw = nullptr;
      check(it_ablate(cfg.get(), variant.c_str(), &raw));
      print_report(ReportPtr(raw).get());
    } else if (grad->parsed()) {
      ConfigPtr cfg = build_config(opt, nullptr);
      it_report* raw = nullptr;
      int passed = 0;
      check(it_gradcheck(cfg.get(), &raw, &passed));
      print_report(ReportPtr(raw).get());
      return passed ? 0 : 1;
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", it_status_name(f.status), it_last_error());
    return 2;
  }
  return 0;
}
