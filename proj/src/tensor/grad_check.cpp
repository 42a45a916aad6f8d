#include "tensor/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace inttravel::tensor {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

std::vector<std::size_t> pick_coordinates(std::span<const double> grad, std::size_t numel,
                                          std::size_t samples, Rng& rng) {
  std::vector<std::size_t> all(numel);
  std::iota(all.begin(), all.end(), 0);
  if (numel <= samples) return all;

  std::vector<std::size_t> nonzero;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (grad[i] != 0.0) nonzero.push_back(i);
  }
  std::vector<std::size_t> picked;
  const std::size_t from_nonzero = std::min(nonzero.size(), samples / 2);
  std::shuffle(nonzero.begin(), nonzero.end(), rng);
  picked.assign(nonzero.begin(), nonzero.begin() + static_cast<std::ptrdiff_t>(from_nonzero));
  std::shuffle(all.begin(), all.end(), rng);
  for (std::size_t i : all) {
    if (picked.size() >= samples) break;
    if (std::find(picked.begin(), picked.end(), i) == picked.end()) picked.push_back(i);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

double eval_at(const std::function<Tensor()>& loss_fn, const std::string& param) {
  double v = 0.0;
  try {
    v = loss_fn().item();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonFinite) throw;
    fail(ErrorCode::kNonFinite, "grad_check: perturbing " + param + " produced " + e.what());
  }
  if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "grad_check: non-finite loss when perturbing " + param);
  return v;
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, ParameterStore& store,
                           const GradCheckOptions& options) {
  if (!(options.h >= 1e-6 && options.h <= 1e-4)) {
    fail(ErrorCode::kInvalidArgument, "grad_check: step h must lie in [1e-6, 1e-4]");
  }
  store.zero_grad();
  Tensor loss = loss_fn();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(store.size());
  for (const Parameter& p : store.params()) {
    auto g = p.value.grad();
    analytic.emplace_back(g.begin(), g.end());
    if (analytic.back().empty()) analytic.back().assign(p.value.numel(), 0.0);
  }
  store.zero_grad();

  Rng rng(derive_seed(options.seed, {0x67726164ULL}));
  GradCheckReport report;
  for (std::size_t pi = 0; pi < store.size(); ++pi) {
    Parameter& p = store.params()[pi];
    auto coords = pick_coordinates(analytic[pi], p.value.numel(), options.samples_per_param, rng);
    ParamGradError err{p.name, 0.0, coords.size()};
    for (std::size_t idx : coords) {
      auto w = p.value.mutable_values();
      const double orig = w[idx];
      w[idx] = orig + options.h;
      const double up = eval_at(loss_fn, p.name);
      w = p.value.mutable_values();
      w[idx] = orig - options.h;
      const double down = eval_at(loss_fn, p.name);
      w = p.value.mutable_values();
      w[idx] = orig;
      const double numeric = (up - down) / (2.0 * options.h);
      err.worst = std::max(err.worst, relative_error(analytic[pi][idx], numeric));
    }
    if (report.worst_param.empty() || err.worst > report.worst) {
      report.worst = err.worst;
      report.worst_param = p.name;
    }
    report.per_param.push_back(std::move(err));
  }
  return report;
}

}  // namespace inttravel::tensor
