#include "objective/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "common/error.hpp"

namespace inttravel::objective {

std::vector<std::int64_t> rank_candidates(std::span<const double> scores, std::span<const std::int64_t> ids) {
  if (scores.size() != ids.size()) fail(ErrorCode::kShape, "rank_candidates: scores and ids differ in length");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  std::vector<std::int64_t> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(ids[i]);
  return out;
}

ClassificationMetrics classification_metrics(std::span<const std::int64_t> predictions,
                                             std::span<const std::int64_t> labels,
                                             std::span<const std::vector<std::int64_t>> rankings,
                                             std::optional<std::int64_t> circular_period) {
  if (labels.empty()) fail(ErrorCode::kInvalidArgument, "classification metrics over an empty set");
  if (predictions.size() != labels.size()) fail(ErrorCode::kShape, "predictions and labels differ in length");
  if (!rankings.empty() && rankings.size() != labels.size()) fail(ErrorCode::kShape, "rankings and labels differ in length");
  if (circular_period && *circular_period <= 0) fail(ErrorCode::kInvalidArgument, "circular period must be positive");

  ClassificationMetrics m;
  m.samples = labels.size();
  double hits = 0.0, abs_err = 0.0, misses = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == labels[i]) hits += 1.0;
    std::int64_t d = std::llabs(predictions[i] - labels[i]);
    if (circular_period) d = std::min(d % *circular_period, *circular_period - d % *circular_period);
    abs_err += static_cast<double>(d);
    if (!rankings.empty()) {
      const auto& r = rankings[i];
      const auto top = r.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(3, r.size()));
      if (std::find(r.begin(), top, labels[i]) == top) misses += 1.0;
    }
  }
  const double n = static_cast<double>(labels.size());
  m.acc = hits / n;
  m.mae = abs_err / n;
  m.bcr = misses / n;
  return m;
}

double RetrievalMetrics::hr(std::size_t n) const {
  for (const auto& [k, v] : hit_rate) {
    if (k == n) return v;
  }
  fail(ErrorCode::kInvalidArgument, "HR@" + std::to_string(n) + " was not computed");
}

RetrievalMetrics retrieval_metrics(std::span<const std::vector<std::int64_t>> rankings,
                                   std::span<const std::int64_t> ground_truth,
                                   const std::unordered_map<std::int64_t, std::int64_t>& category_of,
                                   std::span<const std::size_t> ns) {
  if (ground_truth.empty()) fail(ErrorCode::kInvalidArgument, "retrieval metrics over an empty set");
  if (rankings.size() != ground_truth.size()) fail(ErrorCode::kShape, "rankings and ground truth differ in length");
  auto category = [&](std::int64_t poi) {
    auto it = category_of.find(poi);
    if (it == category_of.end()) fail(ErrorCode::kValidation, "unknown POI " + std::to_string(poi) + " in ranking");
    return it->second;
  };

  RetrievalMetrics m;
  m.samples = ground_truth.size();
  std::vector<double> hits(ns.size(), 0.0);
  double inconsistent = 0.0;
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    const auto& r = rankings[i];
    if (r.empty()) fail(ErrorCode::kInvalidArgument, "empty ranking");
    for (std::int64_t poi : r) category(poi);
    const std::int64_t gt = ground_truth[i];
    const auto pos = std::find(r.begin(), r.end(), gt);
    const auto rank = static_cast<std::size_t>(pos - r.begin());
    for (std::size_t k = 0; k < ns.size(); ++k) {
      if (pos != r.end() && rank < ns[k]) hits[k] += 1.0;
    }
    if (r.front() != gt && category(r.front()) != category(gt)) inconsistent += 1.0;
  }
  const double n = static_cast<double>(ground_truth.size());
  for (std::size_t k = 0; k < ns.size(); ++k) m.hit_rate.emplace_back(ns[k], hits[k] / n);
  m.cir = inconsistent / n;
  return m;
}

void MetricsReport::set(const std::string& key, double value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

std::optional<double> MetricsReport::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string MetricsReport::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + format_double(v) + "\n";
  return out;
}

MetricsReport MetricsReport::parse(const std::string& text) {
  MetricsReport r;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) fail(ErrorCode::kParse, "metrics line " + std::to_string(lineno) + ": missing ' = '");
    const std::string value = line.substr(eq + 3);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      fail(ErrorCode::kParse, "metrics line " + std::to_string(lineno) + ": bad number '" + value + "'");
    }
    r.set(line.substr(0, eq), v);
  }
  return r;
}

}  // namespace inttravel::objective
