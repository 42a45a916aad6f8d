#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace inttravel::objective {

// Candidate ids ordered by descending score; ties go to the smaller id.
std::vector<std::int64_t> rank_candidates(std::span<const double> scores, std::span<const std::int64_t> ids);

struct ClassificationMetrics {
  double acc = 0.0;
  double mae = 0.0;
  double bcr = 0.0;  // top-3 miss rate; 0 when no rankings are given
  std::size_t samples = 0;
};

// MAE is |pred − label| in class units; with circular_period set it is the
// shorter way round a clock of that many classes.
ClassificationMetrics classification_metrics(std::span<const std::int64_t> predictions,
                                             std::span<const std::int64_t> labels,
                                             std::span<const std::vector<std::int64_t>> rankings,
                                             std::optional<std::int64_t> circular_period = std::nullopt);

struct RetrievalMetrics {
  std::vector<std::pair<std::size_t, double>> hit_rate;  // (N, HR@N)
  double cir = 0.0;
  std::size_t samples = 0;

  double hr(std::size_t n) const;
};

RetrievalMetrics retrieval_metrics(std::span<const std::vector<std::int64_t>> rankings,
                                   std::span<const std::int64_t> ground_truth,
                                   const std::unordered_map<std::int64_t, std::int64_t>& category_of,
                                   std::span<const std::size_t> ns);

// Flat ordered key/value report, serialized one `key = value` per line.
class MetricsReport {
 public:
  void set(const std::string& key, double value);
  std::optional<double> get(const std::string& key) const;
  bool contains(const std::string& key) const { return get(key).has_value(); }
  const std::vector<std::pair<std::string, double>>& entries() const { return entries_; }

  std::string to_text() const;
  static MetricsReport parse(const std::string& text);

 private:
  std::vector<std::pair<std::string, double>> entries_;
};

std::string format_double(double v);  // shortest round-trip form

}  // namespace inttravel::objective
