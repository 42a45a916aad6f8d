#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace oracle {

double softmax_nll(const std::vector<double>& logits) {
  double mx = logits[0];
  for (double x : logits) mx = std::max(mx, x);
  double z = 0.0;
  for (double x : logits) z += std::exp(x - mx);
  return -(logits[0] - mx - std::log(z));
}

double mean_softmax_nll(const std::vector<std::vector<double>>& rows) {
  double s = 0.0;
  for (const auto& r : rows) s += softmax_nll(r);
  return s / static_cast<double>(rows.size());
}

std::vector<std::int64_t> rank(const std::vector<double>& scores, const std::vector<std::int64_t>& ids) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::size_t pos = idx.size();
    while (pos > 0) {
      const std::size_t o = idx[pos - 1];
      const bool before = scores[i] > scores[o] || (scores[i] == scores[o] && ids[i] < ids[o]);
      if (!before) break;
      --pos;
    }
    idx.insert(idx.begin() + static_cast<std::ptrdiff_t>(pos), i);
  }
  std::vector<std::int64_t> out;
  for (std::size_t i : idx) out.push_back(ids[i]);
  return out;
}

Classification classification(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& label,
                              const std::vector<std::vector<std::int64_t>>& rankings,
                              std::optional<std::int64_t> period) {
  Classification c;
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == label[i]) c.acc += 1.0;
    std::int64_t d = std::llabs(pred[i] - label[i]);
    if (period) d = std::min(d, *period - d);
    c.mae += static_cast<double>(d);
  }
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    bool hit = false;
    for (std::size_t j = 0; j < 3 && j < rankings[i].size(); ++j) hit = hit || rankings[i][j] == label[i];
    if (!hit) c.bcr += 1.0;
  }
  c.acc /= n;
  c.mae /= n;
  if (!rankings.empty()) c.bcr /= static_cast<double>(rankings.size());
  return c;
}

Retrieval retrieval(const std::vector<std::vector<std::int64_t>>& rankings, const std::vector<std::int64_t>& gt,
                    const std::unordered_map<std::int64_t, std::int64_t>& category) {
  Retrieval r;
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    const auto& rk = rankings[i];
    if (rk[0] == gt[i]) r.hr1 += 1.0;
    for (std::size_t j = 0; j < 5 && j < rk.size(); ++j) {
      if (rk[j] == gt[i]) {
        r.hr5 += 1.0;
        break;
      }
    }
    if (rk[0] != gt[i] && category.at(rk[0]) != category.at(gt[i])) r.cir += 1.0;
  }
  const double n = static_cast<double>(rankings.size());
  r.hr1 /= n;
  r.hr5 /= n;
  r.cir /= n;
  return r;
}

std::size_t time_bucket_by_bounds(std::int64_t delta_ms) {
  if (delta_ms <= 0) return 0;
  const double max_ms = 90.0 * 86400.0 * 1000.0;
  // Bucket b ≥ 1 holds Δt with 90d^((b−1)/30) ≤ Δt < 90d^(b/30); everything
  // past the last bound saturates at 31.
  for (std::size_t b = 1; b < 31; ++b) {
    const double upper = std::pow(max_ms, static_cast<double>(b) / 30.0);
    if (static_cast<double>(delta_ms) < upper) return b;
  }
  return 31;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

Mat hstu_attention(const Mat& q, const Mat& k, const Mat& v, const std::vector<double>& pos_bias,
                   const std::vector<double>& time_bias, const std::vector<std::int64_t>& timestamps,
                   std::size_t max_len) {
  const std::size_t t = q.size(), d = q[0].size();
  Mat out(t, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q[i][c] * k[j][c];
      s += pos_bias[i - j + max_len - 1];
      if (!time_bias.empty()) s += time_bias[time_bucket_by_bounds(timestamps[i] - timestamps[j])];
      for (std::size_t c = 0; c < d; ++c) out[i][c] += silu(s) * v[j][c];
    }
    for (std::size_t c = 0; c < d; ++c) out[i][c] /= static_cast<double>(i + 1);
  }
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    }
  }
  return out;
}

Mat layer_norm(const Mat& a, double eps) {
  Mat out = a;
  for (auto& row : out) {
    double mean = 0.0, var = 0.0;
    for (double x : row) mean += x;
    mean /= static_cast<double>(row.size());
    for (double x : row) var += (x - mean) * (x - mean);
    var /= static_cast<double>(row.size());
    for (double& x : row) x = (x - mean) / std::sqrt(var + eps);
  }
  return out;
}

}  // namespace oracle
