#include "model/hstu.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "model/init.hpp"
#include "tensor/ops.hpp"

namespace inttravel::model {

namespace ops = tensor::ops;

std::size_t time_bucket(std::int64_t delta_ms) {
  if (delta_ms <= 0) return 0;
  static const double kLogMax = std::log2(static_cast<double>(kMaxDeltaMs));
  const double frac = std::log2(static_cast<double>(delta_ms)) / kLogMax;
  const auto b = 1 + static_cast<std::int64_t>(std::floor(frac * static_cast<double>(kTimeBuckets - 2)));
  return static_cast<std::size_t>(std::clamp<std::int64_t>(b, 1, kTimeBuckets - 1));
}

std::size_t position_bucket(std::int64_t offset, std::size_t max_len) {
  const auto m = static_cast<std::int64_t>(max_len);
  if (offset <= -m || offset >= m) {
    fail(ErrorCode::kInvalidArgument,
         "relative offset " + std::to_string(offset) + " outside max_len " + std::to_string(max_len));
  }
  return static_cast<std::size_t>(offset + m - 1);
}

TokenLayout TokenLayout::of(const seq::Batch& batch) {
  TokenLayout l;
  l.sequences = batch.sequences;
  l.max_len = batch.max_len;
  l.total_rows = batch.tokens();
  l.lengths = batch.lengths;
  l.offsets.resize(batch.sequences);
  for (std::size_t s = 0; s < batch.sequences; ++s) l.offsets[s] = s * batch.max_len;
  l.positions = batch.position;
  l.timestamps = batch.timestamp;
  return l;
}

TokenLayout TokenLayout::single(std::vector<std::int64_t> timestamps) {
  TokenLayout l;
  l.sequences = 1;
  l.max_len = timestamps.size();
  l.total_rows = timestamps.size();
  l.lengths = {timestamps.size()};
  l.offsets = {0};
  l.positions.resize(timestamps.size());
  for (std::size_t i = 0; i < timestamps.size(); ++i) l.positions[i] = static_cast<std::int64_t>(i);
  l.timestamps = std::move(timestamps);
  return l;
}

TokenLayout TokenLayout::packed(std::vector<std::int64_t>& gather, std::vector<std::int64_t>& scatter) const {
  TokenLayout p;
  p.sequences = sequences;
  p.max_len = max_len;
  p.lengths = lengths;
  p.offsets.resize(sequences);
  gather.clear();
  scatter.assign(total_rows, -1);
  for (std::size_t s = 0; s < sequences; ++s) {
    p.offsets[s] = gather.size();
    for (std::size_t i = 0; i < lengths[s]; ++i) {
      const std::size_t r = offsets[s] + i;
      scatter[r] = static_cast<std::int64_t>(gather.size());
      gather.push_back(static_cast<std::int64_t>(r));
      p.positions.push_back(positions[r]);
      p.timestamps.push_back(timestamps[r]);
    }
  }
  p.total_rows = gather.size();
  return p;
}

HstuLayer HstuLayer::create(ParameterStore& store, const std::string& prefix, std::size_t width,
                            std::size_t heads, std::size_t max_len, Rng& rng) {
  if (width == 0 || heads == 0 || width % heads != 0) {
    fail(ErrorCode::kInvalidArgument, "HSTU width " + std::to_string(width) + " not divisible by heads " +
                                          std::to_string(heads));
  }
  HstuLayer l;
  l.width = width;
  l.heads = heads;
  l.head_dim = width / heads;
  l.max_len = max_len;
  const std::size_t d = l.inner();
  l.f1_w = store.add(prefix + ".f1.w", {width, 4 * d}, lecun_values(width, 4 * d, rng));
  l.f1_b = store.add(prefix + ".f1.b", {1, 4 * d}, std::vector<double>(4 * d, 0.0));
  l.f2_w = store.add(prefix + ".f2.w", {d, width}, lecun_values(d, width, rng));
  l.f2_b = store.add(prefix + ".f2.b", {1, width}, std::vector<double>(width, 0.0));
  l.pos_bias = store.add(prefix + ".rab_pos", {heads, 2 * max_len - 1}, std::vector<double>(heads * (2 * max_len - 1), 0.0));
  l.time_bias = store.add(prefix + ".rab_time", {heads, kTimeBuckets}, std::vector<double>(heads * kTimeBuckets, 0.0));
  return l;
}

Tensor relative_bias(const HstuLayer& layer, std::span<const std::int64_t> positions,
                     std::span<const std::int64_t> timestamps, bool use_time_bias) {
  if (positions.size() != timestamps.size() || positions.empty()) {
    fail(ErrorCode::kShape, "relative_bias: positions and timestamps must be non-empty and equal length");
  }
  const std::size_t t = positions.size(), h = layer.heads;
  const auto& pb = layer.pos_bias.values();
  const auto& tb = layer.time_bias.values();
  const std::size_t pw = layer.pos_bias.cols();
  std::vector<double> out(h * t * t);
  for (std::size_t hh = 0; hh < h; ++hh) {
    for (std::size_t i = 0; i < t; ++i) {
      for (std::size_t j = 0; j < t; ++j) {
        double b = pb[hh * pw + position_bucket(positions[i] - positions[j], layer.max_len)];
        if (use_time_bias) b += tb[hh * kTimeBuckets + time_bucket(timestamps[i] - timestamps[j])];
        out[(hh * t + i) * t + j] = b;
      }
    }
  }
  return Tensor::from({h, t, t}, std::move(out));
}

namespace {

inline double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void check_layout(const TokenLayout& layout, const HstuLayer& layer) {
  const std::size_t n = layout.rows();
  if (layout.lengths.size() != layout.sequences || layout.offsets.size() != layout.sequences ||
      layout.positions.size() != n || layout.timestamps.size() != n) {
    fail(ErrorCode::kShape, "token layout is inconsistent");
  }
  for (std::size_t s = 0; s < layout.sequences; ++s) {
    const std::size_t len = layout.lengths[s];
    if (len > layout.max_len) fail(ErrorCode::kShape, "sequence length exceeds padded length");
    if (layout.offsets[s] + len > n) fail(ErrorCode::kShape, "sequence overruns the token rows");
    if (len > layer.max_len) {
      fail(ErrorCode::kInvalidArgument, "sequence of " + std::to_string(len) + " tokens exceeds model max_len " +
                                            std::to_string(layer.max_len));
    }
  }
}

}  // namespace

Tensor pointwise_attention(const Tensor& q, const Tensor& k, const Tensor& v, const HstuLayer& layer,
                           const TokenLayout& layout, bool use_time_bias) {
  check_layout(layout, layer);
  const std::size_t n = layout.rows(), d = layer.inner(), dh = layer.head_dim, heads = layer.heads;
  for (const Tensor* t : {&q, &k, &v}) {
    if (t->rows() != n || t->cols() != d) {
      fail(ErrorCode::kShape, "pointwise_attention: expected " + std::to_string(n) + "×" + std::to_string(d) +
                                  ", got " + tensor::shape_str(t->shape()));
    }
  }
  const std::size_t pw = layer.pos_bias.cols();

  // Bucket indices per causal pair (i, j ≤ i), shared by forward and backward.
  struct Pair {
    std::uint32_t pos;
    std::uint32_t time;
  };
  auto pairs = std::make_shared<std::vector<Pair>>();
  for (std::size_t s = 0; s < layout.sequences; ++s) {
    const std::size_t base = layout.offsets[s];
    for (std::size_t i = 0; i < layout.lengths[s]; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        const std::size_t ri = base + i, rj = base + j;
        pairs->push_back({static_cast<std::uint32_t>(
                              position_bucket(layout.positions[ri] - layout.positions[rj], layer.max_len)),
                          static_cast<std::uint32_t>(time_bucket(layout.timestamps[ri] - layout.timestamps[rj]))});
      }
    }
  }

  const auto& qv = q.values();
  const auto& kv = k.values();
  const auto& vv = v.values();
  const auto& pb = layer.pos_bias.values();
  const auto& tb = layer.time_bias.values();
  std::vector<double> out(n * d, 0.0);
  auto scores = std::make_shared<std::vector<double>>(pairs->size() * heads);

  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    std::size_t pi = 0;
    for (std::size_t s = 0; s < layout.sequences; ++s) {
      const std::size_t base = layout.offsets[s];
      for (std::size_t i = 0; i < layout.lengths[s]; ++i) {
        const double* qi = qv.data() + (base + i) * d + off;
        double* oi = out.data() + (base + i) * d + off;
        for (std::size_t j = 0; j <= i; ++j, ++pi) {
          const Pair& p = (*pairs)[pi];
          double sc = dot(qi, kv.data() + (base + j) * d + off, dh) + pb[h * pw + p.pos];
          if (use_time_bias) sc += tb[h * kTimeBuckets + p.time];
          (*scores)[h * pairs->size() + pi] = sc;
          axpy(sc * sigmoid_scalar(sc), vv.data() + (base + j) * d + off, oi, dh);
        }
        const double inv = 1.0 / static_cast<double>(i + 1);
        for (std::size_t c = 0; c < dh; ++c) oi[c] *= inv;
      }
    }
  }

  std::vector<Tensor> inputs = {q, k, v, layer.pos_bias};
  if (use_time_bias) inputs.push_back(layer.time_bias);
  return tensor::make_result(
      "hstu_attention", {n, d}, std::move(out), std::move(inputs),
      [pairs, scores, lengths = layout.lengths, offsets = layout.offsets, d, dh, heads, pw,
       use_time_bias](tensor::Node& node) {
        const auto& qv = node.parents[0]->value;
        const auto& kv = node.parents[1]->value;
        const auto& vv = node.parents[2]->value;
        double* gq = parent_grad(node, 0);
        double* gk = parent_grad(node, 1);
        double* gv = parent_grad(node, 2);
        double* gpb = parent_grad(node, 3);
        double* gtb = use_time_bias ? parent_grad(node, 4) : nullptr;
        const auto& go = node.grad;
        std::vector<double> g(dh);
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t off = h * dh;
          std::size_t pi = 0;
          for (std::size_t s = 0; s < lengths.size(); ++s) {
            const std::size_t base = offsets[s];
            for (std::size_t i = 0; i < lengths[s]; ++i) {
              const std::size_t ri = base + i;
              const double inv = 1.0 / static_cast<double>(i + 1);
              for (std::size_t c = 0; c < dh; ++c) g[c] = go[ri * d + off + c] * inv;
              for (std::size_t j = 0; j <= i; ++j, ++pi) {
                const std::size_t rj = base + j;
                const double sc = (*scores)[h * pairs->size() + pi];
                const double sg = sigmoid_scalar(sc);
                const double a = sc * sg;
                if (gv) axpy(a, g.data(), gv + rj * d + off, dh);
                const double da = dot(g.data(), vv.data() + rj * d + off, dh);
                const double ds = da * sg * (1.0 + sc * (1.0 - sg));
                if (gq) axpy(ds, kv.data() + rj * d + off, gq + ri * d + off, dh);
                if (gk) axpy(ds, qv.data() + ri * d + off, gk + rj * d + off, dh);
                const Pair& p = (*pairs)[pi];
                if (gpb) gpb[h * pw + p.pos] += ds;
                if (gtb) gtb[h * kTimeBuckets + p.time] += ds;
              }
            }
          }
        }
      });
}

Tensor hstu_layer_forward(const HstuLayer& layer, const Tensor& x, const TokenLayout& layout, bool use_time_bias) {
  if (x.cols() != layer.width) {
    fail(ErrorCode::kShape, "hstu_layer_forward: input width " + std::to_string(x.cols()) + " vs layer " +
                                std::to_string(layer.width));
  }
  const std::size_t d = layer.inner();
  const Tensor h = ops::silu(ops::add(ops::matmul(x, layer.f1_w), layer.f1_b));
  const Tensor u = ops::slice_cols(h, 0, d);
  const Tensor v = ops::slice_cols(h, d, d);
  const Tensor q = ops::slice_cols(h, 2 * d, d);
  const Tensor k = ops::slice_cols(h, 3 * d, d);
  const Tensor a = pointwise_attention(q, k, v, layer, layout, use_time_bias);
  return ops::add(ops::matmul(ops::mul(ops::layer_norm_rows(a), u), layer.f2_w), layer.f2_b);
}

}  // namespace inttravel::model
