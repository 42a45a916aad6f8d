#include "tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "common/error.hpp"

namespace inttravel::tensor::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap view(const std::vector<double>& v, std::size_t r, std::size_t c) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

MutMap view(std::vector<double>& v, std::size_t r, std::size_t c) {
  return MutMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

void require_2d(const Tensor& t, const char* op) {
  if (!t.defined()) fail(ErrorCode::kInvalidArgument, std::string(op) + ": undefined tensor");
  if (t.rank() > 2) {
    fail(ErrorCode::kShape, std::string(op) + ": expected rank ≤ 2, got " + shape_str(t.shape()));
  }
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  fail(ErrorCode::kShape,
       std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

// Gradient sink for parent i, or nullptr when that parent is untracked.
double* sink(Node& n, std::size_t i) {
  Node* p = n.parents[i].get();
  return p->requires_grad ? p->grad_buffer().data() : nullptr;
}

const std::vector<double>& pval(Node& n, std::size_t i) { return n.parents[i]->value; }

enum class Binary { kAdd, kSub, kMul };

Tensor broadcast_binary(const Tensor& a, const Tensor& b, Binary kind, const char* op) {
  require_2d(a, op);
  require_2d(b, op);
  const std::size_t ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
  if ((ra != rb && ra != 1 && rb != 1) || (ca != cb && ca != 1 && cb != 1)) shape_mismatch(op, a, b);
  const std::size_t r = std::max(ra, rb), c = std::max(ca, cb);
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  std::vector<double> out(r * c);

  const bool same = ra == rb && ca == cb;
  if (same) {
    const std::size_t m = r * c;
    const double* x = av.data();
    const double* y = bv.data();
    switch (kind) {
      case Binary::kAdd: for (std::size_t i = 0; i < m; ++i) out[i] = x[i] + y[i]; break;
      case Binary::kSub: for (std::size_t i = 0; i < m; ++i) out[i] = x[i] - y[i]; break;
      case Binary::kMul: for (std::size_t i = 0; i < m; ++i) out[i] = x[i] * y[i]; break;
    }
  }
  for (std::size_t i = 0; !same && i < r; ++i) {
    const double* ar = av.data() + (ra == 1 ? 0 : i) * ca;
    const double* br = bv.data() + (rb == 1 ? 0 : i) * cb;
    double* o = out.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) {
      const double x = same ? ar[j] : ar[ca == 1 ? 0 : j];
      const double y = same ? br[j] : br[cb == 1 ? 0 : j];
      switch (kind) {
        case Binary::kAdd: o[j] = x + y; break;
        case Binary::kSub: o[j] = x - y; break;
        case Binary::kMul: o[j] = x * y; break;
      }
    }
  }

  if (same) {
    return make_result(op, {r, c}, std::move(out), {a, b}, [kind](Node& n) {
      const auto& g = n.grad;
      const std::size_t m = g.size();
      double* ga = sink(n, 0);
      double* gb = sink(n, 1);
      const double* x = pval(n, 0).data();
      const double* y = pval(n, 1).data();
      if (kind == Binary::kMul) {
        if (ga) for (std::size_t i = 0; i < m; ++i) ga[i] += g[i] * y[i];
        if (gb) for (std::size_t i = 0; i < m; ++i) gb[i] += g[i] * x[i];
        return;
      }
      if (ga) for (std::size_t i = 0; i < m; ++i) ga[i] += g[i];
      if (gb) {
        if (kind == Binary::kAdd) {
          for (std::size_t i = 0; i < m; ++i) gb[i] += g[i];
        } else {
          for (std::size_t i = 0; i < m; ++i) gb[i] -= g[i];
        }
      }
    });
  }
  return make_result(op, {r, c}, std::move(out), {a, b},
                     [=](Node& n) {
                       const auto& g = n.grad;
                       double* ga = sink(n, 0);
                       double* gb = sink(n, 1);
                       const auto& x = pval(n, 0);
                       const auto& y = pval(n, 1);
                       for (std::size_t i = 0; i < r; ++i) {
                         const std::size_t ia = (ra == 1 ? 0 : i) * ca;
                         const std::size_t ib = (rb == 1 ? 0 : i) * cb;
                         for (std::size_t j = 0; j < c; ++j) {
                           const std::size_t pa = ia + (ca == 1 ? 0 : j);
                           const std::size_t pb = ib + (cb == 1 ? 0 : j);
                           const double gij = g[i * c + j];
                           switch (kind) {
                             case Binary::kAdd:
                               if (ga) ga[pa] += gij;
                               if (gb) gb[pb] += gij;
                               break;
                             case Binary::kSub:
                               if (ga) ga[pa] += gij;
                               if (gb) gb[pb] -= gij;
                               break;
                             case Binary::kMul:
                               if (ga) ga[pa] += gij * y[pb];
                               if (gb) gb[pb] += gij * x[pa];
                               break;
                           }
                         }
                       }
                     });
}

template <typename F, typename D>
Tensor unary(const Tensor& a, const char* op, F f, D dfdx) {
  require_2d(a, op);
  const auto& av = a.node()->value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  return make_result(op, {a.rows(), a.cols()}, std::move(out), {a}, [dfdx](Node& n) {
    double* ga = sink(n, 0);
    const auto& x = pval(n, 0);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += n.grad[i] * dfdx(x[i], n.value[i]);
  });
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_mismatch("matmul", a, b);
  std::vector<double> out(m * n);
  view(out, m, n).noalias() = view(a.node()->value, m, k) * view(b.node()->value, k, n);
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& node) {
    auto g = view(node.grad, m, n);
    if (double* ga = sink(node, 0)) {
      MutMap(ga, m, k).noalias() += g * view(pval(node, 1), k, n).transpose();
    }
    if (double* gb = sink(node, 1)) {
      MutMap(gb, k, n).noalias() += view(pval(node, 0), m, k).transpose() * g;
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) shape_mismatch("matmul_nt", a, b);
  std::vector<double> out(m * n);
  view(out, m, n).noalias() = view(a.node()->value, m, k) * view(b.node()->value, n, k).transpose();
  return make_result("matmul_nt", {m, n}, std::move(out), {a, b}, [m, k, n](Node& node) {
    auto g = view(node.grad, m, n);
    if (double* ga = sink(node, 0)) {
      MutMap(ga, m, k).noalias() += g * view(pval(node, 1), n, k);
    }
    if (double* gb = sink(node, 1)) {
      MutMap(gb, n, k).noalias() += g.transpose() * view(pval(node, 0), m, k);
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return broadcast_binary(a, b, Binary::kAdd, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return broadcast_binary(a, b, Binary::kSub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return broadcast_binary(a, b, Binary::kMul, "mul"); }

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, "scale", [factor](double x) { return x * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_n(std::span<const Tensor> xs) {
  if (xs.empty()) fail(ErrorCode::kInvalidArgument, "add_n: empty input list");
  const std::size_t r = xs[0].rows(), c = xs[0].cols();
  std::vector<double> out(r * c, 0.0);
  for (const Tensor& x : xs) {
    require_2d(x, "add_n");
    if (x.rows() != r || x.cols() != c) shape_mismatch("add_n", xs[0], x);
    const auto& v = x.node()->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  std::vector<Tensor> inputs(xs.begin(), xs.end());
  return make_result("add_n", {r, c}, std::move(out), std::move(inputs), [](Node& n) {
    for (std::size_t p = 0; p < n.parents.size(); ++p) {
      if (double* g = sink(n, p)) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) g[i] += n.grad[i];
      }
    }
  });
}

Tensor mean_n(std::span<const Tensor> xs) {
  if (xs.size() == 1) return xs[0];
  return scale(add_n(xs), 1.0 / static_cast<double>(xs.size()));
}

Tensor silu(const Tensor& a) {
  return unary(
      a, "silu", [](double x) { return x * sigmoid_scalar(x); },
      [](double x, double) {
        const double s = sigmoid_scalar(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid", [](double x) { return sigmoid_scalar(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor rms_norm_rows(const Tensor& a, double eps) {
  require_2d(a, "rms_norm_rows");
  const std::size_t r = a.rows(), c = a.cols();
  const auto& x = a.node()->value;
  std::vector<double> out(r * c);
  std::vector<double> inv_rms(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* xr = x.data() + i * c;
    double ss = 0.0;
    for (std::size_t j = 0; j < c; ++j) ss += xr[j] * xr[j];
    inv_rms[i] = 1.0 / std::sqrt(ss / static_cast<double>(c) + eps);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = xr[j] * inv_rms[i];
  }
  return make_result("rms_norm_rows", {r, c}, std::move(out), {a},
                     [r, c, inv_rms = std::move(inv_rms)](Node& n) {
                       double* ga = sink(n, 0);
                       const auto& xv = pval(n, 0);
                       for (std::size_t i = 0; i < r; ++i) {
                         const double* xr = xv.data() + i * c;
                         const double* g = n.grad.data() + i * c;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < c; ++j) dot += g[j] * xr[j];
                         const double s = inv_rms[i];
                         const double k = dot * s * s * s / static_cast<double>(c);
                         for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j] * s - xr[j] * k;
                       }
                     });
}

Tensor layer_norm_rows(const Tensor& a, double eps) {
  require_2d(a, "layer_norm_rows");
  const std::size_t r = a.rows(), c = a.cols();
  const auto& x = a.node()->value;
  const double inv_c = 1.0 / static_cast<double>(c);
  std::vector<double> out(r * c);
  std::vector<double> inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* xr = x.data() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += xr[j];
    mu *= inv_c;
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var *= inv_c;
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = (xr[j] - mu) * inv_std[i];
  }
  return make_result("layer_norm_rows", {r, c}, std::move(out), {a},
                     [r, c, inv_c, inv_std = std::move(inv_std)](Node& n) {
                       double* ga = sink(n, 0);
                       for (std::size_t i = 0; i < r; ++i) {
                         const double* g = n.grad.data() + i * c;
                         const double* xh = n.value.data() + i * c;
                         double mg = 0.0, mgx = 0.0;
                         for (std::size_t j = 0; j < c; ++j) {
                           mg += g[j];
                           mgx += g[j] * xh[j];
                         }
                         mg *= inv_c;
                         mgx *= inv_c;
                         for (std::size_t j = 0; j < c; ++j) {
                           ga[i * c + j] += inv_std[i] * (g[j] - mg - xh[j] * mgx);
                         }
                       }
                     });
}

Tensor concat_cols(std::span<const Tensor> xs) {
  if (xs.empty()) fail(ErrorCode::kInvalidArgument, "concat_cols: empty input list");
  const std::size_t r = xs[0].rows();
  std::vector<std::size_t> offsets;
  std::size_t c = 0;
  for (const Tensor& x : xs) {
    require_2d(x, "concat_cols");
    if (x.rows() != r) shape_mismatch("concat_cols", xs[0], x);
    offsets.push_back(c);
    c += x.cols();
  }
  std::vector<double> out(r * c);
  for (std::size_t p = 0; p < xs.size(); ++p) {
    const std::size_t w = xs[p].cols();
    const auto& v = xs[p].node()->value;
    for (std::size_t i = 0; i < r; ++i) {
      std::copy_n(v.data() + i * w, w, out.data() + i * c + offsets[p]);
    }
  }
  std::vector<Tensor> inputs(xs.begin(), xs.end());
  return make_result("concat_cols", {r, c}, std::move(out), std::move(inputs),
                     [r, c, offsets = std::move(offsets)](Node& n) {
                       for (std::size_t p = 0; p < n.parents.size(); ++p) {
                         double* g = sink(n, p);
                         if (!g) continue;
                         const std::size_t w = n.parents[p]->shape.back();
                         for (std::size_t i = 0; i < r; ++i) {
                           const double* src = n.grad.data() + i * c + offsets[p];
                           for (std::size_t j = 0; j < w; ++j) g[i * w + j] += src[j];
                         }
                       }
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
  require_2d(a, "slice_cols");
  const std::size_t r = a.rows(), c = a.cols();
  if (len == 0 || start + len > c) {
    fail(ErrorCode::kShape, "slice_cols: range [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") outside " + shape_str(a.shape()));
  }
  const auto& v = a.node()->value;
  std::vector<double> out(r * len);
  for (std::size_t i = 0; i < r; ++i) std::copy_n(v.data() + i * c + start, len, out.data() + i * len);
  return make_result("slice_cols", {r, len}, std::move(out), {a}, [r, c, start, len](Node& n) {
    double* g = sink(n, 0);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < len; ++j) g[i * c + start + j] += n.grad[i * len + j];
    }
  });
}

Tensor sum(const Tensor& a) {
  require_2d(a, "sum");
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_result("sum", {1, 1}, {s}, {a}, [](Node& n) {
    double* g = sink(n, 0);
    const std::size_t count = n.parents[0]->value.size();
    for (std::size_t i = 0; i < count; ++i) g[i] += n.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor logsumexp_rows(const Tensor& a) {
  require_2d(a, "logsumexp_rows");
  const std::size_t r = a.rows(), c = a.cols();
  const auto& x = a.node()->value;
  std::vector<double> out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* xr = x.data() + i * c;
    const double mx = *std::max_element(xr, xr + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(xr[j] - mx);
    out[i] = mx + std::log(s);
  }
  return make_result("logsumexp_rows", {r, 1}, std::move(out), {a}, [r, c](Node& n) {
    double* g = sink(n, 0);
    const auto& xv = pval(n, 0);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        g[i * c + j] += n.grad[i] * std::exp(xv[i * c + j] - n.value[i]);
      }
    }
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::int64_t> ids) {
  require_2d(table, "gather_rows");
  const std::size_t v = table.rows(), c = table.cols();
  if (ids.empty()) fail(ErrorCode::kShape, "gather_rows: empty id list");
  const auto& tv = table.node()->value;
  std::vector<double> out(ids.size() * c, 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::int64_t id = ids[i];
    if (id < 0) continue;
    if (static_cast<std::size_t>(id) >= v) {
      fail(ErrorCode::kInvalidArgument, "gather_rows: id " + std::to_string(id) +
                                            " outside table " + shape_str(table.shape()));
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(id) * c, c, out.data() + i * c);
  }
  std::vector<std::int64_t> idv(ids.begin(), ids.end());
  return make_result("gather_rows", {ids.size(), c}, std::move(out), {table},
                     [c, idv = std::move(idv)](Node& n) {
                       double* g = sink(n, 0);
                       for (std::size_t i = 0; i < idv.size(); ++i) {
                         if (idv[i] < 0) continue;
                         double* dst = g + static_cast<std::size_t>(idv[i]) * c;
                         const double* src = n.grad.data() + i * c;
                         for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
                       }
                     });
}

Tensor mask_rows(const Tensor& a, std::span<const std::uint8_t> mask) {
  require_2d(a, "mask_rows");
  const std::size_t r = a.rows(), c = a.cols();
  if (mask.size() != r) {
    fail(ErrorCode::kShape, "mask_rows: mask length " + std::to_string(mask.size()) +
                                " vs tensor " + shape_str(a.shape()));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < r; ++i) {
    if (!mask[i]) std::fill_n(out.data() + i * c, c, 0.0);
  }
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return make_result("mask_rows", {r, c}, std::move(out), {a}, [c, m = std::move(m)](Node& n) {
    double* g = sink(n, 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m[i]) continue;
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += n.grad[i * c + j];
    }
  });
}

Tensor score_candidates(const Tensor& query, const Tensor& table,
                        std::span<const std::int64_t> candidates, std::size_t width) {
  require_2d(query, "score_candidates");
  require_2d(table, "score_candidates");
  const std::size_t p = query.rows(), c = query.cols(), v = table.rows();
  if (table.cols() != c) shape_mismatch("score_candidates", query, table);
  if (width == 0 || candidates.size() != p * width) {
    fail(ErrorCode::kShape, "score_candidates: candidate matrix of " + std::to_string(candidates.size()) +
                                " ids does not match " + std::to_string(p) + "×" + std::to_string(width));
  }
  const auto& qv = query.node()->value;
  const auto& tv = table.node()->value;
  std::vector<double> out(p * width, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    const double* q = qv.data() + i * c;
    for (std::size_t m = 0; m < width; ++m) {
      const std::int64_t id = candidates[i * width + m];
      if (id < 0) continue;
      if (static_cast<std::size_t>(id) >= v) {
        fail(ErrorCode::kInvalidArgument, "score_candidates: candidate id " + std::to_string(id) +
                                              " outside table " + shape_str(table.shape()));
      }
      const double* e = tv.data() + static_cast<std::size_t>(id) * c;
      double s = 0.0;
      for (std::size_t j = 0; j < c; ++j) s += q[j] * e[j];
      out[i * width + m] = s;
    }
  }
  std::vector<std::int64_t> ids(candidates.begin(), candidates.end());
  return make_result("score_candidates", {p, width}, std::move(out), {query, table},
                     [p, c, width, ids = std::move(ids)](Node& n) {
                       double* gq = sink(n, 0);
                       double* gt = sink(n, 1);
                       const auto& qv2 = pval(n, 0);
                       const auto& tv2 = pval(n, 1);
                       for (std::size_t i = 0; i < p; ++i) {
                         for (std::size_t m = 0; m < width; ++m) {
                           const std::int64_t id = ids[i * width + m];
                           if (id < 0) continue;
                           const double g = n.grad[i * width + m];
                           if (g == 0.0) continue;
                           const std::size_t row = static_cast<std::size_t>(id) * c;
                           if (gq) {
                             for (std::size_t j = 0; j < c; ++j) gq[i * c + j] += g * tv2[row + j];
                           }
                           if (gt) {
                             for (std::size_t j = 0; j < c; ++j) gt[row + j] += g * qv2[i * c + j];
                           }
                         }
                       }
                     });
}

Tensor infonce(const Tensor& logits, std::span<const std::size_t> counts) {
  require_2d(logits, "infonce");
  const std::size_t r = logits.rows(), c = logits.cols();
  if (counts.size() != r) {
    fail(ErrorCode::kShape, "infonce: " + std::to_string(counts.size()) + " counts for " +
                                shape_str(logits.shape()) + " logits");
  }
  const auto& x = logits.node()->value;
  std::vector<double> lse(r, 0.0);
  std::size_t valid = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t k = counts[i];
    if (k == 0) continue;
    if (k > c) fail(ErrorCode::kShape, "infonce: count exceeds candidate width");
    const double* xr = x.data() + i * c;
    const double mx = *std::max_element(xr, xr + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(xr[j] - mx);
    lse[i] = mx + std::log(s);
    total += lse[i] - xr[0];
    ++valid;
  }
  const double inv = valid ? 1.0 / static_cast<double>(valid) : 0.0;
  std::vector<std::size_t> cnt(counts.begin(), counts.end());
  return make_result("infonce", {1, 1}, {total * inv}, {logits},
                     [r, c, inv, cnt = std::move(cnt), lse = std::move(lse)](Node& n) {
                       double* g = sink(n, 0);
                       const auto& xv = pval(n, 0);
                       const double up = n.grad[0] * inv;
                       for (std::size_t i = 0; i < r; ++i) {
                         for (std::size_t j = 0; j < cnt[i]; ++j) {
                           g[i * c + j] += up * std::exp(xv[i * c + j] - lse[i]);
                         }
                         if (cnt[i] > 0) g[i * c] -= up;
                       }
                     });
}

}  // namespace inttravel::tensor::ops
