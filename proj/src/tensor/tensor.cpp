#include "tensor/tensor.hpp"

#include <cmath>
#include <cstring>
#include <unordered_set>

#include "common/error.hpp"
#include "tensor/ops.hpp"

namespace inttravel::tensor {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::vector<double>& Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

namespace {

const char* g_fault_op = nullptr;
double g_fault_factor = 1.0;

NodePtr new_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) fail(ErrorCode::kShape, "tensor extents must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != values.size()) {
    fail(ErrorCode::kShape, "value count " + std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double fill, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  Tensor t(new_leaf(std::move(shape), std::vector<double>(n, fill), requires_grad));
  ensure_finite(t, "full");
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  Tensor t(new_leaf(std::move(shape), std::move(values), requires_grad));
  ensure_finite(t, "from");
  return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from({1, 1}, {v}, requires_grad); }

std::size_t Tensor::rows() const {
  const Shape& s = node_->shape;
  return s.size() >= 2 ? s[s.size() - 2] : 1;
}

std::size_t Tensor::cols() const {
  const Shape& s = node_->shape;
  return s.empty() ? 1 : s.back();
}

std::span<double> Tensor::mutable_values() {
  node_->finite_verified = false;
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) fail(ErrorCode::kShape, "item() on non-scalar tensor " + shape_str(shape()));
  return node_->value[0];
}

void ensure_finite(const Tensor& t, const char* context) {
  Node* n = t.node();
  if (n->finite_verified) return;
  // x * 0 is NaN exactly for non-finite x; the sum is a cheap first pass.
  const double* v = n->value.data();
  const std::size_t m = n->value.size();
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i4 = 0;
  for (; i4 + 4 <= m; i4 += 4) {
    for (std::size_t k = 0; k < 4; ++k) acc[k] += v[i4 + k] * 0.0;
  }
  for (; i4 < m; ++i4) acc[0] += v[i4] * 0.0;
  if (acc[0] + acc[1] + acc[2] + acc[3] == 0.0) {
    n->finite_verified = true;
    return;
  }
  for (std::size_t i = 0; i < n->value.size(); ++i) {
    if (!std::isfinite(n->value[i])) {
      fail(ErrorCode::kNonFinite, std::string(context) + ": non-finite value at flat index " +
                                      std::to_string(i) + " of tensor " + shape_str(n->shape));
    }
  }
  n->finite_verified = true;
}

Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool track = false;
  for (const Tensor& in : inputs) track = track || in.requires_grad();
  if (track) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (Tensor& in : inputs) node->parents.push_back(in.node_ptr());
    node->backward = std::move(backward);
  }
  Tensor out(std::move(node));
  ensure_finite(out, op);
  return out;
}

void backward(const Tensor& root) {
  if (!root.defined() || root.numel() != 1) {
    fail(ErrorCode::kShape, "backward requires a scalar root, got " +
                                (root.defined() ? shape_str(root.shape()) : std::string("undefined")));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward || n->grad.empty()) continue;
    if (g_fault_op != nullptr && std::strcmp(n->op, g_fault_op) == 0) {
      for (double& g : n->grad) g *= g_fault_factor;
    }
    n->backward(*n);
    // Interior gradients are dead once propagated; leaves keep theirs for the optimizer.
    if (!n->parents.empty()) std::vector<double>().swap(n->grad);
  }
}

}  // namespace inttravel::tensor

namespace inttravel::tensor::testing {

ScopedBackwardFault::ScopedBackwardFault(const char* op, double factor) {
  g_fault_op = op;
  g_fault_factor = factor;
}

ScopedBackwardFault::~ScopedBackwardFault() {
  g_fault_op = nullptr;
  g_fault_factor = 1.0;
}

}  // namespace inttravel::tensor::testing
