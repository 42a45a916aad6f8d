#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace inttravel::tensor {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Called during backward with the node whose gradient is complete. Must
// accumulate into the gradients of node.parents (via Node::grad_buffer()).
using BackwardFn = std::function<void(Node&)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool finite_verified = false;
  const char* op = "leaf";
  std::vector<NodePtr> parents;
  BackwardFn backward;

  // Zero-initialized on first use.
  std::vector<double>& grad_buffer();
};

// Dense row-major tensor handle with optional gradient tracking. Copies share
// the underlying node; graphs are rebuilt on every forward pass.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double fill, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  // 2-D views: rank-1 tensors are treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return node_->value; }
  // Direct write access for optimizers and finite-difference probes.
  std::span<double> mutable_values();
  double at(std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  Node* node() const { return node_.get(); }
  const NodePtr& node_ptr() const { return node_; }

 private:
  NodePtr node_;
};

// Builds an op result. The node records the graph only if some input tracks
// gradients; the value is checked for finiteness.
Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, BackwardFn backward);

// Rejects non-finite entries, naming the op in the error.
void ensure_finite(const Tensor& t, const char* context);

// Reverse-mode sweep from a scalar root. Leaf gradients accumulate across
// calls until zero_grad().
void backward(const Tensor& root);

}  // namespace inttravel::tensor
