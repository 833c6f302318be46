#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "common/errors.hpp"
#include "common/rng.hpp"

namespace jointpred::ad {

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node;

// Reverse-mode autodiff tensor: a value handle onto a shared graph node.
// Ops record parent links when gradients are enabled and any input requires
// them; backward() replays the recorded tape in reverse creation order.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor from(Shape shape, std::vector<double> data);
  // trainable leaf
  static Tensor param(Shape shape, std::vector<double> data);
  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false);
  static Tensor rand_uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int64_t rank() const { return static_cast<int64_t>(shape().size()); }
  int64_t dim(int64_t axis) const { return shape()[static_cast<size_t>(axis)]; }
  int64_t size() const;

  const std::vector<double>& values() const;
  double at(int64_t flat_index) const { return values()[static_cast<size_t>(flat_index)]; }
  double item() const;  // requires size() == 1

  bool requires_grad() const;
  bool is_leaf() const;
  // Gradient buffer; empty until backward() touches this tensor.
  const std::vector<double>& grad() const;
  bool has_grad() const;
  void zero_grad();

  // In-place data access for optimizers and finite differencing. Leaf-only:
  // mutating an interior node would silently desynchronize the tape.
  std::vector<double>& mutable_values();

  Tensor detach() const;  // same values, no history, no grad

  Node* node() const { return node_.get(); }
  std::shared_ptr<Node> node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;

  friend Tensor make_op(const char* name, Shape shape, std::vector<double> values,
                        std::vector<Tensor> parents, std::function<void(Node&)> backward_fn);
};

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily
  bool requires_grad = false;
  uint64_t seq = 0;  // creation order; parents always have smaller seq
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
  }
};

// The ops recorded for one backward pass, in creation (= topological) order.
struct ComputationTape {
  std::vector<Node*> ops;
  // every operation appears after all of its parents
  bool topologically_ordered() const;
};

// Disables tape recording in scope (inference, metric evaluation).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

// ---- forward ops ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);   // same shape, trailing-dim vector, or scalar
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);   // same shape or scalar operand
Tensor concat(const std::vector<Tensor>& parts, int64_t axis);
Tensor slice(const Tensor& a, int64_t axis, int64_t start, int64_t len);
Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose(const Tensor& a);  // swaps the last two axes
Tensor relu(const Tensor& a);
Tensor softmax(const Tensor& a);      // last axis, max-stabilized
Tensor layer_norm(const Tensor& a, double eps = 1e-5);  // last axis, no affine
Tensor reduce_sum(const Tensor& a);
Tensor reduce_sum(const Tensor& a, int64_t axis);
Tensor reduce_mean(const Tensor& a);
Tensor reduce_mean(const Tensor& a, int64_t axis);
Tensor reduce_max(const Tensor& a, int64_t axis);
Tensor min_index(const Tensor& a, int64_t axis);  // argmin indices as doubles; not differentiable
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor smooth_l1(const Tensor& pred, const Tensor& target, double beta = 1.0);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return mul(a, Tensor::scalar(s)); }
inline Tensor operator*(double s, const Tensor& a) { return a * s; }

// convenience composites (no new op kinds)
Tensor neg(const Tensor& a);
std::vector<int64_t> argmin_axis(const Tensor& a, int64_t axis);
int64_t argmin(const Tensor& a);

// Populates grad on every requires_grad tensor reachable from root.
// root must be scalar (size 1). Gradients accumulate additively.
void backward(const Tensor& root);

}  // namespace jointpred::ad
