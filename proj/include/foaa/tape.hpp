#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "foaa/tensor.hpp"

namespace foaa {

using Rng = std::mt19937_64;

/// A trainable tensor. Gradients accumulate into `grad` across backward passes
/// until zero_grad(); the optimizer leaves frozen parameters untouched.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value) : name(std::move(name)), value(std::move(value)) {}

  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;

  void zero_grad();
};

class Tape;

/// Handle to one node of a Tape. Cheap to copy; valid as long as its tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Empty until backward() reaches this node.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Record of the differentiable operations executed for one unit of work.
///
/// Operations append nodes during the forward pass. backward() walks them in
/// reverse and calls each node's adjoint rule, which adds the node's incoming
/// gradient into the gradients of its inputs. Leaves bound to a Parameter
/// read Parameter::value in place and accumulate straight into
/// Parameter::grad, so the parameter must outlive the tape unchanged. A tape is single-threaded and
/// supports one backward pass.
class Tape {
 public:
  // Receives the gradient flowing into the node's output and must accumulate
  // into the inputs through Tape::grad_of().
  using Adjoint = std::function<void(Tape&, const Tensor& out_grad)>;

  // With track_gradients = false, parameter leaves are recorded as constants
  // and no adjoints are kept (inference).
  explicit Tape(bool track_gradients = true) : track_gradients_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // A leaf that collects a gradient but is not tied to a Parameter.
  Var variable(Tensor value);
  // Binding the same Parameter twice returns the same node.
  Var leaf(Parameter& param);

  Var record(std::string_view op, Tensor value, const std::vector<Var>& inputs, Adjoint adjoint);

  void backward(Var loss);

  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.param ? n.param->value : n.value;
  }
  const Tensor& grad(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.param ? n.param->grad : n.grad;
  }
  // Gradient accumulator of node `id`, allocated as zeros on first use.
  Tensor& grad_of(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  const std::string& op_name(std::size_t id) const { return nodes_.at(id).op; }
  std::size_t size() const { return nodes_.size(); }

  // Name of the first node, in execution order, whose output holds a NaN or
  // infinity.
  std::optional<std::string> first_non_finite() const;

  // Test hook: scale the incoming gradient of every node produced by `op`
  // before its adjoint runs. A factor other than 1 corrupts that adjoint.
  void inject_adjoint_fault(std::string op, double factor);

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Adjoint adjoint;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> bound_;
  bool track_gradients_ = true;
  bool backward_done_ = false;
  std::string fault_op_;
  double fault_factor_ = 1.0;
};

/// Process-wide adjoint fault used by the gradient-check fault-injection
/// fixture; every Tape created afterwards inherits it. Empty op clears it.
void set_global_adjoint_fault(std::string op, double factor);

// Elementwise operations on same-shape operands.
enum class ElementwiseOp { Add, Sub, Mul };

Var elementwise(ElementwiseOp op, Var a, Var b);
inline Var add(Var a, Var b) { return elementwise(ElementwiseOp::Add, a, b); }
inline Var sub(Var a, Var b) { return elementwise(ElementwiseOp::Sub, a, b); }
inline Var mul(Var a, Var b) { return elementwise(ElementwiseOp::Mul, a, b); }

// Sum of any number of same-shape operands.
Var add_n(const std::vector<Var>& terms);

Var matmul(Var a, Var b);
// w (m×n) times vector x (n) -> vector (m).
Var matvec(Var w, Var x);
Var softmax_rows(Var x);
Var scale(Var x, double factor);
Var relu(Var x);
Var sum(Var x);
Var reshape(Var x, Shape shape);
// Mean over the last axis of an m×n matrix -> m-vector.
Var row_mean(Var x);
// Inverted dropout: zero each entry with probability p, scale survivors by
// 1/(1-p).
Var dropout(Var x, double p, Rng& rng);

// 3×3 convolution, stride 1, zero padding 1. x: c×h×w, weight: o×c×3×3,
// bias: o. Output o×h×w.
Var conv2d_3x3(Var x, Var weight, Var bias);
// 2×2 average pooling with stride 2 over c×h×w; trailing odd rows/cols are
// dropped.
Var avg_pool2(Var x);

}  // namespace foaa
