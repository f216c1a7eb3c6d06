#pragma once

// Reverse-mode automatic differentiation over dense f64 tensors.
//
// A Graph is a tape: every operation appends a node whose inputs precede it,
// and the node's value is computed eagerly when it is appended. The tape can
// be replayed with new leaf values through evaluate(), and differentiated
// through backward(). Gradients accumulate in reverse node order, so results
// are bitwise reproducible.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sid/tensor.hpp"

namespace sid::ad {

enum class Op {
  Parameter,
  Constant,
  Add,
  Sub,
  Mul,
  Scale,
  MatMul,
  Affine,
  Silu,
  Sum,
  Mean,
  SquaredNorm,
  L1Norm,
  Dot,
  Concat,
  StopGradient,
  RowScale,
  RowSum,
  Abs,
  ClampedReciprocal,
};

std::string_view op_name(Op op);

/// Handle to a node of one specific Graph.
struct Var {
  std::size_t id = 0;
};

/// Shape mismatch or misuse, with the offending node in the message. Non-finite
/// node values raise NonFiniteError instead.
class GraphError : public std::runtime_error {
 public:
  GraphError(std::size_t node, const std::string& what);
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

/// Replacement leaf values for Graph::evaluate.
class Bindings {
 public:
  Bindings& set(Var leaf, Tensor value);
  const Tensor* find(Var leaf) const;

 private:
  std::unordered_map<std::size_t, Tensor> values_;
};

/// d(root)/d(leaf) for every parameter leaf of a graph.
class Gradients {
 public:
  /// Gradient of a parameter leaf; zero-filled when the root does not depend on it.
  const Tensor& operator[](Var leaf) const;
  bool contains(Var leaf) const { return values_.count(leaf.id) != 0; }

 private:
  friend class Graph;
  std::unordered_map<std::size_t, Tensor> values_;
};

class Graph {
 public:
  Var parameter(Tensor value, std::string name = {});
  Var constant(Tensor value, std::string name = {});

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var matmul(Var a, Var b);
  /// x W + b with b a single row broadcast over the rows of x.
  Var affine(Var x, Var w, Var b);
  Var silu(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var squared_norm(Var a);
  Var l1_norm(Var a);
  Var dot(Var a, Var b);
  /// Column-wise concatenation of two tensors with equal row counts.
  Var concat(Var a, Var b);
  Var stop_gradient(Var a);
  /// Multiplies row i of `a` by s(i, 0); `s` is a column with one entry per row.
  Var row_scale(Var a, Var s);
  /// Per-row sum; returns a column.
  Var row_sum(Var a);
  Var abs(Var a);
  /// 1 / max(a, floor), elementwise.
  Var clamped_reciprocal(Var a, double floor);

  const Tensor& value(Var v) const;
  Op op(Var v) const;
  bool is_parameter(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Replays the tape with `bindings` substituted for the matching leaves and
  /// returns the value of `root`. Unbound leaves keep their current values.
  const Tensor& evaluate(const Bindings& bindings, Var root);

  /// Gradient of a 1x1 root with respect to every parameter leaf.
  Gradients backward(Var root) const;

  /// Upstream cotangent variant: returns the vector-Jacobian product of a
  /// non-scalar `root` with `upstream` (same shape as the root).
  Gradients backward(Var root, const Tensor& upstream) const;

 private:
  struct Node {
    Op op;
    std::size_t in0 = 0;
    std::size_t in1 = 0;
    std::size_t in2 = 0;
    double scalar = 0.0;
    bool needs_grad = false;
    std::string name;
    Tensor value;
  };

  Var push(Node node);
  void compute(std::size_t index);
  std::string describe(std::size_t index) const;
  void check(Var v) const;

  std::vector<Node> nodes_;
};

/// Builds a scalar function of `params` inside `graph`.
using ScalarFunction = std::function<Var(Graph& graph, std::span<const Var> params)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
};

/// Compares backward() against central differences at `point`, entry by entry.
/// Relative error uses a max(|a|, |b|, 1e-12) denominator.
GradCheckResult grad_check(const ScalarFunction& f, std::span<const Tensor> point,
                           double fd_step);

/// Same check on an existing graph: perturbs each entry of `leaves` through
/// evaluate() and restores the original values afterwards.
GradCheckResult grad_check(Graph& graph, Var root, std::span<const Var> leaves, double fd_step);

}  // namespace sid::ad
