#include "sid/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace sid::ad {

namespace {

bool is_leaf(Op op) { return op == Op::Parameter || op == Op::Constant; }

int arity(Op op) {
  switch (op) {
    case Op::Parameter:
    case Op::Constant:
      return 0;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::MatMul:
    case Op::Dot:
    case Op::Concat:
    case Op::RowScale:
      return 2;
    case Op::Affine:
      return 3;
    default:
      return 1;
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// C = A B, row by row; each output row depends only on the matching row of A.
void matmul_into(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = pc + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// out += G B^T
void matmul_bt_acc(const Tensor& g, const Tensor& b, Tensor& out) {
  const std::size_t n = g.rows(), m = g.cols(), k = b.rows();
  const double* pg = g.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* grow = pg + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = pb + p * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += grow[j] * brow[j];
      po[i * k + p] += s;
    }
  }
}

// out += A^T G, accumulated over rows of A in order.
void matmul_at_acc(const Tensor& a, const Tensor& g, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = g.cols();
  const double* pa = a.data().data();
  const double* pg = g.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* grow = pg + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      double* orow = po + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * grow[j];
    }
  }
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Parameter: return "parameter";
    case Op::Constant: return "constant";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::MatMul: return "matmul";
    case Op::Affine: return "affine";
    case Op::Silu: return "silu";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::SquaredNorm: return "squared_norm";
    case Op::L1Norm: return "l1_norm";
    case Op::Dot: return "dot";
    case Op::Concat: return "concat";
    case Op::StopGradient: return "stop_gradient";
    case Op::RowScale: return "row_scale";
    case Op::RowSum: return "row_sum";
    case Op::Abs: return "abs";
    case Op::ClampedReciprocal: return "clamped_reciprocal";
  }
  return "unknown";
}

GraphError::GraphError(std::size_t node, const std::string& what)
    : std::runtime_error(what), node_(node) {}

Bindings& Bindings::set(Var leaf, Tensor value) {
  values_.insert_or_assign(leaf.id, std::move(value));
  return *this;
}

const Tensor* Bindings::find(Var leaf) const {
  auto it = values_.find(leaf.id);
  return it == values_.end() ? nullptr : &it->second;
}

const Tensor& Gradients::operator[](Var leaf) const {
  auto it = values_.find(leaf.id);
  if (it == values_.end()) throw std::out_of_range("no gradient recorded for node");
  return it->second;
}

std::string Graph::describe(std::size_t index) const {
  const Node& n = nodes_[index];
  std::string s = "node #" + std::to_string(index) + " (" + std::string(op_name(n.op));
  if (!n.name.empty()) s += " '" + n.name + "'";
  return s + ")";
}

void Graph::check(Var v) const {
  if (v.id >= nodes_.size()) throw std::out_of_range("Var does not belong to this graph");
}

Var Graph::push(Node node) {
  const int k = arity(node.op);
  const std::size_t inputs[3] = {node.in0, node.in1, node.in2};
  bool needs = node.op == Op::Parameter;
  for (int i = 0; i < k; ++i) {
    check(Var{inputs[i]});
    needs = needs || nodes_[inputs[i]].needs_grad;
  }
  if (node.op == Op::StopGradient) needs = false;
  node.needs_grad = needs;
  nodes_.push_back(std::move(node));
  const std::size_t index = nodes_.size() - 1;
  try {
    compute(index);
  } catch (...) {
    nodes_.pop_back();
    throw;
  }
  return Var{index};
}

Var Graph::parameter(Tensor value, std::string name) {
  Node n{Op::Parameter};
  n.name = std::move(name);
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::constant(Tensor value, std::string name) {
  Node n{Op::Constant};
  n.name = std::move(name);
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) { return push({Op::Add, a.id, b.id}); }
Var Graph::sub(Var a, Var b) { return push({Op::Sub, a.id, b.id}); }
Var Graph::mul(Var a, Var b) { return push({Op::Mul, a.id, b.id}); }
Var Graph::matmul(Var a, Var b) { return push({Op::MatMul, a.id, b.id}); }
Var Graph::affine(Var x, Var w, Var b) { return push({Op::Affine, x.id, w.id, b.id}); }
Var Graph::silu(Var a) { return push({Op::Silu, a.id}); }
Var Graph::sum(Var a) { return push({Op::Sum, a.id}); }
Var Graph::mean(Var a) { return push({Op::Mean, a.id}); }
Var Graph::squared_norm(Var a) { return push({Op::SquaredNorm, a.id}); }
Var Graph::l1_norm(Var a) { return push({Op::L1Norm, a.id}); }
Var Graph::dot(Var a, Var b) { return push({Op::Dot, a.id, b.id}); }
Var Graph::concat(Var a, Var b) { return push({Op::Concat, a.id, b.id}); }
Var Graph::stop_gradient(Var a) { return push({Op::StopGradient, a.id}); }
Var Graph::row_scale(Var a, Var s) { return push({Op::RowScale, a.id, s.id}); }
Var Graph::row_sum(Var a) { return push({Op::RowSum, a.id}); }
Var Graph::abs(Var a) { return push({Op::Abs, a.id}); }

Var Graph::scale(Var a, double factor) {
  Node n{Op::Scale, a.id};
  n.scalar = factor;
  return push(std::move(n));
}

Var Graph::clamped_reciprocal(Var a, double floor) {
  if (!(floor > 0.0)) throw std::invalid_argument("clamped_reciprocal floor must be positive");
  Node n{Op::ClampedReciprocal, a.id};
  n.scalar = floor;
  return push(std::move(n));
}

const Tensor& Graph::value(Var v) const {
  check(v);
  return nodes_[v.id].value;
}

Op Graph::op(Var v) const {
  check(v);
  return nodes_[v.id].op;
}

bool Graph::is_parameter(Var v) const {
  check(v);
  return nodes_[v.id].op == Op::Parameter;
}

void Graph::compute(std::size_t index) {
  Node& n = nodes_[index];
  if (is_leaf(n.op)) {
    if (!all_finite(n.value.data())) throw NonFiniteError(describe(index) + ": non-finite leaf value");
    return;
  }
  const Tensor& a = nodes_[n.in0].value;
  const Tensor* b = arity(n.op) >= 2 ? &nodes_[n.in1].value : nullptr;
  auto shape_error = [&](const std::string& detail) {
    return GraphError(index, describe(index) + ": shape mismatch " + detail);
  };
  auto same_shape = [&]() {
    if (a.shape() != b->shape()) {
      throw shape_error(to_string(a.shape()) + " vs " + to_string(b->shape()));
    }
  };

  Tensor out;
  switch (n.op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul: {
      same_shape();
      out = Tensor(a.rows(), a.cols());
      auto pa = a.data();
      auto pb = b->data();
      auto po = out.data();
      if (n.op == Op::Add) {
        for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] + pb[i];
      } else if (n.op == Op::Sub) {
        for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] - pb[i];
      } else {
        for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] * pb[i];
      }
      break;
    }
    case Op::Scale: {
      out = Tensor(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = n.scalar * a[i];
      break;
    }
    case Op::MatMul: {
      if (a.cols() != b->rows()) {
        throw shape_error(to_string(a.shape()) + " x " + to_string(b->shape()));
      }
      out = Tensor(a.rows(), b->cols());
      matmul_into(a, *b, out);
      break;
    }
    case Op::Affine: {
      const Tensor& bias = nodes_[n.in2].value;
      if (a.cols() != b->rows() || bias.rows() != 1 || bias.cols() != b->cols()) {
        throw shape_error(to_string(a.shape()) + " x " + to_string(b->shape()) + " + " +
                          to_string(bias.shape()));
      }
      out = Tensor(a.rows(), b->cols());
      for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.row_span(i);
        std::copy(bias.data().begin(), bias.data().end(), row.begin());
      }
      matmul_into(a, *b, out);
      break;
    }
    case Op::Silu: {
      out = Tensor(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * sigmoid(a[i]);
      break;
    }
    case Op::Sum:
    case Op::Mean:
    case Op::SquaredNorm:
    case Op::L1Norm: {
      double s = 0.0;
      for (double v : a.data()) {
        s += n.op == Op::SquaredNorm ? v * v : (n.op == Op::L1Norm ? std::fabs(v) : v);
      }
      if (n.op == Op::Mean) {
        if (a.size() == 0) throw shape_error("mean of empty tensor");
        s /= static_cast<double>(a.size());
      }
      out = Tensor::scalar(0.0);
      out[0] = s;
      break;
    }
    case Op::Dot: {
      same_shape();
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * (*b)[i];
      out = Tensor::scalar(0.0);
      out[0] = s;
      break;
    }
    case Op::Concat: {
      if (a.rows() != b->rows()) {
        throw shape_error(to_string(a.shape()) + " | " + to_string(b->shape()));
      }
      out = Tensor(a.rows(), a.cols() + b->cols());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        auto row = out.row_span(i);
        std::copy(a.row_span(i).begin(), a.row_span(i).end(), row.begin());
        std::copy(b->row_span(i).begin(), b->row_span(i).end(),
                  row.begin() + static_cast<std::ptrdiff_t>(a.cols()));
      }
      break;
    }
    case Op::StopGradient:
      out = a;
      break;
    case Op::RowScale: {
      if (b->cols() != 1 || b->rows() != a.rows()) {
        throw shape_error(to_string(a.shape()) + " rows scaled by " + to_string(b->shape()));
      }
      out = Tensor(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.rows(); ++i) {
        const double s = (*b)[i];
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) * s;
      }
      break;
    }
    case Op::RowSum: {
      out = Tensor(a.rows(), 1);
      for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (double v : a.row_span(i)) s += v;
        out[i] = s;
      }
      break;
    }
    case Op::Abs: {
      out = Tensor(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::fabs(a[i]);
      break;
    }
    case Op::ClampedReciprocal: {
      out = Tensor(a.rows(), a.cols());
      for (std::size_t i = 0; i < a.size(); ++i) out[i] = 1.0 / std::max(a[i], n.scalar);
      break;
    }
    case Op::Parameter:
    case Op::Constant:
      break;
  }
  if (!all_finite(out.data())) throw NonFiniteError(describe(index) + ": non-finite value");
  n.value = std::move(out);
}

const Tensor& Graph::evaluate(const Bindings& bindings, Var root) {
  check(root);
  for (std::size_t i = 0; i <= root.id; ++i) {
    Node& n = nodes_[i];
    if (is_leaf(n.op)) {
      if (const Tensor* bound = bindings.find(Var{i})) {
        if (bound->shape() != n.value.shape()) {
          throw GraphError(i, describe(i) + ": binding shape " + to_string(bound->shape()) +
                                  " differs from " + to_string(n.value.shape()));
        }
        n.value = *bound;
      }
    }
    compute(i);
  }
  return nodes_[root.id].value;
}

Gradients Graph::backward(Var root) const {
  check(root);
  if (nodes_[root.id].value.shape() != Shape{1, 1}) {
    throw GraphError(root.id, describe(root.id) + ": backward root must be scalar, got " +
                                  to_string(nodes_[root.id].value.shape()));
  }
  return backward(root, Tensor::scalar(1.0));
}

Gradients Graph::backward(Var root, const Tensor& upstream) const {
  check(root);
  if (upstream.shape() != nodes_[root.id].value.shape()) {
    throw GraphError(root.id, describe(root.id) + ": upstream shape " +
                                  to_string(upstream.shape()) + " differs from root");
  }
  std::vector<Tensor> grad(root.id + 1);
  std::vector<char> has(root.id + 1, 0);
  if (nodes_[root.id].needs_grad) {
    grad[root.id] = upstream;
    has[root.id] = 1;
  }

  // Returns the accumulator for input j, zero-initialised on first touch.
  auto slot = [&](std::size_t j) -> Tensor* {
    if (!nodes_[j].needs_grad) return nullptr;
    if (!has[j]) {
      grad[j] = Tensor(nodes_[j].value.rows(), nodes_[j].value.cols());
      has[j] = 1;
    }
    return &grad[j];
  };

  for (std::size_t idx = root.id + 1; idx-- > 0;) {
    if (!has[idx]) continue;
    const Node& n = nodes_[idx];
    if (is_leaf(n.op) || n.op == Op::StopGradient) continue;
    const Tensor& g = grad[idx];
    const Tensor& a = nodes_[n.in0].value;

    switch (n.op) {
      case Op::Add:
      case Op::Sub: {
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        }
        if (Tensor* gb = slot(n.in1)) {
          const double s = n.op == Op::Add ? 1.0 : -1.0;
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += s * g[i];
        }
        break;
      }
      case Op::Mul: {
        const Tensor& b = nodes_[n.in1].value;
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b[i];
        }
        if (Tensor* gb = slot(n.in1)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * a[i];
        }
        break;
      }
      case Op::Scale: {
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += n.scalar * g[i];
        }
        break;
      }
      case Op::MatMul:
      case Op::Affine: {
        const Tensor& w = nodes_[n.in1].value;
        if (Tensor* ga = slot(n.in0)) matmul_bt_acc(g, w, *ga);
        if (Tensor* gw = slot(n.in1)) matmul_at_acc(a, g, *gw);
        if (n.op == Op::Affine) {
          if (Tensor* gb = slot(n.in2)) {
            for (std::size_t i = 0; i < g.rows(); ++i) {
              for (std::size_t j = 0; j < g.cols(); ++j) (*gb)[j] += g(i, j);
            }
          }
        }
        break;
      }
      case Op::Silu: {
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = sigmoid(a[i]);
            (*ga)[i] += g[i] * (s + a[i] * s * (1.0 - s));
          }
        }
        break;
      }
      case Op::Sum:
      case Op::Mean: {
        if (Tensor* ga = slot(n.in0)) {
          const double s = n.op == Op::Mean ? g[0] / static_cast<double>(a.size()) : g[0];
          for (std::size_t i = 0; i < a.size(); ++i) (*ga)[i] += s;
        }
        break;
      }
      case Op::SquaredNorm: {
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < a.size(); ++i) (*ga)[i] += 2.0 * g[0] * a[i];
        }
        break;
      }
      case Op::L1Norm: {
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < a.size(); ++i) (*ga)[i] += g[0] * sign(a[i]);
        }
        break;
      }
      case Op::Dot: {
        const Tensor& b = nodes_[n.in1].value;
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < a.size(); ++i) (*ga)[i] += g[0] * b[i];
        }
        if (Tensor* gb = slot(n.in1)) {
          for (std::size_t i = 0; i < a.size(); ++i) (*gb)[i] += g[0] * a[i];
        }
        break;
      }
      case Op::Concat: {
        const std::size_t ka = a.cols();
        const std::size_t kb = nodes_[n.in1].value.cols();
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < ka; ++j) (*ga)(i, j) += g(i, j);
          }
        }
        if (Tensor* gb = slot(n.in1)) {
          for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < kb; ++j) (*gb)(i, j) += g(i, ka + j);
          }
        }
        break;
      }
      case Op::RowScale: {
        const Tensor& s = nodes_[n.in1].value;
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < a.rows(); ++i) {
            for (std::size_t j = 0; j < a.cols(); ++j) (*ga)(i, j) += g(i, j) * s[i];
          }
        }
        if (Tensor* gs = slot(n.in1)) {
          for (std::size_t i = 0; i < a.rows(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < a.cols(); ++j) acc += g(i, j) * a(i, j);
            (*gs)[i] += acc;
          }
        }
        break;
      }
      case Op::RowSum: {
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < a.rows(); ++i) {
            for (std::size_t j = 0; j < a.cols(); ++j) (*ga)(i, j) += g[i];
          }
        }
        break;
      }
      case Op::Abs: {
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < a.size(); ++i) (*ga)[i] += g[i] * sign(a[i]);
        }
        break;
      }
      case Op::ClampedReciprocal: {
        if (Tensor* ga = slot(n.in0)) {
          for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] > n.scalar) (*ga)[i] -= g[i] / (a[i] * a[i]);
          }
        }
        break;
      }
      case Op::Parameter:
      case Op::Constant:
      case Op::StopGradient:
        break;
    }
  }

  Gradients out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op != Op::Parameter) continue;
    if (i <= root.id && has[i]) {
      out.values_.emplace(i, std::move(grad[i]));
    } else {
      out.values_.emplace(i, Tensor(nodes_[i].value.rows(), nodes_[i].value.cols()));
    }
  }
  return out;
}

GradCheckResult grad_check(Graph& graph, Var root, std::span<const Var> leaves, double fd_step) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("grad_check: fd_step must be positive");
  const Gradients analytic = graph.backward(root);
  std::vector<Tensor> point;
  point.reserve(leaves.size());
  for (Var leaf : leaves) point.push_back(graph.value(leaf));

  GradCheckResult result;
  for (std::size_t p = 0; p < leaves.size(); ++p) {
    const Tensor& exact = analytic[leaves[p]];
    for (std::size_t i = 0; i < point[p].size(); ++i) {
      Tensor plus = point[p];
      Tensor minus = point[p];
      plus[i] += fd_step;
      minus[i] -= fd_step;
      Bindings bp;
      bp.set(leaves[p], std::move(plus));
      const double fp = graph.evaluate(bp, root).item();
      Bindings bm;
      bm.set(leaves[p], std::move(minus));
      const double fm = graph.evaluate(bm, root).item();
      const double numeric = (fp - fm) / (2.0 * fd_step);
      const double denom = std::max({std::fabs(numeric), std::fabs(exact[i]), 1e-12});
      const double err = std::fabs(numeric - exact[i]) / denom;
      if (err > result.max_rel_error) {
        result = {err, p, i};
      }
    }
    // Bound values persist on the tape, so put this leaf back before the next.
    Bindings restore;
    restore.set(leaves[p], point[p]);
    graph.evaluate(restore, root);
  }
  return result;
}

GradCheckResult grad_check(const ScalarFunction& f, std::span<const Tensor> point,
                           double fd_step) {
  Graph g;
  std::vector<Var> params;
  params.reserve(point.size());
  for (const Tensor& p : point) params.push_back(g.parameter(p));
  const Var root = f(g, params);
  return grad_check(g, root, params, fd_step);
}

}  // namespace sid::ad
