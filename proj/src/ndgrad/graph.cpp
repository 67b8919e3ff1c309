// Copyright 2026 The gendfl Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>

#include "gendfl/ndgrad.hpp"

namespace gendfl::ndgrad {

namespace {

struct View {
  std::size_t r, c;
};

View view(const Tensor& t) { return {t.rows(), t.cols()}; }

// Broadcast geometry of an elementwise binary op.
struct Broadcast {
  View a, b, out;
  Shape shape;

  Broadcast(const Tensor& x, const Tensor& y) : a(view(x)), b(view(y)) {
    auto merge = [](std::size_t p, std::size_t q) -> std::size_t {
      if (p == q || q == 1) return p;
      if (p == 1) return q;
      return 0;
    };
    out = {merge(a.r, b.r), merge(a.c, b.c)};
    if (out.r == 0 || out.c == 0) {
      throw ShapeError("cannot broadcast " + shape_string(x.shape()) +
                       " with " + shape_string(y.shape()));
    }
    if (x.rank() == 2 || y.rank() == 2) {
      shape = {out.r, out.c};
    } else if (x.rank() == 1 || y.rank() == 1) {
      shape = {out.c};
    }
  }
  std::size_t ia(std::size_t r, std::size_t c) const {
    return (a.r == 1 ? 0 : r) * a.c + (a.c == 1 ? 0 : c);
  }
  std::size_t ib(std::size_t r, std::size_t c) const {
    return (b.r == 1 ? 0 : r) * b.c + (b.c == 1 ? 0 : c);
  }
};

template <typename F>
Tensor binary(const Tensor& x, const Tensor& y, F f) {
  if (x.same_shape(y)) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = f(x[i], y[i]);
    return out;
  }
  Broadcast bc(x, y);
  Tensor out(bc.shape);
  std::size_t k = 0;
  for (std::size_t r = 0; r < bc.out.r; ++r) {
    for (std::size_t c = 0; c < bc.out.c; ++c) {
      out[k++] = f(x[bc.ia(r, c)], y[bc.ib(r, c)]);
    }
  }
  return out;
}

// Accumulates gx += up * dfdx(x, y), gy += up * dfdy(x, y) with broadcast
// reduction. Null targets are skipped.
template <typename Fx, typename Fy>
void binary_grad(const Tensor& x, const Tensor& y, const Tensor& up,
                 Tensor* gx, Tensor* gy, Fx dfdx, Fy dfdy) {
  if (x.same_shape(y)) {
    for (std::size_t i = 0; i < up.numel(); ++i) {
      if (gx) (*gx)[i] += up[i] * dfdx(x[i], y[i]);
      if (gy) (*gy)[i] += up[i] * dfdy(x[i], y[i]);
    }
    return;
  }
  Broadcast bc(x, y);
  std::size_t k = 0;
  for (std::size_t r = 0; r < bc.out.r; ++r) {
    for (std::size_t c = 0; c < bc.out.c; ++c, ++k) {
      const std::size_t i = bc.ia(r, c), j = bc.ib(r, c);
      if (gx) (*gx)[i] += up[k] * dfdx(x[i], y[j]);
      if (gy) (*gy)[j] += up[k] * dfdy(x[i], y[j]);
    }
  }
}

template <typename F>
Tensor unary(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = f(x[i]);
  return out;
}

double stable_softplus(double u) {
  return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

double stable_sigmoid(double u) {
  if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// matmul treats a rank-1 left operand as a row and a rank-1 right operand as
// a column.
struct MatDims {
  std::size_t m, k, n;
  Shape shape;
};

MatDims matmul_dims(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || b.rank() == 0) {
    throw ShapeError("matmul needs rank >= 1 operands");
  }
  MatDims d{};
  d.m = a.rank() == 1 ? 1 : a.shape()[0];
  d.k = a.cols();
  const std::size_t bk = b.rank() == 1 ? b.shape()[0] : b.shape()[0];
  d.n = b.rank() == 1 ? 1 : b.shape()[1];
  if (bk != d.k) {
    throw ShapeError("matmul shape mismatch " + shape_string(a.shape()) +
                     " x " + shape_string(b.shape()));
  }
  if (a.rank() == 1 && b.rank() == 1) {
    d.shape = {};
  } else if (a.rank() == 1) {
    d.shape = {d.n};
  } else if (b.rank() == 1) {
    d.shape = {d.m};
  } else {
    d.shape = {d.m, d.n};
  }
  return d;
}

// C(m x n) += A(m x k) * B(k x n), all row-major.
void gemm(const double* A, const double* B, double* C, std::size_t m,
          std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = C + i * n;
    const double* arow = A + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

bool all_vectors(const std::vector<const Tensor*>& parts) {
  return std::all_of(parts.begin(), parts.end(),
                     [](const Tensor* t) { return t->rank() <= 1; });
}

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kNeg: return "neg";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kMaxConst: return "max_const";
    case OpKind::kScale: return "scale";
    case OpKind::kAddConst: return "add_const";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSumAxis: return "sum_axis";
    case OpKind::kLogSumExp: return "logsumexp";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kCustom: return "custom";
  }
  return "?";
}

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::push(Node n) {
  if (n.op != OpKind::kLeaf) {
    n.needs_grad = std::any_of(n.in.begin(), n.in.end(), [&](std::size_t i) {
      return nodes_[i].needs_grad;
    });
    n.value = evaluate(n);
  }
  nodes_.push_back(std::move(n));
  const std::size_t id = nodes_.size() - 1;
  check_finite(id);
  root_ = id;
  return Var{this, id};
}

Var Graph::constant(Tensor t) {
  Node n;
  n.value = std::move(t);
  return push(std::move(n));
}

Var Graph::input(const std::string& name, Tensor t) {
  Var v = constant(std::move(t));
  named_[name] = v.id;
  return v;
}

Var Graph::parameter(const std::string& name, Tensor t) {
  Node n;
  n.value = std::move(t);
  n.trainable = true;
  n.needs_grad = true;
  Var v = push(std::move(n));
  named_[name] = v.id;
  return v;
}

Var Graph::add_op(OpKind op, std::vector<std::size_t> inputs, double attr,
                  std::size_t i0, std::size_t i1, std::size_t i2) {
  Node n;
  n.op = op;
  n.in = std::move(inputs);
  n.attr = attr;
  n.i0 = i0;
  n.i1 = i1;
  n.i2 = i2;
  return push(std::move(n));
}

Var Graph::add_custom(std::shared_ptr<const CustomOp> op,
                      std::vector<std::size_t> inputs) {
  Node n;
  n.op = OpKind::kCustom;
  n.in = std::move(inputs);
  n.custom = std::move(op);
  return push(std::move(n));
}

void Graph::check_finite(std::size_t id) const {
  const Node& n = nodes_[id];
  if (!n.value.all_finite()) {
    throw NonFiniteError(id, n.custom ? n.custom->name : op_name(n.op));
  }
}

Tensor Graph::evaluate(const Node& n) const {
  auto in = [&](std::size_t i) -> const Tensor& {
    return nodes_[n.in[i]].value;
  };
  switch (n.op) {
    case OpKind::kLeaf:
      return n.value;
    case OpKind::kAdd:
      return binary(in(0), in(1), [](double a, double b) { return a + b; });
    case OpKind::kSub:
      return binary(in(0), in(1), [](double a, double b) { return a - b; });
    case OpKind::kMul:
      return binary(in(0), in(1), [](double a, double b) { return a * b; });
    case OpKind::kDiv:
      return binary(in(0), in(1), [](double a, double b) { return a / b; });
    case OpKind::kNeg:
      return unary(in(0), [](double a) { return -a; });
    case OpKind::kExp:
      return unary(in(0), [](double a) { return std::exp(a); });
    case OpKind::kLog:
      return unary(in(0), [](double a) { return std::log(a); });
    case OpKind::kTanh:
      return unary(in(0), [](double a) { return std::tanh(a); });
    case OpKind::kSoftplus:
      return unary(in(0), stable_softplus);
    case OpKind::kSigmoid:
      return unary(in(0), stable_sigmoid);
    case OpKind::kMaxConst: {
      const double k = n.attr;
      return unary(in(0), [k](double a) { return a > k ? a : k; });
    }
    case OpKind::kScale: {
      const double k = n.attr;
      return unary(in(0), [k](double a) { return a * k; });
    }
    case OpKind::kAddConst: {
      const double k = n.attr;
      return unary(in(0), [k](double a) { return a + k; });
    }
    case OpKind::kMatMul: {
      const MatDims d = matmul_dims(in(0), in(1));
      Tensor out(d.shape);
      gemm(in(0).data().data(), in(1).data().data(), out.data().data(), d.m,
           d.k, d.n);
      return out;
    }
    case OpKind::kTranspose: {
      const Tensor& a = in(0);
      const std::size_t r = a.rows(), c = a.cols();
      Tensor out(Shape{c, r});
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
      return out;
    }
    case OpKind::kSum: {
      double s = 0.0;
      for (double v : in(0).data()) s += v;
      return Tensor::scalar(s);
    }
    case OpKind::kMean: {
      double s = 0.0;
      for (double v : in(0).data()) s += v;
      return Tensor::scalar(s / static_cast<double>(in(0).numel()));
    }
    case OpKind::kSumAxis: {
      const Tensor& a = in(0);
      const std::size_t r = a.rows(), c = a.cols();
      if (n.i0 == 0) {
        Tensor out(Shape{c});
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) out[j] += a[i * c + j];
        return out;
      }
      Tensor out(Shape{r, 1});
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i] += a[i * c + j];
      return out;
    }
    case OpKind::kLogSumExp: {
      const Tensor& a = in(0);
      double mx = a[0];
      for (double v : a.data()) mx = std::max(mx, v);
      double s = 0.0;
      for (double v : a.data()) s += std::exp(v - mx);
      return Tensor::scalar(mx + std::log(s));
    }
    case OpKind::kConcat: {
      std::vector<const Tensor*> parts;
      for (std::size_t i = 0; i < n.in.size(); ++i) parts.push_back(&in(i));
      if (all_vectors(parts)) {
        std::vector<double> out;
        for (const Tensor* p : parts)
          out.insert(out.end(), p->data().begin(), p->data().end());
        return Tensor::vector(std::move(out));
      }
      if (n.i0 == 0) {
        const std::size_t c = parts[0]->cols();
        std::size_t r = 0;
        std::vector<double> out;
        for (const Tensor* p : parts) {
          if (p->cols() != c) throw ShapeError("concat axis 0: column mismatch");
          r += p->rows();
          out.insert(out.end(), p->data().begin(), p->data().end());
        }
        return Tensor::matrix(r, c, std::move(out));
      }
      const std::size_t r = parts[0]->rows();
      std::size_t c = 0;
      for (const Tensor* p : parts) {
        if (p->rows() != r) throw ShapeError("concat axis 1: row mismatch");
        c += p->cols();
      }
      Tensor out(Shape{r, c});
      std::size_t off = 0;
      for (const Tensor* p : parts) {
        const std::size_t pc = p->cols();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < pc; ++j)
            out[i * c + off + j] = (*p)[i * pc + j];
        off += pc;
      }
      return out;
    }
    case OpKind::kSlice: {
      const Tensor& a = in(0);
      const std::size_t b = n.i1, e = n.i2;
      if (a.rank() <= 1) {
        if (e > a.numel() || b > e) throw ShapeError("slice out of range");
        return Tensor::vector(
            std::vector<double>(a.data().begin() + b, a.data().begin() + e));
      }
      const std::size_t r = a.rows(), c = a.cols();
      if (n.i0 == 0) {
        if (e > r || b > e) throw ShapeError("slice out of range");
        return Tensor::matrix(e - b, c,
                              std::vector<double>(a.data().begin() + b * c,
                                                  a.data().begin() + e * c));
      }
      if (e > c || b > e) throw ShapeError("slice out of range");
      Tensor out(Shape{r, e - b});
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = b; j < e; ++j) out[i * (e - b) + j - b] = a[i * c + j];
      return out;
    }
    case OpKind::kCustom: {
      std::vector<const Tensor*> ptrs;
      for (std::size_t i = 0; i < n.in.size(); ++i) ptrs.push_back(&in(i));
      return n.custom->forward(ptrs);
    }
  }
  throw Error("unknown op");
}

Tensor Graph::forward(const std::map<std::string, Tensor>& inputs) {
  for (const auto& [name, t] : inputs) set_leaf(name, t);
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    if (n.op == OpKind::kLeaf) continue;
    n.value = evaluate(n);
    check_finite(id);
  }
  return nodes_.at(root_).value;
}

void Graph::set_leaf(const std::string& name, const Tensor& t) {
  auto it = named_.find(name);
  if (it == named_.end()) throw Error("unknown graph input '" + name + "'");
  Node& n = nodes_[it->second];
  if (!n.value.same_shape(t)) {
    throw ShapeError("input '" + name + "' expects shape " +
                     shape_string(n.value.shape()) + ", got " +
                     shape_string(t.shape()));
  }
  n.value = t;
  check_finite(it->second);
}

std::map<std::string, Tensor> Graph::parameters() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : named_) {
    if (nodes_[id].trainable) out.emplace(name, nodes_[id].value);
  }
  return out;
}

std::map<std::string, Tensor> Graph::backward(Var root) {
  root_ = root.id;
  return backward();
}

std::map<std::string, Tensor> Graph::backward() {
  const Node& rn = nodes_.at(root_);
  if (rn.value.numel() != 1) {
    throw ShapeError("backward needs a scalar root, got shape " +
                     shape_string(rn.value.shape()));
  }
  grads_.assign(nodes_.size(), Tensor(Shape{}, std::vector<double>{0.0}));
  for (std::size_t id = 0; id <= root_; ++id) {
    if (nodes_[id].needs_grad) grads_[id] = Tensor(nodes_[id].value.shape());
  }
  grads_[root_][0] = 1.0;

  for (std::size_t id = root_ + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.needs_grad || n.op == OpKind::kLeaf) continue;
    const Tensor& up = grads_[id];
    auto gin = [&](std::size_t i) -> Tensor* {
      return nodes_[n.in[i]].needs_grad ? &grads_[n.in[i]] : nullptr;
    };
    auto in = [&](std::size_t i) -> const Tensor& {
      return nodes_[n.in[i]].value;
    };
    const Tensor& out = n.value;
    switch (n.op) {
      case OpKind::kLeaf:
        break;
      case OpKind::kAdd:
        binary_grad(in(0), in(1), up, gin(0), gin(1),
                    [](double, double) { return 1.0; },
                    [](double, double) { return 1.0; });
        break;
      case OpKind::kSub:
        binary_grad(in(0), in(1), up, gin(0), gin(1),
                    [](double, double) { return 1.0; },
                    [](double, double) { return -1.0; });
        break;
      case OpKind::kMul:
        binary_grad(in(0), in(1), up, gin(0), gin(1),
                    [](double, double b) { return b; },
                    [](double a, double) { return a; });
        break;
      case OpKind::kDiv:
        binary_grad(in(0), in(1), up, gin(0), gin(1),
                    [](double, double b) { return 1.0 / b; },
                    [](double a, double b) { return -a / (b * b); });
        break;
      case OpKind::kNeg:
      case OpKind::kExp:
      case OpKind::kLog:
      case OpKind::kTanh:
      case OpKind::kSoftplus:
      case OpKind::kSigmoid:
      case OpKind::kMaxConst:
      case OpKind::kScale:
      case OpKind::kAddConst: {
        Tensor* g = gin(0);
        if (!g) break;
        const Tensor& a = in(0);
        for (std::size_t i = 0; i < a.numel(); ++i) {
          double d = 0.0;
          switch (n.op) {
            case OpKind::kNeg: d = -1.0; break;
            case OpKind::kExp: d = out[i]; break;
            case OpKind::kLog: d = 1.0 / a[i]; break;
            case OpKind::kTanh: d = 1.0 - out[i] * out[i]; break;
            case OpKind::kSoftplus: d = stable_sigmoid(a[i]); break;
            case OpKind::kSigmoid: d = out[i] * (1.0 - out[i]); break;
            case OpKind::kMaxConst: d = a[i] > n.attr ? 1.0 : 0.0; break;
            case OpKind::kScale: d = n.attr; break;
            default: d = 1.0; break;
          }
          (*g)[i] += up[i] * d;
        }
        break;
      }
      case OpKind::kMatMul: {
        const Tensor& a = in(0);
        const Tensor& b = in(1);
        const MatDims d = matmul_dims(a, b);
        if (Tensor* ga = gin(0)) {
          // ga(m x k) += up(m x n) * b^T(n x k)
          for (std::size_t i = 0; i < d.m; ++i)
            for (std::size_t j = 0; j < d.n; ++j) {
              const double u = up[i * d.n + j];
              if (u == 0.0) continue;
              for (std::size_t p = 0; p < d.k; ++p)
                (*ga)[i * d.k + p] += u * b[p * d.n + j];
            }
        }
        if (Tensor* gb = gin(1)) {
          // gb(k x n) += a^T(k x m) * up(m x n)
          for (std::size_t i = 0; i < d.m; ++i)
            for (std::size_t p = 0; p < d.k; ++p) {
              const double av = a[i * d.k + p];
              if (av == 0.0) continue;
              for (std::size_t j = 0; j < d.n; ++j)
                (*gb)[p * d.n + j] += av * up[i * d.n + j];
            }
        }
        break;
      }
      case OpKind::kTranspose: {
        Tensor* g = gin(0);
        if (!g) break;
        const std::size_t r = in(0).rows(), c = in(0).cols();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) (*g)[i * c + j] += up[j * r + i];
        break;
      }
      case OpKind::kSum:
      case OpKind::kMean: {
        Tensor* g = gin(0);
        if (!g) break;
        const double scale =
            n.op == OpKind::kSum ? up[0]
                                 : up[0] / static_cast<double>(g->numel());
        for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += scale;
        break;
      }
      case OpKind::kSumAxis: {
        Tensor* g = gin(0);
        if (!g) break;
        const std::size_t r = in(0).rows(), c = in(0).cols();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j)
            (*g)[i * c + j] += n.i0 == 0 ? up[j] : up[i];
        break;
      }
      case OpKind::kLogSumExp: {
        Tensor* g = gin(0);
        if (!g) break;
        const Tensor& a = in(0);
        for (std::size_t i = 0; i < a.numel(); ++i)
          (*g)[i] += up[0] * std::exp(a[i] - out[0]);
        break;
      }
      case OpKind::kConcat: {
        std::vector<const Tensor*> parts;
        for (std::size_t i = 0; i < n.in.size(); ++i) parts.push_back(&in(i));
        if (all_vectors(parts) || n.i0 == 0) {
          std::size_t off = 0;
          for (std::size_t i = 0; i < parts.size(); ++i) {
            const std::size_t len = parts[i]->numel();
            if (Tensor* g = gin(i))
              for (std::size_t j = 0; j < len; ++j) (*g)[j] += up[off + j];
            off += len;
          }
          break;
        }
        const std::size_t r = out.rows(), c = out.cols();
        std::size_t off = 0;
        for (std::size_t p = 0; p < parts.size(); ++p) {
          const std::size_t pc = parts[p]->cols();
          if (Tensor* g = gin(p))
            for (std::size_t i = 0; i < r; ++i)
              for (std::size_t j = 0; j < pc; ++j)
                (*g)[i * pc + j] += up[i * c + off + j];
          off += pc;
        }
        break;
      }
      case OpKind::kSlice: {
        Tensor* g = gin(0);
        if (!g) break;
        const Tensor& a = in(0);
        const std::size_t b = n.i1, e = n.i2;
        if (a.rank() <= 1) {
          for (std::size_t j = b; j < e; ++j) (*g)[j] += up[j - b];
        } else if (n.i0 == 0) {
          const std::size_t c = a.cols();
          for (std::size_t k = 0; k < (e - b) * c; ++k) (*g)[b * c + k] += up[k];
        } else {
          const std::size_t r = a.rows(), c = a.cols();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = b; j < e; ++j)
              (*g)[i * c + j] += up[i * (e - b) + j - b];
        }
        break;
      }
      case OpKind::kCustom: {
        std::vector<const Tensor*> ptrs;
        for (std::size_t i = 0; i < n.in.size(); ++i) ptrs.push_back(&in(i));
        std::vector<Tensor> gs = n.custom->backward(ptrs, out, up);
        for (std::size_t i = 0; i < n.in.size() && i < gs.size(); ++i) {
          Tensor* g = gin(i);
          if (!g) continue;
          if (!gs[i].same_shape(*g)) {
            throw ShapeError("custom op '" + n.custom->name +
                             "' returned a gradient of the wrong shape");
          }
          for (std::size_t k = 0; k < g->numel(); ++k) (*g)[k] += gs[i][k];
        }
        break;
      }
    }
  }

  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : named_) {
    if (nodes_[id].trainable) out.emplace(name, grads_[id]);
  }
  return out;
}

Tensor Graph::grad(Var v) const {
  if (v.id < grads_.size() && nodes_[v.id].needs_grad) return grads_[v.id];
  return Tensor(nodes_.at(v.id).value.shape());
}

// ---- op constructors -------------------------------------------------------

namespace {

Graph& same_graph(Var a, Var b) {
  if (a.graph != b.graph || a.graph == nullptr) {
    throw Error("operands belong to different graphs");
  }
  return *a.graph;
}

}  // namespace

Var operator+(Var a, Var b) {
  return same_graph(a, b).add_op(OpKind::kAdd, {a.id, b.id});
}
Var operator-(Var a, Var b) {
  return same_graph(a, b).add_op(OpKind::kSub, {a.id, b.id});
}
Var operator*(Var a, Var b) {
  return same_graph(a, b).add_op(OpKind::kMul, {a.id, b.id});
}
Var operator/(Var a, Var b) {
  return same_graph(a, b).add_op(OpKind::kDiv, {a.id, b.id});
}
Var operator-(Var a) { return a.graph->add_op(OpKind::kNeg, {a.id}); }
Var operator+(Var a, double k) {
  return a.graph->add_op(OpKind::kAddConst, {a.id}, k);
}
Var operator*(Var a, double k) {
  return a.graph->add_op(OpKind::kScale, {a.id}, k);
}
Var exp(Var a) { return a.graph->add_op(OpKind::kExp, {a.id}); }
Var log(Var a) { return a.graph->add_op(OpKind::kLog, {a.id}); }
Var tanh(Var a) { return a.graph->add_op(OpKind::kTanh, {a.id}); }
Var softplus(Var a) { return a.graph->add_op(OpKind::kSoftplus, {a.id}); }
Var sigmoid(Var a) { return a.graph->add_op(OpKind::kSigmoid, {a.id}); }
Var max_const(Var a, double k) {
  return a.graph->add_op(OpKind::kMaxConst, {a.id}, k);
}
Var matmul(Var a, Var b) {
  return same_graph(a, b).add_op(OpKind::kMatMul, {a.id, b.id});
}
Var transpose(Var a) { return a.graph->add_op(OpKind::kTranspose, {a.id}); }
Var sum(Var a) { return a.graph->add_op(OpKind::kSum, {a.id}); }
Var mean(Var a) { return a.graph->add_op(OpKind::kMean, {a.id}); }
Var sum_axis(Var a, int axis) {
  if (axis != 0 && axis != 1) throw ShapeError("sum_axis: axis must be 0 or 1");
  return a.graph->add_op(OpKind::kSumAxis, {a.id}, 0.0,
                         static_cast<std::size_t>(axis));
}
Var logsumexp(Var a) { return a.graph->add_op(OpKind::kLogSumExp, {a.id}); }

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.graph != parts[0].graph) throw Error("concat across graphs");
    ids.push_back(p.id);
  }
  return parts[0].graph->add_op(OpKind::kConcat, std::move(ids), 0.0,
                                static_cast<std::size_t>(axis));
}

Var slice(Var a, int axis, std::size_t begin, std::size_t end) {
  return a.graph->add_op(OpKind::kSlice, {a.id}, 0.0,
                         static_cast<std::size_t>(axis), begin, end);
}

Var custom(std::shared_ptr<const CustomOp> op, const std::vector<Var>& inputs) {
  if (inputs.empty()) throw Error("custom op needs inputs");
  std::vector<std::size_t> ids;
  for (const Var& v : inputs) ids.push_back(v.id);
  return inputs[0].graph->add_custom(std::move(op), std::move(ids));
}

}  // namespace gendfl::ndgrad
