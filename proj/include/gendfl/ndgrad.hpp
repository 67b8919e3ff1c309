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

// ndgrad: a small reverse-mode automatic differentiation engine over dense
// row-major double arrays of rank <= 2.
//
// Graphs are built eagerly (every op computes its value when it is added) and
// recorded, so the same graph can be replayed with new leaf values through
// Graph::forward(). Replay is what the finite-difference checker relies on.
//
// Elementwise binary ops broadcast numpy-style over a 2-D view of each operand:
// a scalar is 1x1, a rank-1 tensor of length n is a 1xn row, a rank-2 tensor
// is itself.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gendfl/errors.hpp"

namespace gendfl::ndgrad {

using Shape = std::vector<std::size_t>;

class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor(Shape{}, {v}); }
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  // 2-D view used by broadcasting and matmul.
  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }
  double item() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::string shape_string(const Shape& s);

enum class OpKind {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kLog,
  kTanh,
  kSoftplus,
  kSigmoid,
  kMaxConst,
  kScale,
  kAddConst,
  kMatMul,
  kTranspose,
  kSum,
  kMean,
  kSumAxis,
  kLogSumExp,
  kConcat,
  kSlice,
  kCustom,
};

const char* op_name(OpKind op);

// User-defined op with an explicit vector-Jacobian product. `backward`
// returns one tensor per input; an input that needs no gradient may be given
// an empty-shaped default Tensor.
struct CustomOp {
  std::string name;
  std::function<Tensor(std::span<const Tensor* const> inputs)> forward;
  std::function<std::vector<Tensor>(std::span<const Tensor* const> inputs,
                                    const Tensor& output,
                                    const Tensor& upstream)>
      backward;
};

class Graph;

// Lightweight handle to a graph node.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaves. Constants and inputs never receive gradients; parameters do.
  // Inputs and parameters are addressable by name for replay.
  Var constant(Tensor t);
  Var input(const std::string& name, Tensor t);
  Var parameter(const std::string& name, Tensor t);

  Var add_op(OpKind op, std::vector<std::size_t> inputs, double attr = 0.0,
             std::size_t i0 = 0, std::size_t i1 = 0, std::size_t i2 = 0);
  Var add_custom(std::shared_ptr<const CustomOp> op,
                 std::vector<std::size_t> inputs);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  std::size_t size() const { return nodes_.size(); }
  OpKind kind(std::size_t id) const { return nodes_.at(id).op; }

  // Replays every node in creation order. Named leaves listed in `inputs` are
  // rebound first (shapes must match). Returns the root value.
  Tensor forward(const std::map<std::string, Tensor>& inputs = {});
  void set_root(Var v) { root_ = v.id; }
  Var root() { return Var{this, root_}; }

  // Gradient of the scalar root with respect to every parameter, keyed by
  // parameter name.
  std::map<std::string, Tensor> backward();
  std::map<std::string, Tensor> backward(Var root);

  // Gradient of the last backward() with respect to any node that required
  // one; zero tensor otherwise.
  Tensor grad(Var v) const;

  std::map<std::string, Tensor> parameters() const;
  void set_leaf(const std::string& name, const Tensor& t);

 private:
  struct Node {
    OpKind op = OpKind::kLeaf;
    std::vector<std::size_t> in;
    Tensor value;
    double attr = 0.0;
    std::size_t i0 = 0, i1 = 0, i2 = 0;
    std::shared_ptr<const CustomOp> custom;
    bool trainable = false;
    bool needs_grad = false;
  };

  Tensor evaluate(const Node& n) const;
  void check_finite(std::size_t id) const;
  Var push(Node n);

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> named_;
  std::vector<Tensor> grads_;
  std::size_t root_ = 0;
};

// ---- op constructors -------------------------------------------------------

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double k);
Var operator*(Var a, double k);
inline Var operator+(double k, Var a) { return a + k; }
inline Var operator-(Var a, double k) { return a + (-k); }
inline Var operator*(double k, Var a) { return a * k; }

Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var sigmoid(Var a);
// Elementwise max(a, k).
Var max_const(Var a, double k);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var sum(Var a);
Var mean(Var a);
// axis 0 collapses rows (result [cols]); axis 1 collapses columns (result
// [rows, 1]).
Var sum_axis(Var a, int axis);
Var logsumexp(Var a);
Var concat(const std::vector<Var>& parts, int axis);
Var slice(Var a, int axis, std::size_t begin, std::size_t end);
Var custom(std::shared_ptr<const CustomOp> op, const std::vector<Var>& inputs);

// ---- checks and optimisation ------------------------------------------------

// max over parameter entries of |analytic - central difference| /
// max(1, |analytic|). The graph's root must be a scalar.
double finite_diff_check(Graph& graph,
                         const std::map<std::string, Tensor>& inputs,
                         double step);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

using ParamMap = std::map<std::string, Tensor>;

// Bias-corrected Adam update, in place. Parameters without a gradient entry
// are left untouched. With beta1 = beta2 = 0 this reduces to sign-normalised
// steps; use sgd_step for plain gradient descent.
void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state);
void sgd_step(ParamMap& params, const ParamMap& grads, double lr);

}  // namespace gendfl::ndgrad
