// Copyright (c) 2026 The WAM Authors. All Rights Reserved.
//
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

#include "wam/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace wam {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<detail::Node>;

// Builds the output node and wires it into the graph if any input is tracked.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> data,
                   std::initializer_list<Tensor> inputs,
                   std::function<void(detail::Node&)> backward_fn) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  if (g_grad_enabled) {
    bool tracked = false;
    for (const auto& in : inputs) tracked = tracked || in.requires_grad();
    if (tracked) {
      node->requires_grad = true;
      for (const auto& in : inputs) node->parents.push_back(in.node());
      node->backward = std::move(backward_fn);
    }
  }
  return Tensor(std::move(node));
}

Tensor make_result_n(std::string_view op, Shape shape, std::vector<double> data,
                     const std::vector<Tensor>& inputs,
                     std::function<void(detail::Node&)> backward_fn) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  if (g_grad_enabled) {
    bool tracked = false;
    for (const auto& in : inputs) tracked = tracked || in.requires_grad();
    if (tracked) {
      node->requires_grad = true;
      for (const auto& in : inputs) node->parents.push_back(in.node());
      node->backward = std::move(backward_fn);
    }
  }
  return Tensor(std::move(node));
}

void require_defined(std::string_view op, const Tensor& t) {
  if (!t.defined()) throw std::invalid_argument(std::string(op) + ": undefined tensor");
}

bool is_suffix(const Shape& full, const Shape& tail) {
  if (tail.size() > full.size()) return false;
  return std::equal(tail.begin(), tail.end(), full.end() - static_cast<std::ptrdiff_t>(tail.size()));
}

Tensor unary(std::string_view op, const Tensor& a, double (*f)(double),
             // derivative given input x and output y
             double (*df)(double, double)) {
  require_defined(op, a);
  const auto& x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return make_result(op, a.shape(), std::move(y), {a}, [df](detail::Node& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * df(p.data[i], self.data[i]);
  });
}

enum class Binary { kAdd, kSub, kMul };

Tensor binary(std::string_view op, Binary kind, const Tensor& a, const Tensor& b) {
  require_defined(op, a);
  require_defined(op, b);
  if (!is_suffix(a.shape(), b.shape())) throw ShapeError(op, {a.shape(), b.shape()});
  const std::size_t inner = b.numel();
  const std::size_t outer = inner == 0 ? 0 : a.numel() / inner;
  const auto& x = a.data();
  const auto& z = b.data();
  std::vector<double> y(a.numel());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t k = o * inner + i;
      switch (kind) {
        case Binary::kAdd: y[k] = x[k] + z[i]; break;
        case Binary::kSub: y[k] = x[k] - z[i]; break;
        case Binary::kMul: y[k] = x[k] * z[i]; break;
      }
    }
  }
  return make_result(op, a.shape(), std::move(y), {a, b},
                     [kind, inner, outer](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const auto& g = self.grad;
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i) {
          const std::size_t k = o * inner + i;
          ga[k] += kind == Binary::kMul ? g[k] * pb.data[i] : g[k];
        }
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i) {
          const std::size_t k = o * inner + i;
          switch (kind) {
            case Binary::kAdd: gb[i] += g[k]; break;
            case Binary::kSub: gb[i] -= g[k]; break;
            case Binary::kMul: gb[i] += g[k] * pa.data[k]; break;
          }
        }
    }
  });
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ']';
  return os.str();
}

ShapeError::ShapeError(std::string_view op, const std::vector<Shape>& shapes,
                       std::string_view detail)
    : std::invalid_argument([&] {
        std::ostringstream os;
        os << op << ": incompatible shapes";
        for (const auto& s : shapes) os << ' ' << shape_str(s);
        if (!detail.empty()) os << " (" << detail << ')';
        return os.str();
      }()) {}

std::vector<double>& detail::Node::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size())
    throw ShapeError("tensor", {shape}, "expected " + std::to_string(shape_numel(shape)) +
                                            " values, got " + std::to_string(values.size()));
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  require_defined("shape", *this);
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) throw std::out_of_range("Tensor::dim: axis out of range");
  return node_->shape[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<const double> Tensor::data() const {
  require_defined("data", *this);
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  require_defined("data", *this);
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item", {shape()}, "not a single value");
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::is_leaf() const { return node_ && node_->is_leaf(); }
std::span<const double> Tensor::grad() const {
  require_defined("grad", *this);
  return node_->grad;
}
void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}
std::string_view Tensor::op() const { return node_ ? node_->op : "undefined"; }

Tensor Tensor::detach() const { return from(shape(), node_->data, false); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_mode_enabled() { return g_grad_enabled; }

std::span<const double> GradientMap::at(const Tensor& t) const {
  auto it = entries_.find(t.id());
  if (it == entries_.end()) throw std::out_of_range("GradientMap: no gradient for tensor");
  return it->second.grad();
}

// ---------------------------------------------------------------------------
// backward

GradientMap backward(const Tensor& loss) {
  require_defined("backward", loss);
  if (loss.numel() != 1)
    throw ShapeError("backward", {loss.shape()}, "loss must be a scalar");
  GradientMap result;
  if (!loss.requires_grad()) return result;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<NodePtr> order;
  std::unordered_set<const detail::Node*> visited;
  std::vector<std::pair<NodePtr, std::size_t>> stack{{loss.node(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& top = stack.back();
    if (top.second < top.first->parents.size()) {
      NodePtr parent = top.first->parents[top.second++];
      if (parent->requires_grad && visited.insert(parent.get()).second)
        stack.emplace_back(std::move(parent), 0);
    } else {
      order.push_back(std::move(top.first));
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node& node = **it;
    if (!node.is_leaf() && !node.grad.empty()) node.backward(node);
  }
  for (auto& node : order) {
    if (node->is_leaf()) {
      node->ensure_grad();
      result.insert(Tensor(node));
      continue;
    }
    node->grad.clear();
    node->grad.shrink_to_fit();
    node->backward = nullptr;
    node->parents.clear();
    node->requires_grad = false;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Operations

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.rank() == 3 && b.rank() == 3) {
    const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    if (b.dim(0) != batch || b.dim(1) != k) throw ShapeError("matmul", {a.shape(), b.shape()});
    std::vector<double> out(batch * m * n);
    for (std::size_t s = 0; s < batch; ++s) {
      ConstMapMat A(a.data().data() + s * m * k, m, k);
      ConstMapMat B(b.data().data() + s * k * n, k, n);
      MapMat(out.data() + s * m * n, m, n).noalias() = A * B;
    }
    return make_result("matmul", {batch, m, n}, std::move(out), {a, b},
                       [batch, m, k, n](detail::Node& self) {
      auto& pa = *self.parents[0];
      auto& pb = *self.parents[1];
      for (std::size_t s = 0; s < batch; ++s) {
        ConstMapMat G(self.grad.data() + s * m * n, m, n);
        if (pa.requires_grad) {
          MapMat(pa.ensure_grad().data() + s * m * k, m, k).noalias() +=
              G * ConstMapMat(pb.data.data() + s * k * n, k, n).transpose();
        }
        if (pb.requires_grad) {
          MapMat(pb.ensure_grad().data() + s * k * n, k, n).noalias() +=
              ConstMapMat(pa.data.data() + s * m * k, m, k).transpose() * G;
        }
      }
    });
  }
  if (a.rank() < 2 || b.rank() != 2 || a.shape().back() != b.dim(0))
    throw ShapeError("matmul", {a.shape(), b.shape()});
  const std::size_t k = b.dim(0), n = b.dim(1), m = a.numel() / k;
  std::vector<double> out(m * n);
  MapMat(out.data(), m, n).noalias() =
      ConstMapMat(a.data().data(), m, k) * ConstMapMat(b.data().data(), k, n);
  Shape shape = a.shape();
  shape.back() = n;
  return make_result("matmul", std::move(shape), std::move(out), {a, b},
                     [m, k, n](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    ConstMapMat G(self.grad.data(), m, n);
    if (pa.requires_grad)
      MapMat(pa.ensure_grad().data(), m, k).noalias() +=
          G * ConstMapMat(pb.data.data(), k, n).transpose();
    if (pb.requires_grad)
      MapMat(pb.ensure_grad().data(), k, n).noalias() +=
          ConstMapMat(pa.data.data(), m, k).transpose() * G;
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary("add", Binary::kAdd, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary("sub", Binary::kSub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary("mul", Binary::kMul, a, b); }

Tensor scale(const Tensor& a, double factor) {
  require_defined("scale", a);
  std::vector<double> y(a.data().begin(), a.data().end());
  for (auto& v : y) v *= factor;
  return make_result("scale", a.shape(), std::move(y), {a}, [factor](detail::Node& self) {
    auto& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor exp(const Tensor& a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor sqrt(const Tensor& a) {
  return unary(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& a) {
  require_defined("softmax", a);
  if (a.rank() == 0) throw ShapeError("softmax", {a.shape()});
  const std::size_t cols = a.shape().back();
  const std::size_t rows = cols == 0 ? 0 : a.numel() / cols;
  const auto& x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * cols;
    double* out = y.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += out[c] = std::exp(in[c] - mx);
    for (std::size_t c = 0; c < cols; ++c) out[c] /= total;
  }
  return make_result("softmax", a.shape(), std::move(y), {a}, [rows, cols](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.data.data() + r * cols;
      const double* dy = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += dy[c] * y[c];
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += y[c] * (dy[c] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& a) {
  require_defined("log_softmax", a);
  if (a.rank() == 0) throw ShapeError("log_softmax", {a.shape()});
  const std::size_t cols = a.shape().back();
  const std::size_t rows = cols == 0 ? 0 : a.numel() / cols;
  const auto& x = a.data();
  std::vector<double> y(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * cols;
    double* out = y.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(in[c] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t c = 0; c < cols; ++c) out[c] = in[c] - lse;
  }
  return make_result("log_softmax", a.shape(), std::move(y), {a},
                     [rows, cols](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.data.data() + r * cols;
      const double* dy = self.grad.data() + r * cols;
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += dy[c];
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += dy[c] - std::exp(y[c]) * total;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double epsilon) {
  require_defined("layer_norm", x);
  if (x.rank() == 0 || gain.rank() != 1 || bias.rank() != 1 ||
      gain.dim(0) != x.shape().back() || bias.dim(0) != x.shape().back())
    throw ShapeError("layer_norm", {x.shape(), gain.shape(), bias.shape()});
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.numel() / cols;
  auto normalized = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  std::vector<double> y(x.numel());
  const auto& in = x.data();
  const auto& g = gain.data();
  const auto& b = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = in.data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + epsilon);
    (*inv_std)[r] = inv;
    for (std::size_t c = 0; c < cols; ++c) {
      const double xh = (row[c] - mu) * inv;
      (*normalized)[r * cols + c] = xh;
      y[r * cols + c] = xh * g[c] + b[c];
    }
  }
  return make_result("layer_norm", x.shape(), std::move(y), {x, gain, bias},
                     [rows, cols, normalized, inv_std](detail::Node& self) {
    auto& px = *self.parents[0];
    auto& pg = *self.parents[1];
    auto& pb = *self.parents[2];
    const auto& xh = *normalized;
    const auto& dy = self.grad;
    if (pg.requires_grad || pb.requires_grad) {
      auto& dg = pg.ensure_grad();
      auto& db = pb.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          dg[c] += dy[r * cols + c] * xh[r * cols + c];
          db[c] += dy[r * cols + c];
        }
    }
    if (px.requires_grad) {
      auto& dx = px.ensure_grad();
      const double n = static_cast<double>(cols);
      for (std::size_t r = 0; r < rows; ++r) {
        double sum_d = 0.0, sum_dx = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          const double d = dy[r * cols + c] * pg.data[c];
          sum_d += d;
          sum_dx += d * xh[r * cols + c];
        }
        const double inv = (*inv_std)[r];
        for (std::size_t c = 0; c < cols; ++c) {
          const double d = dy[r * cols + c] * pg.data[c];
          dx[r * cols + c] += inv / n * (n * d - sum_d - xh[r * cols + c] * sum_dx);
        }
      }
    }
  });
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
  require_defined("gather_rows", table);
  if (table.rank() != 2) throw ShapeError("gather_rows", {table.shape()}, "table must be 2-d");
  const std::size_t rows = table.dim(0), cols = table.dim(1);
  std::vector<double> out(ids.size() * cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= rows)
      throw std::out_of_range("gather_rows: id " + std::to_string(ids[i]) +
                              " out of range for table " + shape_str(table.shape()));
    std::copy_n(table.data().begin() + static_cast<std::ptrdiff_t>(ids[i] * cols), cols,
                out.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  std::vector<int> kept(ids.begin(), ids.end());
  return make_result("gather_rows", {ids.size(), cols}, std::move(out), {table},
                     [kept = std::move(kept), cols](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t c = 0; c < cols; ++c)
        g[static_cast<std::size_t>(kept[i]) * cols + c] += self.grad[i * cols + c];
  });
}

Tensor sum(const Tensor& a) {
  require_defined("sum", a);
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result("sum", {}, {total}, {a}, [](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  require_defined("mean", a);
  if (a.numel() == 0) throw ShapeError("mean", {a.shape()}, "empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor squared_l2(const Tensor& a) {
  require_defined("squared_l2", a);
  double total = 0.0;
  for (double v : a.data()) total += v * v;
  return make_result("squared_l2", {}, {total}, {a}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * p.data[i] * self.grad[0];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  std::vector<Shape> shapes;
  for (const auto& p : parts) {
    require_defined("concat", p);
    shapes.push_back(p.shape());
  }
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeError("concat", shapes, "axis out of range");
  std::size_t extent = 0;
  for (const auto& s : shapes) {
    if (s.size() != first.size()) throw ShapeError("concat", shapes);
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != first[d]) throw ShapeError("concat", shapes);
    extent += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  Shape out_shape = first;
  out_shape[axis] = extent;
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(axis) * inner;
    widths.push_back(w);
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(p.data().begin() + static_cast<std::ptrdiff_t>(o * w), w,
                  out.begin() + static_cast<std::ptrdiff_t>(o * extent * inner + offset));
    offset += w;
  }
  const std::size_t row = extent * inner;
  return make_result_n("concat", std::move(out_shape), std::move(out), parts,
                       [widths, outer, row](detail::Node& self) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      auto& p = *self.parents[i];
      if (p.requires_grad) {
        auto& g = p.ensure_grad();
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t j = 0; j < widths[i]; ++j)
            g[o * widths[i] + j] += self.grad[o * row + off + j];
      }
      off += widths[i];
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_defined("transpose", a);
  if (a.rank() < 2) throw ShapeError("transpose", {a.shape()}, "needs rank >= 2");
  std::vector<std::size_t> axes(a.rank());
  std::iota(axes.begin(), axes.end(), std::size_t{0});
  std::swap(axes[a.rank() - 1], axes[a.rank() - 2]);
  return permute(a, axes);
}

Tensor reshape(const Tensor& a, Shape shape) {
  require_defined("reshape", a);
  if (shape_numel(shape) != a.numel()) throw ShapeError("reshape", {a.shape(), shape});
  std::vector<double> y(a.data().begin(), a.data().end());
  return make_result("reshape", std::move(shape), std::move(y), {a}, [](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes) {
  require_defined("permute", a);
  const std::size_t r = a.rank();
  std::vector<bool> seen(r, false);
  bool valid = axes.size() == r;
  for (std::size_t ax : axes) {
    if (!valid || ax >= r || seen[ax]) {
      valid = false;
      break;
    }
    seen[ax] = true;
  }
  if (!valid) throw ShapeError("permute", {a.shape(), Shape(axes.begin(), axes.end())}, "bad axes");
  Shape out_shape(r);
  for (std::size_t d = 0; d < r; ++d) out_shape[d] = a.shape()[axes[d]];
  const auto in_strides = strides_of(a.shape());
  // source offset for each output element
  std::vector<std::size_t> source(a.numel());
  std::vector<std::size_t> index(r, 0);
  for (std::size_t flat = 0; flat < source.size(); ++flat) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < r; ++d) off += index[d] * in_strides[axes[d]];
    source[flat] = off;
    for (std::size_t d = r; d-- > 0;) {
      if (++index[d] < out_shape[d]) break;
      index[d] = 0;
    }
  }
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[source[i]];
  return make_result("permute", std::move(out_shape), std::move(y), {a},
                     [source = std::move(source)](detail::Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < source.size(); ++i) g[source[i]] += self.grad[i];
  });
}

Tensor pairwise_sqdist(const Tensor& x, const Tensor& y) {
  require_defined("pairwise_sqdist", x);
  require_defined("pairwise_sqdist", y);
  if (x.rank() != 2 || y.rank() != 2 || x.dim(1) != y.dim(1))
    throw ShapeError("pairwise_sqdist", {x.shape(), y.shape()});
  const std::size_t n = x.dim(0), m = y.dim(0), d = x.dim(1);
  const double* xs = x.data().data();
  const double* ys = y.data().data();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = xs[i * d + k] - ys[j * d + k];
        acc += diff * diff;
      }
      out[i * m + j] = acc;
    }
  return make_result("pairwise_sqdist", {n, m}, std::move(out), {x, y},
                     [n, m, d](detail::Node& self) {
    auto& px = *self.parents[0];
    auto& py = *self.parents[1];
    double* gx = px.requires_grad ? px.ensure_grad().data() : nullptr;
    double* gy = py.requires_grad ? py.ensure_grad().data() : nullptr;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double w = 2.0 * self.grad[i * m + j];
        if (w == 0.0) continue;
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = px.data[i * d + k] - py.data[j * d + k];
          if (gx) gx[i * d + k] += w * diff;
          if (gy) gy[j * d + k] -= w * diff;
        }
      }
  });
}

}  // namespace wam
