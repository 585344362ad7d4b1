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

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wam {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Thrown when an operation receives inputs whose shapes it cannot combine.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(std::string_view op, const std::vector<Shape>& shapes,
             std::string_view detail = {});
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads `grad` of this node and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }
  std::vector<double>& ensure_grad();
};

}  // namespace detail

/// Dense double-precision n-d array that records the operations producing it
/// whenever one of its inputs requires gradients. Copies share storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  /// Direct write access, meant for parameter initialization and updates.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  bool is_leaf() const;
  /// Accumulated gradient; empty span if none was produced.
  std::span<const double> grad() const;
  void zero_grad();
  std::string_view op() const;

  /// Stable identity of the underlying storage.
  const void* id() const { return node_.get(); }

  /// Same values, no history, no gradient tracking.
  Tensor detach() const;

  // Internal: construction of recorded nodes by the op library.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_mode_enabled();

/// Parameters reached by a backward pass, keyed by tensor identity.
class GradientMap {
 public:
  bool contains(const Tensor& t) const { return entries_.count(t.id()) > 0; }
  std::span<const double> at(const Tensor& t) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void insert(const Tensor& t) { entries_.emplace(t.id(), t); }

 private:
  std::unordered_map<const void*, Tensor> entries_;
};

/// Reverse-mode sweep from a scalar loss. Leaf tensors that require
/// gradients accumulate d(loss)/d(leaf) additively into their grad buffer.
/// Intermediate gradients and graph edges are released afterwards.
GradientMap backward(const Tensor& loss);

// ---------------------------------------------------------------------------
// Operations. Each validates shapes and throws ShapeError on mismatch.
// ---------------------------------------------------------------------------

/// [.., k] x [k, n] -> [.., n], or batched [b, m, k] x [b, k, n] -> [b, m, n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// Element-wise; `b` may also match a trailing suffix of `a`'s shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor exp(const Tensor& a);
/// sqrt with a zero subgradient at 0.
Tensor sqrt(const Tensor& a);
Tensor relu(const Tensor& a);
/// Row softmax over the last axis, max-subtracted.
Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);
/// Normalizes over the last axis, then applies per-feature gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double epsilon = 1e-6);
/// Gathers rows of a [rows, d] table -> [ids.size(), d].
Tensor gather_rows(const Tensor& table, std::span<const int> ids);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sum of squares of all elements.
Tensor squared_l2(const Tensor& a);
/// Concatenates along `axis`; all other extents must agree.
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Swaps the last two axes.
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes);
/// [n, d], [m, d] -> [n, m] of squared Euclidean distances.
Tensor pairwise_sqdist(const Tensor& x, const Tensor& y);

}  // namespace wam
