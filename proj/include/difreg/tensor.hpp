/******************************************************************************
 * Copyright 2026 The difreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *	http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#pragma once

// Dense float64 tensors with reverse-mode automatic differentiation.
//
// A Tensor is a reference-counted handle: copies alias the same buffer, like
// the tensors of the dynamic AD frameworks this mirrors. Every operation
// applied to a tensor that requires a gradient appends a node to the tape.
// The tape is implicit: nodes carry a monotonically increasing sequence
// number and hold their inputs, so a loss tensor owns exactly the part of the
// tape it depends on, and the tape is released together with the loss.
// backward() replays the reachable nodes once each, in reverse recording
// order, and adds the adjoints into the .grad slots of leaf tensors.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace difreg {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node;

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  bool retains_grad = false;
  std::vector<double> grad;  // allocated only when requires_grad
  std::shared_ptr<Node> node;
};

// Adds the adjoint of one recorded operation into grad_in. grad_in[i] is an
// empty span when input i does not need a gradient.
using BackwardFn =
    std::function<void(std::span<const double> grad_out, std::span<const std::span<double>> grad_in)>;

struct Node {
  std::uint64_t sequence = 0;
  const char* name = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  BackwardFn backward;
  std::weak_ptr<TensorImpl> output;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  // Throws SizeError when data.size() != product(shape) or any extent < 1.
  static Tensor create(std::vector<double> data, Shape shape, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::int64_t rank() const { return static_cast<std::int64_t>(shape().size()); }
  std::int64_t size(std::int64_t axis) const;
  std::int64_t numel() const;
  bool is_scalar() const { return numel() == 1; }

  std::span<const double> data() const;
  // Leaf tensors only; non-leaf buffers are saved by the tape.
  std::span<double> mutable_data();
  double item() const;
  std::vector<double> to_vector() const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  // Keeps the gradient of a non-leaf tensor after backward().
  void retain_grad();

  // A fresh leaf holding a copy of the values.
  Tensor detach(bool requires_grad = false) const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }
  static Tensor from_impl(std::shared_ptr<detail::TensorImpl> impl);

 private:
  detail::TensorImpl& checked() const;
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Accumulates d(loss)/d(tensor) into every reachable tensor that requires a
// gradient. Repeated calls accumulate. Throws ContractError for a non-scalar
// loss or a loss that is not attached to the tape.
void backward(const Tensor& loss);

// Disables tape recording on this thread for the guard's lifetime.
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

namespace detail {

// Builds an op result and records its node when any input requires a grad.
Tensor record(Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
              const char* name, BackwardFn backward);
Tensor record(Shape shape, std::vector<double> data, const std::vector<Tensor>& inputs,
              const char* name, BackwardFn backward);

}  // namespace detail

}  // namespace difreg
