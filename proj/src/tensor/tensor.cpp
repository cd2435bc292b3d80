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
#include "difreg/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "difreg/error.hpp"

namespace difreg {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::create(std::vector<double> data, Shape shape, bool requires_grad) {
  if (shape.empty()) throw SizeError("tensor shape must have at least one extent");
  for (auto e : shape) {
    if (e < 1) throw SizeError("tensor extents must be positive, got " + shape_string(shape));
  }
  if (static_cast<std::int64_t>(data.size()) != shape_numel(shape)) {
    throw SizeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                    shape_string(shape));
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  if (requires_grad) impl->grad.assign(impl->data.size(), 0.0);
  return from_impl(std::move(impl));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return create(std::vector<double>(n > 0 ? static_cast<std::size_t>(n) : 0, value), std::move(shape),
                requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return create({value}, {1}, requires_grad); }

Tensor Tensor::from_impl(std::shared_ptr<detail::TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

detail::TensorImpl& Tensor::checked() const {
  if (!impl_) throw ContractError("use of an undefined tensor");
  return *impl_;
}

const Shape& Tensor::shape() const { return checked().shape; }

std::int64_t Tensor::size(std::int64_t axis) const {
  const auto& s = shape();
  if (axis < 0) axis += static_cast<std::int64_t>(s.size());
  if (axis < 0 || axis >= static_cast<std::int64_t>(s.size())) throw ShapeError("axis out of range");
  return s[static_cast<std::size_t>(axis)];
}

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(checked().data.size()); }

std::span<const double> Tensor::data() const { return checked().data; }

std::span<double> Tensor::mutable_data() {
  auto& impl = checked();
  if (impl.node) throw ContractError("mutable access to a tensor recorded on the tape");
  return impl.data;
}

double Tensor::item() const {
  if (!is_scalar()) throw ContractError("item() on a tensor of shape " + shape_string(shape()));
  return checked().data[0];
}

std::vector<double> Tensor::to_vector() const { return checked().data; }

bool Tensor::requires_grad() const { return checked().requires_grad; }
bool Tensor::is_leaf() const { return checked().node == nullptr; }
bool Tensor::has_grad() const { return !checked().grad.empty(); }

std::span<const double> Tensor::grad() const {
  auto& impl = checked();
  if (impl.grad.empty()) throw ContractError("tensor has no gradient slot");
  return impl.grad;
}

std::span<double> Tensor::mutable_grad() {
  auto& impl = checked();
  if (impl.grad.empty()) throw ContractError("tensor has no gradient slot");
  return impl.grad;
}

void Tensor::zero_grad() {
  auto& impl = checked();
  std::fill(impl.grad.begin(), impl.grad.end(), 0.0);
}

void Tensor::retain_grad() {
  auto& impl = checked();
  if (!impl.requires_grad) throw ContractError("retain_grad() on a tensor that does not require grad");
  impl.retains_grad = true;
}

Tensor Tensor::detach(bool requires_grad) const {
  return create(checked().data, checked().shape, requires_grad);
}

}  // namespace difreg
