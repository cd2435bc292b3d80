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
#include <algorithm>
#include <atomic>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "difreg/error.hpp"
#include "difreg/simd/kernels.hpp"
#include "difreg/tensor.hpp"

namespace difreg {
namespace {

thread_local bool g_grad_enabled = true;
std::atomic<std::uint64_t> g_sequence{0};

}  // namespace

bool grad_mode_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

Tensor record(Shape shape, std::vector<double> data, const std::vector<Tensor>& inputs,
              const char* name, BackwardFn backward) {
  Tensor out = Tensor::create(std::move(data), std::move(shape), false);
  if (!g_grad_enabled) return out;
  const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.requires_grad(); });
  if (!needs) return out;

  auto node = std::make_shared<Node>();
  node->sequence = g_sequence.fetch_add(1, std::memory_order_relaxed);
  node->name = name;
  node->inputs.reserve(inputs.size());
  for (const auto& t : inputs) node->inputs.push_back(t.impl());
  node->backward = std::move(backward);
  node->output = out.impl();
  out.impl()->requires_grad = true;
  out.impl()->node = std::move(node);
  return out;
}

Tensor record(Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
              const char* name, BackwardFn backward) {
  return record(std::move(shape), std::move(data), std::vector<Tensor>(inputs), name,
                std::move(backward));
}

}  // namespace detail

void backward(const Tensor& loss) {
  if (!loss.defined()) throw ContractError("backward() on an undefined tensor");
  if (!loss.is_scalar()) {
    throw ContractError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  auto* root_impl = loss.impl().get();
  if (!root_impl->requires_grad) throw ContractError("backward() on a loss that is not attached to the tape");
  if (!root_impl->node) {
    root_impl->grad[0] += 1.0;
    return;
  }

  // Collect the reachable part of the tape.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{root_impl->node.get()};
  seen.insert(root_impl->node.get());
  while (!stack.empty()) {
    auto* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& in : n->inputs) {
      auto* child = in->node.get();
      if (child && seen.insert(child).second) stack.push_back(child);
    }
  }
  std::sort(order.begin(), order.end(),
            [](const detail::Node* a, const detail::Node* b) { return a->sequence > b->sequence; });

  const auto& kernels = simd::active();
  std::unordered_map<detail::Node*, std::vector<double>> pending;
  pending.emplace(root_impl->node.get(), std::vector<double>{1.0});

  std::vector<std::span<double>> grad_in;
  for (auto* n : order) {
    auto it = pending.find(n);
    if (it == pending.end()) continue;
    std::vector<double> grad_out = std::move(it->second);
    pending.erase(it);

    if (auto out = n->output.lock(); out && out->retains_grad) {
      if (out->grad.size() != grad_out.size()) out->grad.assign(grad_out.size(), 0.0);
      kernels.add(out->grad.data(), grad_out.data(), out->grad.data(), grad_out.size());
    }

    grad_in.assign(n->inputs.size(), std::span<double>{});
    for (std::size_t i = 0; i < n->inputs.size(); ++i) {
      auto& in = n->inputs[i];
      if (!in->requires_grad) continue;
      if (in->node) {
        auto& buf = pending[in->node.get()];
        if (buf.empty()) buf.assign(in->data.size(), 0.0);
        grad_in[i] = buf;
      } else {
        grad_in[i] = in->grad;
      }
    }
    n->backward(grad_out, grad_in);
  }
}

}  // namespace difreg
