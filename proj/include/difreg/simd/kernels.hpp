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

// Flat float64 inner loops used by the tensor core. Every kernel has a
// scalar reference implementation; an AVX2/FMA variant is compiled when the
// toolchain targets x86-64 and is picked at runtime when the CPU supports it.
// Set DIFREG_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <string_view>

namespace difreg::simd {

struct AdamCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  std::string_view name;

  // out[i] = a[i] (op) b[i]
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*div)(const double* a, const double* b, double* out, std::size_t n);

  // out[i] = a[i] * s
  void (*scale)(const double* a, double s, double* out, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] += a[i] * b[i]
  void (*fma_acc)(const double* a, const double* b, double* y, std::size_t n);

  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);

  // In-place Adam update of one parameter buffer.
  void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n,
               const AdamCoefficients& c);
};

const KernelTable& scalar_kernels();

// Nullptr when the variant was not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// The table selected for this process (resolved once, on first use).
const KernelTable& active();

}  // namespace difreg::simd
