// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable tensor operations. Every op records its backward rule when
// an input tracks gradients. Binary elementwise ops broadcast with numpy
// rules; matmul broadcasts leading batch dimensions.

#pragma once

#include "plm/rng.hpp"
#include "plm/tensor.hpp"

#include <span>
#include <vector>

namespace plm {

Tensor add(const Tensor &a, const Tensor &b);
Tensor sub(const Tensor &a, const Tensor &b);
Tensor mul(const Tensor &a, const Tensor &b);
Tensor div(const Tensor &a, const Tensor &b);

Tensor add_scalar(const Tensor &a, double c);
Tensor scale(const Tensor &a, double c);

inline Tensor operator+(const Tensor &a, const Tensor &b) { return add(a, b); }
inline Tensor operator-(const Tensor &a, const Tensor &b) { return sub(a, b); }
inline Tensor operator*(const Tensor &a, const Tensor &b) { return mul(a, b); }
inline Tensor operator/(const Tensor &a, const Tensor &b) { return div(a, b); }
inline Tensor operator*(const Tensor &a, double c) { return scale(a, c); }
inline Tensor operator*(double c, const Tensor &a) { return scale(a, c); }
inline Tensor operator+(const Tensor &a, double c) { return add_scalar(a, c); }
inline Tensor operator-(const Tensor &a) { return scale(a, -1.0); }

// (..., m, k) x (..., k, n) -> (..., m, n)
Tensor matmul(const Tensor &a, const Tensor &b);

Tensor transpose(const Tensor &a, int axis0 = -2, int axis1 = -1);
Tensor permute(const Tensor &a, const std::vector<std::size_t> &perm);
Tensor reshape(const Tensor &a, const Shape &shape);

Tensor sum(const Tensor &a);
Tensor sum(const Tensor &a, int axis, bool keepdim = false);
Tensor mean(const Tensor &a);
Tensor mean(const Tensor &a, int axis, bool keepdim = false);

// Max-subtracted for stability.
Tensor softmax(const Tensor &a, int axis);
Tensor log_softmax(const Tensor &a, int axis);

// Outputs are kept strictly inside (0, 1) even where the exact value
// rounds to 0 or 1 in double precision.
Tensor sigmoid(const Tensor &a);
// Exact (erf) form.
Tensor gelu(const Tensor &a);
Tensor exp(const Tensor &a);
Tensor log(const Tensor &a);
Tensor square(const Tensor &a);
// Gradient passes through where lo <= x <= hi, zero elsewhere.
Tensor clamp(const Tensor &a, double lo, double hi);

// Normalizes over the last axis; gain and bias have that axis's length.
Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias, double eps = 1e-5);

// Gathers rows of `weight` (V x d). Result shape is `prefix` + (d).
Tensor embedding(const Tensor &weight, std::span<const std::size_t> ids, const Shape &prefix);

// Inverted dropout; identity when !training or rate == 0.
Tensor dropout(const Tensor &x, double rate, Rng &rng, bool training);

Tensor slice(const Tensor &a, int axis, std::size_t start, std::size_t length);
Tensor stack(std::span<const Tensor> items, int axis = 0);

// Rows of a 2-D tensor: (M, C) -> (indices.size(), C).
Tensor gather_rows(const Tensor &a, std::span<const std::size_t> rows);
// One column per row of a 2-D tensor: (M, C) -> (M).
Tensor pick(const Tensor &a, std::span<const std::size_t> columns);

} // namespace plm
