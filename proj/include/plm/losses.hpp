// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training losses. All return a scalar tensor averaged over samples.

#pragma once

#include "plm/tensor.hpp"

#include <span>

namespace plm {

inline constexpr double kProbClamp = 1e-7;

// Multi-label binary cross entropy on probabilities p (B, C) against 0/1
// targets y (B, C): mean over samples of -(1/C) sum[y log p + (1-y) log(1-p)],
// with p clamped to [eps, 1 - eps].
Tensor ml_bce(const Tensor &p, const Tensor &y);

// Mean over rows of -log softmax(logits)[target], logits (M, C).
Tensor cross_entropy(const Tensor &logits, std::span<const std::size_t> targets);

// (1/N) sum (y - p)^2 over equal-length vectors.
Tensor mse(const Tensor &p, const Tensor &y);

} // namespace plm
