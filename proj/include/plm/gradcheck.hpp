// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central-difference gradient oracle and a checker that compares it with
// the reverse pass.

#pragma once

#include "plm/tensor.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace plm {

// (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate of x. `x` is
// perturbed in place and restored.
Tensor finite_diff_grad(const std::function<double(const Tensor &)> &f, Tensor x, double h = 1e-5);

struct GradCheckResult {
    std::size_t checked = 0;
    double max_rel_error = 0.0;
    std::string worst;  // "<param>[<index>]"
    bool passed(double tol) const { return max_rel_error < tol; }
};

// Denominator floor in the relative error |a - n| / max(|a|, |n|, floor).
inline constexpr double kGradRelFloor = 1e-6;

// Runs `loss` once with gradients, then compares every coordinate of each
// named parameter with central differences of `loss` evaluated without
// gradient recording. Parameter grads are zeroed first.
GradCheckResult check_gradients(const std::function<Tensor()> &loss,
                                const std::vector<std::pair<std::string, Tensor>> &params, double h = 1e-5);

} // namespace plm
