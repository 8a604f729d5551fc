// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/gradcheck.hpp"

#include "plm/errors.hpp"

#include <algorithm>
#include <cmath>

namespace plm {

Tensor finite_diff_grad(const std::function<double(const Tensor &)> &f, Tensor x, double h) {
    if (!(h > 0.0)) throw ConfigError("finite difference step must be positive");
    std::vector<double> g(x.numel());
    auto v = x.mutable_data();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double orig = v[i];
        v[i] = orig + h;
        const double up = f(x);
        v[i] = orig - h;
        const double down = f(x);
        v[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return Tensor(x.shape(), std::move(g));
}

GradCheckResult check_gradients(const std::function<Tensor()> &loss,
                                const std::vector<std::pair<std::string, Tensor>> &params, double h) {
    for (auto [name, p] : params) p.zero_grad();
    loss().backward();

    GradCheckResult result;
    auto scalar_loss = [&](const Tensor &) {
        NoGradGuard guard;
        return loss().item();
    };
    for (const auto &[name, p] : params) {
        const Tensor numeric = finite_diff_grad(scalar_loss, p, h);
        const auto analytic = p.grad();
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double a = p.has_grad() ? analytic[i] : 0.0;
            const double n = numeric.data()[i];
            const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), kGradRelFloor});
            ++result.checked;
            if (rel > result.max_rel_error || !std::isfinite(rel)) {
                result.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
                result.worst = name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return result;
}

} // namespace plm
