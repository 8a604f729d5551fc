// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/nn.hpp"

#include "plm/errors.hpp"

#include <cmath>

namespace plm {

Tensor randn(const Shape &shape, double stddev, Rng &rng, bool requires_grad) {
    std::vector<double> v(numel(shape));
    for (double &x : v) x = rng.normal(0.0, stddev);
    return Tensor(shape, std::move(v), requires_grad);
}

Linear::Linear(std::size_t in, std::size_t out, Rng &rng)
    : weight(randn({out, in}, 1.0 / std::sqrt(static_cast<double>(in)), rng)), bias(Tensor::zeros({out}, true)) {}

Tensor Linear::forward(const Tensor &x) const {
    if (x.dim() < 2 || x.shape().back() != in_features())
        throw ShapeError("linear: input " + shape_str(x.shape()) + " does not end in " + std::to_string(in_features()));
    Tensor h = matmul(x, transpose(weight)) + bias;
    if (lora) {
        const Tensor delta = matmul(matmul(x, transpose(lora->a)), transpose(lora->b));
        h = h + scale(delta, lora->scaling());
    }
    return h;
}

void Linear::collect(ParamList &out, const std::string &prefix) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
    if (lora) {
        out.emplace_back(prefix + ".lora_a", lora->a);
        out.emplace_back(prefix + ".lora_b", lora->b);
    }
}

LayerNorm::LayerNorm(std::size_t width) : gain(Tensor::ones({width}, true)), bias(Tensor::zeros({width}, true)) {}

void LayerNorm::collect(ParamList &out, const std::string &prefix) const {
    out.emplace_back(prefix + ".gain", gain);
    out.emplace_back(prefix + ".bias", bias);
}

FeedForward::FeedForward(std::size_t width, std::size_t hidden, Rng &rng)
    : up(width, hidden, rng), down(hidden, width, rng), norm(width) {}

Tensor FeedForward::forward(const Tensor &x) const { return norm.forward(x + down.forward(gelu(up.forward(x)))); }

void FeedForward::collect(ParamList &out, const std::string &prefix) const {
    up.collect(out, prefix + ".up");
    down.collect(out, prefix + ".down");
    norm.collect(out, prefix + ".norm");
}

void set_trainable(const ParamList &params, bool trainable) {
    for (auto [name, p] : params) p.set_requires_grad(trainable);
}

std::size_t count_values(const ParamList &params) {
    std::size_t n = 0;
    for (const auto &[name, p] : params) n += p.numel();
    return n;
}

} // namespace plm
