// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameterized building blocks shared by the encoder and the heads.

#pragma once

#include "plm/ops.hpp"
#include "plm/rng.hpp"
#include "plm/tensor.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace plm {

// Named parameter handles. Tensors alias the owning module's storage.
using ParamList = std::vector<std::pair<std::string, Tensor>>;

Tensor randn(const Shape &shape, double stddev, Rng &rng, bool requires_grad = true);

// Trainable low-rank pair attached to a Linear: delta = scaling * B A.
struct LoraAdapter {
    Tensor a;  // (rank, in)
    Tensor b;  // (out, rank)
    double alpha = 32.0;
    std::size_t rank() const { return a.shape()[0]; }
    double scaling() const { return alpha / static_cast<double>(rank()); }
};

// y = x W^T + bias (+ scaling * (x A^T) B^T when adapted).
// weight is (out, in), matching W0 in h = W0 x.
struct Linear {
    Tensor weight;
    Tensor bias;
    std::optional<LoraAdapter> lora;

    Linear() = default;
    Linear(std::size_t in, std::size_t out, Rng &rng);

    std::size_t in_features() const { return weight.shape()[1]; }
    std::size_t out_features() const { return weight.shape()[0]; }

    Tensor forward(const Tensor &x) const;
    void collect(ParamList &out, const std::string &prefix) const;
};

struct LayerNorm {
    Tensor gain;
    Tensor bias;
    double eps = 1e-5;

    LayerNorm() = default;
    explicit LayerNorm(std::size_t width);

    Tensor forward(const Tensor &x) const { return layer_norm(x, gain, bias, eps); }
    void collect(ParamList &out, const std::string &prefix) const;
};

// Post-norm block: norm(x + W2 gelu(W1 x)).
struct FeedForward {
    Linear up;
    Linear down;
    LayerNorm norm;

    FeedForward() = default;
    FeedForward(std::size_t width, std::size_t hidden, Rng &rng);

    Tensor forward(const Tensor &x) const;
    void collect(ParamList &out, const std::string &prefix) const;
};

void set_trainable(const ParamList &params, bool trainable);
std::size_t count_values(const ParamList &params);

} // namespace plm
