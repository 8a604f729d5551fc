// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/encoder.hpp"

#include "plm/errors.hpp"

#include <cmath>

namespace plm {

void EncoderConfig::validate() const {
    if (n_layers < 1 || n_heads < 1 || d_model < 1 || d_ff < 1 || max_len < 3)
        throw ConfigError("encoder sizes must be >= 1 (max_len >= 3)");
    if (d_model % n_heads != 0)
        throw ConfigError("d_model " + std::to_string(d_model) + " not divisible by n_heads " + std::to_string(n_heads));
}

Tensor attention_scores(const Tensor &q, const Tensor &k, const Tensor &key_bias) {
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.shape().back()));
    return softmax(scale(matmul(q, transpose(k)), inv_sqrt_dk) + key_bias, -1);
}

Tensor head_average(const Tensor &per_head) {
    if (per_head.dim() < 3) throw ShapeError("head_average expects (..., H, L, L), got " + shape_str(per_head.shape()));
    return mean(per_head, -3);
}

Tensor key_bias_from_mask(const Tensor &mask) {
    const std::size_t B = mask.shape()[0], L = mask.shape()[1];
    std::vector<double> bias(B * L);
    for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = mask.data()[i] > 0.5 ? 0.0 : kMaskedLogit;
    return Tensor({B, 1, 1, L}, std::move(bias));
}

Encoder::Encoder(const EncoderConfig &cfg, Rng &rng) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t d = cfg_.d_model;
    token_embedding_ = randn({Vocabulary::kSize, d}, 1.0, rng);
    // Trainable, initialized to the sinusoidal table so relative offsets
    // are linear maps from the start.
    {
        std::vector<double> pe(cfg_.max_len * d);
        for (std::size_t pos = 0; pos < cfg_.max_len; ++pos)
            for (std::size_t i = 0; i < d; i += 2) {
                const double angle = static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
                pe[pos * d + i] = std::sin(angle);
                if (i + 1 < d) pe[pos * d + i + 1] = std::cos(angle);
            }
        position_embedding_ = Tensor({cfg_.max_len, d}, std::move(pe), true);
    }
    for (std::size_t i = 0; i < cfg_.n_layers; ++i) {
        EncoderLayer layer;
        layer.attn_norm = LayerNorm(d);
        layer.attn.query = Linear(d, d, rng);
        layer.attn.key = Linear(d, d, rng);
        layer.attn.value = Linear(d, d, rng);
        layer.attn.dense = Linear(d, d, rng);
        layer.ffn_norm = LayerNorm(d);
        layer.ffn_up = Linear(d, cfg_.d_ff, rng);
        layer.ffn_down = Linear(cfg_.d_ff, d, rng);
        layers_.push_back(std::move(layer));
    }
    final_norm_ = LayerNorm(d);
    lm_head_ = Linear(d, Vocabulary::kSize, rng);
    // Near-uniform initial token predictions.
    lm_head_.weight = randn({Vocabulary::kSize, d}, 0.02, rng);
}

EncoderOutput Encoder::forward(const TokenBatch &batch, bool collect_attention) const {
    const std::size_t B = batch.rows(), L = batch.width, d = cfg_.d_model, H = cfg_.n_heads, dh = cfg_.head_dim();
    if (L > cfg_.max_len)
        throw DataError("length error: padded length " + std::to_string(L) + " exceeds max_len " + std::to_string(cfg_.max_len));
    for (TokenId id : batch.ids)
        if (id >= Vocabulary::kSize) throw IndexError("token id " + std::to_string(id) + " outside vocabulary");

    EncoderOutput out;
    out.mask = batch.validity_mask();
    const Tensor key_bias = key_bias_from_mask(out.mask);

    Tensor x = embedding(token_embedding_, batch.ids, {B, L}) + slice(position_embedding_, 0, 0, L);
    auto split_heads = [&](const Tensor &t) { return permute(reshape(t, {B, L, H, dh}), {0, 2, 1, 3}); };

    for (const auto &layer : layers_) {
        const Tensor h = layer.attn_norm.forward(x);
        const Tensor q = split_heads(layer.attn.query.forward(h));
        const Tensor k = split_heads(layer.attn.key.forward(h));
        const Tensor v = split_heads(layer.attn.value.forward(h));
        const Tensor attn = attention_scores(q, k, key_bias);  // (B, H, L, L)
        if (collect_attention) out.layer_attn.push_back(head_average(attn));
        const Tensor ctx = reshape(permute(matmul(attn, v), {0, 2, 1, 3}), {B, L, d});
        x = x + layer.attn.dense.forward(ctx);
        const Tensor f = layer.ffn_norm.forward(x);
        x = x + layer.ffn_down.forward(gelu(layer.ffn_up.forward(f)));
    }
    out.hidden = final_norm_.forward(x);
    return out;
}

ParamList Encoder::parameters() const {
    ParamList p;
    p.emplace_back("encoder.token_embedding", token_embedding_);
    p.emplace_back("encoder.position_embedding", position_embedding_);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const std::string pre = "encoder.layer" + std::to_string(i);
        const auto &l = layers_[i];
        l.attn_norm.collect(p, pre + ".attn_norm");
        l.attn.query.collect(p, pre + ".attn.query");
        l.attn.key.collect(p, pre + ".attn.key");
        l.attn.value.collect(p, pre + ".attn.value");
        l.attn.dense.collect(p, pre + ".attn.dense");
        l.ffn_norm.collect(p, pre + ".ffn_norm");
        l.ffn_up.collect(p, pre + ".ffn_up");
        l.ffn_down.collect(p, pre + ".ffn_down");
    }
    final_norm_.collect(p, "encoder.final_norm");
    lm_head_.collect(p, "encoder.lm_head");
    return p;
}

ParamList Encoder::base_parameters() const {
    ParamList all = parameters();
    ParamList base;
    for (auto &[name, t] : all) {
        const bool adapter = name.ends_with(".lora_a") || name.ends_with(".lora_b");
        if (!adapter) base.emplace_back(name, t);
    }
    return base;
}

} // namespace plm
