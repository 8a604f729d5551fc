// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/heads.hpp"

#include "plm/encoder.hpp"
#include "plm/errors.hpp"

#include <cmath>

namespace plm {

std::string head_kind_name(HeadKind k) {
    switch (k) {
    case HeadKind::kSmh: return "smh";
    case HeadKind::kMah: return "mah";
    case HeadKind::kCmMah: return "cm-mah";
    }
    return "?";
}

HeadKind parse_head_kind(const std::string &s) {
    if (s == "smh" || s == "SMH") return HeadKind::kSmh;
    if (s == "mah" || s == "MAH") return HeadKind::kMah;
    if (s == "cm-mah" || s == "CM-MAH" || s == "cmmah") return HeadKind::kCmMah;
    throw ConfigError("unknown head kind '" + s + "' (expected smh, mah, cm-mah)");
}

std::string contact_combine_name(ContactCombine c) {
    return c == ContactCombine::kElementwise ? "elementwise" : "matmul";
}

ContactCombine parse_contact_combine(const std::string &s) {
    if (s == "elementwise") return ContactCombine::kElementwise;
    if (s == "matmul") return ContactCombine::kMatmul;
    throw ConfigError("unknown contact_combine '" + s + "' (expected elementwise, matmul)");
}

void HeadConfig::validate() const {
    if (latent_dim < 1 || n_heads < 1 || feature_dim < 1 || out_dim < 1) throw ConfigError("head sizes must be >= 1");
    if (feature_dim % n_heads != 0)
        throw ConfigError("head feature_dim " + std::to_string(feature_dim) + " not divisible by n_heads " +
                          std::to_string(n_heads));
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("head dropout must be in [0, 1)");
}

PoolingParams::PoolingParams(std::size_t n_heads, std::size_t latent_dim, std::size_t feature_dim, double rate, Rng &rng)
    : query(randn({n_heads, latent_dim}, 1.0 / std::sqrt(static_cast<double>(latent_dim)), rng)),
      key(randn({n_heads, latent_dim, feature_dim}, 1.0 / std::sqrt(static_cast<double>(feature_dim)), rng)),
      value(randn({n_heads, latent_dim, feature_dim}, 1.0 / std::sqrt(static_cast<double>(feature_dim)), rng)),
      output(randn({feature_dim, n_heads, latent_dim}, 1.0 / std::sqrt(static_cast<double>(n_heads * latent_dim)), rng)),
      dropout(rate) {}

void PoolingParams::collect(ParamList &out, const std::string &prefix) const {
    out.emplace_back(prefix + ".query", query);
    out.emplace_back(prefix + ".key", key);
    out.emplace_back(prefix + ".value", value);
    out.emplace_back(prefix + ".output", output);
}

namespace {

void require_some_valid(const Tensor &mask) {
    const std::size_t B = mask.shape()[0], L = mask.shape()[1];
    for (std::size_t b = 0; b < B; ++b) {
        bool any = false;
        for (std::size_t j = 0; j < L; ++j) any = any || mask.data()[b * L + j] > 0.5;
        if (!any) throw DataError("attention pooling over a row with no valid residues (row " + std::to_string(b) + ")");
    }
}

} // namespace

Tensor pooling_weights(const Tensor &x, const PoolingParams &p, const Tensor &mask) {
    if (x.dim() != 3 || x.shape()[2] != p.feature_dim())
        throw ShapeError("attention_pool: input " + shape_str(x.shape()) + " vs feature dim " + std::to_string(p.feature_dim()));
    if (mask.shape() != Shape{x.shape()[0], x.shape()[1]})
        throw ShapeError("attention_pool: mask " + shape_str(mask.shape()) + " for input " + shape_str(x.shape()));
    require_some_valid(mask);
    const std::size_t B = x.shape()[0], L = x.shape()[1], H = p.n_heads(), dl = p.latent_dim(), dk = p.feature_dim();
    // keys[b, i, h, a] = sum_c W_K[h, a, c] x[b, i, c]
    const Tensor keys = reshape(matmul(x, transpose(reshape(p.key, {H * dl, dk}))), {B, L, H, dl});
    // scores[b, h, i] = sum_a W_Q[h, a] keys[b, i, h, a] / sqrt(d_l)
    const Tensor scores = permute(sum(keys * p.query, -1), {0, 2, 1});
    const Tensor bias = reshape(key_bias_from_mask(mask), {B, 1, L});
    return softmax(scale(scores, 1.0 / std::sqrt(static_cast<double>(dl))) + bias, -1);
}

Tensor attention_pool(const Tensor &x, const PoolingParams &p, const Tensor &mask, bool training, Rng *rng) {
    const std::size_t B = x.shape()[0], L = x.shape()[1], H = p.n_heads(), dl = p.latent_dim(), dk = p.feature_dim();
    Tensor s = pooling_weights(x, p, mask);
    if (training && p.dropout > 0.0) {
        if (!rng) throw ContractError("training-mode pooling dropout needs an Rng");
        s = dropout(s, p.dropout, *rng, true);
    }
    // values[b, h, i, a] = sum_c W_V[h, a, c] x[b, i, c]
    const Tensor values = permute(reshape(matmul(x, transpose(reshape(p.value, {H * dl, dk}))), {B, L, H, dl}), {0, 2, 1, 3});
    // pooled[b, h, a] = sum_i s[b, h, i] values[b, h, i, a]
    const Tensor pooled = reshape(matmul(reshape(s, {B, H, 1, L}), values), {B, H * dl});
    // X_P[b, c] = sum_{h, a} W_O[c, h, a] pooled[b, h, a]
    return matmul(pooled, transpose(reshape(p.output, {dk, H * dl})));
}

Head::Head(const HeadConfig &cfg, std::size_t input_dim, Rng &rng) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t d = cfg_.feature_dim;
    input_ = Linear(input_dim, d, rng);
    if (cfg_.kind == HeadKind::kSmh) {
        ff1_ = FeedForward(d, 4 * d, rng);
        ff2_ = FeedForward(d, 4 * d, rng);
    } else {
        attn_.query = Linear(d, d, rng);
        attn_.key = Linear(d, d, rng);
        attn_.value = Linear(d, d, rng);
        attn_.dense = Linear(d, d, rng);
        attn_.norm = LayerNorm(d);
        ff1_ = FeedForward(d, 4 * d, rng);
    }
    if (!cfg_.token_level) pooling_ = PoolingParams(cfg_.n_heads, cfg_.latent_dim, d, cfg_.dropout, rng);
    prediction_ = Linear(d, cfg_.out_dim, rng);
}

Tensor Head::self_attention(const Tensor &x, const Tensor &mask, const Tensor *contacts) const {
    const std::size_t B = x.shape()[0], L = x.shape()[1], d = cfg_.feature_dim, H = cfg_.n_heads, dh = d / H;
    auto split = [&](const Tensor &t) { return permute(reshape(t, {B, L, H, dh}), {0, 2, 1, 3}); };
    const Tensor q = split(attn_.query.forward(x));
    const Tensor k = split(attn_.key.forward(x));
    const Tensor v = split(attn_.value.forward(x));
    Tensor logits = matmul(q, transpose(k));  // (B, H, L, L)
    if (contacts) {
        if (contacts->shape() != Shape{B, L, L})
            throw ShapeError("contact map " + shape_str(contacts->shape()) + " does not match head input " + shape_str(x.shape()));
        const Tensor p = reshape(*contacts, {B, 1, L, L});
        if (cfg_.contact_combine == ContactCombine::kElementwise) {
            logits = logits * p;
        } else {
            // Zero non-residue rows/columns so the product only mixes residues.
            const Tensor m = reshape(mask, {B, 1, L, 1}) * reshape(mask, {B, 1, 1, L});
            logits = matmul(logits, p * m);
        }
    }
    const Tensor bias = key_bias_from_mask(mask);
    const Tensor attn = softmax(scale(logits, 1.0 / std::sqrt(static_cast<double>(d))) + bias, -1);
    const Tensor ctx = reshape(permute(matmul(attn, v), {0, 2, 1, 3}), {B, L, d});
    return attn_.norm.forward(x + attn_.dense.forward(ctx));
}

Tensor Head::forward(const Tensor &hidden, const Tensor &mask, const Tensor *contacts, bool training, Rng *rng) const {
    if (hidden.dim() != 3 || hidden.shape()[2] != input_.in_features())
        throw ShapeError("head input " + shape_str(hidden.shape()) + " does not end in " + std::to_string(input_.in_features()));
    if (mask.shape() != Shape{hidden.shape()[0], hidden.shape()[1]})
        throw ShapeError("head mask " + shape_str(mask.shape()) + " for hidden " + shape_str(hidden.shape()));
    if (cfg_.needs_contacts() && !contacts) throw ConfigError("cm-mah head requires a contact map");

    Tensor x = input_.forward(hidden);
    if (cfg_.kind == HeadKind::kSmh) {
        x = ff2_.forward(ff1_.forward(x));
    } else {
        x = self_attention(x, mask, cfg_.kind == HeadKind::kCmMah ? contacts : nullptr);
        x = ff1_.forward(x);
    }
    if (cfg_.token_level) return prediction_.forward(x);
    return prediction_.forward(attention_pool(x, pooling_, mask, training, rng));
}

ParamList Head::parameters() const {
    ParamList p;
    input_.collect(p, "head.input");
    if (cfg_.kind == HeadKind::kSmh) {
        ff1_.collect(p, "head.ff1");
        ff2_.collect(p, "head.ff2");
    } else {
        attn_.query.collect(p, "head.attn.query");
        attn_.key.collect(p, "head.attn.key");
        attn_.value.collect(p, "head.attn.value");
        attn_.dense.collect(p, "head.attn.dense");
        attn_.norm.collect(p, "head.attn.norm");
        ff1_.collect(p, "head.ff1");
    }
    if (!cfg_.token_level) pooling_.collect(p, "head.pool");
    prediction_.collect(p, "head.prediction");
    return p;
}

Tensor smh_forward(const Head &head, const Tensor &hidden, const Tensor &mask) {
    if (head.config().kind != HeadKind::kSmh) throw ConfigError("smh_forward on a " + head_kind_name(head.config().kind) + " head");
    return head.forward(hidden, mask);
}

Tensor mah_forward(const Head &head, const Tensor &hidden, const Tensor &mask) {
    if (head.config().kind != HeadKind::kMah) throw ConfigError("mah_forward on a " + head_kind_name(head.config().kind) + " head");
    return head.forward(hidden, mask);
}

Tensor cm_mah_forward(const Head &head, const Tensor &hidden, const Tensor &contacts, const Tensor &mask) {
    if (head.config().kind != HeadKind::kCmMah)
        throw ConfigError("cm_mah_forward on a " + head_kind_name(head.config().kind) + " head");
    return head.forward(hidden, mask, &contacts);
}

} // namespace plm
