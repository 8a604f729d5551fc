// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Downstream prediction heads on top of encoder hidden states:
//   SMH     input projection, two feedforward blocks, attention pooling,
//           prediction layer.
//   MAH     input projection, one multi-head self-attention block
//           (residual + norm) and a feedforward block, then pooling and
//           prediction.
//   CM-MAH  MAH whose attention logits are weighted by the contact map:
//           softmax((Q K^T o P) / sqrt(d_head)) V.
// Token-level tasks skip pooling and predict one row per position.

#pragma once

#include "plm/nn.hpp"

#include <optional>
#include <string>

namespace plm {

enum class HeadKind { kSmh, kMah, kCmMah };
enum class ContactCombine { kElementwise, kMatmul };

std::string head_kind_name(HeadKind k);
HeadKind parse_head_kind(const std::string &s);
std::string contact_combine_name(ContactCombine c);
ContactCombine parse_contact_combine(const std::string &s);

struct HeadConfig {
    HeadKind kind = HeadKind::kSmh;
    std::size_t latent_dim = 32;   // d_l
    std::size_t n_heads = 4;       // H2, pooling and head self-attention
    std::size_t feature_dim = 64;  // d_head
    std::size_t out_dim = 1;
    bool token_level = false;
    double dropout = 0.1;
    ContactCombine contact_combine = ContactCombine::kElementwise;

    bool needs_contacts() const { return kind == HeadKind::kCmMah; }
    void validate() const;
};

// Shapes follow the pooling equations with d_k = feature_dim:
// query (H2, d_l), key/value (H2, d_l, d_k), output (d_k, H2, d_l).
struct PoolingParams {
    Tensor query;
    Tensor key;
    Tensor value;
    Tensor output;
    double dropout = 0.1;

    PoolingParams() = default;
    PoolingParams(std::size_t n_heads, std::size_t latent_dim, std::size_t feature_dim, double dropout, Rng &rng);

    std::size_t n_heads() const { return query.shape()[0]; }
    std::size_t latent_dim() const { return query.shape()[1]; }
    std::size_t feature_dim() const { return key.shape()[2]; }
    void collect(ParamList &out, const std::string &prefix) const;
};

// Per-head pooling distribution over positions, (B, H2, L), before
// dropout. `mask` (B, L) marks the positions that may receive weight.
Tensor pooling_weights(const Tensor &x, const PoolingParams &p, const Tensor &mask);

// (B, L, d_k) -> (B, d_k). Dropout applies to the pooling distribution
// when `rng` is given and `training` is set.
Tensor attention_pool(const Tensor &x, const PoolingParams &p, const Tensor &mask, bool training = false,
                      Rng *rng = nullptr);

struct HeadAttention {
    Linear query, key, value, dense;
    LayerNorm norm;
};

class Head {
  public:
    Head() = default;
    Head(const HeadConfig &cfg, std::size_t input_dim, Rng &rng);

    const HeadConfig &config() const { return cfg_; }

    // hidden (B, L', input_dim); mask (B, L') marks residue positions;
    // contacts (B, L', L') is required for CM-MAH. Returns (B, out_dim) or,
    // for token-level heads, (B, L', out_dim).
    Tensor forward(const Tensor &hidden, const Tensor &mask, const Tensor *contacts = nullptr, bool training = false,
                   Rng *rng = nullptr) const;

    ParamList parameters() const;

    Linear &prediction() { return prediction_; }
    PoolingParams &pooling() { return pooling_; }

  private:
    Tensor self_attention(const Tensor &x, const Tensor &mask, const Tensor *contacts) const;

    HeadConfig cfg_;
    Linear input_;
    FeedForward ff1_, ff2_;
    HeadAttention attn_;
    PoolingParams pooling_;
    Linear prediction_;
};

Tensor smh_forward(const Head &head, const Tensor &hidden, const Tensor &mask);
Tensor mah_forward(const Head &head, const Tensor &hidden, const Tensor &mask);
Tensor cm_mah_forward(const Head &head, const Tensor &hidden, const Tensor &contacts, const Tensor &mask);

} // namespace plm
