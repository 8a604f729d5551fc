// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Transformer encoder: token + learned position embeddings, N pre-norm
// layers, a final normalization, and a masked-token prediction head used
// for pretraining. Each layer can report its head-averaged attention map.

#pragma once

#include "plm/batch.hpp"
#include "plm/nn.hpp"

#include <vector>

namespace plm {

struct EncoderConfig {
    std::size_t n_layers = 4;
    std::size_t n_heads = 4;
    std::size_t d_model = 64;
    std::size_t d_ff = 256;
    std::size_t max_len = 512;  // counts BOS and EOS

    std::size_t head_dim() const { return d_model / n_heads; }
    void validate() const;
    bool operator==(const EncoderConfig &) const = default;
};

struct EncoderOutput {
    Tensor hidden;                  // (B, L', d_model)
    std::vector<Tensor> layer_attn; // N x (B, L', L'), empty unless collected
    Tensor mask;                    // (B, L') validity
};

inline constexpr double kMaskedLogit = -1e9;

// softmax(Q K^T / sqrt(d_k) + key_bias). Q, K: (..., L', d_k); key_bias
// broadcasts over the score shape and carries kMaskedLogit on PAD keys.
Tensor attention_scores(const Tensor &q, const Tensor &k, const Tensor &key_bias);

// Mean over the head axis: (..., H, L', L') -> (..., L', L').
Tensor head_average(const Tensor &per_head);

// Additive key bias (B, 1, 1, L') from a 0/1 mask (B, L').
Tensor key_bias_from_mask(const Tensor &mask);

struct AttentionBlock {
    Linear query, key, value, dense;
};

struct EncoderLayer {
    LayerNorm attn_norm;
    AttentionBlock attn;
    LayerNorm ffn_norm;
    Linear ffn_up;
    Linear ffn_down;
};

class Encoder {
  public:
    Encoder() = default;
    Encoder(const EncoderConfig &cfg, Rng &rng);

    const EncoderConfig &config() const { return cfg_; }

    EncoderOutput forward(const TokenBatch &batch, bool collect_attention = false) const;
    // Vocabulary logits (B, L', V) from final hidden states.
    Tensor mlm_logits(const Tensor &hidden) const { return lm_head_.forward(hidden); }

    std::vector<EncoderLayer> &layers() { return layers_; }
    const std::vector<EncoderLayer> &layers() const { return layers_; }

    // Includes any attached LoRA adapters (names end in .lora_a / .lora_b).
    ParamList parameters() const;
    // Only the pretrained weights (no adapters).
    ParamList base_parameters() const;

  private:
    EncoderConfig cfg_;
    Tensor token_embedding_;
    Tensor position_embedding_;
    std::vector<EncoderLayer> layers_;
    LayerNorm final_norm_;
    Linear lm_head_;
};

} // namespace plm
