// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Contact head: per-layer head-averaged attention maps are symmetrized,
// stacked along a layer axis, linearly combined across layers and squashed
// into contact probabilities.

#pragma once

#include "plm/batch.hpp"
#include "plm/nn.hpp"

#include <vector>

namespace plm {

// Residue-only (BOS/EOS/PAD stripped) L x L probabilities.
struct ContactMap {
    Tensor probs;
    std::size_t length() const { return probs.shape()[0]; }
};

struct ContactHeadParams {
    Tensor weight;  // (N) one coefficient per layer
    Tensor bias;    // scalar

    ContactHeadParams() = default;
    ContactHeadParams(std::size_t n_layers, Rng &rng);

    std::size_t n_layers() const { return weight.numel(); }
    void collect(ParamList &out, const std::string &prefix = "contact") const;
};

// C + C^T over the last two axes.
Tensor symmetrize(const Tensor &c);

// N maps of identical shape -> layer axis inserted at `axis`
// (0 for single maps, 1 for batched (B, L', L') maps).
Tensor stack_layers(const std::vector<Tensor> &per_layer, int axis = 0);

// sigmoid(sum_n w[n] * stacked[..., n, :, :] + b) with the layer axis at
// position -3. Shape (..., L', L'); special tokens are kept.
Tensor contact_probabilities(const Tensor &stacked, const ContactHeadParams &params);

// Full pipeline on encoder attention: symmetrize, stack, project.
// Returns (B, L', L').
Tensor contact_probabilities(const std::vector<Tensor> &layer_attn, const ContactHeadParams &params);

// Per-sequence residue-only maps cut from (B, L', L') probabilities.
std::vector<ContactMap> strip_special(const Tensor &probs, const TokenBatch &batch);

// Single-sequence form: stacked is (N, L', L') and row/column 0 and
// L'-1 are BOS/EOS; `length` residues follow BOS.
ContactMap project_contacts(const Tensor &stacked, const ContactHeadParams &params, std::size_t length);

} // namespace plm
