// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "plm/tensor.hpp"
#include "plm/tokenizer.hpp"

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace plm {

// Binary membership vector (multi-label), class index (multi-class),
// per-residue classes (token-level), or scalar (regression).
using Label = std::variant<std::monostate, std::vector<double>, std::size_t, std::vector<std::size_t>, double>;

// Right-padded token rows. Row b holds BOS, lengths[b] residues, EOS, then PAD.
struct TokenBatch {
    std::size_t width = 0;
    std::vector<TokenId> ids;  // rows() x width
    std::vector<std::size_t> lengths;
    std::vector<std::string> record_ids;
    std::vector<Label> labels;

    std::size_t rows() const { return lengths.size(); }
    TokenId id(std::size_t b, std::size_t j) const { return ids[b * width + j]; }
    bool valid(std::size_t b, std::size_t j) const { return j < lengths[b] + 2; }
    bool residue(std::size_t b, std::size_t j) const { return j >= 1 && j <= lengths[b]; }

    // (B, width) with 1 at non-PAD positions.
    Tensor validity_mask() const;
    // (B, width) with 1 at residue positions (no BOS/EOS/PAD).
    Tensor residue_mask() const;
};

// Pads token sequences into a batch; labels and ids may be empty.
TokenBatch collate(const std::vector<TokenizedSequence> &seqs, std::vector<std::string> record_ids = {},
                   std::vector<Label> labels = {}, std::size_t min_width = 0);

} // namespace plm
