// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Residue vocabulary and masked-language-model corruption.

#pragma once

#include "plm/rng.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace plm {

using TokenId = std::size_t;

// Ids 0..19 are the canonical residues in ACDEFGHIKLMNPQRSTVWY order,
// followed by the special tokens.
class Vocabulary {
  public:
    static constexpr std::string_view kResidues = "ACDEFGHIKLMNPQRSTVWY";
    static constexpr TokenId kPad = 20;
    static constexpr TokenId kBos = 21;
    static constexpr TokenId kEos = 22;
    static constexpr TokenId kMask = 23;
    static constexpr TokenId kUnk = 24;
    static constexpr std::size_t kSize = 25;

    static const Vocabulary &standard();

    std::size_t size() const { return symbols_.size(); }
    const std::string &symbol(TokenId id) const;
    TokenId id(std::string_view symbol) const;
    // Single-residue lookup; anything outside the alphabet is UNK.
    TokenId residue_id(char c) const;
    static bool is_residue(TokenId id) { return id < kPad; }

    // One token per line, index = line number.
    void save(const std::filesystem::path &path) const;
    static Vocabulary load(const std::filesystem::path &path);

    bool operator==(const Vocabulary &other) const { return symbols_ == other.symbols_; }

  private:
    explicit Vocabulary(std::vector<std::string> symbols);
    std::vector<std::string> symbols_;
    std::array<TokenId, 256> char_to_id_{};
};

struct TokenizedSequence {
    std::vector<TokenId> ids;  // BOS, residues..., EOS
    std::size_t length = 0;    // residue count
    std::size_t unknown = 0;   // residues mapped to UNK
};

TokenizedSequence encode(std::string_view sequence);
// Residue symbols only; UNK decodes to 'X'.
std::string decode(const TokenizedSequence &tokens);

struct MaskedSequence {
    std::vector<TokenId> ids;      // input with MASK substitutions
    std::vector<TokenId> targets;  // original id at masked positions, PAD elsewhere
    std::vector<bool> masked;
};

inline constexpr double kDefaultMaskRate = 0.15;

// Selects exactly round(rate * L) residue positions (at least one) without
// replacement and replaces them with MASK. BOS/EOS are never selected.
MaskedSequence mask_for_mlm(const TokenizedSequence &tokens, double rate, Rng &rng);

} // namespace plm
