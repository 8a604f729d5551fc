// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/tokenizer.hpp"

#include "plm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace plm {

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    char_to_id_.fill(kUnk);
    for (TokenId i = 0; i < kResidues.size(); ++i) {
        if (i >= symbols_.size() || symbols_[i].size() != 1)
            throw DataError("vocabulary entry " + std::to_string(i) + " is not a residue symbol");
        char_to_id_[static_cast<unsigned char>(symbols_[i][0])] = i;
    }
}

const Vocabulary &Vocabulary::standard() {
    static const Vocabulary vocab = [] {
        std::vector<std::string> symbols;
        for (char c : kResidues) symbols.emplace_back(1, c);
        for (const char *s : {"<pad>", "<cls>", "<eos>", "<mask>", "<unk>"}) symbols.emplace_back(s);
        return Vocabulary(std::move(symbols));
    }();
    return vocab;
}

const std::string &Vocabulary::symbol(TokenId id) const {
    if (id >= symbols_.size()) throw IndexError("token id " + std::to_string(id) + " outside vocabulary");
    return symbols_[id];
}

TokenId Vocabulary::id(std::string_view symbol) const {
    for (TokenId i = 0; i < symbols_.size(); ++i)
        if (symbols_[i] == symbol) return i;
    return kUnk;
}

TokenId Vocabulary::residue_id(char c) const { return char_to_id_[static_cast<unsigned char>(c)]; }

void Vocabulary::save(const std::filesystem::path &path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto &s : symbols_) out << s << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    std::vector<std::string> symbols;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        symbols.push_back(line);
    }
    Vocabulary v(std::move(symbols));
    if (!(v == standard())) throw DataError(path.string() + " does not match the built-in vocabulary layout");
    return v;
}

TokenizedSequence encode(std::string_view sequence) {
    if (sequence.empty()) throw DataError("cannot encode an empty sequence");
    const auto &vocab = Vocabulary::standard();
    TokenizedSequence t;
    t.length = sequence.size();
    t.ids.reserve(sequence.size() + 2);
    t.ids.push_back(Vocabulary::kBos);
    for (char c : sequence) {
        const TokenId id = vocab.residue_id(c);
        if (id == Vocabulary::kUnk) ++t.unknown;
        t.ids.push_back(id);
    }
    t.ids.push_back(Vocabulary::kEos);
    return t;
}

std::string decode(const TokenizedSequence &tokens) {
    std::string out;
    out.reserve(tokens.length);
    for (TokenId id : tokens.ids) {
        if (Vocabulary::is_residue(id))
            out.push_back(Vocabulary::kResidues[id]);
        else if (id == Vocabulary::kUnk || id == Vocabulary::kMask)
            out.push_back('X');
    }
    return out;
}

MaskedSequence mask_for_mlm(const TokenizedSequence &tokens, double rate, Rng &rng) {
    if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("mask rate must be in (0, 1), got " + std::to_string(rate));
    const std::size_t L = tokens.length;
    if (L == 0 || tokens.ids.size() != L + 2) throw DataError("malformed tokenized sequence");
    const std::size_t count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(rate * static_cast<double>(L))));

    // Partial Fisher-Yates over residue positions 1..L.
    std::vector<std::size_t> positions(L);
    std::iota(positions.begin(), positions.end(), std::size_t{1});
    for (std::size_t i = 0; i < count; ++i) std::swap(positions[i], positions[i + rng.below(L - i)]);

    MaskedSequence m;
    m.ids = tokens.ids;
    m.targets.assign(tokens.ids.size(), Vocabulary::kPad);
    m.masked.assign(tokens.ids.size(), false);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t p = positions[i];
        m.targets[p] = tokens.ids[p];
        m.ids[p] = Vocabulary::kMask;
        m.masked[p] = true;
    }
    return m;
}

} // namespace plm
