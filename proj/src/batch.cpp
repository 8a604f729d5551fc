// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/batch.hpp"

#include "plm/errors.hpp"

#include <algorithm>

namespace plm {

Tensor TokenBatch::validity_mask() const {
    std::vector<double> m(rows() * width, 0.0);
    for (std::size_t b = 0; b < rows(); ++b)
        for (std::size_t j = 0; j < width; ++j) m[b * width + j] = valid(b, j) ? 1.0 : 0.0;
    return Tensor({rows(), width}, std::move(m));
}

Tensor TokenBatch::residue_mask() const {
    std::vector<double> m(rows() * width, 0.0);
    for (std::size_t b = 0; b < rows(); ++b)
        for (std::size_t j = 0; j < width; ++j) m[b * width + j] = residue(b, j) ? 1.0 : 0.0;
    return Tensor({rows(), width}, std::move(m));
}

TokenBatch collate(const std::vector<TokenizedSequence> &seqs, std::vector<std::string> record_ids,
                   std::vector<Label> labels, std::size_t min_width) {
    if (seqs.empty()) throw DataError("cannot collate an empty batch");
    TokenBatch batch;
    batch.width = min_width;
    for (const auto &s : seqs) batch.width = std::max(batch.width, s.ids.size());
    batch.ids.assign(seqs.size() * batch.width, Vocabulary::kPad);
    for (std::size_t b = 0; b < seqs.size(); ++b) {
        std::copy(seqs[b].ids.begin(), seqs[b].ids.end(), batch.ids.begin() + static_cast<std::ptrdiff_t>(b * batch.width));
        batch.lengths.push_back(seqs[b].length);
    }
    batch.record_ids = std::move(record_ids);
    batch.labels = std::move(labels);
    return batch;
}

} // namespace plm
