// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/contact.hpp"

#include "plm/errors.hpp"

namespace plm {

ContactHeadParams::ContactHeadParams(std::size_t n_layers, Rng &rng)
    : weight(randn({n_layers}, 1.0, rng)), bias(Tensor::scalar(0.0, true)) {}

void ContactHeadParams::collect(ParamList &out, const std::string &prefix) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
}

Tensor symmetrize(const Tensor &c) {
    if (c.dim() < 2 || c.shape()[c.dim() - 1] != c.shape()[c.dim() - 2])
        throw ShapeError("symmetrize expects square trailing axes, got " + shape_str(c.shape()));
    return c + transpose(c);
}

Tensor stack_layers(const std::vector<Tensor> &per_layer, int axis) {
    if (per_layer.empty()) throw ShapeError("stack_layers: no layers");
    return stack(per_layer, axis);
}

Tensor contact_probabilities(const Tensor &stacked, const ContactHeadParams &params) {
    if (stacked.dim() < 3) throw ShapeError("contact head expects (..., N, L, L), got " + shape_str(stacked.shape()));
    const std::size_t n = stacked.shape()[stacked.dim() - 3];
    if (params.n_layers() != n)
        throw ConfigError("contact head has " + std::to_string(params.n_layers()) + " layer weights for " +
                          std::to_string(n) + " stacked maps");
    const Tensor w = reshape(params.weight, {n, 1, 1});
    return sigmoid(sum(stacked * w, -3) + params.bias);
}

Tensor contact_probabilities(const std::vector<Tensor> &layer_attn, const ContactHeadParams &params) {
    std::vector<Tensor> symm;
    symm.reserve(layer_attn.size());
    for (const auto &a : layer_attn) symm.push_back(symmetrize(a));
    const int axis = symm.empty() ? 0 : static_cast<int>(symm.front().dim()) - 2;
    return contact_probabilities(stack_layers(symm, axis), params);
}

std::vector<ContactMap> strip_special(const Tensor &probs, const TokenBatch &batch) {
    if (probs.dim() != 3 || probs.shape()[0] != batch.rows() || probs.shape()[1] != batch.width)
        throw ShapeError("contact probabilities " + shape_str(probs.shape()) + " do not match batch");
    std::vector<ContactMap> maps;
    for (std::size_t b = 0; b < batch.rows(); ++b) {
        const std::size_t L = batch.lengths[b];
        const Tensor row = reshape(slice(probs, 0, b, 1), {batch.width, batch.width});
        maps.push_back({slice(slice(row, 0, 1, L), 1, 1, L)});
    }
    return maps;
}

ContactMap project_contacts(const Tensor &stacked, const ContactHeadParams &params, std::size_t length) {
    if (stacked.dim() != 3 || stacked.shape()[1] != stacked.shape()[2] || stacked.shape()[1] != length + 2)
        throw ShapeError("project_contacts: stacked maps " + shape_str(stacked.shape()) + " for " + std::to_string(length) +
                         " residues");
    const Tensor p = contact_probabilities(stacked, params);
    return {slice(slice(p, 0, 1, length), 1, 1, length)};
}

} // namespace plm
