// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/losses.hpp"

#include "plm/errors.hpp"
#include "plm/ops.hpp"

namespace plm {

Tensor ml_bce(const Tensor &p, const Tensor &y) {
    if (p.shape() != y.shape())
        throw ShapeError("ml_bce: predictions " + shape_str(p.shape()) + " vs targets " + shape_str(y.shape()));
    if (p.dim() != 2) throw ShapeError("ml_bce expects (samples, classes), got " + shape_str(p.shape()));
    const Tensor pc = clamp(p, kProbClamp, 1.0 - kProbClamp);
    const Tensor one_minus_y = scale(y, -1.0) + 1.0;
    const Tensor log_pos = log(pc);
    const Tensor log_neg = log(scale(pc, -1.0) + 1.0);
    return -mean(y * log_pos + one_minus_y * log_neg);
}

Tensor cross_entropy(const Tensor &logits, std::span<const std::size_t> targets) {
    if (logits.dim() != 2 || logits.shape()[0] != targets.size())
        throw ShapeError("cross_entropy: logits " + shape_str(logits.shape()) + " for " + std::to_string(targets.size()) +
                         " targets");
    if (logits.shape()[1] < 2) throw ConfigError("cross_entropy needs at least 2 classes");
    for (auto t : targets)
        if (t >= logits.shape()[1])
            throw IndexError("class index " + std::to_string(t) + " >= " + std::to_string(logits.shape()[1]));
    return -mean(pick(log_softmax(logits, -1), targets));
}

Tensor mse(const Tensor &p, const Tensor &y) {
    if (p.numel() != y.numel() || p.numel() == 0)
        throw ShapeError("mse: predictions " + shape_str(p.shape()) + " vs targets " + shape_str(y.shape()));
    return mean(square(reshape(y, {y.numel()}) - reshape(p, {p.numel()})));
}

} // namespace plm
