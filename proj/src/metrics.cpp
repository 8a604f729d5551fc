// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/metrics.hpp"

#include "plm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace plm {

namespace {

void check_multilabel(const std::vector<std::vector<double>> &probs, const std::vector<std::vector<double>> &labels) {
    if (probs.size() != labels.size() || probs.empty())
        throw ShapeError("f1: " + std::to_string(probs.size()) + " predictions for " + std::to_string(labels.size()) + " labels");
    bool any_positive = false;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i].size() != labels[i].size()) throw ShapeError("f1: sample " + std::to_string(i) + " length mismatch");
        for (double p : probs[i])
            if (!(p >= 0.0 && p <= 1.0)) throw DataError("f1: probability outside [0, 1]");
        for (double y : labels[i]) any_positive = any_positive || y > 0.5;
    }
    if (!any_positive) throw NumericError("F1-max undefined: no positive labels");
}

} // namespace

double f1_at(const std::vector<std::vector<double>> &probs, const std::vector<std::vector<double>> &labels, double threshold) {
    check_multilabel(probs, labels);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        for (std::size_t c = 0; c < probs[i].size(); ++c) {
            const bool pred = probs[i][c] >= threshold;
            const bool truth = labels[i][c] > 0.5;
            tp += pred && truth;
            fp += pred && !truth;
            fn += !pred && truth;
        }
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

F1MaxResult f1_max(const std::vector<std::vector<double>> &probs, const std::vector<std::vector<double>> &labels,
                   const F1MaxOptions &opts) {
    check_multilabel(probs, labels);
    if (opts.grid_steps < 1) throw ConfigError("f1_max grid needs at least one step");
    // Sort (score, label) pairs once; each threshold is then a suffix count.
    std::vector<std::pair<double, bool>> scored;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        for (std::size_t c = 0; c < probs[i].size(); ++c) {
            const bool truth = labels[i][c] > 0.5;
            scored.emplace_back(probs[i][c], truth);
            positives += truth;
        }
    std::sort(scored.begin(), scored.end());
    std::vector<std::size_t> pos_suffix(scored.size() + 1, 0);
    for (std::size_t i = scored.size(); i-- > 0;) pos_suffix[i] = pos_suffix[i + 1] + (scored[i].second ? 1 : 0);

    F1MaxResult best{-1.0, 0.0};
    for (std::size_t k = 0; k <= opts.grid_steps; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(opts.grid_steps);
        const auto first = std::lower_bound(scored.begin(), scored.end(), t,
                                            [](const std::pair<double, bool> &e, double v) { return e.first < v; });
        const std::size_t idx = static_cast<std::size_t>(first - scored.begin());
        const std::size_t predicted = scored.size() - idx;
        const std::size_t tp = pos_suffix[idx];
        const std::size_t fp = predicted - tp;
        const std::size_t fn = positives - tp;
        const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        if (f1 > best.f1) best = {f1, t};
    }
    return best;
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> actual) {
    if (predicted.size() != actual.size()) throw ShapeError("accuracy: length mismatch");
    if (predicted.empty()) throw DataError("accuracy of an empty set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == actual[i];
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman_rho(std::span<const double> p, std::span<const double> y) {
    if (p.size() != y.size()) throw ShapeError("spearman: length mismatch");
    if (p.size() < 2) throw DataError("spearman needs at least 2 samples");
    const auto rp = average_ranks(p);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(p.size());
    const double mp = std::accumulate(rp.begin(), rp.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rp.size(); ++i) {
        sxy += (rp[i] - mp) * (ry[i] - my);
        sxx += (rp[i] - mp) * (rp[i] - mp);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw NumericError("spearman undefined: constant ranking");
    return sxy / std::sqrt(sxx * syy);
}

double r_squared(std::span<const double> p, std::span<const double> y) {
    if (p.size() != y.size()) throw ShapeError("r_squared: length mismatch");
    if (p.size() < 2) throw DataError("r_squared needs at least 2 samples");
    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - p[i]) * (y[i] - p[i]);
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    if (ss_tot == 0.0) throw NumericError("r_squared undefined: constant targets");
    return 1.0 - ss_res / ss_tot;
}

} // namespace plm
