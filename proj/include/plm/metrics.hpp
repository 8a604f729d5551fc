// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics on plain vectors.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace plm {

struct F1MaxOptions {
    std::size_t grid_steps = 100;  // thresholds k / grid_steps, k = 0..grid_steps
};

struct F1MaxResult {
    double f1 = 0.0;
    double threshold = 0.0;
};

// F1 = 2TP / (2TP + FP + FN) with counts pooled over all samples and
// classes, predicting positive iff p >= t; maximized over the grid.
F1MaxResult f1_max(const std::vector<std::vector<double>> &probs, const std::vector<std::vector<double>> &labels,
                   const F1MaxOptions &opts = {});

// F1 at one fixed threshold (same pooling).
double f1_at(const std::vector<std::vector<double>> &probs, const std::vector<std::vector<double>> &labels, double threshold);

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> actual);

// Average ranks (1-based), ties share the mean rank.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks.
double spearman_rho(std::span<const double> p, std::span<const double> y);

// 1 - SS_res / SS_tot with the mean of y.
double r_squared(std::span<const double> p, std::span<const double> y);

} // namespace plm
