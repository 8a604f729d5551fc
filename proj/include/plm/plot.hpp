// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal SVG line charts for training curves.

#pragma once

#include <string>
#include <vector>

namespace plm {

struct Series {
    std::string label;
    std::vector<double> values;  // y values at x = 1, 2, ...
};

// One panel per call; series share the axes. Non-finite values are skipped.
std::string line_chart_svg(const std::string &title, const std::string &x_label, const std::vector<Series> &series,
                           int width = 640, int height = 400);

} // namespace plm
