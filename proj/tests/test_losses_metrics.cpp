// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plm/errors.hpp"
#include "plm/gradcheck.hpp"
#include "plm/losses.hpp"
#include "plm/metrics.hpp"
#include "plm/ops.hpp"

#include <cmath>

using namespace plm;

TEST_CASE("ml_bce") {
    const Tensor y({2, 3}, {1, 0, 1, 0, 0, 1});
    CHECK(ml_bce(y, y).item() <= 1e-6);
    CHECK(std::abs(ml_bce(Tensor::full({2, 3}, 0.5), y).item() - std::log(2.0)) < 1e-15);
    CHECK_THROWS_AS(ml_bce(Tensor::full({2, 2}, 0.5), y), ShapeError);
    Rng rng(1);
    Tensor p({2, 3}, {0.2, 0.7, 0.9, 0.4, 0.1, 0.6}, true);
    const auto r = check_gradients([&] { return ml_bce(p, y); }, {{"p", p}});
    CHECK(r.passed(1e-4));
}

TEST_CASE("cross entropy") {
    const std::size_t t0[] = {0, 2};
    CHECK(std::abs(cross_entropy(Tensor::zeros({2, 3}), t0).item() - std::log(3.0)) < 1e-15);
    const Tensor dominant({2, 3}, {50, 0, 0, 0, 0, 50});
    CHECK(cross_entropy(dominant, t0).item() < 1e-20);
    const std::size_t bad[] = {0, 3};
    CHECK_THROWS_AS(cross_entropy(dominant, bad), IndexError);
    Tensor logits({2, 3}, {0.3, -1.0, 2.0, 0.5, 0.5, -0.2}, true);
    CHECK(check_gradients([&] { return cross_entropy(logits, t0); }, {{"logits", logits}}).passed(1e-4));
}

TEST_CASE("mse") {
    const Tensor a({3}, {1, 2, 3});
    CHECK(mse(a, a).item() == 0.0);
    CHECK(mse(Tensor::zeros({2}), Tensor({2}, {1, 3})).item() == 5.0);
    CHECK_THROWS_AS(mse(a, Tensor::zeros({2})), ShapeError);
}

TEST_CASE("f1 max") {
    const std::vector<std::vector<double>> y{{1, 0, 1}, {0, 1, 0}};
    CHECK(f1_max(y, y).f1 == 1.0);
    const auto one = f1_max({{0.9, 0.8}}, {{1, 0}});
    CHECK(one.f1 == 1.0);
    CHECK(one.threshold > 0.8);
    CHECK(one.threshold <= 0.9);
    CHECK(std::abs(f1_at({{0.9, 0.8}}, {{1, 0}}, 0.5) - 2.0 / 3.0) < 1e-15);
    CHECK_THROWS_AS(f1_max({{0.5, 0.5}}, {{0, 0}}), NumericError);
    CHECK_THROWS_AS(f1_max({{0.5}}, {{1, 0}}), ShapeError);
}

TEST_CASE("accuracy") {
    const std::size_t all[] = {1, 2, 3};
    CHECK(accuracy(all, all) == 1.0);
    const std::size_t p[] = {0, 1, 2}, y[] = {0, 1, 1};
    CHECK(std::abs(accuracy(p, y) - 2.0 / 3.0) < 1e-15);
    CHECK_THROWS_AS(accuracy(std::span<const std::size_t>{}, std::span<const std::size_t>{}), DataError);
}

TEST_CASE("spearman") {
    const std::vector<double> y{0.1, 0.5, 0.3, 0.9};
    CHECK(std::abs(spearman_rho(y, y) - 1.0) < 1e-15);
    const std::vector<double> rev{0.9, 0.5, 0.7, 0.1};
    CHECK(std::abs(spearman_rho(rev, y) + 1.0) < 1e-15);
    CHECK(average_ranks(std::vector<double>{3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});
    CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), NumericError);
    // Monotone transforms leave rho unchanged.
    std::vector<double> t;
    for (double v : y) t.push_back(std::exp(3 * v) - 2.0);
    const std::vector<double> q{0.2, 0.1, 0.7, 0.4};
    CHECK(std::abs(spearman_rho(q, y) - spearman_rho(q, t)) < 1e-15);
}

TEST_CASE("r squared") {
    const std::vector<double> y{1, 2, 4, 7};
    CHECK(r_squared(y, y) == 1.0);
    CHECK(std::abs(r_squared(std::vector<double>(4, 3.5), y)) < 1e-15);
    CHECK_THROWS_AS(r_squared(y, std::vector<double>(4, 2.0)), NumericError);
}
