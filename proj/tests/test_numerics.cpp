// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plm/errors.hpp"
#include "plm/gradcheck.hpp"
#include "plm/ops.hpp"
#include "plm/rng.hpp"

#include <cmath>

using namespace plm;

namespace {

Tensor rand_tensor(const Shape &s, Rng &rng, bool rg = true) {
    std::vector<double> v(numel(s));
    for (double &x : v) x = rng.normal();
    return Tensor(s, std::move(v), rg);
}

void check_close(std::span<const double> a, std::span<const double> b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

} // namespace

TEST_CASE("tensor construction and shape contract") {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.numel() == 6);
    CHECK(t.at({1, 2}) == 6.0);
    CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ShapeError);
    CHECK(Tensor::scalar(3.0).item() == 3.0);
    CHECK_THROWS_AS(t.item(), ShapeError);
}

TEST_CASE("matmul") {
    const Tensor id({2, 2}, {1, 0, 0, 1}), v({2, 1}, {3, 4});
    check_close(matmul(id, v).data(), std::vector<double>{3, 4}, 0.0);
    CHECK(matmul(Tensor({1, 2}, {1, 2}), v).item() == 11.0);
    Tensor bad({3, 2}, std::vector<double>(6, 1.0));
    try {
        matmul(Tensor({2, 2}, {1, 2, 3, 4}), bad);
        FAIL("expected shape error");
    } catch (const ShapeError &e) {
        const std::string msg = e.what();
        CHECK(msg.find("(2, 2)") != std::string::npos);
        CHECK(msg.find("(3, 2)") != std::string::npos);
    }
    SUBCASE("batched broadcast") {
        Rng rng(1);
        const Tensor a = rand_tensor({2, 3, 4}, rng, false), b = rand_tensor({4, 5}, rng, false);
        const Tensor c = matmul(a, b);
        CHECK(c.shape() == Shape{2, 3, 5});
        for (std::size_t n = 0; n < 2; ++n)
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 5; ++j) {
                    double s = 0;
                    for (std::size_t k = 0; k < 4; ++k) s += a.at({n, i, k}) * b.at({k, j});
                    CHECK(std::abs(c.at({n, i, j}) - s) < 1e-12);
                }
    }
}

TEST_CASE("softmax") {
    check_close(softmax(Tensor({3}, {0, 0, 0}), 0).data(), std::vector<double>{1. / 3, 1. / 3, 1. / 3}, 1e-15);
    check_close(softmax(Tensor({2}, {0, std::log(2.0)}), 0).data(), std::vector<double>{1. / 3, 2. / 3}, 1e-15);
    Rng rng(2);
    const Tensor x = rand_tensor({4, 6}, rng, false);
    const Tensor a = softmax(x, -1), b = softmax(x + 123.0, -1);
    check_close(a.data(), b.data(), 1e-12);
    const Tensor rows = sum(a, -1);
    for (double r : rows.data()) CHECK(std::abs(r - 1.0) < 1e-12);
    for (double v : a.data()) CHECK(v > 0.0);
    const Tensor big = softmax(Tensor({2}, {1000.0, 0.0}), 0);
    CHECK(std::isfinite(big.data()[1]));
}

TEST_CASE("sigmoid") {
    CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
    const Tensor s = sigmoid(Tensor({4}, {-50, 50, -800, 800}));
    for (double v : s.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    Rng rng(3);
    const Tensor x = rand_tensor({10}, rng, false);
    const Tensor total = sigmoid(x) + sigmoid(-x);
    for (double v : total.data()) CHECK(std::abs(v - 1.0) < 1e-15);
}

TEST_CASE("layer_norm") {
    const Tensor g = Tensor::ones({4}), b = Tensor::zeros({4});
    const Tensor flat = layer_norm(Tensor({1, 4}, {3, 3, 3, 3}), g, b);
    for (double v : flat.data()) CHECK(v == 0.0);
    Rng rng(4);
    const Tensor x = rand_tensor({5, 16}, rng, false);
    const Tensor y = layer_norm(x, Tensor::ones({16}), Tensor::zeros({16}));
    for (std::size_t r = 0; r < 5; ++r) {
        double m = 0, v = 0;
        for (std::size_t c = 0; c < 16; ++c) m += y.at({r, c});
        m /= 16;
        for (std::size_t c = 0; c < 16; ++c) v += (y.at({r, c}) - m) * (y.at({r, c}) - m);
        CHECK(std::abs(m) < 1e-12);
        CHECK(std::abs(v / 16 - 1.0) < 1e-3);
    }
    const Tensor bias({16}, std::vector<double>(16, 0.7));
    const Tensor biased = layer_norm(x, Tensor::zeros({16}), bias);
    for (double v : biased.data()) CHECK(v == 0.7);
}

TEST_CASE("backward basics") {
    Tensor x({3}, {1, 2, 3}, true);
    sum(x).backward();
    check_close(x.grad(), std::vector<double>{1, 1, 1}, 0.0);
    sum(x).backward();  // accumulates until zeroed
    check_close(x.grad(), std::vector<double>{2, 2, 2}, 0.0);
    x.zero_grad();
    check_close(x.grad(), std::vector<double>{0, 0, 0}, 0.0);

    Tensor s = Tensor::scalar(3.0, true);
    (s * s).backward();
    CHECK(s.grad()[0] == 6.0);
    CHECK_THROWS_AS(x.backward(), ContractError);
}

TEST_CASE("no-grad guard records nothing") {
    Tensor x({2}, {1, 2}, true);
    Tensor y;
    {
        NoGradGuard g;
        y = x * x;
    }
    CHECK_FALSE(y.requires_grad());
    CHECK(grad_enabled());
}

TEST_CASE("finite differences") {
    const auto f = [](const Tensor &t) {
        double s = 0;
        for (double v : t.data()) s += v * v;
        return s;
    };
    check_close(finite_diff_grad(f, Tensor({2}, {1, 2})).data(), std::vector<double>{2, 4}, 1e-6);
    check_close(finite_diff_grad([](const Tensor &) { return 4.0; }, Tensor({3}, {1, 2, 3})).data(),
                std::vector<double>{0, 0, 0}, 0.0);
}

TEST_CASE("gradient checks per op") {
    Rng rng(5);
    const Tensor a = rand_tensor({2, 3, 4}, rng), b = rand_tensor({4, 3}, rng), c = rand_tensor({3, 4}, rng);
    const Tensor g = rand_tensor({4}, rng), bb = rand_tensor({4}, rng);
    const Tensor w = rand_tensor({6, 4}, rng);
    Tensor pos({2, 3, 4}, std::vector<double>(24, 0.0), true);
    for (std::size_t i = 0; i < 24; ++i) pos.mutable_data()[i] = 0.5 + rng.uniform();
    const std::vector<std::size_t> ids{0, 5, 2, 2};
    const std::vector<std::pair<const char *, std::function<Tensor()>>> cases{
        {"matmul", [&] { return sum(square(matmul(a, b))); }},
        {"broadcast mul/div", [&] { return sum((a * c) / (square(c) + 1.0)); }},
        {"sub/mean axis", [&] { return sum(square(mean(a - c, 1, true) - c)); }},
        {"softmax", [&] { return sum(softmax(a, -1) * c); }},
        {"log_softmax", [&] { return sum(log_softmax(a, 1) * c); }},
        {"sigmoid/gelu", [&] { return sum(sigmoid(a) * gelu(a + c)); }},
        {"exp/log", [&] { return sum(log(pos) * exp(scale(a, 0.3))); }},
        {"layer_norm", [&] { return sum(square(layer_norm(a, g, bb)) * c); }},
        {"transpose/permute/reshape", [&] { return sum(permute(a, {2, 0, 1}) * reshape(transpose(a, 0, 2), {4, 2, 3})) * 0.5 + sum(square(reshape(a, {6, 4}))) * 0.1; }},
        {"slice/stack", [&] { const Tensor parts[] = {slice(a, 2, 1, 2), slice(a, 2, 0, 2)}; return sum(square(stack(parts, 1))); }},
        {"embedding/gather/pick", [&] {
             const Tensor e = embedding(w, ids, {2, 2});
             const Tensor m = reshape(e, {4, 4});
             const std::size_t rows[] = {3, 0}, cols[] = {1, 2, 3, 0};
             return sum(square(gather_rows(m, rows))) + sum(pick(m * m, cols));
         }},
        {"clamp", [&] { return sum(clamp(a, -0.5, 0.5) * c); }},
    };
    for (const auto &[name, fn] : cases) {
        CAPTURE(std::string(name));
        const GradCheckResult r = check_gradients(fn, {{"a", a}, {"b", b}, {"c", c}, {"g", g}, {"bb", bb}, {"w", w}, {"pos", pos}});
        CAPTURE(r.worst);
        CHECK(r.passed(1e-4));
    }
}

TEST_CASE("dropout") {
    Rng rng(6);
    const Tensor x = Tensor::ones({1000});
    CHECK(dropout(x, 0.1, rng, false).same_storage(x));
    const Tensor y = dropout(x, 0.5, rng, true);
    std::size_t zeros = 0;
    for (double v : y.data()) {
        CHECK((v == 0.0 || v == 2.0));
        zeros += v == 0.0;
    }
    CHECK(zeros > 400);
    CHECK(zeros < 600);
}

TEST_CASE("rng determinism") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const double x = a.normal();
        CHECK(x == b.normal());
        (void)c;
    }
    CHECK(Rng(42).next_u64() != Rng(43).next_u64());
    Rng d(9);
    for (int i = 0; i < 1000; ++i) {
        const double u = d.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(d.below(7) < 7);
    }
    std::vector<int> v{1, 2, 3, 4, 5}, w = v;
    Rng e(1), f(1);
    e.shuffle(v);
    f.shuffle(w);
    CHECK(v == w);
}
