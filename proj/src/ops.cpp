// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/ops.hpp"

#include "plm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace plm {

using detail::Node;
using detail::NodePtr;

namespace {

std::size_t norm_axis(int axis, std::size_t rank, const Shape &shape) {
    const int n = static_cast<int>(rank);
    const int a = axis < 0 ? axis + n : axis;
    if (a < 0 || a >= n) throw ShapeError("axis " + std::to_string(axis) + " invalid for shape " + shape_str(shape));
    return static_cast<std::size_t>(a);
}

Shape contiguous_strides(const Shape &shape) {
    Shape strides(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
    return strides;
}

// For each element of the broadcast result, the flat source index in a and b.
struct BroadcastPlan {
    Shape out;
    std::vector<std::size_t> ia;
    std::vector<std::size_t> ib;
};

BroadcastPlan broadcast_plan(const Shape &a, const Shape &b, const char *op) {
    const std::size_t rank = std::max(a.size(), b.size());
    BroadcastPlan plan;
    plan.out.assign(rank, 1);
    Shape sa(rank, 0), sb(rank, 0);
    const Shape stra = contiguous_strides(a), strb = contiguous_strides(b);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t oa = rank - a.size(), ob = rank - b.size();
        const std::size_t da = i >= oa ? a[i - oa] : 1;
        const std::size_t db = i >= ob ? b[i - ob] : 1;
        if (da != db && da != 1 && db != 1)
            throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        plan.out[i] = da == 1 ? db : da;
        sa[i] = (i >= oa && da != 1) ? stra[i - oa] : 0;
        sb[i] = (i >= ob && db != 1) ? strb[i - ob] : 0;
    }
    const std::size_t n = numel(plan.out);
    plan.ia.resize(n);
    plan.ib.resize(n);
    Shape idx(rank, 0);
    std::size_t pa = 0, pb = 0;
    for (std::size_t k = 0; k < n; ++k) {
        plan.ia[k] = pa;
        plan.ib[k] = pb;
        for (std::size_t d = rank; d-- > 0;) {
            if (++idx[d] < plan.out[d]) {
                pa += sa[d];
                pb += sb[d];
                break;
            }
            pa -= sa[d] * (plan.out[d] - 1);
            pb -= sb[d] * (plan.out[d] - 1);
            idx[d] = 0;
        }
    }
    return plan;
}

// f(x, y) with partials dfx(x, y, out), dfy(x, y, out).
template <typename F, typename DX, typename DY>
Tensor binary(const Tensor &a, const Tensor &b, const char *name, F f, DX dfx, DY dfy) {
    const auto &va = a.data();
    const auto &vb = b.data();
    if (a.shape() == b.shape()) {
        std::vector<double> out(va.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(va[i], vb[i]);
        return detail::make_result(a.shape(), std::move(out), {a.node(), b.node()}, [dfx, dfy](Node &self) {
            Node &na = *self.inputs[0];
            Node &nb = *self.inputs[1];
            const std::size_t n = self.value.size();
            if (na.requires_grad) {
                auto &g = na.ensure_grad();
                for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i] * dfx(na.value[i], nb.value[i], self.value[i]);
            }
            if (nb.requires_grad) {
                auto &g = nb.ensure_grad();
                for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i] * dfy(na.value[i], nb.value[i], self.value[i]);
            }
        });
    }
    auto plan = std::make_shared<BroadcastPlan>(broadcast_plan(a.shape(), b.shape(), name));
    std::vector<double> out(plan->ia.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(va[plan->ia[i]], vb[plan->ib[i]]);
    Shape shape = plan->out;
    return detail::make_result(std::move(shape), std::move(out), {a.node(), b.node()}, [plan, dfx, dfy](Node &self) {
        Node &na = *self.inputs[0];
        Node &nb = *self.inputs[1];
        const std::size_t n = self.value.size();
        if (na.requires_grad) {
            auto &g = na.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const double x = na.value[plan->ia[i]], y = nb.value[plan->ib[i]];
                g[plan->ia[i]] += self.grad[i] * dfx(x, y, self.value[i]);
            }
        }
        if (nb.requires_grad) {
            auto &g = nb.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const double x = na.value[plan->ia[i]], y = nb.value[plan->ib[i]];
                g[plan->ib[i]] += self.grad[i] * dfy(x, y, self.value[i]);
            }
        }
    });
}

// f(x) with derivative df(x, out).
template <typename F, typename D> Tensor unary(const Tensor &a, F f, D df) {
    const auto &va = a.data();
    std::vector<double> out(va.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(va[i]);
    return detail::make_result(a.shape(), std::move(out), {a.node()}, [df](Node &self) {
        Node &na = *self.inputs[0];
        auto &g = na.ensure_grad();
        for (std::size_t i = 0; i < self.value.size(); ++i) g[i] += self.grad[i] * df(na.value[i], self.value[i]);
    });
}

// Splits a shape around `axis` into (outer, n, inner).
struct AxisSplit {
    std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const Shape &shape, std::size_t axis) {
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    s.n = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

} // namespace

Tensor add(const Tensor &a, const Tensor &b) {
    return binary(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor &a, const Tensor &b) {
    return binary(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor &a, const Tensor &b) {
    return binary(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
        [](double x, double, double) { return x; });
}

Tensor div(const Tensor &a, const Tensor &b) {
    return binary(
        a, b, "div", [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
        [](double x, double y, double) { return -x / (y * y); });
}

Tensor add_scalar(const Tensor &a, double c) {
    return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor scale(const Tensor &a, double c) {
    return unary(a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Tensor matmul(const Tensor &a, const Tensor &b) {
    if (a.dim() < 2 || b.dim() < 2 || a.shape()[a.dim() - 1] != b.shape()[b.dim() - 2])
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    const std::size_t m = a.shape()[a.dim() - 2], k = a.shape()[a.dim() - 1], n = b.shape()[b.dim() - 1];
    const Shape batch_a(a.shape().begin(), a.shape().end() - 2);
    const Shape batch_b(b.shape().begin(), b.shape().end() - 2);
    BroadcastPlan plan;
    try {
        plan = broadcast_plan(batch_a, batch_b, "matmul");
    } catch (const ShapeError &) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    auto batches = std::make_shared<BroadcastPlan>(std::move(plan));
    const std::size_t nb = batches->ia.size();
    Shape out_shape = batches->out;
    out_shape.push_back(m);
    out_shape.push_back(n);

    const auto va = a.data();
    const auto vb = b.data();
    std::vector<double> out(nb * m * n, 0.0);
    for (std::size_t t = 0; t < nb; ++t) {
        const double *pa = va.data() + batches->ia[t] * m * k;
        const double *pb = vb.data() + batches->ib[t] * k * n;
        double *pc = out.data() + t * m * n;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                const double x = pa[i * k + p];
                const double *brow = pb + p * n;
                double *crow = pc + i * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += x * brow[j];
            }
    }
    return detail::make_result(std::move(out_shape), std::move(out), {a.node(), b.node()}, [batches, m, k, n](Node &self) {
        Node &na = *self.inputs[0];
        Node &nbn = *self.inputs[1];
        const std::size_t count = batches->ia.size();
        for (std::size_t t = 0; t < count; ++t) {
            const double *gc = self.grad.data() + t * m * n;
            const double *pa = na.value.data() + batches->ia[t] * m * k;
            const double *pb = nbn.value.data() + batches->ib[t] * k * n;
            if (na.requires_grad) {
                double *ga = na.ensure_grad().data() + batches->ia[t] * m * k;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) acc += gc[i * n + j] * pb[p * n + j];
                        ga[i * k + p] += acc;
                    }
            }
            if (nbn.requires_grad) {
                double *gb = nbn.ensure_grad().data() + batches->ib[t] * k * n;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double x = pa[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += x * gc[i * n + j];
                    }
            }
        }
    });
}

Tensor permute(const Tensor &a, const std::vector<std::size_t> &perm) {
    const std::size_t rank = a.dim();
    if (perm.size() != rank) throw ShapeError("permute: order of length " + std::to_string(perm.size()) + " for shape " + shape_str(a.shape()));
    std::vector<bool> used(rank, false);
    for (auto p : perm) {
        if (p >= rank || used[p]) throw ShapeError("permute: invalid axis order for shape " + shape_str(a.shape()));
        used[p] = true;
    }
    const Shape in_strides = contiguous_strides(a.shape());
    Shape out_shape(rank);
    for (std::size_t i = 0; i < rank; ++i) out_shape[i] = a.shape()[perm[i]];
    // src[k] = flat index in `a` of output element k.
    auto src = std::make_shared<std::vector<std::size_t>>(a.numel());
    Shape idx(rank, 0);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < src->size(); ++k) {
        (*src)[k] = pos;
        for (std::size_t d = rank; d-- > 0;) {
            const std::size_t stride = in_strides[perm[d]];
            if (++idx[d] < out_shape[d]) {
                pos += stride;
                break;
            }
            pos -= stride * (out_shape[d] - 1);
            idx[d] = 0;
        }
    }
    const auto va = a.data();
    std::vector<double> out(src->size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = va[(*src)[k]];
    return detail::make_result(std::move(out_shape), std::move(out), {a.node()}, [src](Node &self) {
        auto &g = self.inputs[0]->ensure_grad();
        for (std::size_t k = 0; k < src->size(); ++k) g[(*src)[k]] += self.grad[k];
    });
}

Tensor transpose(const Tensor &a, int axis0, int axis1) {
    const std::size_t x = norm_axis(axis0, a.dim(), a.shape());
    const std::size_t y = norm_axis(axis1, a.dim(), a.shape());
    std::vector<std::size_t> perm(a.dim());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::swap(perm[x], perm[y]);
    return permute(a, perm);
}

Tensor reshape(const Tensor &a, const Shape &shape) {
    if (numel(shape) != a.numel())
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    std::vector<double> out(a.data().begin(), a.data().end());
    return detail::make_result(shape, std::move(out), {a.node()}, [](Node &self) {
        auto &g = self.inputs[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

Tensor sum(const Tensor &a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    return detail::make_result(Shape{}, {acc}, {a.node()}, [](Node &self) {
        auto &g = self.inputs[0]->ensure_grad();
        const double up = self.grad[0];
        for (double &x : g) x += up;
    });
}

Tensor sum(const Tensor &a, int axis, bool keepdim) {
    const std::size_t ax = norm_axis(axis, a.dim(), a.shape());
    const AxisSplit s = split_axis(a.shape(), ax);
    Shape out_shape = a.shape();
    if (keepdim)
        out_shape[ax] = 1;
    else
        out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(ax));
    const auto va = a.data();
    std::vector<double> out(s.outer * s.inner, 0.0);
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t j = 0; j < s.n; ++j)
            for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += va[(o * s.n + j) * s.inner + i];
    return detail::make_result(std::move(out_shape), std::move(out), {a.node()}, [s](Node &self) {
        auto &g = self.inputs[0]->ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t j = 0; j < s.n; ++j)
                for (std::size_t i = 0; i < s.inner; ++i) g[(o * s.n + j) * s.inner + i] += self.grad[o * s.inner + i];
    });
}

Tensor mean(const Tensor &a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor mean(const Tensor &a, int axis, bool keepdim) {
    const std::size_t n = a.size(axis);
    return scale(sum(a, axis, keepdim), 1.0 / static_cast<double>(n));
}

Tensor softmax(const Tensor &a, int axis) {
    const std::size_t ax = norm_axis(axis, a.dim(), a.shape());
    const AxisSplit s = split_axis(a.shape(), ax);
    const auto va = a.data();
    std::vector<double> out(va.size());
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t i = 0; i < s.inner; ++i) {
            const std::size_t base = o * s.n * s.inner + i;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < s.n; ++j) mx = std::max(mx, va[base + j * s.inner]);
            double z = 0.0;
            for (std::size_t j = 0; j < s.n; ++j) {
                const double e = std::exp(va[base + j * s.inner] - mx);
                out[base + j * s.inner] = e;
                z += e;
            }
            for (std::size_t j = 0; j < s.n; ++j) out[base + j * s.inner] /= z;
        }
    return detail::make_result(a.shape(), std::move(out), {a.node()}, [s](Node &self) {
        auto &g = self.inputs[0]->ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t i = 0; i < s.inner; ++i) {
                const std::size_t base = o * s.n * s.inner + i;
                double dot = 0.0;
                for (std::size_t j = 0; j < s.n; ++j) dot += self.grad[base + j * s.inner] * self.value[base + j * s.inner];
                for (std::size_t j = 0; j < s.n; ++j) {
                    const std::size_t k = base + j * s.inner;
                    g[k] += self.value[k] * (self.grad[k] - dot);
                }
            }
    });
}

Tensor log_softmax(const Tensor &a, int axis) {
    const std::size_t ax = norm_axis(axis, a.dim(), a.shape());
    const AxisSplit s = split_axis(a.shape(), ax);
    const auto va = a.data();
    std::vector<double> out(va.size());
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t i = 0; i < s.inner; ++i) {
            const std::size_t base = o * s.n * s.inner + i;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < s.n; ++j) mx = std::max(mx, va[base + j * s.inner]);
            double z = 0.0;
            for (std::size_t j = 0; j < s.n; ++j) z += std::exp(va[base + j * s.inner] - mx);
            const double lse = mx + std::log(z);
            for (std::size_t j = 0; j < s.n; ++j) out[base + j * s.inner] = va[base + j * s.inner] - lse;
        }
    return detail::make_result(a.shape(), std::move(out), {a.node()}, [s](Node &self) {
        auto &g = self.inputs[0]->ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t i = 0; i < s.inner; ++i) {
                const std::size_t base = o * s.n * s.inner + i;
                double total = 0.0;
                for (std::size_t j = 0; j < s.n; ++j) total += self.grad[base + j * s.inner];
                for (std::size_t j = 0; j < s.n; ++j) {
                    const std::size_t k = base + j * s.inner;
                    g[k] += self.grad[k] - std::exp(self.value[k]) * total;
                }
            }
    });
}

Tensor sigmoid(const Tensor &a) {
    static constexpr double kLow = std::numeric_limits<double>::min();
    static constexpr double kHigh = 1.0 - 0x1.0p-53;
    return unary(
        a,
        [](double x) {
            const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
            return std::clamp(s, kLow, kHigh);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor gelu(const Tensor &a) {
    return unary(
        a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); },
        [](double x, double) {
            const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
            const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
            return cdf + x * pdf;
        });
}

Tensor exp(const Tensor &a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor &a) {
    return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor &a) {
    return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor clamp(const Tensor &a, double lo, double hi) {
    return unary(
        a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor layer_norm(const Tensor &x, const Tensor &gain, const Tensor &bias, double eps) {
    if (x.dim() < 1) throw ShapeError("layer_norm: input must have at least one axis");
    const std::size_t d = x.shape().back();
    if (gain.shape() != Shape{d} || bias.shape() != Shape{d})
        throw ShapeError("layer_norm: gain " + shape_str(gain.shape()) + " / bias " + shape_str(bias.shape()) +
                         " do not match last axis of " + shape_str(x.shape()));
    const std::size_t rows = x.numel() / d;
    const auto vx = x.data(), vg = gain.data(), vb = bias.data();
    auto xhat = std::make_shared<std::vector<double>>(x.numel());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    std::vector<double> out(x.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const double *row = vx.data() + r * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += row[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (row[j] - mu) * is;
            (*xhat)[r * d + j] = h;
            out[r * d + j] = h * vg[j] + vb[j];
        }
    }
    return detail::make_result(x.shape(), std::move(out), {x.node(), gain.node(), bias.node()},
                               [xhat, inv_std, d, rows](Node &self) {
                                   Node &nx = *self.inputs[0];
                                   Node &ng = *self.inputs[1];
                                   Node &nbias = *self.inputs[2];
                                   if (ng.requires_grad) {
                                       auto &g = ng.ensure_grad();
                                       for (std::size_t r = 0; r < rows; ++r)
                                           for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[r * d + j] * (*xhat)[r * d + j];
                                   }
                                   if (nbias.requires_grad) {
                                       auto &g = nbias.ensure_grad();
                                       for (std::size_t r = 0; r < rows; ++r)
                                           for (std::size_t j = 0; j < d; ++j) g[j] += self.grad[r * d + j];
                                   }
                                   if (nx.requires_grad) {
                                       auto &g = nx.ensure_grad();
                                       const double inv_d = 1.0 / static_cast<double>(d);
                                       for (std::size_t r = 0; r < rows; ++r) {
                                           double m1 = 0.0, m2 = 0.0;
                                           for (std::size_t j = 0; j < d; ++j) {
                                               const double dh = self.grad[r * d + j] * ng.value[j];
                                               m1 += dh;
                                               m2 += dh * (*xhat)[r * d + j];
                                           }
                                           m1 *= inv_d;
                                           m2 *= inv_d;
                                           for (std::size_t j = 0; j < d; ++j) {
                                               const double dh = self.grad[r * d + j] * ng.value[j];
                                               g[r * d + j] += (*inv_std)[r] * (dh - m1 - (*xhat)[r * d + j] * m2);
                                           }
                                       }
                                   }
                               });
}

Tensor embedding(const Tensor &weight, std::span<const std::size_t> ids, const Shape &prefix) {
    if (weight.dim() != 2) throw ShapeError("embedding: weight must be 2-D, got " + shape_str(weight.shape()));
    if (numel(prefix) != ids.size())
        throw ShapeError("embedding: " + std::to_string(ids.size()) + " ids for prefix " + shape_str(prefix));
    const std::size_t vocab = weight.shape()[0], d = weight.shape()[1];
    auto rows = std::make_shared<std::vector<std::size_t>>(ids.begin(), ids.end());
    const auto vw = weight.data();
    std::vector<double> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= vocab) throw IndexError("embedding: id " + std::to_string(ids[i]) + " >= table size " + std::to_string(vocab));
        std::copy_n(vw.data() + ids[i] * d, d, out.data() + i * d);
    }
    Shape shape = prefix;
    shape.push_back(d);
    return detail::make_result(std::move(shape), std::move(out), {weight.node()}, [rows, d](Node &self) {
        auto &g = self.inputs[0]->ensure_grad();
        for (std::size_t i = 0; i < rows->size(); ++i)
            for (std::size_t j = 0; j < d; ++j) g[(*rows)[i] * d + j] += self.grad[i * d + j];
    });
}

Tensor dropout(const Tensor &x, double rate, Rng &rng, bool training) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> m(x.numel());
    for (double &v : m) v = rng.uniform() >= rate ? keep_scale : 0.0;
    return mul(x, Tensor(x.shape(), std::move(m)));
}

Tensor slice(const Tensor &a, int axis, std::size_t start, std::size_t length) {
    const std::size_t ax = norm_axis(axis, a.dim(), a.shape());
    if (start + length > a.shape()[ax])
        throw ShapeError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) + ") out of range on axis " +
                         std::to_string(ax) + " of " + shape_str(a.shape()));
    const AxisSplit s = split_axis(a.shape(), ax);
    Shape out_shape = a.shape();
    out_shape[ax] = length;
    const auto va = a.data();
    std::vector<double> out(s.outer * length * s.inner);
    for (std::size_t o = 0; o < s.outer; ++o)
        std::copy_n(va.data() + (o * s.n + start) * s.inner, length * s.inner, out.data() + o * length * s.inner);
    return detail::make_result(std::move(out_shape), std::move(out), {a.node()}, [s, start, length](Node &self) {
        auto &g = self.inputs[0]->ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t k = 0; k < length * s.inner; ++k) g[(o * s.n + start) * s.inner + k] += self.grad[o * length * s.inner + k];
    });
}

Tensor stack(std::span<const Tensor> items, int axis) {
    if (items.empty()) throw ShapeError("stack: empty input list");
    const Shape &base = items[0].shape();
    for (const auto &t : items)
        if (t.shape() != base) throw ShapeError("stack: shape " + shape_str(t.shape()) + " differs from " + shape_str(base));
    const int rank = static_cast<int>(base.size()) + 1;
    const int a = axis < 0 ? axis + rank : axis;
    if (a < 0 || a >= rank) throw ShapeError("stack: axis " + std::to_string(axis) + " invalid");
    const std::size_t ax = static_cast<std::size_t>(a);
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < ax; ++i) outer *= base[i];
    for (std::size_t i = ax; i < base.size(); ++i) inner *= base[i];
    const std::size_t count = items.size();
    Shape out_shape = base;
    out_shape.insert(out_shape.begin() + static_cast<std::ptrdiff_t>(ax), count);
    std::vector<double> out(outer * count * inner);
    std::vector<NodePtr> inputs;
    for (std::size_t t = 0; t < count; ++t) {
        const auto v = items[t].data();
        for (std::size_t o = 0; o < outer; ++o) std::copy_n(v.data() + o * inner, inner, out.data() + (o * count + t) * inner);
        inputs.push_back(items[t].node());
    }
    return detail::make_result(std::move(out_shape), std::move(out), std::move(inputs), [outer, inner, count](Node &self) {
        for (std::size_t t = 0; t < count; ++t) {
            Node &in = *self.inputs[t];
            if (!in.requires_grad) continue;
            auto &g = in.ensure_grad();
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t i = 0; i < inner; ++i) g[o * inner + i] += self.grad[(o * count + t) * inner + i];
        }
    });
}

Tensor gather_rows(const Tensor &a, std::span<const std::size_t> rows) {
    if (a.dim() != 2) throw ShapeError("gather_rows: expected 2-D input, got " + shape_str(a.shape()));
    return embedding(a, rows, Shape{rows.size()});
}

Tensor pick(const Tensor &a, std::span<const std::size_t> columns) {
    if (a.dim() != 2 || a.shape()[0] != columns.size())
        throw ShapeError("pick: " + std::to_string(columns.size()) + " columns for input " + shape_str(a.shape()));
    const std::size_t c = a.shape()[1];
    auto cols = std::make_shared<std::vector<std::size_t>>(columns.begin(), columns.end());
    std::vector<double> out(columns.size());
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] >= c) throw IndexError("pick: column " + std::to_string(columns[i]) + " >= " + std::to_string(c));
        out[i] = a.data()[i * c + columns[i]];
    }
    return detail::make_result(Shape{columns.size()}, std::move(out), {a.node()}, [cols, c](Node &self) {
        auto &g = self.inputs[0]->ensure_grad();
        for (std::size_t i = 0; i < cols->size(); ++i) g[i * c + (*cols)[i]] += self.grad[i];
    });
}

} // namespace plm
