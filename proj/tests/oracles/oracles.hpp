// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference computations. Standard library only, plain loops
// over scalars, no code shared with the library under test.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

// Input generator, independent of the library's random streams.
class SplitMix {
  public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
    Vec vec(std::size_t n, double lo, double hi) {
        Vec v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }

  private:
    std::uint64_t state_;
};

// c (n x m) = a (n x k) * b (k x m), row-major.
inline Vec naive_matmul(const Vec &a, const Vec &b, std::size_t n, std::size_t k, std::size_t m) {
    Vec c(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < k; ++t) s += a[i * k + t] * b[t * m + j];
            c[i * m + j] = s;
        }
    return c;
}

// Composite scalar function of x (2 x 3) with fixed w (3 x 2):
//   y = x w
//   f = sum(softmax_row(y) * sigmoid(y)) + sum(log(1 + y^2)) + 0.5 sum(x^2)
inline double composite_value(const Vec &x, const Vec &w) {
    double f = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        double y[2];
        for (std::size_t j = 0; j < 2; ++j) {
            y[j] = 0.0;
            for (std::size_t t = 0; t < 3; ++t) y[j] += x[i * 3 + t] * w[t * 2 + j];
        }
        const double top = y[0] > y[1] ? y[0] : y[1];
        const double e0 = std::exp(y[0] - top);
        const double e1 = std::exp(y[1] - top);
        for (std::size_t j = 0; j < 2; ++j) {
            const double soft = (j == 0 ? e0 : e1) / (e0 + e1);
            const double sig = 1.0 / (1.0 + std::exp(-y[j]));
            f += soft * sig;
            f += std::log(1.0 + y[j] * y[j]);
        }
    }
    for (double v : x) f += 0.5 * v * v;
    return f;
}

// Central differences of composite_value with respect to x.
inline Vec central_difference_grad(const Vec &x, const Vec &w, double h = 1e-5) {
    Vec g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vec up = x, down = x;
        up[i] += h;
        down[i] -= h;
        g[i] = (composite_value(up, w) - composite_value(down, w)) / (2.0 * h);
    }
    return g;
}

// y = (W0 + (alpha / r) B A) x + bias, with the update built densely.
// w0 (out x in), a (r x in), b (out x r).
inline Vec lora_dense(const Vec &w0, const Vec &bias, const Vec &a, const Vec &b, double alpha, std::size_t in,
                      std::size_t out, std::size_t r, const Vec &x) {
    Vec w = w0;
    const double s = alpha / static_cast<double>(r);
    for (std::size_t i = 0; i < out; ++i)
        for (std::size_t j = 0; j < in; ++j) {
            double ba = 0.0;
            for (std::size_t t = 0; t < r; ++t) ba += b[i * r + t] * a[t * in + j];
            w[i * in + j] += s * ba;
        }
    Vec y(out);
    for (std::size_t i = 0; i < out; ++i) {
        double acc = bias[i];
        for (std::size_t j = 0; j < in; ++j) acc += w[i * in + j] * x[j];
        y[i] = acc;
    }
    return y;
}

// Adapter parameters when every wrapped map is d_model x d_model.
inline std::size_t lora_param_count(std::size_t n_layers, std::size_t d_model, std::size_t rank, std::size_t maps_per_layer) {
    std::size_t total = 0;
    for (std::size_t l = 0; l < n_layers; ++l)
        for (std::size_t m = 0; m < maps_per_layer; ++m) total += rank * (d_model + d_model);
    return total;
}

// Pre-norm encoder: token and position tables, per layer two norms, four
// attention maps and a two-map feedforward, a final norm and the output
// vocabulary map. Every map carries a bias.
inline std::size_t encoder_param_count(std::size_t vocab, std::size_t d, std::size_t d_ff, std::size_t max_len,
                                       std::size_t n_layers) {
    std::size_t total = vocab * d + max_len * d;
    for (std::size_t l = 0; l < n_layers; ++l) {
        total += 2 * (2 * d);
        total += 4 * (d * d + d);
        total += d * d_ff + d_ff;
        total += d_ff * d + d;
    }
    total += 2 * d;
    total += d * vocab + vocab;
    return total;
}

// C + C^T of an L x L matrix.
inline Vec symmetrize(const Vec &c, std::size_t l) {
    Vec s(l * l);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j) s[i * l + j] = c[i * l + j] + c[j * l + i];
    return s;
}

// sigmoid(sum_n w[n] c[n] + b) on an (n_layers, L', L') stack, with the
// first and last row/column (BOS/EOS) removed.
inline Vec contact_probs(const Vec &stacked, const Vec &w, double b, std::size_t n_layers, std::size_t lp) {
    const std::size_t l = lp - 2;
    Vec p(l * l);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j) {
            double z = b;
            for (std::size_t n = 0; n < n_layers; ++n) z += w[n] * stacked[n * lp * lp + (i + 1) * lp + (j + 1)];
            p[i * l + j] = 1.0 / (1.0 + std::exp(-z));
        }
    return p;
}

// Mean over samples of -(1/C) sum_c [y log p + (1 - y) log(1 - p)], with
// p clamped to [eps, 1 - eps].
inline double bce_loop(const Vec &p, const Vec &y, std::size_t rows, std::size_t cols, double eps) {
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        double row = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            double q = p[i * cols + c];
            if (q < eps) q = eps;
            if (q > 1.0 - eps) q = 1.0 - eps;
            const double t = y[i * cols + c];
            row += t * std::log(q) + (1.0 - t) * std::log(1.0 - q);
        }
        total += -row / static_cast<double>(cols);
    }
    return total / static_cast<double>(rows);
}

// Mean over rows of -log(exp(z_t) / sum_c exp(z_c)), computed naively.
inline double ce_loop(const Vec &logits, const std::vector<std::size_t> &targets, std::size_t cols) {
    double total = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        double denom = 0.0;
        for (std::size_t c = 0; c < cols; ++c) denom += std::exp(logits[i * cols + c]);
        const double prob = std::exp(logits[i * cols + targets[i]]) / denom;
        total += -std::log(prob);
    }
    return total / static_cast<double>(targets.size());
}

inline double mse_loop(const Vec &p, const Vec &y) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += (y[i] - p[i]) * (y[i] - p[i]);
    return total / static_cast<double>(p.size());
}

// Max over t = k / steps (k = 0..steps) of 2TP / (2TP + FP + FN), counts
// pooled over every (sample, class) pair, positive iff p >= t.
inline double f1_exhaustive(const Vec &p, const Vec &y, std::size_t steps = 100) {
    double best = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(steps);
        double tp = 0.0, fp = 0.0, fn = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const bool pos = p[i] >= t;
            const bool truth = y[i] > 0.5;
            if (pos && truth) tp += 1.0;
            if (pos && !truth) fp += 1.0;
            if (!pos && truth) fn += 1.0;
        }
        const double denom = 2.0 * tp + fp + fn;
        const double f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;
        if (f1 > best) best = f1;
    }
    return best;
}

// Fraction of equal pairs over the first lengths[b] entries of each row of
// width-padded prediction/label matrices.
inline double accuracy_loop(const std::vector<std::size_t> &pred, const std::vector<std::size_t> &truth,
                            const std::vector<std::size_t> &lengths, std::size_t width) {
    double hits = 0.0, count = 0.0;
    for (std::size_t b = 0; b < lengths.size(); ++b)
        for (std::size_t j = 0; j < lengths[b]; ++j) {
            if (pred[b * width + j] == truth[b * width + j]) hits += 1.0;
            count += 1.0;
        }
    return hits / count;
}

// 1 - 6 sum d^2 / (n (n^2 - 1)) with ranks counted directly; values must be
// tie-free.
inline double spearman_d2(const Vec &p, const Vec &y) {
    const std::size_t n = p.size();
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double rp = 1.0, ry = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (p[j] < p[i]) rp += 1.0;
            if (y[j] < y[i]) ry += 1.0;
        }
        d2 += (rp - ry) * (rp - ry);
    }
    const double nn = static_cast<double>(n);
    return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

inline double r2_loop(const Vec &p, const Vec &y) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double res = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        res += (y[i] - p[i]) * (y[i] - p[i]);
        tot += (y[i] - mean) * (y[i] - mean);
    }
    return 1.0 - res / tot;
}

// Mean per-residue weight: +1 hydrophobic (A I L M F V W), -1 charged
// (D E K R), +0.5 for G and P, 0 otherwise.
inline double composition_count(const std::string &seq) {
    double hydrophobic = 0.0, charged = 0.0, special = 0.0;
    for (char c : seq) {
        if (c == 'A' || c == 'I' || c == 'L' || c == 'M' || c == 'F' || c == 'V' || c == 'W') hydrophobic += 1.0;
        if (c == 'D' || c == 'E' || c == 'K' || c == 'R') charged += 1.0;
        if (c == 'G' || c == 'P') special += 1.0;
    }
    return (hydrophobic - charged + 0.5 * special) / static_cast<double>(seq.size());
}

// Optimizer updates in one epoch: samples are consumed batch by batch and
// an update fires whenever `group` samples have accumulated, plus one for a
// trailing partial group.
inline std::size_t accumulation_updates(std::size_t n, std::size_t batch, std::size_t group) {
    std::size_t updates = 0, pending = 0, seen = 0;
    while (seen < n) {
        std::size_t take = batch;
        if (n - seen < take) take = n - seen;
        seen += take;
        pending += take;
        if (pending >= group) {
            ++updates;
            pending = 0;
        }
    }
    if (pending > 0) ++updates;
    return updates;
}

} // namespace oracle
