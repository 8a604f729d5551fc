// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/lora.hpp"

#include "plm/errors.hpp"

#include <algorithm>
#include <cctype>

namespace plm {

std::string target_name(LoraTarget t) {
    switch (t) {
    case LoraTarget::kQuery: return "query";
    case LoraTarget::kKey: return "key";
    case LoraTarget::kValue: return "value";
    case LoraTarget::kDense: return "dense";
    }
    return "?";
}

LoraTarget parse_target(const std::string &name) {
    std::string s;
    for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "q" || s == "query") return LoraTarget::kQuery;
    if (s == "k" || s == "key") return LoraTarget::kKey;
    if (s == "v" || s == "value") return LoraTarget::kValue;
    if (s == "d" || s == "dense" || s == "o" || s == "output") return LoraTarget::kDense;
    throw ConfigError("unknown LoRA target '" + name + "' (expected query, key, value, dense)");
}

TargetSet parse_targets(const std::string &list) {
    TargetSet out;
    std::string token;
    auto flush = [&] {
        if (token.empty()) return;
        if (token == "qkv") {
            out.insert({LoraTarget::kQuery, LoraTarget::kKey, LoraTarget::kValue});
        } else {
            out.insert(parse_target(token));
        }
        token.clear();
    };
    for (char c : list) {
        if (c == ',' || c == '+' || c == ' ')
            flush();
        else
            token.push_back(c);
    }
    flush();
    return out;
}

std::string format_targets(const TargetSet &targets) {
    std::string s;
    for (auto t : targets) {
        if (!s.empty()) s += "+";
        s += target_name(t);
    }
    return s.empty() ? "none" : s;
}

void attach_adapter(Linear &m, std::size_t rank, double alpha, Rng &rng) {
    const std::size_t in = m.in_features(), out = m.out_features();
    if (rank < 1 || rank > std::min(in, out))
        throw ConfigError("LoRA rank " + std::to_string(rank) + " must be in [1, " + std::to_string(std::min(in, out)) + "]");
    if (!(alpha > 0.0)) throw ConfigError("LoRA alpha must be positive");
    m.weight.set_requires_grad(false);
    m.bias.set_requires_grad(false);
    LoraAdapter adapter;
    adapter.a = randn({rank, in}, kLoraInitStd, rng);
    adapter.b = Tensor::zeros({out, rank}, true);
    adapter.alpha = alpha;
    m.lora = std::move(adapter);
}

Tensor lora_forward(const Linear &m, const Tensor &x) {
    if (!m.lora) throw ContractError("lora_forward on a projection without an adapter");
    return m.forward(x);
}

Linear merge(const Linear &m) {
    Linear plain;
    plain.bias = m.bias.clone();
    if (!m.lora) {
        plain.weight = m.weight.clone();
        return plain;
    }
    NoGradGuard guard;
    const Tensor delta = scale(matmul(m.lora->b, m.lora->a), m.lora->scaling());
    plain.weight = (m.weight + delta).detach();
    plain.weight.set_requires_grad(m.weight.requires_grad());
    plain.bias.set_requires_grad(m.bias.requires_grad());
    return plain;
}

std::vector<Linear *> target_maps(EncoderLayer &layer, const TargetSet &targets) {
    std::vector<Linear *> maps;
    for (auto t : targets) {
        switch (t) {
        case LoraTarget::kQuery: maps.push_back(&layer.attn.query); break;
        case LoraTarget::kKey: maps.push_back(&layer.attn.key); break;
        case LoraTarget::kValue: maps.push_back(&layer.attn.value); break;
        case LoraTarget::kDense: maps.push_back(&layer.attn.dense); break;
        }
    }
    return maps;
}

std::size_t inject(Encoder &encoder, const LoraConfig &cfg) {
    if (cfg.targets.empty()) throw ConfigError("LoRA target set is empty");
    set_trainable(encoder.base_parameters(), false);
    Rng rng(cfg.seed);
    std::size_t wrapped = 0;
    for (auto &layer : encoder.layers()) {
        for (Linear *m : target_maps(layer, cfg.targets)) {
            attach_adapter(*m, cfg.rank, cfg.alpha, rng);
            ++wrapped;
        }
    }
    return wrapped;
}

void merge_all(Encoder &encoder) {
    for (auto &layer : encoder.layers())
        for (Linear *m : {&layer.attn.query, &layer.attn.key, &layer.attn.value, &layer.attn.dense})
            if (m->lora) *m = merge(*m);
}

std::vector<TargetSet> ablation_target_sets() {
    using T = LoraTarget;
    const std::vector<TargetSet> rows{{T::kQuery},          {T::kKey},           {T::kValue},
                                      {T::kQuery, T::kKey}, {T::kKey, T::kValue}, {T::kQuery, T::kValue},
                                      {T::kQuery, T::kKey, T::kValue}};
    std::vector<TargetSet> out;
    for (const auto &row : rows) {
        out.push_back(row);
        TargetSet with_dense = row;
        with_dense.insert(T::kDense);
        out.push_back(with_dense);
    }
    return out;
}

ParamReport trainable_param_report(const std::vector<std::pair<std::string, ParamList>> &groups) {
    ParamReport report;
    for (const auto &[group, params] : groups) {
        auto &c = report.groups[group];
        for (const auto &[name, t] : params) {
            auto &slot = t.requires_grad() ? c.trainable : c.frozen;
            auto &total = t.requires_grad() ? report.totals.trainable : report.totals.frozen;
            slot += t.numel();
            total += t.numel();
        }
    }
    return report;
}

} // namespace plm
