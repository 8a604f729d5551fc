// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Low-rank adaptation of the encoder's attention projections.
//
// An adapted projection computes h = W0 x + bias + (alpha / r) B (A x)
// with W0 and bias frozen. A starts Gaussian and B starts at zero, so a
// freshly adapted model reproduces the base model exactly.

#pragma once

#include "plm/encoder.hpp"
#include "plm/nn.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace plm {

enum class LoraTarget { kQuery, kKey, kValue, kDense };

using TargetSet = std::set<LoraTarget>;

std::string target_name(LoraTarget t);
LoraTarget parse_target(const std::string &name);
// "query,key" / "q,k" / "qkv+dense" style lists.
TargetSet parse_targets(const std::string &list);
std::string format_targets(const TargetSet &targets);

inline constexpr double kLoraInitStd = 0.02;

struct LoraConfig {
    std::size_t rank = 32;
    double alpha = 32.0;
    TargetSet targets{LoraTarget::kQuery, LoraTarget::kKey, LoraTarget::kValue};
    std::uint64_t seed = 0;  // draws for A
};

// Wraps `m` in place: W0/bias frozen, A ~ N(0, 0.02^2), B = 0.
void attach_adapter(Linear &m, std::size_t rank, double alpha, Rng &rng);

// h = W0 x + (alpha/r) B (A x) + bias. Requires an attached adapter.
Tensor lora_forward(const Linear &m, const Tensor &x);

// Plain linear map with weight W0 + (alpha/r) B A.
Linear merge(const Linear &m);

// Freezes every pretrained encoder weight and wraps the named attention
// projections of every layer. Returns the number of wrapped maps.
std::size_t inject(Encoder &encoder, const LoraConfig &cfg);

// Replaces every adapted projection by its merged plain form.
void merge_all(Encoder &encoder);

// Linear maps of one layer selected by `targets`.
std::vector<Linear *> target_maps(EncoderLayer &layer, const TargetSet &targets);

// Rows of the target-module ablation: {Q},{K},{V},{Q,K},{K,V},{Q,V},{Q,K,V},
// each without and with the attention output projection ("dense").
std::vector<TargetSet> ablation_target_sets();

inline const std::vector<std::size_t> kDefaultSweepRanks{1, 2, 4, 8, 16, 32};

struct ParamCounts {
    std::size_t trainable = 0;
    std::size_t frozen = 0;
    std::size_t total() const { return trainable + frozen; }
};

struct ParamReport {
    std::map<std::string, ParamCounts> groups;
    ParamCounts totals;
    double trainable_fraction() const {
        return totals.total() ? static_cast<double>(totals.trainable) / static_cast<double>(totals.total()) : 0.0;
    }
};

// Counts are taken from each tensor's requires_grad flag.
ParamReport trainable_param_report(const std::vector<std::pair<std::string, ParamList>> &groups);

} // namespace plm
