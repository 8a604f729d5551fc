// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint file format (little-endian):
//
//   magic      8 bytes  "PLMCKPT\0"
//   version    u32      kCheckpointVersion
//   meta_len   u32      length of the metadata block
//   metadata   bytes    UTF-8 "key=value\n" lines (configs, task, scaling)
//   count      u64      number of tensors
//   per tensor:
//     name_len u32, name bytes, ndim u32, dims u64[ndim], values f64[prod(dims)]
//
// Base checkpoints hold the pretrained encoder. Finetune checkpoints hold
// only what finetuning trains (adapters, contact head, downstream head)
// and are applied on top of a matching base.

#pragma once

#include "plm/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace plm {

inline constexpr char kCheckpointMagic[8] = {'P', 'L', 'M', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

using Metadata = std::map<std::string, std::string>;

struct Checkpoint {
    Metadata meta;
    std::map<std::string, Tensor> tensors;
};

Checkpoint make_checkpoint(const ParamList &params, Metadata meta = {});
void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::filesystem::path &path);

// Copies values into `params` by name. Shape mismatches (and, with
// require_all, missing names) raise LoadError naming the tensor.
void load_into(const ParamList &params, const Checkpoint &ckpt, bool require_all = true);

// FNV-1a over names, shapes and raw value bytes.
std::uint64_t hash_params(const ParamList &params);

} // namespace plm
