// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/checkpoint.hpp"

#include "plm/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace plm {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

template <typename T> void put(std::ostream &out, T v) { out.write(reinterpret_cast<const char *>(&v), sizeof(T)); }

template <typename T> T get(std::istream &in, const std::string &what) {
    T v{};
    if (!in.read(reinterpret_cast<char *>(&v), sizeof(T))) throw LoadError("truncated checkpoint while reading " + what);
    return v;
}

std::string encode_meta(const Metadata &meta) {
    std::string s;
    for (const auto &[k, v] : meta) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
            throw ConfigError("metadata entry '" + k + "' contains a reserved character");
        s += k + "=" + v + "\n";
    }
    return s;
}

Metadata decode_meta(const std::string &s) {
    Metadata meta;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw LoadError("malformed checkpoint metadata line '" + line + "'");
        meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return meta;
}

} // namespace

Checkpoint make_checkpoint(const ParamList &params, Metadata meta) {
    Checkpoint c;
    c.meta = std::move(meta);
    for (const auto &[name, t] : params) {
        if (!c.tensors.emplace(name, t.detach()).second) throw ContractError("duplicate parameter name " + name);
    }
    return c;
}

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write " + path.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    const std::string meta = encode_meta(ckpt.meta);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    put<std::uint64_t>(out, ckpt.tensors.size());
    for (const auto &[name, t] : ckpt.tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim()));
        for (auto d : t.shape()) put<std::uint64_t>(out, d);
        out.write(reinterpret_cast<const char *>(t.data().data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    if (!out) throw LoadError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot read " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw LoadError(path.string() + " is not a checkpoint (bad magic)");
    const auto version = get<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion)
        throw LoadError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    const auto meta_len = get<std::uint32_t>(in, "metadata length");
    std::string meta(meta_len, '\0');
    if (!in.read(meta.data(), meta_len)) throw LoadError("truncated checkpoint metadata");
    Checkpoint c;
    c.meta = decode_meta(meta);
    const auto count = get<std::uint64_t>(in, "tensor count");
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = get<std::uint32_t>(in, "name length");
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw LoadError("truncated tensor name");
        const auto ndim = get<std::uint32_t>(in, name + " rank");
        Shape shape;
        for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(get<std::uint64_t>(in, name + " shape"));
        std::vector<double> values(numel(shape));
        if (!in.read(reinterpret_cast<char *>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double))))
            throw LoadError("truncated values for tensor " + name);
        c.tensors.emplace(name, Tensor(std::move(shape), std::move(values)));
    }
    return c;
}

void load_into(const ParamList &params, const Checkpoint &ckpt, bool require_all) {
    for (auto [name, target] : params) {
        const auto it = ckpt.tensors.find(name);
        if (it == ckpt.tensors.end()) {
            if (require_all) throw LoadError("checkpoint is missing tensor " + name);
            continue;
        }
        if (it->second.shape() != target.shape())
            throw LoadError("tensor " + name + " has shape " + shape_str(it->second.shape()) + " in checkpoint, model expects " +
                            shape_str(target.shape()));
        std::copy(it->second.data().begin(), it->second.data().end(), target.mutable_data().begin());
    }
}

std::uint64_t hash_params(const ParamList &params) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void *p, std::size_t n) {
        const auto *b = static_cast<const unsigned char *>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto &[name, t] : params) {
        mix(name.data(), name.size());
        for (auto d : t.shape()) mix(&d, sizeof(d));
        mix(t.data().data(), t.numel() * sizeof(double));
    }
    return h;
}

} // namespace plm
