// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Key-value configuration text:
//
//   # comment
//   key = value
//
// Keys are flat (e.g. "encoder.d_model", "lora.rank"); later assignments
// override earlier ones, which is how command-line overrides are applied.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace plm {

class ConfigMap {
  public:
    static ConfigMap parse(const std::string &text, const std::string &source = "<text>");
    static ConfigMap load(const std::filesystem::path &path);

    void set(const std::string &key, const std::string &value) { values_[key] = value; }
    // "key=value" form, as given to --set.
    void set_assignment(const std::string &assignment);
    bool has(const std::string &key) const { return values_.count(key) != 0; }

    std::string get(const std::string &key, const std::string &fallback) const;
    double get_double(const std::string &key, double fallback) const;
    std::size_t get_size(const std::string &key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string &key, std::uint64_t fallback) const;
    bool get_bool(const std::string &key, bool fallback) const;
    std::vector<std::size_t> get_size_list(const std::string &key, const std::vector<std::size_t> &fallback) const;

    const std::map<std::string, std::string> &entries() const { return values_; }
    std::string to_text() const;

  private:
    std::map<std::string, std::string> values_;
};

std::vector<std::size_t> parse_size_list(const std::string &text);

} // namespace plm
