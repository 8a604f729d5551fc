// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0

#include "plm/config.hpp"

#include "plm/errors.hpp"

#include <fstream>
#include <sstream>

namespace plm {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

ConfigMap ConfigMap::parse(const std::string &text, const std::string &source) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
        cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

ConfigMap ConfigMap::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void ConfigMap::set_assignment(const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

std::string ConfigMap::get(const std::string &key, const std::string &fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string &key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos == it->second.size()) return v;
    } catch (const std::exception &) {
    }
    throw ConfigError("key " + key + ": '" + it->second + "' is not a number");
}

std::size_t ConfigMap::get_size(const std::string &key, std::size_t fallback) const {
    return static_cast<std::size_t>(get_u64(key, fallback));
}

std::uint64_t ConfigMap::get_u64(const std::string &key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        if (!it->second.empty() && it->second[0] != '-') {
            const auto v = std::stoull(it->second, &pos);
            if (pos == it->second.size()) return v;
        }
    } catch (const std::exception &) {
    }
    throw ConfigError("key " + key + ": '" + it->second + "' is not a non-negative integer");
}

bool ConfigMap::get_bool(const std::string &key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string &v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key " + key + ": '" + v + "' is not a boolean");
}

std::vector<std::size_t> parse_size_list(const std::string &text) {
    std::vector<std::size_t> out;
    std::string tok;
    std::istringstream in(text);
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(tok, &pos);
        } catch (const std::exception &) {
            pos = 0;
        }
        if (pos != tok.size() || tok[0] == '-') throw ConfigError("'" + tok + "' is not a non-negative integer");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::vector<std::size_t> ConfigMap::get_size_list(const std::string &key, const std::vector<std::size_t> &fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_size_list(it->second);
}

std::string ConfigMap::to_text() const {
    std::string s;
    for (const auto &[k, v] : values_) s += k + " = " + v + "\n";
    return s;
}

} // namespace plm
