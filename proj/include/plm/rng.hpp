// Copyright (c) 2026, The plmft Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic random source.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++
// standard. The distributions below are implemented here rather than via
// <random> distributions, whose algorithms are implementation-defined, so
// that a seed reproduces the same draws on every platform and toolchain.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace plm {

class Rng {
  public:
    static constexpr const char *kAlgorithm = "mt19937_64";

    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::size_t below(std::size_t n);

    // Box-Muller, one draw per call (the cosine branch).
    double normal(double mean = 0.0, double stddev = 1.0);

    // Fisher-Yates.
    template <typename T> void shuffle(std::vector<T> &items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    // Independent child stream derived from this one.
    Rng fork() { return Rng(next_u64()); }

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace plm
