#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace storychain {

// Derives an independent stream seed from a global seed, a stage name and an
// index, so any stage can be rerun in isolation.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage, std::uint64_t index = 0);

// mt19937_64 with sampling helpers that do not depend on the standard library's
// distribution implementations, which differ between vendors.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, bound). bound must be positive.
    std::size_t uniform_index(std::size_t bound);

    // k distinct indices from [0, n), in sampling order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        shuffle(std::span<T>(items));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace storychain
