#pragma once

#include <vector>

#include "storychain/represent.hpp"

namespace storychain::detail {

// Each row sorted by (distance, index), so the epsilon-neighbourhood of a
// point is a prefix. Built once per matrix and shared across a sweep.
class NeighborIndex {
public:
    struct Entry {
        double distance;
        std::size_t index;
    };

    explicit NeighborIndex(const PairwiseMatrix& distances);

    std::size_t size() const noexcept { return n_; }
    const std::vector<Entry>& row(std::size_t i) const { return rows_[i]; }
    std::size_t count_within(std::size_t i, double epsilon) const;

private:
    std::size_t n_;
    std::vector<std::vector<Entry>> rows_;
};

std::vector<int> dbscan_labels(const NeighborIndex& index, double epsilon, std::size_t min_samples);

}  // namespace storychain::detail
