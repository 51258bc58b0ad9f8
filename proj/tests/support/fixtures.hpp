#pragma once

#include <random>
#include <string>
#include <vector>

#include "storychain/represent.hpp"

namespace fixtures {

inline storychain::VectorSpace space_of(const std::vector<std::vector<double>>& rows) {
    storychain::VectorSpace s;
    s.matrix = storychain::DenseMatrix(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s.doc_ids.push_back("p" + std::to_string(i));
        for (std::size_t k = 0; k < rows[i].size(); ++k) s.matrix(i, k) = rows[i][k];
    }
    return s;
}

inline storychain::PairwiseMatrix euclid(const std::vector<std::vector<double>>& rows) {
    return storychain::pairwise_matrix(space_of(rows), storychain::PairMetric::euclidean_distance);
}

inline std::vector<std::vector<double>> line(std::initializer_list<double> xs) {
    std::vector<std::vector<double>> out;
    for (double x : xs) out.push_back({x});
    return out;
}

// n points in `dim` dimensions around k random centres.
inline std::vector<std::vector<double>> blobs(std::mt19937_64& gen, std::size_t n, std::size_t dim, std::size_t k,
                                              double spread = 1.0) {
    std::uniform_real_distribution<double> centre(-10.0, 10.0);
    std::normal_distribution<double> noise(0.0, spread);
    std::vector<std::vector<double>> c(k, std::vector<double>(dim));
    for (auto& r : c) for (double& v : r) v = centre(gen);
    std::vector<std::vector<double>> out(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t t = 0; t < dim; ++t) out[i][t] = c[i % k][t] + noise(gen);
    }
    return out;
}

}  // namespace fixtures
