#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "core.hpp"

namespace fuzzens {

struct EvalReport {
    double pc = 0.0;
    double modified_pc = 0.0;
    std::vector<std::size_t> crisp_labels;
    std::optional<double> prototype_match_error;
    std::optional<double> accuracy;
};

/// Mean over points of sum_j u_j^2.
inline double partition_coefficient(const PartitionMatrix& U) {
    if (U.empty()) throw InvalidInput("partition coefficient of an empty partition");
    double total = 0.0;
    for (const auto& row : U)
        for (double u : row) total += u * u;
    return total / static_cast<double>(U.size());
}

/// Mean over points of sum_j (alpha u_j^2 + (1 - alpha) u_j).
inline double modified_partition_coefficient(const PartitionMatrix& U, double alpha) {
    if (U.empty()) throw InvalidInput("partition coefficient of an empty partition");
    double total = 0.0;
    for (const auto& row : U)
        for (double u : row) total += blend_weight(u, alpha);
    return total / static_cast<double>(U.size());
}

inline std::size_t crisp_label(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

inline std::vector<std::size_t> crisp_assignments(const PartitionMatrix& U) {
    if (U.empty()) throw InvalidInput("crisp assignment of an empty partition");
    std::vector<std::size_t> labels;
    labels.reserve(U.size());
    for (const auto& row : U) labels.push_back(crisp_label(row));
    return labels;
}

/// Greedy matching: all cross pairs sorted by distance (ties by index), each
/// prototype used once. Returns the largest matched distance.
inline double prototype_match_error(const ClusterModel& a, const ClusterModel& b) {
    if (a.m() != b.m())
        throw InvalidInput("cannot match models with " + std::to_string(a.m()) + " and " +
                           std::to_string(b.m()) + " prototypes");
    if (a.dim != b.dim) throw DimensionError(a.dim, b.dim);
    const std::size_t m = a.m();
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    pairs.reserve(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            pairs.emplace_back(std::sqrt(distance_sq(a.prototypes[i], b.prototypes[j])), i, j);
    std::sort(pairs.begin(), pairs.end());
    std::vector<char> used_a(m, 0), used_b(m, 0);
    double worst = 0.0;
    for (const auto& [dist, i, j] : pairs) {
        if (used_a[i] || used_b[j]) continue;
        used_a[i] = used_b[j] = 1;
        worst = std::max(worst, dist);
    }
    return worst;
}

/// Fraction of points whose predicted label agrees with the truth under the
/// best one-to-one relabeling. Exhaustive over permutations for up to 8
/// labels, greedy on the contingency table beyond that.
inline double matched_accuracy(std::span<const std::size_t> predicted,
                               std::span<const std::size_t> truth) {
    if (predicted.size() != truth.size())
        throw InvalidInput("label sequences differ in length");
    if (predicted.empty()) throw InvalidInput("no labels to compare");
    const std::size_t kp = *std::max_element(predicted.begin(), predicted.end()) + 1;
    const std::size_t kt = *std::max_element(truth.begin(), truth.end()) + 1;
    const std::size_t k = std::max(kp, kt);
    std::vector<std::vector<std::size_t>> table(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < predicted.size(); ++i) ++table[predicted[i]][truth[i]];

    std::size_t best = 0;
    if (k <= 8) {
        std::vector<std::size_t> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            std::size_t hits = 0;
            for (std::size_t p = 0; p < k; ++p) hits += table[p][perm[p]];
            best = std::max(best, hits);
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> cells;
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t t = 0; t < k; ++t) cells.emplace_back(table[p][t], p, t);
        std::sort(cells.begin(), cells.end(), [](const auto& x, const auto& y) {
            return std::get<0>(x) != std::get<0>(y) ? std::get<0>(x) > std::get<0>(y) : x < y;
        });
        std::vector<char> used_p(k, 0), used_t(k, 0);
        for (const auto& [n, p, t] : cells) {
            if (used_p[p] || used_t[t]) continue;
            used_p[p] = used_t[t] = 1;
            best += n;
        }
    }
    return static_cast<double>(best) / static_cast<double>(predicted.size());
}

inline EvalReport evaluate_partition(const PartitionMatrix& U, double alpha) {
    EvalReport report;
    report.pc = partition_coefficient(U);
    report.modified_pc = modified_partition_coefficient(U, alpha);
    report.crisp_labels = crisp_assignments(U);
    return report;
}

}  // namespace fuzzens
