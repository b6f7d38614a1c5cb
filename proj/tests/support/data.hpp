#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testdata {

struct Blobs {
    std::vector<std::vector<double>> points;
    std::vector<std::size_t> labels;
};

// Isotropic Gaussian blobs drawn round-robin, then shuffled.
inline Blobs gaussian_blobs(const std::vector<std::vector<double>>& means, double stddev,
                            std::size_t count, std::uint64_t seed, bool shuffle = true) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, stddev);
    Blobs b;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t j = k % means.size();
        auto x = means[j];
        for (double& v : x) v += normal(rng);
        b.points.push_back(std::move(x));
        b.labels.push_back(j);
    }
    if (shuffle) {
        std::vector<std::size_t> idx(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        Blobs s;
        for (auto i : idx) {
            s.points.push_back(b.points[i]);
            s.labels.push_back(b.labels[i]);
        }
        return s;
    }
    return b;
}

inline std::vector<std::vector<double>> three_blob_means() {
    return {{0.0, 0.0}, {8.0, 0.0}, {4.0, 7.0}};
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fuzzens_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testdata
