#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fuzzens {

using FeatureVector = std::vector<double>;
using MembershipRow = std::vector<double>;
using PartitionMatrix = std::vector<MembershipRow>;

// Distances below this are treated as coincident with the prototype.
inline constexpr double kZeroDistance = 1e-12;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    DimensionError(std::size_t expected, std::size_t actual)
        : Error("dimension mismatch: expected " + std::to_string(expected) +
                ", got " + std::to_string(actual)),
          expected_(expected), actual_(actual) {}

    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::size_t expected_;
    std::size_t actual_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Input data violates an operation's precondition.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Raised when the data cannot support the requested partition
// (identical points, empty or collapsed clusters).
class DegenerateError : public Error {
public:
    using Error::Error;
};

class EmptyClusterError : public DegenerateError {
public:
    explicit EmptyClusterError(std::size_t cluster)
        : DegenerateError("cluster " + std::to_string(cluster) +
                          " has zero total weight"),
          cluster_(cluster) {}

    std::size_t cluster() const noexcept { return cluster_; }

private:
    std::size_t cluster_;
};

struct ClusterModel {
    std::vector<FeatureVector> prototypes;
    std::size_t dim = 0;

    ClusterModel() = default;
    explicit ClusterModel(std::vector<FeatureVector> protos)
        : prototypes(std::move(protos)),
          dim(prototypes.empty() ? 0 : prototypes.front().size()) {
        validate();
    }

    std::size_t m() const noexcept { return prototypes.size(); }

    void validate() const {
        if (dim == 0) throw ConfigError("cluster model has zero dimension");
        for (const auto& c : prototypes)
            if (c.size() != dim) throw DimensionError(dim, c.size());
    }

    friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

/// Blend parameter of the variable fuzzifier, 0 < alpha <= 1.
class BlendParam {
public:
    BlendParam() = default;
    explicit BlendParam(double alpha) : alpha_(alpha) {
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw ConfigError("alpha must lie in (0, 1], got " + std::to_string(alpha));
    }

    double value() const noexcept { return alpha_; }
    operator double() const noexcept { return alpha_; }

    friend bool operator==(BlendParam, BlendParam) = default;
    friend auto operator<=>(BlendParam a, BlendParam b) { return a.alpha_ <=> b.alpha_; }

private:
    double alpha_ = 1.0;
};

struct BatchConfig {
    double fuzzifier = 2.0;
    double tol = 1e-6;
    std::size_t max_iter = 300;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(fuzzifier > 1.0)) throw ConfigError("fuzzifier must be > 1");
        if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
        if (max_iter == 0) throw ConfigError("max_iter must be positive");
    }
};

inline double distance_sq(std::span<const double> x, std::span<const double> c) {
    if (x.size() != c.size()) throw DimensionError(c.size(), x.size());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - c[i];
        s += d * d;
    }
    return s;
}

/// Neighborhood / blend weight phi(u) = alpha*u^2 + (1-alpha)*u.
/// Total in alpha; alpha = 0 gives the identity.
inline double blend_weight(double u, double alpha) noexcept {
    return alpha * u * u + (1.0 - alpha) * u;
}

inline std::vector<double> distances_sq(std::span<const double> x, const ClusterModel& model) {
    std::vector<double> d(model.m());
    for (std::size_t j = 0; j < model.m(); ++j) d[j] = distance_sq(x, model.prototypes[j]);
    return d;
}

// Index of the smallest value; ties go to the lowest index.
inline std::size_t argmin(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (v[j] < v[best]) best = j;
    return best;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace fuzzens
