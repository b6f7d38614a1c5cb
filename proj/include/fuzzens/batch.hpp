#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "random.hpp"

namespace fuzzens {

struct FitResult {
    ClusterModel model;
    PartitionMatrix memberships;
    std::vector<double> objective_history;
    std::size_t iterations = 0;
    bool converged = false;
};

struct PossModel {
    ClusterModel model;
    std::vector<double> mu;
};

struct PossFitResult {
    PossModel poss;
    PartitionMatrix memberships;
    std::vector<double> objective_history;
    std::size_t iterations = 0;
    bool converged = false;
};

struct KktReport {
    std::vector<double> lambda;
    double max_stationarity_residual = 0.0;
    double max_constraint_residual = 0.0;
};

// The membership formula printed in the original possibilistic procedure
// puts u = 1/(2 alpha) at d^2 = mu. It is kept only for comparison runs.
enum class PossMembershipForm { derived, printed };

namespace detail {

inline void check_dims(std::span<const FeatureVector> X, std::size_t dim) {
    for (const auto& x : X)
        if (x.size() != dim) throw DimensionError(dim, x.size());
}

inline void check_shapes(std::span<const FeatureVector> X, const PartitionMatrix& U) {
    if (X.empty()) throw InvalidInput("empty data set");
    if (X.size() != U.size())
        throw InvalidInput("partition has " + std::to_string(U.size()) + " rows for " +
                           std::to_string(X.size()) + " points");
    const std::size_t m = U.front().size();
    for (const auto& row : U)
        if (row.size() != m) throw DimensionError(m, row.size());
}

inline MembershipRow crisp_row(std::size_t m, std::size_t winner) {
    MembershipRow row(m, 0.0);
    row[winner] = 1.0;
    return row;
}

// c_j = sum_k w(u_j(k)) x(k) / sum_k w(u_j(k)), summed in point order.
template <class WeightFn>
ClusterModel weighted_prototypes(std::span<const FeatureVector> X, const PartitionMatrix& U,
                                 WeightFn weight) {
    check_shapes(X, U);
    const std::size_t m = U.front().size();
    const std::size_t dim = X.front().size();
    check_dims(X, dim);
    std::vector<FeatureVector> protos(m, FeatureVector(dim, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
        double total = 0.0;
        auto& c = protos[j];
        for (std::size_t k = 0; k < X.size(); ++k) {
            const double w = weight(U[k][j]);
            total += w;
            for (std::size_t i = 0; i < dim; ++i) c[i] += w * X[k][i];
        }
        if (!(total > 0.0)) throw EmptyClusterError(j);
        for (double& v : c) v /= total;
    }
    return ClusterModel(std::move(protos));
}

template <class WeightFn>
double weighted_objective(std::span<const FeatureVector> X, const PartitionMatrix& U,
                          const ClusterModel& model, WeightFn weight) {
    check_shapes(X, U);
    double e = 0.0;
    for (std::size_t k = 0; k < X.size(); ++k) {
        if (U[k].size() != model.m()) throw DimensionError(model.m(), U[k].size());
        for (std::size_t j = 0; j < model.m(); ++j)
            e += weight(U[k][j]) * distance_sq(X[k], model.prototypes[j]);
    }
    return e;
}

inline double max_abs_diff(const PartitionMatrix& a, const PartitionMatrix& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t j = 0; j < a[k].size(); ++j)
            worst = std::max(worst, std::abs(a[k][j] - b[k][j]));
    return worst;
}

template <class MembershipFn>
PartitionMatrix all_memberships(std::span<const FeatureVector> X, MembershipFn memberships) {
    PartitionMatrix U;
    U.reserve(X.size());
    for (const auto& x : X) U.push_back(memberships(x));
    return U;
}

// Alternating optimization: memberships from prototypes, then prototypes from
// memberships, until the largest membership change drops below tol. On return
// the memberships are exactly those of the returned prototypes.
template <class MembershipFn, class WeightFn>
FitResult alternate(std::span<const FeatureVector> X, ClusterModel model,
                    const BatchConfig& config, MembershipFn memberships, WeightFn weight) {
    FitResult result;
    PartitionMatrix U;
    bool have_previous = false;
    for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
        auto next = all_memberships(X, [&](const FeatureVector& x) { return memberships(x, model); });
        if (have_previous && max_abs_diff(next, U) < config.tol) {
            U = std::move(next);
            result.converged = true;
            break;
        }
        U = std::move(next);
        have_previous = true;
        model = weighted_prototypes(X, U, weight);
        result.objective_history.push_back(weighted_objective(X, U, model, weight));
        ++result.iterations;
    }
    if (!result.converged)
        U = all_memberships(X, [&](const FeatureVector& x) { return memberships(x, model); });
    result.model = std::move(model);
    result.memberships = std::move(U);
    return result;
}

inline void check_fit_args(std::span<const FeatureVector> X, std::size_t m) {
    if (m < 2) throw ConfigError("cluster count m must be at least 2");
    if (X.size() < m)
        throw InvalidInput("need at least m = " + std::to_string(m) + " points, got " +
                           std::to_string(X.size()));
    check_dims(X, X.front().size());
}

}  // namespace detail

/// k-means++ seeding. Throws DegenerateError when X holds fewer than m
/// distinct points.
inline ClusterModel kmeanspp_seed(std::span<const FeatureVector> X, std::size_t m,
                                  std::uint64_t seed) {
    if (X.empty() || m == 0) throw InvalidInput("k-means++ seeding needs points and m >= 1");
    detail::check_dims(X, X.front().size());
    Rng rng(seed);
    std::vector<FeatureVector> chosen;
    chosen.reserve(m);
    const auto first = std::min(X.size() - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(X.size())));
    chosen.push_back(X[first]);
    std::vector<double> d2(X.size());
    for (std::size_t k = 0; k < X.size(); ++k) d2[k] = distance_sq(X[k], chosen.back());
    while (chosen.size() < m) {
        double total = 0.0;
        for (double v : d2) total += v;
        if (!(total > 0.0))
            throw DegenerateError("data holds fewer than " + std::to_string(m) +
                                  " distinct points");
        const std::size_t next = rng.categorical(d2);
        chosen.push_back(X[next]);
        for (std::size_t k = 0; k < X.size(); ++k)
            d2[k] = std::min(d2[k], distance_sq(X[k], chosen.back()));
    }
    return ClusterModel(std::move(chosen));
}

// ---------------------------------------------------------------------------
// Fuzzy C-means with fuzzifier beta.

inline MembershipRow fcm_memberships(std::span<const double> x, const ClusterModel& model,
                                     double beta) {
    const auto d = distances_sq(x, model);
    const std::size_t m = d.size();
    const std::size_t nearest = argmin(d);
    if (d[nearest] < kZeroDistance) return detail::crisp_row(m, nearest);
    const double exponent = 1.0 / (beta - 1.0);
    MembershipRow u(m);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            const double ratio = d[j] / d[l];
            s += beta == 2.0 ? ratio : std::pow(ratio, exponent);
        }
        u[j] = 1.0 / s;
    }
    return u;
}

inline double fuzzified(double u, double beta) { return beta == 2.0 ? u * u : std::pow(u, beta); }

inline ClusterModel fcm_prototypes(std::span<const FeatureVector> X, const PartitionMatrix& U,
                                   double beta) {
    return detail::weighted_prototypes(X, U, [beta](double u) { return fuzzified(u, beta); });
}

inline double objective_probabilistic(std::span<const FeatureVector> X, const PartitionMatrix& U,
                                      const ClusterModel& model, double beta) {
    return detail::weighted_objective(X, U, model, [beta](double u) { return fuzzified(u, beta); });
}

inline FitResult fcm_fit(std::span<const FeatureVector> X, ClusterModel init,
                         const BatchConfig& config) {
    config.validate();
    detail::check_fit_args(X, init.m());
    init.validate();
    detail::check_dims(X, init.dim);
    const double beta = config.fuzzifier;
    return detail::alternate(
        X, std::move(init), config,
        [beta](const FeatureVector& x, const ClusterModel& c) { return fcm_memberships(x, c, beta); },
        [beta](double u) { return fuzzified(u, beta); });
}

inline FitResult fcm_fit(std::span<const FeatureVector> X, std::size_t m, const BatchConfig& config) {
    config.validate();
    detail::check_fit_args(X, m);
    return fcm_fit(X, kmeanspp_seed(X, m, config.seed), config);
}

// ---------------------------------------------------------------------------
// Variable fuzzifier: weights alpha*u^2 + (1-alpha)*u.

/// Per-point minimizer of the blended objective on the probability simplex.
/// The unconstrained stationary point can go negative for small alpha; those
/// clusters are pinned to zero and the rest re-solved until feasible.
inline MembershipRow vf_memberships(std::span<const double> x, const ClusterModel& model,
                                    BlendParam alpha) {
    const auto d = distances_sq(x, model);
    const std::size_t m = d.size();
    const std::size_t nearest = argmin(d);
    if (d[nearest] < kZeroDistance) return detail::crisp_row(m, nearest);

    const double a = alpha.value();
    const double offset = (1.0 - a) / (2.0 * a);
    std::vector<char> active(m, 1);
    std::size_t n_active = m;
    MembershipRow u(m, 0.0);
    for (;;) {
        if (n_active == 1) {
            for (std::size_t j = 0; j < m; ++j) u[j] = active[j] ? 1.0 : 0.0;
            break;
        }
        const double scale = 1.0 + static_cast<double>(n_active) * offset;
        bool clipped = false;
        for (std::size_t j = 0; j < m; ++j) {
            if (!active[j]) continue;
            double s = 0.0;
            for (std::size_t l = 0; l < m; ++l)
                if (active[l]) s += d[j] / d[l];
            u[j] = -offset + scale / s;
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (active[j] && u[j] < 0.0) {
                active[j] = 0;
                u[j] = 0.0;
                --n_active;
                clipped = true;
            }
        }
        if (!clipped) break;
    }
    // rounding can push the largest entry a hair past 1
    for (double& v : u) v = std::min(v, 1.0);
    return u;
}

inline ClusterModel vf_prototypes(std::span<const FeatureVector> X, const PartitionMatrix& U,
                                  BlendParam alpha) {
    const double a = alpha.value();
    return detail::weighted_prototypes(X, U, [a](double u) { return blend_weight(u, a); });
}

inline double objective_vf(std::span<const FeatureVector> X, const PartitionMatrix& U,
                           const ClusterModel& model, BlendParam alpha) {
    const double a = alpha.value();
    return detail::weighted_objective(X, U, model, [a](double u) { return blend_weight(u, a); });
}

inline FitResult vf_fit(std::span<const FeatureVector> X, ClusterModel init, BlendParam alpha,
                        const BatchConfig& config) {
    config.validate();
    detail::check_fit_args(X, init.m());
    init.validate();
    detail::check_dims(X, init.dim);
    const double a = alpha.value();
    return detail::alternate(
        X, std::move(init), config,
        [alpha](const FeatureVector& x, const ClusterModel& c) { return vf_memberships(x, c, alpha); },
        [a](double u) { return blend_weight(u, a); });
}

inline FitResult vf_fit(std::span<const FeatureVector> X, std::size_t m, BlendParam alpha,
                        const BatchConfig& config) {
    config.validate();
    detail::check_fit_args(X, m);
    return vf_fit(X, kmeanspp_seed(X, m, config.seed), alpha, config);
}

// ---------------------------------------------------------------------------
// Possibilistic clustering with the blended weights.

/// u_j = clamp(((1+a) mu_j - (1-a) d_j^2) / (2a (d_j^2 + mu_j)), 0, 1).
/// Crosses 0.5 exactly at d_j^2 = mu_j for every alpha.
inline double poss_membership(double d2, double mu, double alpha,
                              PossMembershipForm form = PossMembershipForm::derived) {
    double raw;
    if (form == PossMembershipForm::derived)
        raw = ((1.0 + alpha) * mu - (1.0 - alpha) * d2) / (2.0 * alpha * (d2 + mu));
    else
        raw = ((alpha * mu + (1.0 - alpha) * d2) + mu) / (2.0 * alpha * (d2 + mu));
    return std::clamp(raw, 0.0, 1.0);
}

inline MembershipRow poss_memberships(std::span<const double> x, const PossModel& poss,
                                      BlendParam alpha,
                                      PossMembershipForm form = PossMembershipForm::derived) {
    if (poss.mu.size() != poss.model.m()) throw DimensionError(poss.model.m(), poss.mu.size());
    const auto d = distances_sq(x, poss.model);
    MembershipRow u(d.size());
    for (std::size_t j = 0; j < d.size(); ++j)
        u[j] = poss_membership(d[j], poss.mu[j], alpha.value(), form);
    return u;
}

/// mu_j = sum_k phi(u_j(k)) |x(k) - c_j|^2 / sum_k phi(u_j(k)).
inline std::vector<double> poss_scatter(std::span<const FeatureVector> X, const PartitionMatrix& U,
                                        const ClusterModel& model, BlendParam alpha) {
    detail::check_shapes(X, U);
    const double a = alpha.value();
    std::vector<double> mu(model.m());
    for (std::size_t j = 0; j < model.m(); ++j) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t k = 0; k < X.size(); ++k) {
            const double w = blend_weight(U[k][j], a);
            num += w * distance_sq(X[k], model.prototypes[j]);
            den += w;
        }
        if (!(den > 0.0)) throw EmptyClusterError(j);
        if (!(num > 0.0))
            throw DegenerateError("cluster " + std::to_string(j) + " has zero scatter");
        mu[j] = num / den;
    }
    return mu;
}

inline double objective_possibilistic(std::span<const FeatureVector> X, const PartitionMatrix& U,
                                      const PossModel& poss, BlendParam alpha) {
    const double a = alpha.value();
    double e = objective_vf(X, U, poss.model, alpha);
    for (std::size_t j = 0; j < poss.model.m(); ++j) {
        double penalty = 0.0;
        for (const auto& row : U) {
            const double v = 1.0 - row[j];
            penalty += a * v * v + (1.0 - a) * v;
        }
        e += poss.mu[j] * penalty;
    }
    return e;
}

/// Possibilistic alternating optimization started from a probabilistic fit.
inline PossFitResult poss_fit(std::span<const FeatureVector> X, const FitResult& init,
                              BlendParam alpha, const BatchConfig& config,
                              PossMembershipForm form = PossMembershipForm::derived) {
    config.validate();
    detail::check_fit_args(X, init.model.m());
    PossFitResult result;
    result.poss.model = init.model;
    result.poss.mu = poss_scatter(X, init.memberships, init.model, alpha);

    auto memberships = [&](const PossModel& p) {
        return detail::all_memberships(
            X, [&](const FeatureVector& x) { return poss_memberships(x, p, alpha, form); });
    };
    PartitionMatrix U = init.memberships;
    for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
        auto next = memberships(result.poss);
        const bool done = detail::max_abs_diff(next, U) < config.tol;
        U = std::move(next);
        if (done && iter > 0) {
            result.converged = true;
            break;
        }
        result.poss.model = vf_prototypes(X, U, alpha);
        result.poss.mu = poss_scatter(X, U, result.poss.model, alpha);
        result.objective_history.push_back(objective_possibilistic(X, U, result.poss, alpha));
        ++result.iterations;
    }
    if (!result.converged) U = memberships(result.poss);
    result.memberships = std::move(U);
    return result;
}

inline PossFitResult poss_fit(std::span<const FeatureVector> X, std::size_t m, BlendParam alpha,
                              const BatchConfig& config,
                              PossMembershipForm form = PossMembershipForm::derived) {
    return poss_fit(X, vf_fit(X, m, alpha, config), alpha, config, form);
}

// ---------------------------------------------------------------------------

/// Lagrangian check for an FCM partition: recomputes the per-point multiplier
///   lambda(k) = -( sum_l (beta d_l^2)^(1/(1-beta)) )^(1-beta)
/// and reports max |beta u^(beta-1) d^2 + lambda| and max |sum_j u_j - 1|.
/// Requires every membership strictly inside (0, 1).
inline KktReport kkt_residual(std::span<const FeatureVector> X, const PartitionMatrix& U,
                              const ClusterModel& model, double beta) {
    detail::check_shapes(X, U);
    if (U.front().size() != model.m()) throw DimensionError(model.m(), U.front().size());
    for (const auto& row : U)
        for (double u : row)
            if (!(u > 0.0 && u < 1.0))
                throw InvalidInput("KKT check needs interior memberships (0 < u < 1)");
    KktReport report;
    report.lambda.reserve(X.size());
    const double exponent = 1.0 / (1.0 - beta);
    for (std::size_t k = 0; k < X.size(); ++k) {
        const auto d = distances_sq(X[k], model);
        double s = 0.0;
        for (double dl : d) s += std::pow(beta * dl, exponent);
        const double lambda = -std::pow(s, 1.0 - beta);
        report.lambda.push_back(lambda);
        double total = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j) {
            const double u = U[k][j];
            const double g = beta * std::pow(u, beta - 1.0) * d[j] + lambda;
            report.max_stationarity_residual = std::max(report.max_stationarity_residual, std::abs(g));
            total += u;
        }
        report.max_constraint_residual = std::max(report.max_constraint_residual, std::abs(total - 1.0));
    }
    return report;
}

}  // namespace fuzzens
