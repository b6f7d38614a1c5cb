#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "batch.hpp"
#include "core.hpp"

namespace fuzzens {

enum class ScheduleKind { harmonic, constant };

// eta(k) = eta0 / (1 + k/tau) for harmonic, eta0 for constant.
struct LearningRateSchedule {
    ScheduleKind kind = ScheduleKind::harmonic;
    double eta0 = 0.5;
    double tau = 100.0;

    void validate() const {
        if (!(eta0 > 0.0)) throw ConfigError("eta0 must be > 0");
        if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    }

    friend bool operator==(const LearningRateSchedule&, const LearningRateSchedule&) = default;
};

inline double learning_rate(std::uint64_t k, const LearningRateSchedule& schedule) {
    if (schedule.kind == ScheduleKind::constant) return schedule.eta0;
    return schedule.eta0 / (1.0 + static_cast<double>(k) / schedule.tau);
}

enum class Mode { probabilistic, possibilistic };

/// Weighted running sums for one cluster, kept relative to a fixed anchor
/// point so the scatter stays well conditioned:
///   weight = sum w,  sum = sum w (x - anchor),  sq_sum = sum w |x - anchor|^2.
struct ClusterStats {
    FeatureVector anchor;
    FeatureVector sum;
    double weight = 0.0;
    double sq_sum = 0.0;

    ClusterStats() = default;
    explicit ClusterStats(FeatureVector anchor_point)
        : anchor(std::move(anchor_point)), sum(anchor.size(), 0.0) {}

    void add(std::span<const double> x, double w) {
        if (w <= 0.0) return;
        double sq = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - anchor[i];
            sum[i] += w * d;
            sq += d * d;
        }
        weight += w;
        sq_sum += w * sq;
    }

    // sum_p w_p |x(p) - c|^2, evaluated in closed form.
    double weighted_scatter(std::span<const double> c) const {
        double cross = 0.0;
        double shift = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double d = c[i] - anchor[i];
            cross += d * sum[i];
            shift += d * d;
        }
        return std::max(0.0, sq_sum - 2.0 * cross + shift * weight);
    }

    friend bool operator==(const ClusterStats&, const ClusterStats&) = default;
};

struct PossOnlineState {
    std::vector<double> mu;
    std::vector<ClusterStats> stats;
    double spawn_threshold = 0.25;
    std::size_t m_max = 32;
    std::uint64_t warmup_length = 50;
    bool seeded = false;

    friend bool operator==(const PossOnlineState&, const PossOnlineState&) = default;
};

struct PossOptions {
    double spawn_threshold = 0.25;
    std::size_t m_max = 32;
    // Zero selects max(10 m, 50).
    std::uint64_t warmup_length = 0;
};

/// One adaptive neuro-fuzzy Kohonen network.
struct FsomState {
    BlendParam alpha;
    ClusterModel model;
    std::uint64_t k = 0;
    LearningRateSchedule schedule;
    Mode mode = Mode::probabilistic;
    std::optional<PossOnlineState> poss;

    friend bool operator==(const FsomState&, const FsomState&) = default;
};

struct StepResult {
    MembershipRow memberships;
    std::optional<std::size_t> spawned;
    bool spawn_suppressed = false;
    bool warmup = false;
};

inline FsomState make_fsom(ClusterModel init, BlendParam alpha, LearningRateSchedule schedule,
                           Mode mode = Mode::probabilistic, const PossOptions& options = {}) {
    init.validate();
    schedule.validate();
    if (init.m() < 2) throw ConfigError("an FSOM needs at least 2 clusters");
    FsomState state;
    state.alpha = alpha;
    state.schedule = schedule;
    state.mode = mode;
    if (mode == Mode::possibilistic) {
        if (!(options.spawn_threshold > 0.0 && options.spawn_threshold < 1.0))
            throw ConfigError("spawn threshold must lie in (0, 1)");
        if (options.m_max < init.m()) throw ConfigError("m_max is below the initial cluster count");
        PossOnlineState poss;
        poss.spawn_threshold = options.spawn_threshold;
        poss.m_max = options.m_max;
        poss.warmup_length = options.warmup_length != 0
                                 ? options.warmup_length
                                 : std::max<std::uint64_t>(10 * init.m(), 50);
        poss.mu.assign(init.m(), 0.0);
        for (const auto& c : init.prototypes) poss.stats.emplace_back(c);
        state.poss = std::move(poss);
    }
    state.model = std::move(init);
    return state;
}

namespace detail {

inline void check_point(const FsomState& state, std::span<const double> x) {
    if (x.size() != state.model.dim) throw DimensionError(state.model.dim, x.size());
}

// Kohonen WTM pull: c_j += min(1, eta phi(u_j)) (x - c_j) for the first
// `count` clusters.
inline void pull_prototypes(FsomState& state, std::span<const double> x, const MembershipRow& u,
                            std::size_t count) {
    const double eta = learning_rate(state.k, state.schedule);
    const double a = state.alpha.value();
    for (std::size_t j = 0; j < count; ++j) {
        const double step = std::clamp(eta * blend_weight(u[j], a), 0.0, 1.0);
        if (step == 0.0) continue;
        auto& c = state.model.prototypes[j];
        for (std::size_t i = 0; i < c.size(); ++i) c[i] += step * (x[i] - c[i]);
    }
}

inline double mean_positive(std::span<const double> values) {
    double total = 0.0;
    std::size_t n = 0;
    for (double v : values)
        if (v > 0.0) {
            total += v;
            ++n;
        }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

inline void refresh_mu(PossOnlineState& poss, const ClusterModel& model, std::size_t j) {
    const auto& st = poss.stats[j];
    if (!(st.weight > 0.0)) return;
    const double scatter = st.weighted_scatter(model.prototypes[j]);
    if (scatter > 0.0) poss.mu[j] = scatter / st.weight;
}

// End of warm-up: mu from the accumulated weighted scatter. Clusters without
// any scatter yet borrow the mean of the others.
inline void seed_mu(PossOnlineState& poss, const ClusterModel& model) {
    for (std::size_t j = 0; j < model.m(); ++j) refresh_mu(poss, model, j);
    const double fallback = mean_positive(poss.mu);
    if (!(fallback > 0.0))
        throw DegenerateError("possibilistic warm-up produced no cluster scatter");
    for (double& mu : poss.mu)
        if (!(mu > 0.0)) mu = fallback;
    poss.seeded = true;
}

}  // namespace detail

/// Probabilistic step: memberships from the current prototypes, then every
/// prototype pulled toward x with that membership.
inline MembershipRow fsom_step_prob(FsomState& state, std::span<const double> x) {
    if (state.mode != Mode::probabilistic) throw ConfigError("FSOM is not in probabilistic mode");
    detail::check_point(state, x);
    auto u = vf_memberships(x, state.model, state.alpha);
    detail::pull_prototypes(state, x, u, state.model.m());
    ++state.k;
    return u;
}

/// Possibilistic step. The first warmup_length points run the probabilistic
/// rule while accumulating statistics; afterwards memberships are
/// possibilistic and mu_j is the exact weighted scatter of the whole history
/// about the updated prototype. A point whose memberships are all below the
/// spawn threshold opens a new cluster at x.
inline StepResult fsom_step_poss(FsomState& state, std::span<const double> x) {
    if (state.mode != Mode::possibilistic || !state.poss)
        throw ConfigError("FSOM is not in possibilistic mode");
    detail::check_point(state, x);
    auto& poss = *state.poss;
    const double a = state.alpha.value();
    StepResult out;

    if (!poss.seeded) {
        out.warmup = true;
        out.memberships = vf_memberships(x, state.model, state.alpha);
        for (std::size_t j = 0; j < state.model.m(); ++j)
            poss.stats[j].add(x, blend_weight(out.memberships[j], a));
        detail::pull_prototypes(state, x, out.memberships, state.model.m());
        ++state.k;
        if (state.k >= poss.warmup_length) detail::seed_mu(poss, state.model);
        return out;
    }

    const std::size_t m = state.model.m();
    out.memberships = poss_memberships(x, PossModel{state.model, poss.mu}, state.alpha);
    const bool novel = std::all_of(out.memberships.begin(), out.memberships.end(),
                                   [&](double u) { return u < poss.spawn_threshold; });
    if (novel) {
        if (m < poss.m_max)
            out.spawned = m;
        else
            out.spawn_suppressed = true;
    }

    for (std::size_t j = 0; j < m; ++j) poss.stats[j].add(x, blend_weight(out.memberships[j], a));
    detail::pull_prototypes(state, x, out.memberships, m);
    for (std::size_t j = 0; j < m; ++j) detail::refresh_mu(poss, state.model, j);

    if (out.spawned) {
        const double mu_new = detail::mean_positive(poss.mu);
        FeatureVector c(x.begin(), x.end());
        const double u_new = poss_membership(0.0, mu_new, a);
        ClusterStats stats(c);
        stats.add(x, blend_weight(u_new, a));
        state.model.prototypes.push_back(std::move(c));
        poss.mu.push_back(mu_new);
        poss.stats.push_back(std::move(stats));
        out.memberships.push_back(u_new);
    }
    ++state.k;
    return out;
}

/// Memberships of x under the current state, without learning.
inline MembershipRow fsom_memberships(const FsomState& state, std::span<const double> x) {
    detail::check_point(state, x);
    if (state.mode == Mode::possibilistic && state.poss && state.poss->seeded)
        return poss_memberships(x, PossModel{state.model, state.poss->mu}, state.alpha);
    return vf_memberships(x, state.model, state.alpha);
}

inline StepResult fsom_step(FsomState& state, std::span<const double> x) {
    if (state.mode == Mode::possibilistic) return fsom_step_poss(state, x);
    StepResult out;
    out.memberships = fsom_step_prob(state, x);
    return out;
}

}  // namespace fuzzens
