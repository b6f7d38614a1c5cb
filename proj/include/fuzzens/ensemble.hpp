#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <future>
#include <span>
#include <vector>

#include "batch.hpp"
#include "core.hpp"
#include "online.hpp"

namespace fuzzens {

/// Running modified partition coefficient
///   PC(k) = (1/k) sum_tau sum_j (alpha u_j^2(tau) + (1 - alpha) u_j(tau)),
/// updated as mean += (score - mean) / count. With window > 0 the mean is
/// taken over the last `window` scores only (for drifting streams).
struct PcAccumulator {
    std::uint64_t count = 0;
    double mean = 0.0;
    std::size_t window = 0;
    std::deque<double> recent;

    void add(double score) {
        ++count;
        if (window == 0) {
            mean += (score - mean) / static_cast<double>(count);
            return;
        }
        recent.push_back(score);
        if (recent.size() > window) recent.pop_front();
        double total = 0.0;
        for (double s : recent) total += s;
        mean = total / static_cast<double>(recent.size());
    }

    friend bool operator==(const PcAccumulator&, const PcAccumulator&) = default;
};

inline double blended_row_score(std::span<const double> row, double alpha) {
    double s = 0.0;
    for (double u : row) s += blend_weight(u, alpha);
    return s;
}

inline PcAccumulator modified_pc_update(PcAccumulator acc, std::span<const double> row,
                                        double alpha) {
    acc.add(blended_row_score(row, alpha));
    return acc;
}

inline std::vector<BlendParam> default_alpha_grid() {
    std::vector<BlendParam> grid;
    for (int i = 1; i <= 10; ++i) grid.emplace_back(i / 10.0);
    return grid;
}

struct EnsembleConfig {
    std::vector<BlendParam> alpha_grid = default_alpha_grid();
    std::size_t m = 3;
    Mode mode = Mode::probabilistic;
    LearningRateSchedule schedule;
    std::uint64_t seed = 0;
    PossOptions poss;
    // 0 scores the whole stream.
    std::size_t pc_window = 0;
    bool parallel = false;

    void validate() const {
        if (alpha_grid.empty()) throw ConfigError("alpha grid is empty");
        for (std::size_t p = 1; p < alpha_grid.size(); ++p)
            if (!(alpha_grid[p - 1] < alpha_grid[p]))
                throw ConfigError("alpha grid must be strictly increasing");
        if (m < 2) throw ConfigError("cluster count m must be at least 2");
        schedule.validate();
    }
};

struct EnsembleState {
    std::vector<FsomState> members;
    std::vector<PcAccumulator> pcs;
    bool parallel = false;

    std::size_t size() const noexcept { return members.size(); }

    friend bool operator==(const EnsembleState& a, const EnsembleState& b) {
        return a.members == b.members && a.pcs == b.pcs;
    }
};

struct MemberOutput {
    StepResult step;
    double pc = 0.0;
};

struct EnsembleOutput {
    std::size_t winner_index = 0;
    BlendParam winner_alpha;
    MembershipRow winner_memberships;
    std::vector<MemberOutput> per_member;
};

/// Largest PC wins; exact ties go to the larger alpha.
inline std::size_t select_winner(std::span<const double> pcs, std::span<const BlendParam> alphas) {
    std::size_t best = 0;
    for (std::size_t p = 1; p < pcs.size(); ++p) {
        if (pcs[p] > pcs[best] || (pcs[p] == pcs[best] && alphas[p] > alphas[best])) best = p;
    }
    return best;
}

inline EnsembleState make_ensemble(std::vector<FsomState> members, std::size_t pc_window = 0,
                                   bool parallel = false) {
    if (members.empty()) throw ConfigError("ensemble needs at least one member");
    const auto dim = members.front().model.dim;
    for (const auto& s : members)
        if (s.model.dim != dim) throw DimensionError(dim, s.model.dim);
    EnsembleState state;
    state.pcs.assign(members.size(), PcAccumulator{});
    for (auto& acc : state.pcs) acc.window = pc_window;
    state.members = std::move(members);
    state.parallel = parallel;
    return state;
}

/// Every member starts from the same k-means++ prototypes drawn from the
/// warm-up points, so members differ only in alpha.
inline EnsembleState ensemble_init(const EnsembleConfig& config,
                                   std::span<const FeatureVector> warmup) {
    config.validate();
    if (warmup.size() < config.m)
        throw InvalidInput("warm-up needs at least m = " + std::to_string(config.m) + " points");
    const auto init = kmeanspp_seed(warmup, config.m, config.seed);
    std::vector<FsomState> members;
    members.reserve(config.alpha_grid.size());
    for (auto alpha : config.alpha_grid)
        members.push_back(make_fsom(init, alpha, config.schedule, config.mode, config.poss));
    return make_ensemble(std::move(members), config.pc_window, config.parallel);
}

/// Steps every member on x and picks the winner. The state is only
/// modified when all members succeed.
inline EnsembleOutput ensemble_step(EnsembleState& state, std::span<const double> x) {
    const std::size_t q = state.size();
    std::vector<FsomState> next = state.members;
    std::vector<StepResult> steps(q);
    if (state.parallel && q > 1) {
        std::vector<std::future<StepResult>> futures;
        futures.reserve(q);
        for (std::size_t p = 0; p < q; ++p)
            futures.push_back(std::async(std::launch::async,
                                         [&next, x, p] { return fsom_step(next[p], x); }));
        for (std::size_t p = 0; p < q; ++p) steps[p] = futures[p].get();
    } else {
        for (std::size_t p = 0; p < q; ++p) steps[p] = fsom_step(next[p], x);
    }

    std::vector<PcAccumulator> pcs = state.pcs;
    std::vector<double> values(q);
    std::vector<BlendParam> alphas(q);
    for (std::size_t p = 0; p < q; ++p) {
        pcs[p].add(blended_row_score(steps[p].memberships, next[p].alpha.value()));
        values[p] = pcs[p].mean;
        alphas[p] = next[p].alpha;
    }

    EnsembleOutput out;
    out.winner_index = select_winner(values, alphas);
    out.winner_alpha = alphas[out.winner_index];
    out.winner_memberships = steps[out.winner_index].memberships;
    out.per_member.reserve(q);
    for (std::size_t p = 0; p < q; ++p) out.per_member.push_back({std::move(steps[p]), values[p]});

    state.members = std::move(next);
    state.pcs = std::move(pcs);
    return out;
}

}  // namespace fuzzens
