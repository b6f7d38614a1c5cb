#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fuzzens/ensemble.hpp"
#include "support/data.hpp"
#include "support/oracles.hpp"

using namespace fuzzens;

namespace {

std::vector<FsomState> members_for(const std::vector<double>& alphas, const ClusterModel& init) {
    std::vector<FsomState> out;
    for (double a : alphas) out.push_back(make_fsom(init, BlendParam(a), LearningRateSchedule{}));
    return out;
}

const ClusterModel kThree({{1, 1}, {7, 1}, {4, 6}});

}  // namespace

TEST(ModifiedPc, CrispRowsScoreOne) {
    for (double a : {0.1, 0.5, 1.0}) {
        PcAccumulator acc;
        for (int t = 0; t < 10; ++t) {
            const MembershipRow row = t % 2 ? MembershipRow{1, 0, 0} : MembershipRow{0, 0, 1};
            acc = modified_pc_update(acc, row, a);
        }
        EXPECT_DOUBLE_EQ(acc.mean, 1.0);
    }
}

TEST(ModifiedPc, UniformRowsScoreOneOverM) {
    PcAccumulator acc;
    for (int t = 0; t < 25; ++t) acc = modified_pc_update(acc, MembershipRow(4, 0.25), 1.0);
    EXPECT_DOUBLE_EQ(acc.mean, 0.25);
}

TEST(ModifiedPc, HandExample) {
    PcAccumulator acc;
    acc = modified_pc_update(acc, MembershipRow{0.8, 0.2}, 1.0);
    acc = modified_pc_update(acc, MembershipRow{0.6, 0.4}, 1.0);
    EXPECT_NEAR(acc.mean, 0.6, 1e-15);
    EXPECT_EQ(acc.count, 2u);
}

TEST(ModifiedPc, RecursiveEqualsBatch) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uni(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const double a = 0.05 + 0.95 * uni(rng);
        const std::size_t m = 2 + trial % 4;
        PcAccumulator acc;
        oracle::Mat rows;
        for (int t = 0; t < 500; ++t) {
            MembershipRow row(m);
            double s = 0.0;
            for (double& v : row) s += (v = uni(rng));
            for (double& v : row) v /= s;
            rows.push_back(row);
            acc = modified_pc_update(acc, row, a);
        }
        const double direct = oracle::batch_modified_pc(rows, a);
        EXPECT_NEAR(acc.mean, direct, 1e-12 * direct);
        // probabilistic bound: alpha/m + 1 - alpha <= PC <= 1
        EXPECT_GE(acc.mean, a / static_cast<double>(m) + 1.0 - a - 1e-12);
        EXPECT_LE(acc.mean, 1.0 + 1e-12);
    }
}

TEST(ModifiedPc, WindowKeepsRecentScores) {
    PcAccumulator acc;
    acc.window = 2;
    acc.add(1.0);
    acc.add(0.5);
    acc.add(0.7);
    EXPECT_NEAR(acc.mean, 0.6, 1e-15);
    EXPECT_EQ(acc.count, 3u);
}

TEST(SelectWinner, Argmax) {
    const std::vector<double> pcs{0.40, 0.70, 0.55};
    const std::vector<BlendParam> alphas{BlendParam(0.2), BlendParam(0.5), BlendParam(0.8)};
    EXPECT_EQ(select_winner(pcs, alphas), 1u);
}

TEST(SelectWinner, TieGoesToLargerAlpha) {
    const std::vector<double> pcs{0.6, 0.6};
    EXPECT_EQ(select_winner(pcs, std::vector<BlendParam>{BlendParam(0.3), BlendParam(0.9)}), 1u);
    EXPECT_EQ(select_winner(pcs, std::vector<BlendParam>{BlendParam(0.9), BlendParam(0.3)}), 0u);
}

TEST(EnsembleStep, SingleMemberAlwaysWins) {
    auto state = make_ensemble(members_for({0.4}, kThree));
    const auto blobs = testdata::gaussian_blobs(testdata::three_blob_means(), 1.0, 100, 2);
    for (const auto& x : blobs.points) EXPECT_EQ(ensemble_step(state, x).winner_index, 0u);
}

TEST(EnsembleStep, WinnerMaximizesPc) {
    auto state = make_ensemble(members_for({0.1, 0.3, 0.6, 1.0}, kThree));
    const auto blobs = testdata::gaussian_blobs(testdata::three_blob_means(), 1.5, 300, 5);
    for (const auto& x : blobs.points) {
        const auto out = ensemble_step(state, x);
        for (const auto& mo : out.per_member) EXPECT_LE(mo.pc, out.per_member[out.winner_index].pc);
        EXPECT_EQ(out.winner_alpha, state.members[out.winner_index].alpha);
        EXPECT_EQ(out.winner_memberships, out.per_member[out.winner_index].step.memberships);
    }
}

TEST(EnsembleStep, PermutingMembersPermutesOutputs) {
    const std::vector<double> alphas{0.2, 0.5, 0.9};
    const std::vector<double> shuffled{0.9, 0.2, 0.5};
    auto a = make_ensemble(members_for(alphas, kThree));
    auto b = make_ensemble(members_for(shuffled, kThree));
    const auto blobs = testdata::gaussian_blobs(testdata::three_blob_means(), 1.2, 200, 8);
    for (const auto& x : blobs.points) {
        const auto oa = ensemble_step(a, x);
        const auto ob = ensemble_step(b, x);
        EXPECT_EQ(oa.winner_alpha, ob.winner_alpha);
        for (std::size_t p = 0; p < 3; ++p) {
            const auto it = std::find(alphas.begin(), alphas.end(), shuffled[p]);
            const auto& ma = oa.per_member[static_cast<std::size_t>(it - alphas.begin())];
            EXPECT_EQ(ma.step.memberships, ob.per_member[p].step.memberships);
            EXPECT_EQ(ma.pc, ob.per_member[p].pc);
        }
    }
}

TEST(EnsembleStep, FailureLeavesStateUntouched) {
    auto members = members_for({0.3, 0.7}, kThree);
    // last member claims possibilistic mode without its state: its step throws
    auto broken = make_fsom(kThree, BlendParam(0.9), LearningRateSchedule{});
    broken.mode = Mode::possibilistic;
    members.push_back(broken);
    auto state = make_ensemble(std::move(members));
    const auto before = state;
    EXPECT_THROW(ensemble_step(state, FeatureVector{1.0, 2.0}), ConfigError);
    EXPECT_EQ(state, before);
    EXPECT_THROW(ensemble_step(state, FeatureVector{1.0}), DimensionError);
    EXPECT_EQ(state, before);
}

TEST(EnsembleStep, ParallelMatchesSequential) {
    for (Mode mode : {Mode::probabilistic, Mode::possibilistic}) {
        EnsembleConfig cfg;
        cfg.mode = mode;
        cfg.seed = 3;
        const auto blobs = testdata::gaussian_blobs(testdata::three_blob_means(), 1.0, 400, 6);
        std::vector<FeatureVector> warm(blobs.points.begin(), blobs.points.begin() + 30);
        auto seq = ensemble_init(cfg, warm);
        cfg.parallel = true;
        auto par = ensemble_init(cfg, warm);
        for (const auto& x : blobs.points) {
            const auto a = ensemble_step(seq, x);
            const auto b = ensemble_step(par, x);
            ASSERT_EQ(a.winner_index, b.winner_index);
            ASSERT_EQ(a.winner_memberships, b.winner_memberships);
        }
        EXPECT_EQ(seq, par);
    }
}

TEST(EnsembleInit, SharedPrototypesFromDistinctWarmup) {
    EnsembleConfig cfg;
    const std::vector<FeatureVector> warm{{0, 0}, {5, 1}, {2, 9}};
    const auto state = ensemble_init(cfg, warm);
    EXPECT_EQ(state.size(), 10u);
    for (const auto& member : state.members) {
        EXPECT_EQ(member.model, state.members.front().model);
        for (const auto& p : warm)
            EXPECT_NE(std::find(member.model.prototypes.begin(), member.model.prototypes.end(), p),
                      member.model.prototypes.end());
    }
    for (const auto& acc : state.pcs) EXPECT_EQ(acc.count, 0u);
}

TEST(EnsembleInit, SameSeedSameState) {
    EnsembleConfig cfg;
    cfg.seed = 99;
    const auto blobs = testdata::gaussian_blobs(testdata::three_blob_means(), 1.0, 60, 1);
    EXPECT_EQ(ensemble_init(cfg, blobs.points), ensemble_init(cfg, blobs.points));
}

TEST(EnsembleInit, Errors) {
    EnsembleConfig cfg;
    const std::vector<FeatureVector> dup(20, FeatureVector{1.0, 1.0});
    EXPECT_THROW(ensemble_init(cfg, dup), DegenerateError);
    const std::vector<FeatureVector> few{{0, 0}, {1, 1}};
    EXPECT_THROW(ensemble_init(cfg, few), InvalidInput);
    cfg.alpha_grid = {BlendParam(0.5), BlendParam(0.5)};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.alpha_grid = {BlendParam(0.7), BlendParam(0.2)};
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(DefaultAlphaGrid, TenStepsToOne) {
    const auto grid = default_alpha_grid();
    ASSERT_EQ(grid.size(), 10u);
    EXPECT_EQ(grid.front().value(), 0.1);
    EXPECT_EQ(grid.back().value(), 1.0);
}
