#include <gtest/gtest.h>

#include <random>

#include "fuzzens/metrics.hpp"
#include "support/oracles.hpp"

using namespace fuzzens;

TEST(PartitionCoefficient, Examples) {
    EXPECT_EQ(partition_coefficient({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), 1.0);
    EXPECT_DOUBLE_EQ(partition_coefficient(PartitionMatrix(5, MembershipRow(4, 0.25))), 0.25);
    EXPECT_NEAR(partition_coefficient({{0.8, 0.2}, {0.6, 0.4}}), 0.6, 1e-15);
    EXPECT_THROW(partition_coefficient({}), InvalidInput);
}

TEST(ModifiedPartitionCoefficient, Examples) {
    EXPECT_DOUBLE_EQ(modified_partition_coefficient(PartitionMatrix(3, MembershipRow{0.5, 0.5}), 0.5),
                     0.75);
    for (double a : {0.1, 0.6, 1.0})
        EXPECT_EQ(modified_partition_coefficient({{0, 1}, {1, 0}}, a), 1.0);
    EXPECT_THROW(modified_partition_coefficient({}, 0.5), InvalidInput);
}

TEST(ModifiedPartitionCoefficient, AlphaOneIsPlainCoefficient) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> uni(0, 1);
    for (int t = 0; t < 100; ++t) {
        PartitionMatrix U;
        for (int k = 0; k < 40; ++k) {
            MembershipRow row(3);
            double s = 0.0;
            for (double& v : row) s += (v = uni(rng));
            for (double& v : row) v /= s;
            U.push_back(row);
        }
        EXPECT_EQ(modified_partition_coefficient(U, 1.0), partition_coefficient(U));
        const double a = uni(rng);
        EXPECT_NEAR(modified_partition_coefficient(U, a), oracle::batch_modified_pc(U, a), 1e-12);
        // blended score is alpha * PC + (1 - alpha) for probabilistic rows
        EXPECT_NEAR(modified_partition_coefficient(U, a), a * partition_coefficient(U) + 1 - a, 1e-12);
    }
}

TEST(CrispAssignments, Examples) {
    EXPECT_EQ(crisp_assignments({{0.8, 0.2}}), (std::vector<std::size_t>{0}));
    EXPECT_EQ(crisp_assignments({{0.5, 0.5}}), (std::vector<std::size_t>{0}));
    EXPECT_EQ(crisp_assignments({{0, 0, 1}, {0, 1, 0}, {1, 0, 0}}),
              (std::vector<std::size_t>{2, 1, 0}));
    EXPECT_EQ(crisp_assignments({{0.1, 0.45, 0.45}}), (std::vector<std::size_t>{1}));
}

TEST(PrototypeMatchError, Examples) {
    const ClusterModel a({{0, 0}, {10, 0}});
    EXPECT_EQ(prototype_match_error(a, a), 0.0);
    EXPECT_EQ(prototype_match_error(a, ClusterModel({{10, 0}, {0, 0}})), 0.0);
    const ClusterModel b({{0, 1}, {10, 0}});
    EXPECT_EQ(prototype_match_error(a, b), 1.0);
    EXPECT_EQ(prototype_match_error(b, a), 1.0);
    EXPECT_THROW(prototype_match_error(a, ClusterModel({{0, 0}, {1, 1}, {2, 2}})), InvalidInput);
}

TEST(PrototypeMatchError, SymmetricOnRandomModels) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-5, 5);
    for (int t = 0; t < 200; ++t) {
        std::vector<FeatureVector> pa, pb;
        for (int j = 0; j < 4; ++j) {
            pa.push_back({uni(rng), uni(rng)});
            pb.push_back({uni(rng), uni(rng)});
        }
        const ClusterModel a(pa), b(pb);
        EXPECT_EQ(prototype_match_error(a, b), prototype_match_error(b, a));
        EXPECT_GE(prototype_match_error(a, b), 0.0);
    }
}

TEST(MatchedAccuracy, RelabelingIsAbsorbed) {
    const std::vector<std::size_t> truth{0, 0, 1, 1, 2, 2};
    EXPECT_EQ(matched_accuracy(std::vector<std::size_t>{2, 2, 0, 0, 1, 1}, truth), 1.0);
    EXPECT_NEAR(matched_accuracy(std::vector<std::size_t>{2, 2, 0, 1, 1, 1}, truth), 5.0 / 6.0, 1e-15);
    EXPECT_THROW(matched_accuracy(std::vector<std::size_t>{0}, truth), InvalidInput);
}

TEST(MatchedAccuracy, ManyLabelsUseGreedyMatching) {
    std::vector<std::size_t> truth, pred;
    for (std::size_t k = 0; k < 120; ++k) {
        truth.push_back(k % 12);
        pred.push_back((k % 12 + 5) % 12);
    }
    EXPECT_EQ(matched_accuracy(pred, truth), 1.0);
}

TEST(EvaluatePartition, CombinesMetrics) {
    const auto report = evaluate_partition({{0.8, 0.2}, {0.6, 0.4}}, 1.0);
    EXPECT_NEAR(report.pc, 0.6, 1e-15);
    EXPECT_EQ(report.pc, report.modified_pc);
    EXPECT_EQ(report.crisp_labels, (std::vector<std::size_t>{0, 0}));
}
