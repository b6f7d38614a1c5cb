#include <gtest/gtest.h>

#include <random>

#include "fuzzens/core.hpp"
#include "fuzzens/random.hpp"

using namespace fuzzens;

TEST(DistanceSq, Examples) {
    EXPECT_EQ(distance_sq(FeatureVector{0, 0}, FeatureVector{0, 0}), 0.0);
    EXPECT_EQ(distance_sq(FeatureVector{1, 0}, FeatureVector{0, 0}), 1.0);
    EXPECT_EQ(distance_sq(FeatureVector{1, 2}, FeatureVector{4, 6}), 25.0);
}

TEST(DistanceSq, DimensionMismatchNamesBothLengths) {
    try {
        distance_sq(FeatureVector{1, 2, 3}, FeatureVector{1, 2});
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        EXPECT_EQ(e.expected(), 2u);
        EXPECT_EQ(e.actual(), 3u);
        EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
        EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
    }
}

TEST(DistanceSq, SymmetricNonnegativeZeroOnlyOnEquality) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-5, 5);
    for (int t = 0; t < 500; ++t) {
        FeatureVector a(4), b(4);
        for (auto& v : a) v = uni(rng);
        for (auto& v : b) v = uni(rng);
        EXPECT_EQ(distance_sq(a, b), distance_sq(b, a));
        EXPECT_GT(distance_sq(a, b), 0.0);
        EXPECT_EQ(distance_sq(a, a), 0.0);
    }
}

TEST(BlendWeight, Examples) {
    for (double a : {0.1, 0.5, 1.0}) {
        EXPECT_EQ(blend_weight(1.0, a), 1.0);
        EXPECT_EQ(blend_weight(0.0, a), 0.0);
    }
    EXPECT_DOUBLE_EQ(blend_weight(0.5, 0.5), 0.375);
}

TEST(BlendWeight, LimitCasesAndEnvelope) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(0, 1);
    for (int t = 0; t < 2000; ++t) {
        const double u = uni(rng);
        const double a = 1.0 - uni(rng);  // (0, 1]
        EXPECT_EQ(blend_weight(u, 0.0), u);
        EXPECT_EQ(blend_weight(u, 1.0), u * u);
        const double w = blend_weight(u, a);
        EXPECT_LE(u * u, w + 1e-15);
        EXPECT_LE(w, u + 1e-15);
        EXPECT_LE(blend_weight(u * 0.9, a), w);
    }
}

TEST(BlendParam, RejectsOutOfRange) {
    EXPECT_THROW(BlendParam(0.0), ConfigError);
    EXPECT_THROW(BlendParam(-0.1), ConfigError);
    EXPECT_THROW(BlendParam(1.0000001), ConfigError);
    EXPECT_NO_THROW(BlendParam(1.0));
    EXPECT_NO_THROW(BlendParam(1e-6));
}

TEST(BatchConfig, RejectsFuzzifierAtOne) {
    BatchConfig c;
    c.fuzzifier = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.fuzzifier = 1.5;
    EXPECT_NO_THROW(c.validate());
    c.tol = 0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ClusterModel, PrototypesMustShareDimension) {
    EXPECT_THROW(ClusterModel({{0, 0}, {1, 2, 3}}), DimensionError);
    ClusterModel ok({{0, 0}, {1, 2}});
    EXPECT_EQ(ok.m(), 2u);
    EXPECT_EQ(ok.dim, 2u);
}

TEST(Rng, DeterministicAndInRange) {
    Rng a(5), b(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        EXPECT_EQ(u, b.uniform());
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
    Rng c(9);
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double z = c.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.05);
    EXPECT_NEAR(sq / n, 1.0, 0.05);
}

TEST(Rng, CategoricalSkipsZeroWeights) {
    Rng r(1);
    const std::vector<double> w{0.0, 2.0, 0.0};
    for (int i = 0; i < 200; ++i) EXPECT_EQ(r.categorical(w), 1u);
}
