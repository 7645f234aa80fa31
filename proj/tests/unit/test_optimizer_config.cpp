#include "splitgs/config.hpp"
#include "splitgs/optimizer.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace splitgs;
using splitgs::testing::uniform;

TEST(Adam, DefaultHyperparameters) {
    const AdamParams p;
    EXPECT_EQ(p.beta1, 0.9);
    EXPECT_EQ(p.beta2, 0.999);
    EXPECT_EQ(p.eps, 1e-15);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Adam<double> adam;
    std::vector<double> x{1.0, -2.0, 0.5, 3.0};
    const std::vector<double> g{0.3, -7.0, 1e-6, 0.0};
    adam.step("x", x, g, 0.01);
    EXPECT_NEAR(x[0], 0.99, 1e-12);
    EXPECT_NEAR(x[1], -1.99, 1e-12);
    EXPECT_NEAR(x[2], 0.49, 1e-9);
    EXPECT_EQ(x[3], 3.0);
}

TEST(Adam, MatchesReferenceRecurrence) {
    std::mt19937_64 rng(100);
    Adam<double> adam;
    const std::size_t n = 6;
    std::vector<double> x(n), ref(n), m(n, 0.0), v(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) ref[k] = x[k] = uniform(rng, -1, 1);
    for (int t = 1; t <= 50; ++t) {
        std::vector<double> g(n);
        for (auto& gi : g) gi = uniform(rng, -1, 1);
        adam.step("x", x, g, 0.05);
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = 0.9 * m[k] + 0.1 * g[k];
            v[k] = 0.999 * v[k] + 0.001 * g[k] * g[k];
            const double mh = m[k] / (1 - std::pow(0.9, t));
            const double vh = v[k] / (1 - std::pow(0.999, t));
            ref[k] -= 0.05 * mh / (std::sqrt(vh) + 1e-15);
        }
    }
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(x[k], ref[k], 1e-10);
}

TEST(Adam, GrowingArraysGetFreshMoments) {
    Adam<double> adam;
    std::vector<double> x{0.0, 0.0};
    adam.step("x", x, {1.0, 1.0}, 0.1);
    x.push_back(0.0);
    adam.step("x", x, {1.0, 1.0, 1.0}, 0.1);
    EXPECT_EQ(adam.slots().at("x").m.size(), 3u);
    EXPECT_NEAR(adam.slots().at("x").m[2], 0.1, 1e-15);
    EXPECT_NEAR(adam.slots().at("x").m[0], 0.19, 1e-15);
}

TEST(Adam, RemapRows) {
    Adam<double> adam;
    std::vector<double> x(6, 0.0);
    adam.step("x", x, {1, 2, 3, 4, 5, 6}, 0.1);
    adam.remap_rows("x", 2, {2, 0});
    const auto& m = adam.slots().at("x").m;
    ASSERT_EQ(m.size(), 4u);
    EXPECT_NEAR(m[0], 0.5, 1e-15);
    EXPECT_NEAR(m[1], 0.6, 1e-15);
    EXPECT_NEAR(m[2], 0.1, 1e-15);
    adam.remap_rows("missing", 2, {0}); // no-op
}

TEST(Adam, RemapRowsAddedSinceLastStepGetZeroMoments) {
    Adam<double> adam;
    std::vector<double> x(2, 0.0);
    adam.step("x", x, {1, 2}, 0.1);
    adam.remap_rows("x", 1, {1, 3, 0});
    const auto& m = adam.slots().at("x").m;
    ASSERT_EQ(m.size(), 3u);
    EXPECT_NEAR(m[0], 0.2, 1e-15);
    EXPECT_EQ(m[1], 0.0);
    EXPECT_NEAR(m[2], 0.1, 1e-15);
}

TEST(TrainConfig, Defaults) {
    const TrainConfig c;
    EXPECT_EQ(c.canonical_iters, 3000);
    EXPECT_EQ(c.dynamic_iters, 7000);
    EXPECT_EQ(c.lr_position, 1.6e-4);
    EXPECT_EQ(c.lr_rotation, 1e-3);
    EXPECT_EQ(c.lr_scale, 5e-3);
    EXPECT_EQ(c.lr_color, 2.5e-3);
    EXPECT_EQ(c.lr_opacity, 5e-2);
    EXPECT_EQ(c.lr_plane, 1.6e-2);
    EXPECT_EQ(c.lr_head, 1.6e-3);
    EXPECT_EQ(c.lambda_h, 0.1);
    EXPECT_EQ(c.lambda_omega, 1.0);
    EXPECT_EQ(c.canonical_densify_at, (std::vector<double>{0.4, 0.8}));
    EXPECT_EQ(c.dynamic_densify_events, 3);
    EXPECT_EQ(c.prune_threshold, 0.005);
    EXPECT_EQ(c.gradient_threshold, 2e-4);
    EXPECT_FALSE(c.prune);
    EXPECT_FALSE(c.unified_field || c.legacy_canonical || c.legacy_densify || c.legacy_opacity);
    EXPECT_EQ(c.field.spatial_resolution, 64);
    EXPECT_EQ(c.field.temporal_resolution, 32);
    EXPECT_EQ(c.field.features, 16);
    EXPECT_EQ(c.field.hidden, 64);
    EXPECT_EQ(c.opacity_model(), OpacityModel::Squared);
    EXPECT_NO_THROW(c.validate());
}

TEST(TrainConfig, SetAndApply) {
    TrainConfig c;
    c.set("dynamic_iters", "123");
    c.apply(" lr_plane = 0.5 ");
    c.apply("legacy_opacity=true");
    c.apply("loss_norm=l2");
    c.apply("canonical_densify_at=0.25,0.5,0.75");
    EXPECT_EQ(c.dynamic_iters, 123);
    EXPECT_EQ(c.lr_plane, 0.5);
    EXPECT_TRUE(c.legacy_opacity);
    EXPECT_EQ(c.opacity_model(), OpacityModel::Legacy);
    EXPECT_EQ(c.loss_norm, LossNorm::L2);
    EXPECT_EQ(c.canonical_densify_at, (std::vector<double>{0.25, 0.5, 0.75}));
}

TEST(TrainConfig, RejectsBadInput) {
    TrainConfig c;
    EXPECT_THROW(c.set("no_such_key", "1"), std::invalid_argument);
    EXPECT_THROW(c.set("dynamic_iters", "12x"), std::invalid_argument);
    EXPECT_THROW(c.set("lr_plane", "fast"), std::invalid_argument);
    EXPECT_THROW(c.set("prune", "maybe"), std::invalid_argument);
    EXPECT_THROW(c.set("loss_norm", "l3"), std::invalid_argument);
    EXPECT_THROW(c.apply("dynamic_iters"), std::invalid_argument);
    EXPECT_THROW(c.apply_file("/nonexistent/config.txt"), ParseError);
}

TEST(TrainConfig, Validate) {
    TrainConfig c;
    c.lr_color = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.dynamic_iters = -1;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = TrainConfig{};
    c.canonical_densify_at = {1.5};
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(TrainConfig, TextRoundTrip) {
    TrainConfig a;
    a.seed = 42;
    a.lr_head = 1.0 / 3.0;
    a.unified_field = true;
    a.field.features = 5;
    a.canonical_densify_at = {0.1};
    TrainConfig b;
    b.apply_text(a.to_text());
    EXPECT_EQ(b.to_text(), a.to_text());
    EXPECT_EQ(b.lr_head, a.lr_head);
    EXPECT_EQ(b.seed, 42u);
    EXPECT_EQ(b.field.features, 5);
}

TEST(TrainConfig, FileWithCommentsAndBlankLines) {
    splitgs::testing::TempDir dir;
    const std::string path = dir.file("train.cfg");
    std::ofstream(path) << "# schedule\n\ncanonical_iters = 10   # short\n  dynamic_iters=20\n";
    TrainConfig c;
    c.apply_file(path);
    EXPECT_EQ(c.canonical_iters, 10);
    EXPECT_EQ(c.dynamic_iters, 20);
}

TEST(TrainConfig, EveryKeyRoundTrips) {
    const TrainConfig defaults;
    for (const auto& [key, fns] : TrainConfig::keys()) {
        TrainConfig c;
        EXPECT_NO_THROW(c.set(key, fns.second(defaults))) << key;
        EXPECT_EQ(fns.second(c), fns.second(defaults)) << key;
    }
}
