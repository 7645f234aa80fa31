#include "splitgs/rasterizer.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <omp.h>

#include <numeric>

using namespace splitgs;
using splitgs::testing::uniform;

namespace {

/// Identity-pose camera whose principal point is the centre pixel.
Camera axis_camera(int size = 9, double f = 10.0) {
    Camera cam;
    cam.width = cam.height = size;
    cam.fx = cam.fy = f;
    cam.cx = cam.cy = 0.5 * (size - 1);
    return cam;
}

Gaussians<double> one_splat(Vec3<double> x, double log_scale, Vec3<double> color, double h) {
    Gaussians<double> g = Gaussians<double>::zeros(1);
    for (int k = 0; k < 3; ++k) {
        g.position[k] = x[k];
        g.log_scale[k] = log_scale;
        g.color[k] = color[k];
    }
    g.rotation[0] = 1.0;
    g.peak_opacity[0] = h;
    g.temporal_center[0] = 0.5;
    return g;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

RenderSettings exact_settings() {
    RenderSettings s;
    s.alpha_cutoff = 1e-12;
    s.min_transmittance = 0.0;
    return s;
}

} // namespace

TEST(Render, EmptySetIsBlack) {
    const Camera cam = axis_camera();
    const auto out = render(Gaussians<double>::zeros(0), cam, 0.3);
    for (double v : out.rgb.data) EXPECT_EQ(v, 0.0);
    for (double v : out.alpha.data) EXPECT_EQ(v, 0.0);
    const auto ref = render_reference(Gaussians<double>::zeros(0), cam, 0.3);
    for (double v : ref.rgb.data) EXPECT_EQ(v, 0.0);
    for (double v : ref.alpha.data) EXPECT_EQ(v, 0.0);
}

TEST(Render, SingleOpaqueSplatIsClamped) {
    const Camera cam = axis_camera();
    const auto out = render(one_splat({0, 0, 2}, -3.0, {1, 0, 0}, 1.0), cam, 0.5);
    EXPECT_DOUBLE_EQ(out.rgb.at(4, 4, 0), 0.99);
    EXPECT_DOUBLE_EQ(out.rgb.at(4, 4, 1), 0.0);
    EXPECT_DOUBLE_EQ(out.rgb.at(4, 4, 2), 0.0);
    EXPECT_DOUBLE_EQ(out.alpha.at(4, 4), 0.99);
}

TEST(Render, TwoCoincidentSplats) {
    const Camera cam = axis_camera();
    Gaussians<double> g = one_splat({0, 0, 2}, -3.0, {1, 1, 1}, 0.5);
    g.append(one_splat({0, 0, 3}, -3.0, {0, 0, 0}, 0.5));
    const auto out = render(g, cam, 0.5);
    for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(out.rgb.at(4, 4, c), 0.5);
    EXPECT_DOUBLE_EQ(out.alpha.at(4, 4), 0.75);
    // Listing the back splat first does not change the depth order.
    Gaussians<double> swapped = one_splat({0, 0, 3}, -3.0, {0, 0, 0}, 0.5);
    swapped.append(one_splat({0, 0, 2}, -3.0, {1, 1, 1}, 0.5));
    EXPECT_EQ(render(swapped, cam, 0.5).rgb.data, out.rgb.data);
}

TEST(Render, OpaqueSplatCoveringTheFrameIsUniform) {
    const Camera cam = axis_camera();
    const Gaussians<double> g = one_splat({0, 0, 2}, std::log(100.0), {0.2, 0.4, 0.6}, 1.0);
    const auto out = render(g, cam, 0.1);
    const auto ref = render_reference(g, cam, 0.1);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x)
            for (int c = 0; c < 3; ++c) {
                EXPECT_NEAR(out.rgb.at(y, x, c), 0.99 * g.color[c], 1e-15);
                EXPECT_NEAR(ref.rgb.at(y, x, c), 0.99 * g.color[c], 1e-15);
            }
}

TEST(Render, SplatBehindTheCameraIsSkipped) {
    const Camera cam = axis_camera();
    const auto out = render(one_splat({0, 0, -2}, 0.0, {1, 1, 1}, 1.0), cam, 0.5);
    for (double v : out.alpha.data) EXPECT_EQ(v, 0.0);
}

TEST(Render, AlphaInUnitIntervalAndRgbFinite) {
    std::mt19937_64 rng(20);
    splitgs::testing::SceneOptions opt;
    opt.h_lo = 0.0;
    opt.h_hi = 1.0;
    opt.log_scale_lo = -3.0;
    opt.log_scale_hi = 0.5;
    for (int trial = 0; trial < 20; ++trial) {
        const Camera cam = splitgs::testing::random_camera(rng, 32, 24);
        const auto out = render(splitgs::testing::random_gaussians<double>(rng, 40, opt), cam, uniform(rng, 0, 1));
        for (double a : out.alpha.data) {
            EXPECT_GE(a, 0.0);
            EXPECT_LE(a, 1.0);
        }
        for (double v : out.rgb.data) EXPECT_TRUE(std::isfinite(v));
    }
}

// Tiled, early-terminating render against the untiled double-precision oracle.
TEST(Render, MatchesReferenceOnRandomScenes) {
    std::mt19937_64 rng(21);
    splitgs::testing::SceneOptions opt;
    opt.h_lo = 0.05;
    opt.h_hi = 1.0;
    opt.log_scale_lo = -3.0;
    opt.log_scale_hi = -0.5;
    double worst_default = 0.0, worst_exact = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int W = 8 + static_cast<int>(rng() % 25);
        const int H = 8 + static_cast<int>(rng() % 25);
        const Camera cam = splitgs::testing::random_camera(rng, W, H);
        const auto g = splitgs::testing::random_gaussians<double>(rng, 1 + rng() % 20, opt);
        const double t = uniform(rng, 0, 1);
        const auto ref = render_reference(g, cam, t);
        const auto out = render(g, cam, t);
        worst_default = std::max({worst_default, max_abs_diff(out.rgb.data, ref.rgb.data),
                                  max_abs_diff(out.alpha.data, ref.alpha.data)});
        const auto exact = render(g, cam, t, exact_settings());
        worst_exact = std::max({worst_exact, max_abs_diff(exact.rgb.data, ref.rgb.data),
                                max_abs_diff(exact.alpha.data, ref.alpha.data)});
    }
    EXPECT_LT(worst_default, 1e-4);
    EXPECT_LT(worst_exact, 1e-5);
}

TEST(Render, FloatRenderMatchesReference) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const Camera cam = splitgs::testing::random_camera(rng, 32, 32);
        const auto gd = splitgs::testing::random_gaussians<double>(rng, 20);
        Gaussians<float> gf;
        auto cv = [](const std::vector<double>& v) { return std::vector<float>(v.begin(), v.end()); };
        gf.position = cv(gd.position);
        gf.rotation = cv(gd.rotation);
        gf.log_scale = cv(gd.log_scale);
        gf.color = cv(gd.color);
        gf.peak_opacity = cv(gd.peak_opacity);
        gf.bandwidth = cv(gd.bandwidth);
        gf.temporal_center = cv(gd.temporal_center);
        const auto out = render(gf, cam, 0.25f);
        const auto ref = render_reference(gf, cam, 0.25);
        for (std::size_t k = 0; k < out.rgb.data.size(); ++k) EXPECT_NEAR(out.rgb.data[k], ref.rgb.data[k], 1e-4);
    }
}

TEST(Render, PermutationInvariant) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Camera cam = splitgs::testing::random_camera(rng, 24, 24);
        const std::size_t n = 15;
        const auto g = splitgs::testing::random_gaussians<double>(rng, n);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Gaussians<double> p;
        for (std::size_t i : perm) p.append(g.slice(i, 1));
        const auto a = render(g, cam, 0.5);
        const auto b = render(p, cam, 0.5);
        EXPECT_EQ(a.rgb.data, b.rgb.data);
        EXPECT_EQ(a.alpha.data, b.alpha.data);
    }
}

TEST(Render, DepthTiesBrokenByIndex) {
    std::vector<Splat2D<double>> s(3);
    for (auto& x : s) x.valid = true;
    s[0].depth = 2.0;
    s[1].depth = 1.0;
    s[2].depth = 2.0;
    EXPECT_EQ(depth_order(s), (std::vector<std::uint32_t>{1, 0, 2}));
}

TEST(Render, AlphaMonotoneInPeakOpacity) {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 50; ++trial) {
        const Camera cam = splitgs::testing::random_camera(rng, 24, 24);
        auto g = splitgs::testing::random_gaussians<double>(rng, 12);
        const double t = uniform(rng, 0, 1);
        const std::size_t i = rng() % g.size();
        const auto before = render(g, cam, t, exact_settings());
        const auto before_default = render(g, cam, t);
        g.peak_opacity[i] = std::min(1.0, g.peak_opacity[i] + uniform(rng, 0.01, 0.5));
        const auto after = render(g, cam, t, exact_settings());
        const auto after_default = render(g, cam, t);
        for (std::size_t k = 0; k < before.alpha.data.size(); ++k) {
            EXPECT_GE(after.alpha.data[k], before.alpha.data[k] - 1e-15);
            // Early termination perturbs the tail by at most the transmittance floor.
            EXPECT_GE(after_default.alpha.data[k], before_default.alpha.data[k] - 1e-4);
        }
    }
}

TEST(RenderBackward, ZeroUpstreamGivesZeroGradients) {
    std::mt19937_64 rng(25);
    const Camera cam = splitgs::testing::random_camera(rng, 16, 16);
    const auto g = splitgs::testing::random_gaussians<double>(rng, 8);
    const auto out = render(g, cam, 0.5);
    const auto grads = render_backward(out, Image<double>(16, 16, 3), Image<double>(16, 16, 1));
    Gaussians<double> p = grads.params;
    p.for_each_array([](const char* name, std::vector<double>& v, std::size_t) {
        for (double x : v) EXPECT_EQ(x, 0.0) << name;
    });
}

TEST(RenderBackward, ShapesMatchAndMismatchThrows) {
    std::mt19937_64 rng(26);
    const Camera cam = splitgs::testing::random_camera(rng, 16, 12);
    const auto g = splitgs::testing::random_gaussians<double>(rng, 5);
    const auto out = render(g, cam, 0.5);
    const auto grads = render_backward(out, Image<double>(12, 16, 3, 1.0), Image<double>(12, 16, 1, 1.0));
    EXPECT_EQ(grads.params.position.size(), g.position.size());
    EXPECT_EQ(grads.params.rotation.size(), g.rotation.size());
    EXPECT_EQ(grads.params.temporal_center.size(), g.temporal_center.size());
    EXPECT_EQ(grads.screen_grad.size(), 2 * g.size());
    EXPECT_THROW(render_backward(out, Image<double>(16, 12, 3), Image<double>(12, 16, 1)), ShapeError);
    EXPECT_THROW(render_backward(out, Image<double>(12, 16, 3), Image<double>(12, 16, 3)), ShapeError);
}

TEST(RenderBackward, RedChannelGradientEqualsAlpha) {
    const Camera cam = axis_camera();
    const auto g = one_splat({0.05, -0.03, 2}, -2.0, {0.3, 0.6, 0.9}, 0.7);
    const auto out = render(g, cam, 0.5);
    Image<double> d_rgb(9, 9, 3);
    d_rgb.at(4, 5, 0) = 1.0;
    const auto grads = render_backward(out, d_rgb, Image<double>(9, 9, 1));
    EXPECT_NEAR(grads.params.color[0], out.alpha.at(4, 5), 1e-15);
    EXPECT_EQ(grads.params.color[1], 0.0);
}

TEST(RenderBackward, NonContributingGaussiansGetZeroGradient) {
    const Camera cam = axis_camera();
    Gaussians<double> g = one_splat({0, 0, 2}, -2.0, {0.3, 0.6, 0.9}, 0.7);
    g.append(one_splat({0, 0, -3}, -2.0, {0.3, 0.6, 0.9}, 0.7)); // behind the camera
    g.append(one_splat({50, 0, 2}, -2.0, {0.3, 0.6, 0.9}, 0.7)); // far off-screen
    const auto out = render(g, cam, 0.5);
    const auto grads = render_backward(out, Image<double>(9, 9, 3, 1.0), Image<double>(9, 9, 1, 1.0));
    for (std::size_t i = 1; i < 3; ++i) {
        Gaussians<double> row = grads.params.slice(i, 1);
        row.for_each_array([&](const char* name, std::vector<double>& v, std::size_t) {
            for (double x : v) EXPECT_EQ(x, 0.0) << name << " row " << i;
        });
    }
}

// Adjoint of the full render against central differences of a random linear image loss.
TEST(RenderBackward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(27);
    std::map<std::string, double> worst;
    int scenes = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const Camera cam = splitgs::testing::random_camera(rng, 8, 8, 0.5);
        auto g = splitgs::testing::random_gaussians<double>(rng, 1 + rng() % 5);
        const double t = uniform(rng, 0, 1);
        const Image<double> w_rgb = splitgs::testing::random_image(rng, 8, 8, 3);
        const Image<double> w_alpha = splitgs::testing::random_image(rng, 8, 8, 1);
        const RenderSettings settings = exact_settings();
        const auto out = render(g, cam, t, settings);
        if (*std::max_element(out.alpha.data.begin(), out.alpha.data.end()) < 1e-3) continue;
        ++scenes;
        const auto grads = render_backward(out, w_rgb, w_alpha);
        auto loss = [&] {
            const auto r = render(g, cam, t, settings);
            return splitgs::testing::weighted_sum(r.rgb, w_rgb) + splitgs::testing::weighted_sum(r.alpha, w_alpha);
        };
        Gaussians<double> analytic = grads.params;
        std::map<std::string, std::vector<double>*> an;
        analytic.for_each_array([&](const char* name, std::vector<double>& v, std::size_t) { an[name] = &v; });
        g.for_each_array([&](const char* name, std::vector<double>& v, std::size_t) {
            const auto fd = splitgs::testing::numeric_gradient(v, loss);
            const double err = splitgs::testing::relative_error(*an[name], fd, 1e-6);
            worst[name] = std::max(worst[name], err);
            EXPECT_LT(err, 1e-3) << name << " scene " << trial;
        });
    }
    EXPECT_GE(scenes, 20);
    for (const auto& [name, err] : worst) RecordProperty(name, std::to_string(err));
}

TEST(RenderBackward, IndependentOfThreadCount) {
    std::mt19937_64 rng(28);
    const Camera cam = splitgs::testing::random_camera(rng, 48, 40);
    const auto g = splitgs::testing::random_gaussians<float>(rng, 60);
    const Image<double> wd = splitgs::testing::random_image(rng, 40, 48, 3);
    const Image<float> w = wd.cast<float>();
    const Image<float> wa(40, 48, 1, 0.5f);
    const int keep = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto a = render(g, cam, 0.4f);
    const auto ga = render_backward(a, w, wa);
    omp_set_num_threads(3);
    const auto b = render(g, cam, 0.4f);
    const auto gb = render_backward(b, w, wa);
    omp_set_num_threads(keep);
    EXPECT_EQ(a.rgb.data, b.rgb.data);
    EXPECT_EQ(ga.params.position, gb.params.position);
    EXPECT_EQ(ga.params.rotation, gb.params.rotation);
    EXPECT_EQ(ga.params.peak_opacity, gb.params.peak_opacity);
}

TEST(SplatRadius, BoundsTheCutoff) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 200; ++trial) {
        Splat2D<double> s;
        Eigen::Matrix2d A;
        A << uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3);
        s.cov2d = A * A.transpose() + 0.3 * Eigen::Matrix2d::Identity();
        s.conic = conic_of(s.cov2d);
        s.opacity = uniform(rng, 1e-5, 1.0);
        const double r = splat_radius(s, 1e-6);
        for (int k = 0; k < 16; ++k) {
            const double ang = 2 * M_PI * k / 16;
            const double dx = (r + 1e-9) * std::cos(ang), dy = (r + 1e-9) * std::sin(ang);
            EXPECT_LE(s.opacity * splat_falloff(s.conic, dx, dy), 1e-6 * (1 + 1e-6));
        }
    }
    Splat2D<double> faint;
    faint.opacity = 1e-7;
    EXPECT_EQ(splat_radius(faint, 1e-6), 0.0);
}
