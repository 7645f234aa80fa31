// Acceptance runner: one PASS/FAIL line per criterion. Arguments select criteria by number.

#include "splitgs/densify.hpp"
#include "splitgs/losses.hpp"
#include "splitgs/rasterizer.hpp"
#include "splitgs/segmentation.hpp"
#include "splitgs/synth.hpp"
#include "splitgs/trainer.hpp"

#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace splitgs;
using splitgs::testing::uniform;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

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

/// Scene written to disk, loaded back, split by the t = 0 masks and resampled.
struct Prepared {
    splitgs::testing::TempDir dir{"acceptance"};
    LoadedScene scene;
    PointCloud fg, bg;

    Prepared(const SceneRecipe& r, std::uint64_t seed, std::size_t fg_target, std::size_t bg_target) {
        write_scene(make_scene(r, seed), dir.path());
        scene = load_scene(dir.path() / "cameras.json");
        std::vector<Camera> cams;
        std::vector<Mask> masks;
        for (const View& v : scene.canonical) {
            cams.push_back(*v.camera);
            masks.push_back(*v.mask);
        }
        const SplitResult s = split_point_cloud(load_point_cloud((dir.path() / "points.ply").string()), cams, masks);
        std::mt19937_64 rng(seed);
        fg = voxel_resample(s.foreground, fg_target, rng);
        bg = voxel_resample(s.background, bg_target, rng);
    }
};

double mean_masked_psnr(const std::vector<FrameMetrics>& m) {
    double acc = 0.0;
    int n = 0;
    for (const auto& f : m)
        if (!std::isnan(f.psnr_mask)) acc += f.psnr_mask, ++n;
    return n ? acc / n : std::numeric_limits<double>::quiet_NaN();
}

double mean_psnr(const std::vector<FrameMetrics>& m) {
    double acc = 0.0;
    for (const auto& f : m) acc += f.psnr;
    return acc / double(m.size());
}

/// Mean IoU at t = 0 over the canonical views and the held-out view.
double mean_iou_t0(const TrainState& s, const LoadedScene& scene) {
    double acc = 0.0;
    int n = 0;
    for (const View& v : scene.canonical) acc += segmentation_iou(s, *v.camera, *v.mask), ++n;
    for (const View& v : scene.test)
        if (v.time == 0.0 && v.mask) acc += segmentation_iou(s, *v.camera, *v.mask), ++n;
    return acc / n;
}

// ---------------------------------------------------------------------------

Verdict rasterizer_equivalence() {
    Verdict v;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1002);
    splitgs::testing::SceneOptions opt;
    opt.h_lo = 0.05;
    opt.h_hi = 1.0;
    opt.log_scale_lo = -3.0;
    opt.log_scale_hi = -0.5;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int W = 8 + static_cast<int>(rng() % 25);
        const int H = 8 + static_cast<int>(rng() % 25);
        const Camera cam = splitgs::testing::random_camera(rng, W, H);
        const auto g = splitgs::testing::random_gaussians<double>(rng, 1 + rng() % 20, opt);
        const double t = uniform(rng, 0, 1);
        const auto ref = render_reference(g, cam, t);
        const auto out = render(g, cam, t);
        worst = std::max({worst, max_abs_diff(out.rgb.data, ref.rgb.data), max_abs_diff(out.alpha.data, ref.alpha.data)});
    }
    const double secs = seconds_since(t0);
    v.detail << "max error " << worst << " over 100 scenes in " << secs << " s";
    v.check(worst < 1e-4, "max error < 1e-4");
    v.check(secs < 60.0, "runtime < 60 s");
    return v;
}

std::map<std::string, std::vector<double>*> arrays_of(DeformationField<double>& f) {
    std::map<std::string, std::vector<double>*> m;
    f.for_each_array([&](const std::string& name, std::vector<double>& a) { m[name] = &a; });
    return m;
}

FieldConfig micro_field() {
    FieldConfig cfg;
    cfg.spatial_resolution = 4;
    cfg.temporal_resolution = 3;
    cfg.features = 3;
    cfg.hidden = 5;
    cfg.temporal_noise = 0.0;
    return cfg;
}

Verdict gradient_suite() {
    Verdict v;
    std::map<std::string, double> worst;
    std::map<std::string, int*> scenes_of;
    int gaussian_scenes = 0, field_scenes = 0;

    // Gaussian parameters through the renderer.
    std::mt19937_64 rng(1003);
    for (int trial = 0; trial < 60 && gaussian_scenes < 25; ++trial) {
        const Camera cam = splitgs::testing::random_camera(rng, 8, 8, 0.5);
        auto g = splitgs::testing::random_gaussians<double>(rng, 1 + rng() % 5);
        const double t = uniform(rng, 0, 1);
        const Image<double> w = splitgs::testing::random_image(rng, 8, 8, 3);
        const Image<double> wa = splitgs::testing::random_image(rng, 8, 8, 1);
        const RenderSettings rs = exact_settings();
        const auto out = render(g, cam, t, rs);
        if (*std::max_element(out.alpha.data.begin(), out.alpha.data.end()) < 1e-3) continue;
        ++gaussian_scenes;
        Gaussians<double> analytic = render_backward(out, w, wa).params;
        std::map<std::string, std::vector<double>*> an;
        analytic.for_each_array([&](const char* name, std::vector<double>& a, std::size_t) { an[name] = &a; });
        auto loss = [&] {
            const auto r = render(g, cam, t, rs);
            return splitgs::testing::weighted_sum(r.rgb, w) + splitgs::testing::weighted_sum(r.alpha, wa);
        };
        g.for_each_array([&](const char* name, std::vector<double>& values, std::size_t) {
            const auto fd = splitgs::testing::numeric_gradient(values, loss);
            worst[name] = std::max(worst[name], splitgs::testing::relative_error(*an[name], fd, 1e-6));
            scenes_of[name] = &gaussian_scenes;
        });
    }

    // Plane values and decoder weights through deformation and rendering.
    for (int trial = 0; trial < 60 && field_scenes < 25; ++trial) {
        auto f = DeformationField<double>::create(Representation::Foreground, Vec3<double>(-1, -1, -1),
                                                  Vec3<double>(1, 1, 1), micro_field(), rng);
        for (auto& p : f.planes)
            for (auto& x : p.values) x = uniform(rng, 0.6, 1.4);
        for (auto& x : f.trunk_weight) x = uniform(rng, -1, 1);
        for (auto& x : f.trunk_bias) x = uniform(rng, -0.2, 0.5);
        for (auto& h : f.heads) {
            for (auto& x : h.weight) x = uniform(rng, -0.1, 0.1);
            for (auto& x : h.bias) x = uniform(rng, -0.05, 0.05);
        }
        const auto g = splitgs::testing::random_gaussians<double>(rng, 3);
        const Camera cam = splitgs::testing::random_camera(rng, 8, 8, 0.5);
        const double t = uniform(rng, 0, 1);
        const RenderSettings rs = exact_settings();
        const Image<double> w = splitgs::testing::random_image(rng, 8, 8, 3);
        const Image<double> wa = splitgs::testing::random_image(rng, 8, 8, 1);
        const auto out = render(deform(f, g, t), cam, t, rs);
        if (*std::max_element(out.alpha.data.begin(), out.alpha.data.end()) < 1e-3) continue;
        ++field_scenes;
        FieldGrads<double> fg;
        deform_backward(f, g, t, render_backward(out, w, wa).params, fg);
        auto loss = [&] {
            const auto r = render(deform(f, g, t), cam, t, rs);
            return splitgs::testing::weighted_sum(r.rgb, w) + splitgs::testing::weighted_sum(r.alpha, wa);
        };
        auto an = arrays_of(fg);
        for (auto& [name, values] : arrays_of(f)) {
            const std::string cls = name.rfind("plane_", 0) == 0 ? "planes" : name;
            const auto fd = splitgs::testing::numeric_gradient(*values, loss);
            worst[cls] = std::max(worst[cls], splitgs::testing::relative_error(*an[name], fd, 1e-8));
            scenes_of[cls] = &field_scenes;
        }
    }

    for (const auto& [name, err] : worst) {
        const int n = *scenes_of[name];
        v.detail << " " << name << "=" << err << "(" << n << ")";
        v.check(err < 1e-3, name + " rel error < 1e-3");
        v.check(n >= 20, name + " on >= 20 scenes");
    }
    return v;
}

Verdict identity_at_init() {
    Verdict v;
    std::mt19937_64 rng(1004);
    FieldConfig cfg;
    cfg.spatial_resolution = 8;
    cfg.temporal_resolution = 6;
    PointCloud fg_pc, bg_pc;
    for (int i = 0; i < 40; ++i) {
        fg_pc.push_back({uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5)},
                        {uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)});
        bg_pc.push_back({uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3)},
                        {uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)});
    }
    auto fg = GaussianSet<float>::from_point_cloud(fg_pc, Representation::Foreground);
    auto bg = GaussianSet<float>::from_point_cloud(bg_pc, Representation::Background);
    for (auto& o : fg.opacity_logit) o = 1.5f;
    for (auto& o : bg.opacity_logit) o = 1.0f;
    const auto [flo, fhi] = DeformationField<float>::bounds_of(fg.position);
    const auto [blo, bhi] = DeformationField<float>::bounds_of(bg.position);
    auto ffield = DeformationField<float>::create(Representation::Foreground, flo, fhi, cfg, rng);
    auto bfield = DeformationField<float>::create(Representation::Background, blo, bhi, cfg, rng);
    // Randomised planes and trunk, so only the zero heads make the field an identity.
    for (auto* f : {&ffield, &bfield}) {
        for (auto& p : f->planes)
            for (auto& x : p.values) x = float(uniform(rng, 0.5, 1.5));
        for (auto& x : f->trunk_weight) x = float(uniform(rng, -1, 1));
    }
    int exact = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const Camera cam = splitgs::testing::random_camera(rng, 48, 40);
        const float t = float(uniform(rng, 0, 1));
        Gaussians<float> canonical = bg.view();
        canonical.append(fg.view());
        Gaussians<float> deformed = deform(bfield, bg, t);
        deformed.append(deform(ffield, fg, t));
        const auto a = render(canonical, cam, t);
        const auto b = render(deformed, cam, t);
        if (a.rgb.data == b.rgb.data && a.alpha.data == b.alpha.data) ++exact;
    }
    v.detail << exact << "/10 renders bit-identical";
    v.check(exact == 10, "all 10 bit-identical");
    return v;
}

Verdict temporal_opacity_behaviour() {
    Verdict v;
    std::mt19937_64 rng(1005);
    double peak_err = 0.0, sym_err = 0.0, const_err = 0.0, legacy_err = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double h = uniform(rng, 0.01, 1.0), w = uniform(rng, -5, 5), mu = uniform(rng, 0, 1);
        const double d = uniform(rng, 0, 1);
        peak_err = std::max(peak_err, std::abs(temporal_opacity(h, w, mu, mu) - h));
        sym_err = std::max(sym_err, std::abs(temporal_opacity(h, w, mu, mu + d) - temporal_opacity(h, w, mu, mu - d)));
        const_err = std::max(const_err, std::abs(temporal_opacity(h, 0.0, mu, d) - h));
        const double dt = d - mu;
        legacy_err = std::max(legacy_err, std::abs(temporal_opacity(h, w, mu, d, OpacityModel::Legacy) -
                                                   h * std::exp(w * dt * dt)));
    }
    v.detail << "peak " << peak_err << ", symmetry " << sym_err << ", constant " << const_err << ", legacy form "
             << legacy_err;
    v.check(peak_err == 0.0, "sigma(mu) = h");
    v.check(sym_err <= 1e-12, "symmetric to 1e-12");
    v.check(const_err == 0.0, "omega = 0 is constant in time");
    v.check(legacy_err <= 1e-12, "legacy form h exp(w dt^2)");

    // Flame foreground rendered under both models, averaged over the held-out camera's frames.
    const SceneRecipe r = flame_recipe(0);
    const Camera cam = ring_cameras(r).back();
    RenderSettings legacy;
    legacy.opacity_model = OpacityModel::Legacy;
    double diff = 0.0;
    for (int f = 0; f < r.frames; ++f) {
        const double t = f / double(r.frames - 1);
        const Gaussians<double> g = foreground_at(r, t);
        const auto a = render(g, cam, t), b = render(g, cam, t, legacy);
        diff = std::max(diff, max_abs_diff(a.rgb.data, b.rgb.data));
    }
    v.detail << ", flame max pixel difference " << diff;
    v.check(diff > 0.05, "models differ on the flame recipe");
    return v;
}

Verdict regularizer_fixed_point() {
    Verdict v;
    std::mt19937_64 rng(1006);
    const std::size_t n = 50;
    const double lambda_h = 0.1, lambda_w = 1.0;
    std::vector<double> logit_h(n), w(n);
    for (auto& x : logit_h) x = logit(uniform(rng, 0.05, 0.95));
    for (auto& x : w) x = (rng() % 2 ? 1.0 : -1.0) * uniform(rng, 0.5, 3.0);
    auto stats = [&] {
        double mh = 0.0, mw = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mh += 1.0 - sigmoid(logit_h[i]);
            mw += std::abs(w[i]);
        }
        return std::pair{mh / n, mw / n};
    };
    const auto [h0, w0] = stats();
    double prev_h = h0, prev_w = w0;
    int monotone = 0;
    for (int step = 0; step < 100; ++step) {
        std::vector<double> h(n);
        for (std::size_t i = 0; i < n; ++i) h[i] = sigmoid(logit_h[i]);
        const auto r = opacity_regularizer(h, w, lambda_h, lambda_w);
        for (std::size_t i = 0; i < n; ++i) {
            logit_h[i] -= 50.0 * r.d_peak_opacity[i] * h[i] * (1.0 - h[i]);
            w[i] -= 0.1 * r.d_bandwidth[i];
        }
        const auto [mh, mw] = stats();
        if (mh < prev_h && mw < prev_w) ++monotone;
        prev_h = mh;
        prev_w = mw;
    }
    v.detail << "mean|1-h| " << h0 << " -> " << prev_h << ", mean|w| " << w0 << " -> " << prev_w << ", " << monotone
             << "/100 steps decrease both";
    v.check(monotone == 100, "monotone over 100 steps");
    v.check(prev_h < 0.9 * h0 && prev_w < w0 - 0.1, "both reduced");
    return v;
}

Verdict densification_accounting() {
    Verdict v;
    SceneRecipe r = orbit_recipe(7);
    r.width = r.height = 24;
    r.fx = 68.6 * 24.0 / 64.0;
    r.train_cameras = 3;
    r.frames = 4;
    const Prepared p(r, 7, 60, 60);
    int matched = 0, bg_constant = 0;
    for (unsigned nc = 0; nc <= 2; ++nc)
        for (unsigned nd = 0; nd <= 3; ++nd) {
            TrainConfig c;
            c.seed = 7;
            c.canonical_iters = 6;
            c.dynamic_iters = 8;
            c.field.spatial_resolution = 8;
            c.field.temporal_resolution = 4;
            c.field.features = 4;
            c.field.hidden = 8;
            c.canonical_densify_at.clear();
            for (unsigned k = 0; k < nc; ++k) c.canonical_densify_at.push_back(0.3 * (k + 1));
            c.dynamic_densify_events = static_cast<int>(nd);
            TrainState s = initialize_training(p.scene.cameras(), p.fg, p.bg, c);
            const std::size_t n0 = s.fg.size(), nb = s.bg.size();
            train_canonical(s, p.scene);
            const bool bg_after_canonical = s.bg.size() == nb;
            train_dynamic(s, p.scene);
            if (s.fg.size() == estimate_final_count(n0, nc, nd)) ++matched;
            if (bg_after_canonical && s.bg.size() == nb) ++bg_constant;
        }
    std::mt19937_64 rng(1007);
    int exact_quantile = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 10 + rng() % 1000;
        PointCloud pc;
        for (std::size_t i = 0; i < n; ++i) pc.push_back({uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)}, {0.5, 0.5, 0.5});
        auto g = GaussianSet<double>::from_point_cloud(pc, Representation::Foreground);
        std::vector<double> disp(n);
        for (auto& d : disp) d = std::floor(uniform(rng, 0, 20));
        const auto rows = densify_dynamic(g, disp, rng);
        const std::size_t k = static_cast<std::size_t>(std::ceil(0.1 * double(n)));
        const std::set<std::size_t> chosen(rows.begin(), rows.end());
        double min_chosen = 1e300, max_rest = -1e300;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen.count(i)) min_chosen = std::min(min_chosen, disp[i]);
            else max_rest = std::max(max_rest, disp[i]);
        }
        if (rows.size() == k && chosen.size() == k && g.size() == n + k && min_chosen >= max_rest) ++exact_quantile;
    }
    v.detail << matched << "/12 schedules match the estimate, background constant in " << bg_constant << "/12, "
             << exact_quantile << "/100 quantile selections exact";
    v.check(matched == 12, "counts match estimate_final_count");
    v.check(bg_constant == 12, "background count constant");
    v.check(exact_quantile == 100, "top-10% selects ceil(0.1 N)");
    return v;
}

Verdict displacement_oracle() {
    Verdict v;
    std::mt19937_64 rng(1008);
    FieldConfig cfg;
    cfg.spatial_resolution = 5;
    cfg.temporal_resolution = 4;
    cfg.features = 3;
    cfg.hidden = 4;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto f = DeformationField<double>::create(Representation::Foreground, Vec3<double>(-1, -1, -1),
                                                  Vec3<double>(1, 1, 1), cfg, rng);
        for (auto& p : f.planes)
            for (auto& x : p.values) x = uniform(rng, 0.5, 1.5);
        for (auto& h : f.heads)
            for (auto& x : h.weight) x = uniform(rng, -0.5, 0.5);
        PointCloud pc;
        for (int i = 0; i < 25; ++i)
            pc.push_back({uniform(rng, -1.2, 1.2), uniform(rng, -1.2, 1.2), uniform(rng, -1.2, 1.2)}, {0.5, 0.5, 0.5});
        const auto g = GaussianSet<double>::from_point_cloud(pc, Representation::Foreground);
        const auto got = displacement_stats(f, g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            std::vector<Vec3<double>> xs;
            Vec3<double> mean(0, 0, 0);
            for (int k = 0; k < 10; ++k) {
                xs.push_back(deform(f, g.view().slice(i, 1), k / 9.0).pos(0));
                mean += xs.back() / 10.0;
            }
            double want = 0.0;
            for (const auto& x : xs) want += (x - mean).norm() / 10.0;
            worst = std::max(worst, std::abs(got[i] - want));
        }
    }
    v.detail << "max deviation " << worst << " over 20 fields x 25 points";
    v.check(worst <= 1e-6, "within 1e-6");
    return v;
}

Verdict orbit_reconstruction() {
    Verdict v;
    const auto t0 = Clock::now();
    const SceneRecipe r = orbit_recipe(0);
    const Prepared p(r, 0, 500, 500);
    TrainConfig c;
    c.seed = 0;
    TrainState s = initialize_training(p.scene.cameras(), p.fg, p.bg, c);
    train_canonical(s, p.scene);
    train_dynamic(s, p.scene);
    const auto metrics = evaluate_views(s, p.scene.test);
    const double full = mean_psnr(metrics), masked = mean_masked_psnr(metrics), iou = mean_iou_t0(s, p.scene);
    const double secs = seconds_since(t0);
    v.detail << "held-out PSNR " << full << " dB, masked " << masked << " dB, IoU(t=0) " << iou << ", "
             << secs / 60.0 << " min, " << s.fg.size() << " fg / " << s.bg.size() << " bg";
    v.check(full > 28.0, "PSNR > 28");
    v.check(masked > 30.0, "masked PSNR > 30");
    v.check(iou > 0.9, "IoU > 0.9");
    v.check(secs < 30 * 60.0, "runtime < 30 min");
    return v;
}

/// Flame run at the reduced ablation schedule; returns (masked PSNR, IoU after canonical stage).
std::pair<double, double> flame_run(const Prepared& p, const std::function<void(TrainConfig&)>& tweak, bool dynamic) {
    TrainConfig c;
    c.seed = 0;
    c.canonical_iters = 1000;
    c.dynamic_iters = 2000;
    tweak(c);
    TrainState s = initialize_training(p.scene.cameras(), p.fg, p.bg, c);
    train_canonical(s, p.scene);
    const double iou = mean_iou_t0(s, p.scene);
    if (!dynamic) return {std::numeric_limits<double>::quiet_NaN(), iou};
    train_dynamic(s, p.scene);
    return {mean_masked_psnr(evaluate_views(s, p.scene.test)), iou};
}

Verdict flame_ablations() {
    Verdict v;
    const auto t0 = Clock::now();
    const Prepared p(flame_recipe(0), 0, 500, 500);
    const auto base = flame_run(p, [](TrainConfig&) {}, true);
    const auto unified = flame_run(p, [](TrainConfig& c) { c.unified_field = true; }, true);
    const auto joint = flame_run(p, [](TrainConfig& c) { c.legacy_canonical = true; }, false);
    const auto gradient = flame_run(p, [](TrainConfig& c) { c.legacy_densify = true; }, true);
    v.detail << "masked PSNR default " << base.first << " vs unified " << unified.first << "; IoU default "
             << base.second << " vs joint " << joint.second << "; masked PSNR quantile " << base.first
             << " vs gradient " << gradient.first << "; " << seconds_since(t0) / 60.0 << " min";
    v.check(base.first > unified.first, "split beats unified on masked PSNR");
    v.check(base.second > joint.second, "split canonical beats joint on IoU");
    v.check(base.first > gradient.first, "quantile beats gradient threshold on masked PSNR");
    return v;
}

Verdict determinism() {
    Verdict v;
    SceneRecipe r = orbit_recipe(11);
    r.width = r.height = 32;
    r.fx = 68.6 * 0.5;
    r.train_cameras = 4;
    r.frames = 5;
    const Prepared p(r, 11, 200, 200);
    auto run = [&](const std::string& name) {
        TrainConfig c;
        c.seed = 11;
        c.canonical_iters = 60;
        c.dynamic_iters = 60;
        c.field.spatial_resolution = 16;
        c.field.temporal_resolution = 8;
        TrainState s = initialize_training(p.scene.cameras(), p.fg, p.bg, c);
        train_canonical(s, p.scene);
        train_dynamic(s, p.scene);
        const auto path = p.dir.path() / name;
        save_checkpoint(s, path);
        std::ifstream in(path, std::ios::binary);
        return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    const auto a = run("a.ckpt"), b = run("b.ckpt");
    v.detail << "checkpoints of " << a.size() << " and " << b.size() << " bytes, threads " << omp_get_max_threads();
    v.check(!a.empty() && a == b, "bit-identical checkpoints");
    return v;
}

} // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<const char*, Verdict (*)()>> criteria = {
        {2, {"rasterizer matches reference", rasterizer_equivalence}},
        {3, {"gradients match finite differences", gradient_suite}},
        {4, {"zero decoder outputs render identically", identity_at_init}},
        {5, {"temporal opacity behaviour", temporal_opacity_behaviour}},
        {6, {"opacity regularizer fixed point", regularizer_fixed_point}},
        {7, {"densification accounting", densification_accounting}},
        {8, {"displacement oracle", displacement_oracle}},
        {9, {"orbit end-to-end reconstruction", orbit_reconstruction}},
        {10, {"flame ablation directions", flame_ablations}},
        {11, {"determinism", determinism}},
    };
    std::set<int> selected;
    for (int k = 1; k < argc; ++k) selected.insert(std::atoi(argv[k]));
    std::cout << "criterion 1: STATEMENT paper-scale results (multi-view video at 2K, 300 frames, GPU training) are "
                 "not reproduced; criteria 2-11 stand in\n"
              << std::flush;
    bool all = true;
    for (const auto& [id, entry] : criteria) {
        if (!selected.empty() && !selected.count(id)) continue;
        Verdict v;
        try {
            v = entry.second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << " exception: " << e.what();
        }
        all = all && v.pass;
        std::cout << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << " " << entry.first << ": "
                  << v.detail.str() << "\n"
                  << std::flush;
    }
    return all ? 0 : 1;
}
